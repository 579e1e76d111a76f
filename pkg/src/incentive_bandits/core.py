"""Incentivized UCB over a finite (discretized) arm set with drifted feedback.

The principal wants the UCB arm while the myopic agent would take the
empirical-best one. The principal pays the gap in empirical means to close
the difference, and that payment leaks into the agent's report as drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .env import DriftModel, MeanRewardModel, NoiseModel
from .errors import InvalidParameter, InvalidState
from .space import GridCover

LOG_T = "log-t"
LOG_HORIZON = "log-T"

INCENTIVIZED = "incentivized"
GREEDY_ONLY = "greedy-only"
UCB_NO_INCENTIVE = "ucb-no-incentive"
POLICIES = (INCENTIVIZED, GREEDY_ONLY, UCB_NO_INCENTIVE)

TRACE_FIELDS = (
    "t",
    "principal_arm",
    "greedy_arm",
    "kappa",
    "rho",
    "gamma",
    "observed",
    "ell_t",
    "pseudo_regret_inc",
    "realized_regret_inc",
)


@dataclass
class ArmStats:
    pulls: int = 0
    reward_sum: float = 0.0

    @property
    def empirical_mean(self) -> float:
        return self.reward_sum / self.pulls if self.pulls > 0 else 0.0

    def update(self, reward: float) -> None:
        self.pulls += 1
        self.reward_sum += reward


def _log_value(t: int, log_mode: str, T: int | None) -> float:
    if log_mode == LOG_T:
        return math.log(t)
    if log_mode == LOG_HORIZON:
        if T is None:
            raise InvalidParameter("log-T mode needs the horizon T")
        return math.log(T)
    raise InvalidParameter(f"unknown log mode {log_mode!r}")


def ucb_index(stats: ArmStats, t: int, log_mode: str = LOG_T, T: int | None = None) -> float:
    if t < 1:
        raise InvalidParameter(f"round index must be >= 1, got {t}")
    if stats.pulls == 0:
        return math.inf
    return stats.empirical_mean + math.sqrt(2.0 * _log_value(t, log_mode, T) / stats.pulls)


def _first_argmax(values: Sequence[float]) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def select_principal(all_stats: Sequence[ArmStats], t: int, log_mode: str = LOG_T, T: int | None = None) -> int:
    if len(all_stats) == 0:
        raise InvalidState("no arms to select from")
    return _first_argmax([ucb_index(s, t, log_mode, T) for s in all_stats])


def select_greedy(all_stats: Sequence[ArmStats]) -> int:
    if len(all_stats) == 0:
        raise InvalidState("no arms to select from")
    return _first_argmax([s.empirical_mean for s in all_stats])


def compensation(all_stats: Sequence[ArmStats], g: int, a: int) -> float:
    n = len(all_stats)
    if not (0 <= g < n and 0 <= a < n):
        raise InvalidParameter(f"arm indices ({g}, {a}) out of range for {n} arms")
    return all_stats[g].empirical_mean - all_stats[a].empirical_mean


class ArmSet:
    """Array-backed pull counts and reward sums for one finite arm set.

    Agrees exactly with :func:`select_principal` / :func:`select_greedy` on the
    equivalent list of :class:`ArmStats` but avoids O(K) Python work per round:
    unpulled arms are served lowest-index first through a cursor and the greedy
    argmax is maintained incrementally.
    """

    def __init__(self, n_arms: int):
        if n_arms < 1:
            raise InvalidState("arm set must be non-empty")
        self.n = n_arms
        self.pulls = np.zeros(n_arms, dtype=np.int64)
        self.sums = np.zeros(n_arms, dtype=float)
        self.means = np.zeros(n_arms, dtype=float)
        self._cursor = 0
        self._best = 0

    def stats(self) -> list[ArmStats]:
        return [ArmStats(int(p), float(s)) for p, s in zip(self.pulls, self.sums)]

    def principal(self, log_value: float) -> int:
        if self._cursor < self.n:
            return self._cursor
        ucb = self.means + np.sqrt(2.0 * log_value / self.pulls)
        return int(np.argmax(ucb))

    def greedy(self) -> int:
        return self._best

    def update(self, arm: int, reward: float) -> None:
        self.pulls[arm] += 1
        self.sums[arm] += reward
        old = self.means[arm]
        new = self.sums[arm] / self.pulls[arm]
        self.means[arm] = new
        while self._cursor < self.n and self.pulls[self._cursor] > 0:
            self._cursor += 1
        best = self._best
        if arm == best:
            if new < old:
                self._best = int(np.argmax(self.means))
        elif new > self.means[best] or (new == self.means[best] and arm < best):
            self._best = arm

    def step(self, log_value: float, policy: str) -> tuple[int, int, float]:
        """Decide one round: returns (pulled arm, greedy arm, compensation)."""
        g = self.greedy()
        if policy == GREEDY_ONLY:
            return g, g, 0.0
        a = self.principal(log_value)
        if policy == UCB_NO_INCENTIVE:
            return a, g, 0.0
        return a, g, float(self.means[g] - self.means[a])


@dataclass(frozen=True)
class StepRecord:
    t: int
    principal_arm: int
    greedy_arm: int
    kappa: float
    rho: float
    gamma: float
    observed: float
    ell_t: float
    pseudo_regret_inc: float
    realized_regret_inc: float


class TraceBuffer:
    """Preallocated per-round columns filled by the episode loops."""

    def __init__(self, T: int):
        self.principal_arm = np.zeros(T, dtype=np.int64)
        self.greedy_arm = np.zeros(T, dtype=np.int64)
        self.kappa = np.zeros(T)
        self.rho = np.zeros(T)
        self.gamma = np.zeros(T)
        self.observed = np.zeros(T)
        self.ell_t = np.zeros(T)
        self.pseudo_regret_inc = np.zeros(T)
        self.realized_regret_inc = np.zeros(T)
        self.pulls_before = np.zeros(T, dtype=np.int64)

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TRACE_FIELDS if name != "t"}


@dataclass
class RunResult:
    """Complete trace of one episode, stored column-wise."""

    columns: dict[str, np.ndarray]
    pull_counts: np.ndarray
    discretization_gap: float
    pulls_before: np.ndarray
    policy: str = INCENTIVIZED
    log_mode: str = LOG_T
    contexts: np.ndarray | None = None
    context_index: np.ndarray | None = None
    cum_pseudo_regret: np.ndarray = field(init=False)
    cum_realized_regret: np.ndarray = field(init=False)
    cum_compensation: np.ndarray = field(init=False)

    def __post_init__(self):
        self.cum_pseudo_regret = np.cumsum(self.columns["pseudo_regret_inc"])
        self.cum_realized_regret = np.cumsum(self.columns["realized_regret_inc"])
        self.cum_compensation = np.cumsum(self.columns["kappa"])

    @property
    def T(self) -> int:
        return len(self.columns["kappa"])

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return np.arange(1, self.T + 1)
        return self.columns[name]

    def record(self, i: int) -> StepRecord:
        c = self.columns
        return StepRecord(
            t=i + 1,
            principal_arm=int(c["principal_arm"][i]),
            greedy_arm=int(c["greedy_arm"][i]),
            kappa=float(c["kappa"][i]),
            rho=float(c["rho"][i]),
            gamma=float(c["gamma"][i]),
            observed=float(c["observed"][i]),
            ell_t=float(c["ell_t"][i]),
            pseudo_regret_inc=float(c["pseudo_regret_inc"][i]),
            realized_regret_inc=float(c["realized_regret_inc"][i]),
        )

    @property
    def records(self) -> list[StepRecord]:
        return [self.record(i) for i in range(self.T)]

    def same_as(self, other: "RunResult") -> bool:
        return all(np.array_equal(self.columns[k], other.columns[k]) for k in self.columns) and np.array_equal(
            self.pull_counts, other.pull_counts
        )


def _check_run_args(T: int, policy: str, log_mode: str) -> None:
    if T < 1:
        raise InvalidParameter(f"horizon must be >= 1, got {T}")
    if policy not in POLICIES:
        raise InvalidParameter(f"unknown policy {policy!r}")
    if log_mode not in (LOG_T, LOG_HORIZON):
        raise InvalidParameter(f"unknown log mode {log_mode!r}")


def run_arms(
    arm_means: Sequence[float],
    optimum: float,
    noise: NoiseModel,
    driftm: DriftModel,
    T: int,
    rng: np.random.Generator,
    log_mode: str = LOG_T,
    policy: str = INCENTIVIZED,
) -> RunResult:
    """Run the incentivized UCB loop on a finite arm set with known true means.

    Per round: principal arm, greedy arm, compensation, reward draw, drift draw,
    update of the pulled arm with the drifted observation.  Exactly two
    generator calls are made per round, whatever the policy.
    """
    _check_run_args(T, policy, log_mode)
    arm_means = np.asarray(arm_means, dtype=float)
    arms = ArmSet(len(arm_means))
    buf = TraceBuffer(T)
    log_T = math.log(T) if T > 1 else 0.0
    incentivized = policy == INCENTIVIZED
    for t in range(1, T + 1):
        i = t - 1
        log_value = math.log(t) if log_mode == LOG_T else log_T
        a, g, kappa = arms.step(log_value, policy)
        mean = float(arm_means[a])
        rho = noise.sample(mean, rng)
        ell_t = driftm.draw_ell(rng)
        gamma = ell_t * kappa if incentivized else 0.0
        observed = rho + gamma
        buf.pulls_before[i] = arms.pulls[a]
        arms.update(a, observed)
        buf.principal_arm[i] = a
        buf.greedy_arm[i] = g
        buf.kappa[i] = kappa
        buf.rho[i] = rho
        buf.gamma[i] = gamma
        buf.observed[i] = observed
        buf.ell_t[i] = ell_t
        buf.pseudo_regret_inc[i] = optimum - mean
        buf.realized_regret_inc[i] = optimum - rho
    return RunResult(
        columns=buf.columns(),
        pull_counts=arms.pulls.copy(),
        discretization_gap=float(optimum - arm_means.max()),
        pulls_before=buf.pulls_before,
        policy=policy,
        log_mode=log_mode,
    )


def run_episode(
    cover: GridCover,
    reward: MeanRewardModel,
    noise: NoiseModel,
    driftm: DriftModel,
    T: int,
    rng: np.random.Generator,
    log_mode: str = LOG_T,
    policy: str = INCENTIVIZED,
) -> RunResult:
    """Incentivized exploration over the points of ``cover``."""
    if reward.contextual:
        raise InvalidParameter("run_episode needs a stochastic reward model; use run_contextual_episode")
    if cover.d != reward.d_a:
        raise InvalidParameter(f"cover dimension {cover.d} != reward dimension {reward.d_a}")
    return run_arms(reward.means(cover.points), reward.optimum(), noise, driftm, T, rng, log_mode, policy)


def check_trace(
    result: RunResult,
    driftm: DriftModel | None = None,
    tol: float = 1e-12,
) -> list[str]:
    """Deterministic invariants of a completed trace; returns violation messages.

    Counts per arm are rebuilt from the arm sequence rather than read from the
    engine so the check stays independent of the bookkeeping it audits.
    Contextual traces are checked row-wise using ``context_index``.
    """
    c = result.columns
    T = result.T
    arms = c["principal_arm"]
    rows = result.context_index if result.context_index is not None else np.zeros(T, dtype=np.int64)
    counts: dict[tuple[int, int], int] = {}
    drift_sum: dict[tuple[int, int], float] = {}
    bad: list[str] = []
    log_T = math.log(T) if T > 1 else 0.0
    for i in range(T):
        t = i + 1
        key = (int(rows[i]), int(arms[i]))
        n = counts.get(key, 0)
        kappa, gamma = float(c["kappa"][i]), float(c["gamma"][i])
        if kappa < -tol:
            bad.append(f"t={t}: negative compensation {kappa}")
        if c["principal_arm"][i] == c["greedy_arm"][i] and kappa != 0.0:
            bad.append(f"t={t}: compensation {kappa} paid although principal and agent agree")
        if n >= 1 and result.policy == INCENTIVIZED:
            log_value = math.log(t) if result.log_mode == LOG_T else log_T
            if kappa > math.sqrt(2.0 * log_value / n) + tol:
                bad.append(f"t={t}: compensation {kappa} above the confidence bonus with N={n}")
        if c["observed"][i] != c["rho"][i] + gamma:
            bad.append(f"t={t}: observed != rho + gamma")
        if kappa == 0.0 and gamma != 0.0:
            bad.append(f"t={t}: drift {gamma} without compensation")
        if driftm is not None and result.policy == INCENTIVIZED:
            lo, hi = driftm.ell_low * kappa, driftm.ell_high * kappa
            if not lo - tol <= gamma <= hi + tol:
                bad.append(f"t={t}: drift {gamma} outside [{lo}, {hi}]")
        counts[key] = n + 1
        drift_sum[key] = drift_sum.get(key, 0.0) + gamma
    if driftm is not None and result.log_mode == LOG_HORIZON and T > 1:
        ell = driftm.ell
        for key, total in drift_sum.items():
            cap = 2.0 * ell * math.sqrt(2.0 * counts[key] * log_T)
            if total > cap + tol:
                bad.append(f"arm {key}: cumulative drift {total} above {cap}")
    return bad
