"""Per-context incentivized UCB over a product grid of arms and contexts."""

from __future__ import annotations

import math

import numpy as np

from .core import INCENTIVIZED, LOG_T, ArmSet, ArmStats, RunResult, TraceBuffer, _check_run_args
from .env import DriftModel, MeanRewardModel, NoiseModel
from .errors import InvalidParameter
from .space import GridCover, optimal_psi


def contextual_optimal_psi(T: int, L: float, d_a: int, d_x: int, c: float = 1.0) -> float:
    """Same scale as :func:`optimal_psi` with the summed dimension d_a + d_x."""
    if d_x < 0:
        raise InvalidParameter(f"context dimension must be >= 0, got {d_x}")
    return optimal_psi(T, L, d_a + d_x, c)


def default_split(d: int) -> tuple[int, int]:
    """Split a total dimension into (d_a, d_x), giving the arm side the extra axis."""
    if d < 2:
        raise InvalidParameter(f"contextual runs need total dimension >= 2, got {d}")
    d_x = d // 2
    return d - d_x, d_x


class ContextArmTable:
    """One independent :class:`ArmSet` per context cell; rows are created on first visit."""

    def __init__(self, arm_cover: GridCover, ctx_cover: GridCover):
        self.arm_cover = arm_cover
        self.ctx_cover = ctx_cover
        self._rows: dict[int, ArmSet] = {}

    def row(self, x0: int) -> ArmSet:
        r = self._rows.get(x0)
        if r is None:
            r = self._rows[x0] = ArmSet(self.arm_cover.size)
        return r

    @property
    def pulls(self) -> np.ndarray:
        out = np.zeros((self.ctx_cover.size, self.arm_cover.size), dtype=np.int64)
        for x0, r in self._rows.items():
            out[x0] = r.pulls
        return out

    def stats(self, x0: int) -> list[ArmStats]:
        return self.row(x0).stats() if x0 in self._rows else [ArmStats() for _ in range(self.arm_cover.size)]


def run_contextual_episode(
    arm_cover: GridCover,
    ctx_cover: GridCover,
    reward: MeanRewardModel,
    noise: NoiseModel,
    driftm: DriftModel,
    T: int,
    rng: np.random.Generator,
    contexts: np.ndarray | None = None,
    log_mode: str = LOG_T,
    policy: str = INCENTIVIZED,
) -> RunResult:
    """Run the contextual loop; ``contexts`` (shape (>=T, d_x)) replays fixed contexts,
    otherwise each round draws x_t uniformly from the unit cube before anything else.

    Rewards and regret use the raw context x_t against the continuous
    per-context optimum. Only the learner works with the snapped cell.
    """
    _check_run_args(T, policy, log_mode)
    if not reward.contextual:
        raise InvalidParameter("run_contextual_episode needs a linear-contextual reward model")
    if arm_cover.d != reward.d_a or ctx_cover.d != reward.d_x:
        raise InvalidParameter(
            f"cover dimensions ({arm_cover.d}, {ctx_cover.d}) do not match model ({reward.d_a}, {reward.d_x})"
        )
    if contexts is not None:
        contexts = np.asarray(contexts, dtype=float).reshape(len(contexts), -1)
        if contexts.shape[0] < T or contexts.shape[1] != reward.d_x:
            raise InvalidParameter(f"replay contexts must have shape (>= {T}, {reward.d_x}), got {contexts.shape}")
        if np.any(contexts < 0) or np.any(contexts > 1):
            raise InvalidParameter("replay contexts must lie in [0,1]")

    table = ContextArmTable(arm_cover, ctx_cover)
    points = arm_cover.points
    buf = TraceBuffer(T)
    xs = np.zeros((T, reward.d_x))
    x_index = np.zeros(T, dtype=np.int64)
    log_T = math.log(T) if T > 1 else 0.0
    incentivized = policy == INCENTIVIZED
    for t in range(1, T + 1):
        i = t - 1
        x = contexts[i] if contexts is not None else rng.random(reward.d_x)
        x0 = ctx_cover.snap(x)
        arms = table.row(x0)
        log_value = math.log(t) if log_mode == LOG_T else log_T
        a, g, kappa = arms.step(log_value, policy)
        mean = reward.mean(points[a], x)
        best = reward.optimum(x)
        rho = noise.sample(mean, rng)
        ell_t = driftm.draw_ell(rng)
        gamma = ell_t * kappa if incentivized else 0.0
        observed = rho + gamma
        buf.pulls_before[i] = arms.pulls[a]
        arms.update(a, observed)
        xs[i] = x
        x_index[i] = x0
        buf.principal_arm[i] = a
        buf.greedy_arm[i] = g
        buf.kappa[i] = kappa
        buf.rho[i] = rho
        buf.gamma[i] = gamma
        buf.observed[i] = observed
        buf.ell_t[i] = ell_t
        buf.pseudo_regret_inc[i] = best - mean
        buf.realized_regret_inc[i] = best - rho

    # worst-case grid gap: the best grid arm against the all-ones arm, context-free for the linear model
    gap = float(reward.L * reward.d_a - reward.L * points.sum(axis=1).max())
    return RunResult(
        columns=buf.columns(),
        pull_counts=table.pulls.sum(axis=0),
        discretization_gap=gap,
        pulls_before=buf.pulls_before,
        policy=policy,
        log_mode=log_mode,
        contexts=xs,
        context_index=x_index,
    )


def snap_distances(result: RunResult, ctx_cover: GridCover) -> np.ndarray:
    """l-infinity distance between each round's context and its snapped cell center."""
    centers = ctx_cover.points[result.context_index]
    return np.max(np.abs(result.contexts - centers), axis=1)


def row_gap(reward: MeanRewardModel, arm_cover: GridCover, ctx_cover: GridCover, x) -> float:
    """Per-round loss of a learner that always plays the true best grid arm of the
    snapped row: nu*(x) - nu(best arm for row xi(x), x)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    x0 = ctx_cover.point(ctx_cover.snap(x))
    row_best = int(np.argmax(reward.means(arm_cover.points, x0)))
    return reward.optimum(x) - reward.mean(arm_cover.points[row_best], x)

