"""Multi-trial experiments, baselines, bound envelopes and CSV output.

Per-trial generators are derived from ``numpy.random.SeedSequence(master_seed,
spawn_key=(trial_index,))`` feeding a PCG64 ``Generator``; trajectories only
match across implementations that reproduce that exact stream.
"""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .contextual import contextual_optimal_psi, default_split, run_contextual_episode
from .core import (
    GREEDY_ONLY,
    INCENTIVIZED,
    LOG_HORIZON,
    LOG_T,
    TRACE_FIELDS,
    UCB_NO_INCENTIVE,
    RunResult,
    run_episode,
)
from .env import LINEAR_CONTEXTUAL, LINEAR_STOCHASTIC, DriftModel, MeanRewardModel, NoiseModel
from .errors import BanditError, DiagnosticUndefined, InvalidParameter
from .space import DEFAULT_MAX_ARMS, GridCover, build_cover, optimal_psi

STOCHASTIC = "stochastic"
CONTEXTUAL = "contextual"
BASELINES = (GREEDY_ONLY, UCB_NO_INCENTIVE)
N_LOG_CHECKPOINTS = 40
Z95 = 1.96

SUMMARY_FIELDS = (
    "checkpoint_t",
    "mean_pseudo_regret",
    "ci_pseudo_regret",
    "mean_realized_regret",
    "ci_realized_regret",
    "mean_compensation",
    "ci_compensation",
    "bound_value",
)
TABLE_FIELDS = ("d", "psi", "n_arms", "mean_regret", "mean_compensation")

# (d, psi) cells of the suboptimal-scale sensitivity grid: tuned, too fine, too coarse
TABLE1_CELLS = (
    (1, 0.061),
    (1, 0.00001),
    (1, 0.35),
    (2, 0.123),
    (2, 0.005),
    (2, 0.35),
    (3, 0.187),
    (3, 0.02),
    (3, 0.35),
)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = STOCHASTIC
    horizon: int = 20000
    d: int = 1
    d_a: int | None = None
    d_x: int | None = None
    lipschitz: float = 1.0
    psi: float | None = None  # None: automatic scale psi_c * (ln T / (T L^2))^(1/(d+2))
    psi_c: float = 1.0
    noise_scale: float = 0.05
    noise_interpretation: str = "variance"
    clip_rewards: bool = False
    ell_low: float = 0.45
    ell_high: float = 0.55
    trials: int = 10
    master_seed: int = 0
    log_mode: str = LOG_T
    baselines: tuple[str, ...] = ()
    bound_c: float = 1.0
    max_arms: int = DEFAULT_MAX_ARMS

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in (STOCHASTIC, CONTEXTUAL):
            raise InvalidParameter(f"mode must be 'stochastic' or 'contextual', got {self.mode!r}")
        if self.horizon < 1:
            raise InvalidParameter(f"horizon must be >= 1, got {self.horizon}")
        if self.trials < 1:
            raise InvalidParameter(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidParameter(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.log_mode not in (LOG_T, LOG_HORIZON):
            raise InvalidParameter(f"log_mode must be 'log-t' or 'log-T', got {self.log_mode!r}")
        for b in self.baselines:
            if b not in BASELINES:
                raise InvalidParameter(f"unknown baseline {b!r}; choose from {', '.join(BASELINES)}")
        if self.psi is not None and not self.psi > 0:
            raise InvalidParameter(f"psi must be positive, got {self.psi}")
        if self.mode == CONTEXTUAL:
            d_a, d_x = self.dims
            if d_a < 1 or d_x < 1:
                raise InvalidParameter(f"contextual mode needs d_a, d_x >= 1, got ({d_a}, {d_x})")
        elif self.d < 1:
            raise InvalidParameter(f"d must be >= 1, got {self.d}")
        # model constructors carry the remaining range checks
        self.reward_model()
        self.noise_model()
        self.drift_model()

    @property
    def dims(self) -> tuple[int, int]:
        """(d_a, d_x); stochastic runs have d_x = 0."""
        if self.mode == STOCHASTIC:
            return self.d, 0
        if self.d_a is not None and self.d_x is not None:
            return self.d_a, self.d_x
        if self.d_a is not None:
            return self.d_a, self.d - self.d_a
        if self.d_x is not None:
            return self.d - self.d_x, self.d_x
        return default_split(self.d)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def resolved_psi(self) -> float:
        if self.psi is not None:
            return self.psi
        d_a, d_x = self.dims
        # the log factor vanishes at T = 1; a one-round run uses the T = 2 scale
        T = max(self.horizon, 2)
        if self.mode == CONTEXTUAL:
            return contextual_optimal_psi(T, self.lipschitz, d_a, d_x, self.psi_c)
        return optimal_psi(T, self.lipschitz, d_a, self.psi_c)

    def covers(self) -> tuple[GridCover, GridCover | None]:
        psi = self.resolved_psi()
        d_a, d_x = self.dims
        arm = build_cover(d_a, psi, self.max_arms)
        ctx = build_cover(d_x, psi, self.max_arms) if d_x else None
        if ctx is not None and arm.size * ctx.size > self.max_arms:
            raise InvalidParameter(f"arm-context table {arm.size}x{ctx.size} exceeds the arm budget")
        return arm, ctx

    def n_arms(self) -> int:
        arm, ctx = self.covers()
        return arm.size * (ctx.size if ctx is not None else 1)

    def reward_model(self) -> MeanRewardModel:
        d_a, d_x = self.dims
        kind = LINEAR_CONTEXTUAL if self.mode == CONTEXTUAL else LINEAR_STOCHASTIC
        return MeanRewardModel(kind=kind, L=self.lipschitz, d_a=d_a, d_x=d_x)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(scale=self.noise_scale, interpretation=self.noise_interpretation, clip=self.clip_rewards)

    def drift_model(self) -> DriftModel:
        return DriftModel(self.ell_low, self.ell_high)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(trial,))))


def run_trial(config: ExperimentConfig, trial: int, policy: str = INCENTIVIZED) -> RunResult:
    rng = trial_rng(config.master_seed, trial)
    arm, ctx = config.covers()
    args = (config.reward_model(), config.noise_model(), config.drift_model(), config.horizon, rng)
    if config.mode == CONTEXTUAL:
        return run_contextual_episode(arm, ctx, *args, log_mode=config.log_mode, policy=policy)
    return run_episode(arm, *args, log_mode=config.log_mode, policy=policy)


def _trajectories(job: tuple[ExperimentConfig, int, str]) -> np.ndarray:
    config, trial, policy = job
    r = run_trial(config, trial, policy)
    return np.stack([r.cum_pseudo_regret, r.cum_realized_regret, r.cum_compensation])


def run_trials(config: ExperimentConfig, policy: str = INCENTIVIZED, workers: int = 1) -> np.ndarray:
    """Cumulative (pseudo regret, realized regret, compensation) per trial, shape (trials, 3, T).

    Results are ordered by trial index whatever the worker count.
    """
    jobs = [(config, i, policy) for i in range(config.trials)]
    if workers <= 1 or config.trials == 1:
        out = [_trajectories(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, config.trials)) as pool:
            out = list(pool.map(_trajectories, jobs))
    return np.stack(out)


def checkpoint_grid(T: int, n: int = N_LOG_CHECKPOINTS) -> np.ndarray:
    if T < 1:
        raise InvalidParameter("horizon must be >= 1")
    grid = np.unique(np.rint(np.geomspace(1, T, n)).astype(np.int64))
    return np.union1d(grid, [T])


def mean_ci(samples: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Mean and normal-approximation 95% half-width 1.96 * sd / sqrt(n) (sample sd)."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[axis]
    mean = samples.mean(axis=axis)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, Z95 * samples.std(axis=axis, ddof=1) / math.sqrt(n)


def theoretical_bound(T: float, d: int, L: float, c_bound: float = 1.0) -> float:
    """c * L^(d/(d+2)) * T^((d+1)/(d+2)) * (ln T)^(1/(d+2))."""
    if T < 2:
        raise InvalidParameter(f"bound needs T >= 2, got {T}")
    return c_bound * L ** (d / (d + 2)) * T ** ((d + 1) / (d + 2)) * math.log(T) ** (1.0 / (d + 2))


def sublinearity_slope(checkpoints: Iterable[tuple[float, float]]) -> float:
    """Least-squares slope of ln(value) against ln(t)."""
    pts = list(checkpoints)
    if len(pts) < 3:
        raise DiagnosticUndefined(f"need at least 3 checkpoints, got {len(pts)}")
    t = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    if np.any(v <= 0) or np.any(t <= 0):
        raise DiagnosticUndefined("log-log slope needs strictly positive t and values")
    if len(np.unique(t)) != len(t):
        raise DiagnosticUndefined("checkpoint times must be distinct")
    x, y = np.log(t), np.log(v)
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    policy: str
    checkpoints: np.ndarray
    mean_pseudo_regret: np.ndarray
    ci_pseudo_regret: np.ndarray
    mean_realized_regret: np.ndarray
    ci_realized_regret: np.ndarray
    mean_compensation: np.ndarray
    ci_compensation: np.ndarray
    bound_value: np.ndarray
    n_arms: int
    slopes: dict[str, float | None] = field(default_factory=dict)
    baselines: dict[str, "ExperimentSummary"] = field(default_factory=dict)

    def row(self, i: int) -> dict[str, float]:
        return {name: getattr(self, "checkpoints" if name == "checkpoint_t" else name)[i] for name in SUMMARY_FIELDS}

    def final(self, metric: str) -> float:
        return float(getattr(self, metric)[-1])

    def same_as(self, other: "ExperimentSummary") -> bool:
        names = ("checkpoints",) + SUMMARY_FIELDS[1:]
        if not all(np.array_equal(getattr(self, k), getattr(other, k)) for k in names):
            return False
        return self.baselines.keys() == other.baselines.keys() and all(
            b.same_as(other.baselines[k]) for k, b in self.baselines.items()
        )


def fit_slopes(checkpoints: np.ndarray, series: dict[str, np.ndarray], t_min: float) -> dict[str, float | None]:
    mask = checkpoints >= t_min
    out: dict[str, float | None] = {}
    for name, values in series.items():
        try:
            out[name] = sublinearity_slope(zip(checkpoints[mask], values[mask]))
        except DiagnosticUndefined:
            out[name] = None
    return out


def summarize(
    config: ExperimentConfig,
    trajectories: np.ndarray,
    policy: str = INCENTIVIZED,
    checkpoints: np.ndarray | None = None,
    slope_from: float | None = None,
) -> ExperimentSummary:
    T = config.horizon
    cps = checkpoint_grid(T) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    idx = cps - 1
    stats = [mean_ci(trajectories[:, m, idx]) for m in range(3)]
    d = config.total_dim
    bound = np.array([theoretical_bound(t, d, config.lipschitz, config.bound_c) if t >= 2 else 0.0 for t in cps])
    t_min = slope_from if slope_from is not None else T / 10
    slopes = fit_slopes(
        cps,
        {"pseudo_regret": stats[0][0], "realized_regret": stats[1][0], "compensation": stats[2][0]},
        t_min,
    )
    return ExperimentSummary(
        config=config,
        policy=policy,
        checkpoints=cps,
        mean_pseudo_regret=stats[0][0],
        ci_pseudo_regret=stats[0][1],
        mean_realized_regret=stats[1][0],
        ci_realized_regret=stats[1][1],
        mean_compensation=stats[2][0],
        ci_compensation=stats[2][1],
        bound_value=bound,
        n_arms=config.n_arms(),
        slopes=slopes,
    )


def run_baseline(config: ExperimentConfig, kind: str, workers: int = 1) -> ExperimentSummary:
    """``greedy-only``: the agent plays its greedy arm, nothing is paid, no drift.
    ``ucb-no-incentive``: the UCB arm is played directly, nothing is paid, no drift."""
    if kind not in BASELINES:
        raise InvalidParameter(f"unknown baseline {kind!r}")
    return summarize(config, run_trials(config, kind, workers), policy=kind)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentSummary:
    summary = summarize(config, run_trials(config, INCENTIVIZED, workers))
    for kind in sorted(set(config.baselines)):
        summary.baselines[kind] = run_baseline(config, kind, workers)
    return summary


def run_table(
    base: ExperimentConfig,
    cells: Sequence[tuple[int, float]] = TABLE1_CELLS,
    workers: int = 1,
) -> list[dict]:
    """Final mean pseudo-regret and compensation for each (d, psi) cell."""
    rows = []
    for d, psi in cells:
        cfg = base.replace(mode=STOCHASTIC, d=d, d_a=None, d_x=None, psi=psi)
        traj = run_trials(cfg, INCENTIVIZED, workers)
        rows.append(
            {
                "d": d,
                "psi": psi,
                "n_arms": cfg.n_arms(),
                "mean_regret": float(traj[:, 0, -1].mean()),
                "mean_compensation": float(traj[:, 2, -1].mean()),
            }
        )
    return rows


# ---------------------------------------------------------------- CSV output


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def config_lines(config: ExperimentConfig) -> list[tuple[str, str]]:
    """Canonical ``key = value`` pairs for a config, in field order."""
    out = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if v is None:
            text = "auto" if f.name == "psi" else "none"
        elif isinstance(v, tuple):
            text = ",".join(v) if v else "none"
        elif isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, float):
            text = repr(v)
        else:
            text = str(v)
        out.append((f.name, text))
    return out


def default_meta(config: ExperimentConfig | None = None, **extra) -> list[tuple[str, str]]:
    meta = [("artifact_version", __version__)]
    if config is not None:
        meta += config_lines(config)
    meta += [(k, str(v)) for k, v in extra.items()]
    return meta


class _CsvWriter:
    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.lines: list[str] = []

    def meta(self, meta: Sequence[tuple[str, str]] | None) -> None:
        for k, v in meta or ():
            self.lines.append(f"# {k} = {v}")

    def row(self, values: Iterable) -> None:
        self.lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in values))

    def close(self) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                fh.write("".join(line + "\n" for line in self.lines))
        except OSError as exc:
            raise OSError(f"cannot write {self.path}: {exc.strerror or exc}") from exc


def summary_header(summary: ExperimentSummary) -> list[str]:
    cols = list(SUMMARY_FIELDS)
    for kind in sorted(summary.baselines):
        key = kind.replace("-", "_")
        cols += [f"{key}_mean_pseudo_regret", f"{key}_ci_pseudo_regret", f"{key}_mean_compensation", f"{key}_ci_compensation"]
    return cols


def write_summary_csv(summary: ExperimentSummary, path, meta=None) -> Path:
    w = _CsvWriter(path)
    w.meta(meta)
    w.row(summary_header(summary))
    baselines = [summary.baselines[k] for k in sorted(summary.baselines)]
    for i in range(len(summary.checkpoints)):
        values = list(summary.row(i).values())
        for b in baselines:
            values += [b.mean_pseudo_regret[i], b.ci_pseudo_regret[i], b.mean_compensation[i], b.ci_compensation[i]]
        w.row(values)
    w.close()
    return w.path


def write_trace_csv(result: RunResult, path, meta=None) -> Path:
    w = _CsvWriter(path)
    w.meta(meta)
    w.row(TRACE_FIELDS)
    cols = [result[name] for name in TRACE_FIELDS]
    for i in range(result.T):
        w.row(c[i] for c in cols)
    w.close()
    return w.path


def write_table_csv(rows: Sequence[dict], path, meta=None) -> Path:
    w = _CsvWriter(path)
    w.meta(meta)
    w.row(TABLE_FIELDS)
    for r in rows:
        w.row(r[k] for k in TABLE_FIELDS)
    w.close()
    return w.path


def write_csv(obj, path, meta=None) -> Path:
    if isinstance(obj, ExperimentSummary):
        return write_summary_csv(obj, path, meta)
    if isinstance(obj, RunResult):
        return write_trace_csv(obj, path, meta)
    return write_table_csv(obj, path, meta)


class CsvParseError(BanditError, ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def read_csv_columns(path) -> dict[str, np.ndarray]:
    """Read a numeric CSV written by this module, skipping ``#`` comment lines."""
    path = Path(path)
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                continue
            if len(parts) != len(header):
                raise CsvParseError(path, lineno, f"expected {len(header)} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise CsvParseError(path, lineno, "non-numeric field") from None
    if header is None:
        raise CsvParseError(path, 1, "missing header")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def read_csv_meta(path) -> list[tuple[str, str]]:
    """``# key = value`` comment lines preceding the header."""
    meta = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(" = ")
            meta.append((key, value))
    return meta


def read_summary_csv(path) -> dict[str, np.ndarray]:
    cols = read_csv_columns(path)
    missing = [c for c in SUMMARY_FIELDS if c not in cols]
    if missing:
        raise CsvParseError(path, 1, f"summary header lacks {', '.join(missing)}")
    return cols
