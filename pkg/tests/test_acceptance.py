"""End-to-end acceptance checks; each criterion records one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

import golden
from conftest import ACCEPTANCE_LINES
from incentive_bandits.cli import main
from incentive_bandits.contextual import run_contextual_episode, snap_distances
from incentive_bandits.core import LOG_HORIZON, UCB_NO_INCENTIVE, check_trace, run_arms
from incentive_bandits.env import LINEAR_CONTEXTUAL, DriftModel, MeanRewardModel, NoiseModel
from incentive_bandits.harness import (
    CONTEXTUAL,
    TABLE1_CELLS,
    ExperimentConfig,
    run_experiment,
    run_table,
    run_trial,
    write_trace_csv,
)
from incentive_bandits.oracle import brute_force_expectation, monte_carlo_expectation
from incentive_bandits.space import build_cover

pytestmark = pytest.mark.slow

TABLE1_SIZES = {
    (1, 0.061): 17, (1, 0.00001): 100000, (1, 0.35): 3,
    (2, 0.123): 81, (2, 0.005): 40000, (2, 0.35): 9,
    (3, 0.187): 216, (3, 0.02): 125000, (3, 0.35): 27,
}
PSI_TUNED = {1: 0.061, 2: 0.123, 3: 0.187}
PSI_SMALL = {1: 0.00001, 2: 0.005, 3: 0.02}
PSI_COARSE = 0.35


def report(number, title, ok, detail):
    line = f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ------------------------------------------------------------------ 1


def test_criterion_1_grid_sizes(capsys):
    start = time.perf_counter()
    got = {}
    for (d, psi) in TABLE1_CELLS:
        assert main(["cover", "--d", str(d), "--psi", repr(psi)]) == 0
        out = dict(line.split(" = ") for line in capsys.readouterr().out.splitlines())
        got[(d, psi)] = int(out["n_arms"])
    elapsed = time.perf_counter() - start
    ok = got == TABLE1_SIZES and elapsed < 1.0
    report(1, "grid sizes", ok, f"sizes={[got[c] for c in TABLE1_CELLS]} in {elapsed:.2f}s")


# ------------------------------------------------------------------ 2


@pytest.fixture(scope="module")
def table():
    start = time.perf_counter()
    rows = run_table(ExperimentConfig(horizon=20000, trials=10, master_seed=0), TABLE1_CELLS)
    elapsed = time.perf_counter() - start
    cells = {(r["d"], r["psi"]): r for r in rows}
    for r in rows:
        print(f"d={r['d']} psi={r['psi']} arms={r['n_arms']} regret={r['mean_regret']:.1f} comp={r['mean_compensation']:.1f}")
    return cells, elapsed


def _ordering(cells, d):
    return cells[(d, PSI_TUNED[d])]["mean_regret"] < cells[(d, PSI_COARSE)]["mean_regret"]


def _comp_ratio(cells, d):
    return cells[(d, PSI_SMALL[d])]["mean_compensation"] / cells[(d, PSI_TUNED[d])]["mean_compensation"]


def _plateau_spread(cells):
    plateau = [cells[(d, PSI_COARSE)]["mean_regret"] for d in (1, 2, 3)]
    return max(plateau) / min(plateau)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_criterion_2_regret_ordering(table, d):
    cells, _ = table
    assert _ordering(cells, d), (cells[(d, PSI_TUNED[d])]["mean_regret"], cells[(d, PSI_COARSE)]["mean_regret"])


@pytest.mark.parametrize("d", [1, 2, 3])
def test_criterion_2_compensation_ratio(table, d):
    assert _comp_ratio(table[0], d) > 10


def test_criterion_2_plateau_within_factor_3(table):
    assert _plateau_spread(table[0]) <= 3


def test_criterion_2_table_ordering(table):
    cells, elapsed = table
    order = {d: _ordering(cells, d) for d in (1, 2, 3)}
    ratios = {d: _comp_ratio(cells, d) for d in (1, 2, 3)}
    spread = _plateau_spread(cells)
    ok = all(order.values()) and all(r > 10 for r in ratios.values()) and spread <= 3 and elapsed < 600
    detail = (
        f"regret(psi_opt)<regret(0.35) by d={order} "
        f"comp ratios={{{', '.join(f'{d}: {r:.1f}' for d, r in ratios.items())}}} "
        f"plateau spread={spread:.3f} (limit 3) in {elapsed:.0f}s"
    )
    report(2, "table ordering", ok, detail)


# ------------------------------------------------------------------ 3


def test_criterion_3_stochastic_rates():
    start = time.perf_counter()
    parts, ok = [], True
    for d in (1, 2, 3):
        s = run_experiment(ExperimentConfig(horizon=20000, d=d, trials=10, master_seed=0))
        sr, sc = s.slopes["pseudo_regret"], s.slopes["compensation"]
        limit = (d + 1) / (d + 2) + 0.10
        ok &= sr is not None and sc is not None and sr <= limit and sc <= 0.95
        parts.append(f"d={d}: regret {sr:.3f}<={limit:.3f}, comp {sc:.3f}<=0.95")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    report(3, "stochastic rate", ok, "; ".join(parts) + f" in {elapsed:.0f}s")


# ------------------------------------------------------------------ 4


def test_criterion_4_contextual_rates():
    start = time.perf_counter()
    s = run_experiment(ExperimentConfig(mode=CONTEXTUAL, horizon=20000, d_a=1, d_x=1, d=2, trials=10, master_seed=0))
    sr, sc = s.slopes["pseudo_regret"], s.slopes["compensation"]
    elapsed = time.perf_counter() - start
    ok = sr is not None and sc is not None and sr <= 0.85 and sc <= 0.95 and elapsed < 180
    report(4, "contextual rate", ok, f"arms={s.n_arms} regret slope {sr:.3f}<=0.85, comp slope {sc:.3f}<=0.95 in {elapsed:.0f}s")


# ------------------------------------------------------------------ 5


INVARIANT_RUNS = [
    # (config, trials)
    (ExperimentConfig(d=1), 10),
    (ExperimentConfig(d=2), 10),
    (ExperimentConfig(d=3), 10),
    (ExperimentConfig(d=1, log_mode=LOG_HORIZON), 5),
    (ExperimentConfig(d=2, log_mode=LOG_HORIZON), 5),
    (ExperimentConfig(mode=CONTEXTUAL, d=2), 5),
    (ExperimentConfig(mode=CONTEXTUAL, d=2, log_mode=LOG_HORIZON), 5),
]


def test_criterion_5_invariants(tmp_path):
    steps, violations = 0, []
    for cfg, trials in INVARIANT_RUNS:
        driftm = cfg.drift_model()
        _, ctx = cfg.covers()
        for trial in range(trials):
            result = run_trial(cfg, trial)
            steps += result.T
            problems = check_trace(result, driftm)
            if ctx is not None:
                far = snap_distances(result, ctx) > cfg.resolved_psi() / 2 + 1e-12
                problems += [f"snap distance above psi/2 at t={i + 1}" for i in np.flatnonzero(far)]
            if trial == 0:
                a = write_trace_csv(result, tmp_path / "a.csv").read_bytes()
                b = write_trace_csv(run_trial(cfg, trial), tmp_path / "b.csv").read_bytes()
                if a != b:
                    problems.append("same seed produced a different trace")
            violations += [f"{cfg.mode} d={cfg.d} {cfg.log_mode} trial {trial}: {p}" for p in problems]
    ok = not violations and steps >= 10**6
    report(5, "invariants", ok, f"{len(violations)} violations over {steps} steps" + (f"; first: {violations[0]}" if violations else ""))


# ------------------------------------------------------------------ 6


def test_criterion_6_oracle():
    start = time.perf_counter()
    regret, comp = brute_force_expectation([0.9, 0.1], 6, ell=0.5)
    mc = monte_carlo_expectation([0.9, 0.1], 6, ell=0.5, episodes=100_000, master_seed=0)
    elapsed = time.perf_counter() - start
    zr = abs(mc["regret"] - regret) / mc["regret_se"]
    zc = abs(mc["compensation"] - comp) / mc["compensation_se"]
    ok = zr <= 3 and zc <= 3 and elapsed < 30
    report(
        6,
        "oracle",
        ok,
        f"regret exact {regret:.6f} mc {mc['regret']:.6f} ({zr:.2f} se); "
        f"comp exact {comp:.6f} mc {mc['compensation']:.6f} ({zc:.2f} se) in {elapsed:.1f}s",
    )


# ------------------------------------------------------------------ 7


def test_criterion_7_reductions():
    mismatches = []
    for cfg in (ExperimentConfig(d=1, trials=3), ExperimentConfig(d=2, trials=3), ExperimentConfig(mode=CONTEXTUAL, d=2, trials=3)):
        for trial in range(cfg.trials):
            zero = run_trial(cfg.replace(ell_low=0.0, ell_high=0.0), trial)
            base = run_trial(cfg, trial, UCB_NO_INCENTIVE)
            if not np.array_equal(zero["principal_arm"], base["principal_arm"]):
                mismatches.append(f"zero drift vs ucb-no-incentive: {cfg.mode} d={cfg.d} trial {trial}")

    arm_cover = ctx_cover = build_cover(1, 0.123)
    model = MeanRewardModel(kind=LINEAR_CONTEXTUAL, L=1.0, d_a=1, d_x=1)
    T = 20000
    for j in (0, 4, ctx_cover.size - 1):
        x0 = ctx_cover.points[j]
        ctx = run_contextual_episode(
            arm_cover, ctx_cover, model, NoiseModel(), DriftModel(), T, np.random.default_rng(j), np.tile(x0, (T, 1))
        )
        ref = run_arms(model.means(arm_cover.points, x0), model.optimum(x0), NoiseModel(), DriftModel(), T, np.random.default_rng(j))
        if not all(np.array_equal(ctx[k], ref[k]) for k in ref.columns):
            mismatches.append(f"contextual replay at grid context {j}")
    report(7, "reductions", not mismatches, "exact equality on all runs" if not mismatches else "; ".join(mismatches))


# ------------------------------------------------------------------ 8


def test_criterion_8_golden_traces(tmp_path, fixtures_dir):
    core = run_arms([0.9, 0.1], 0.9, NoiseModel(scale=0.0), DriftModel(0.5, 0.5), 6, np.random.default_rng(0))
    cover = build_cover(1, 0.5)
    ctx = run_contextual_episode(
        cover, cover, MeanRewardModel(kind=LINEAR_CONTEXTUAL, L=1.0, d_a=1, d_x=1), NoiseModel(scale=0.0),
        DriftModel(0.5, 0.5), 6, np.random.default_rng(0), np.array(golden.CONTEXTS).reshape(-1, 1),
    )
    checks = {
        "core": write_trace_csv(core, tmp_path / "core.csv").read_bytes() == (fixtures_dir / "golden_core.csv").read_bytes(),
        "contextual": write_trace_csv(ctx, tmp_path / "ctx.csv").read_bytes()
        == (fixtures_dir / "golden_contextual.csv").read_bytes(),
        "core fixture = hand derivation": (fixtures_dir / "golden_core.csv").read_text() == golden.to_csv(golden.core_rows()),
        "contextual fixture = hand derivation": (fixtures_dir / "golden_contextual.csv").read_text()
        == golden.to_csv(golden.contextual_rows()),
    }
    failed = [k for k, v in checks.items() if not v]
    report(8, "golden traces", not failed, "byte-identical" if not failed else f"mismatch: {failed}")
