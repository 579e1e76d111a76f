import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from incentive_bandits.core import GREEDY_ONLY, UCB_NO_INCENTIVE, run_arms
from incentive_bandits.env import DriftModel, NoiseModel
from incentive_bandits.errors import DiagnosticUndefined, InvalidParameter
from incentive_bandits.harness import (
    CONTEXTUAL,
    SUMMARY_FIELDS,
    TABLE_FIELDS,
    CsvParseError,
    ExperimentConfig,
    checkpoint_grid,
    default_meta,
    mean_ci,
    read_csv_columns,
    read_csv_meta,
    read_summary_csv,
    run_baseline,
    run_experiment,
    run_table,
    run_trial,
    run_trials,
    summarize,
    sublinearity_slope,
    theoretical_bound,
    write_csv,
    write_summary_csv,
    write_trace_csv,
)

# 20000^(2/3) * ln(20000)^(1/3), mpmath at 30 digits
BOUND_T20000_D1 = 1582.27773563264640


def small(**kw):
    base = dict(horizon=1500, d=1, psi=0.35, trials=3, master_seed=17)
    return ExperimentConfig(**(base | kw))


def test_bound_example():
    assert theoretical_bound(20000, 1, 1.0) == pytest.approx(BOUND_T20000_D1, rel=1e-12)
    assert theoretical_bound(20000, 1, 1.0, 0.0) == 0.0
    assert theoretical_bound(20000, 2, 1.0, 2.0) == 2 * theoretical_bound(20000, 2, 1.0)


def test_bound_needs_two_rounds():
    with pytest.raises(InvalidParameter):
        theoretical_bound(1, 1, 1.0)


@given(st.integers(3, 10**7), st.integers(1, 5), st.floats(0.1, 10))
def test_bound_monotone(T, d, L):
    assert theoretical_bound(T + 1, d, L) > theoretical_bound(T, d, L)
    assert theoretical_bound(T, d, L * 1.5) > theoretical_bound(T, d, L)
    assert theoretical_bound(T, d + 1, 1.0) > theoretical_bound(T, d, 1.0)


def test_slope_examples():
    assert sublinearity_slope([(t, t) for t in (10, 100, 1000)]) == pytest.approx(1.0, abs=1e-12)
    assert sublinearity_slope([(t, math.sqrt(t)) for t in (100, 400, 1600)]) == pytest.approx(0.5, abs=1e-9)
    assert sublinearity_slope([(t, 3.0) for t in (1, 2, 3, 4)]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "pts",
    [[(1, 1.0), (2, 2.0)], [(1, 1.0), (2, 0.0), (3, 3.0)], [(1, 1.0), (2, -1.0), (3, 3.0)], [(1, 1.0), (1, 2.0), (3, 3.0)]],
)
def test_slope_undefined(pts):
    with pytest.raises(DiagnosticUndefined):
        sublinearity_slope(pts)


def test_checkpoint_grid():
    grid = checkpoint_grid(20000)
    assert grid[0] == 1 and grid[-1] == 20000
    assert np.all(np.diff(grid) > 0)
    assert 30 <= len(grid) <= 41
    np.testing.assert_array_equal(checkpoint_grid(1), [1])


def test_mean_ci():
    samples = np.array([[1.0, 2.0], [3.0, 6.0]])
    mean, ci = mean_ci(samples)
    np.testing.assert_allclose(mean, [2.0, 4.0])
    np.testing.assert_allclose(ci, 1.96 * np.array([math.sqrt(2), 2 * math.sqrt(2)]) / math.sqrt(2))
    _, ci1 = mean_ci(np.array([[5.0]]))
    assert ci1[0] == 0.0


def test_ci_shrinks_with_trials():
    rng = np.random.default_rng(0)
    widths = [mean_ci(rng.normal(0, 1, (n, 2000)))[1].mean() for n in (25, 100)]
    assert widths[0] / widths[1] == pytest.approx(2.0, rel=0.05)


def test_single_round_summary():
    cfg = small(horizon=1, trials=1)
    summary = run_experiment(cfg)
    record = run_trial(cfg, 0).record(0)
    np.testing.assert_array_equal(summary.checkpoints, [1])
    assert summary.final("mean_pseudo_regret") == record.pseudo_regret_inc
    assert summary.final("mean_realized_regret") == record.realized_regret_inc
    assert summary.final("mean_compensation") == 0.0
    assert summary.final("ci_pseudo_regret") == 0.0
    assert summary.final("bound_value") == 0.0


def test_summary_determinism():
    assert run_experiment(small()).same_as(run_experiment(small()))
    assert not run_experiment(small()).same_as(run_experiment(small(master_seed=18)))


def test_serial_equals_parallel():
    cfg = small(trials=4)
    np.testing.assert_array_equal(run_trials(cfg, workers=1), run_trials(cfg, workers=2))


def test_trial_order_independent_of_count():
    a = run_trials(small(trials=2))
    b = run_trials(small(trials=4))
    np.testing.assert_array_equal(a, b[:2])


def test_plateau_regime_magnitudes():
    summary = run_experiment(small(horizon=20000, trials=3))
    assert summary.final("mean_compensation") < summary.final("mean_pseudo_regret") / 10
    assert 1000 < summary.final("mean_pseudo_regret") < 10000


def test_greedy_lock_in():
    r = run_arms([0.2, 0.8], 0.8, NoiseModel(scale=0.0), DriftModel(), 1000, np.random.default_rng(0), policy=GREEDY_ONLY)
    assert np.all(r["principal_arm"] == 0)
    assert r.cum_pseudo_regret[-1] == pytest.approx(0.6 * 1000)
    pts = [(t, r.cum_pseudo_regret[t - 1]) for t in (100, 300, 1000)]
    assert sublinearity_slope(pts) == pytest.approx(1.0, abs=1e-9)


def test_baselines():
    cfg = small(baselines=(GREEDY_ONLY, UCB_NO_INCENTIVE))
    summary = run_experiment(cfg)
    assert set(summary.baselines) == {GREEDY_ONLY, UCB_NO_INCENTIVE}
    for b in summary.baselines.values():
        assert np.all(b.mean_compensation == 0)
    with pytest.raises(InvalidParameter):
        run_baseline(cfg, "random")


def test_ucb_baseline_equals_zero_drift():
    cfg = small()
    for trial in range(cfg.trials):
        base = run_trial(cfg, trial, UCB_NO_INCENTIVE)
        zero = run_trial(cfg.replace(ell_low=0.0, ell_high=0.0), trial)
        np.testing.assert_array_equal(base["principal_arm"], zero["principal_arm"])
        np.testing.assert_array_equal(base["rho"], zero["rho"])


def test_contextual_experiment_runs():
    cfg = small(mode=CONTEXTUAL, d=2, trials=2)
    summary = run_experiment(cfg)
    assert summary.n_arms == 9
    assert summary.final("mean_pseudo_regret") > 0


def test_config_validation():
    with pytest.raises(InvalidParameter):
        ExperimentConfig(trials=0)
    with pytest.raises(InvalidParameter):
        ExperimentConfig(horizon=0)
    with pytest.raises(InvalidParameter):
        ExperimentConfig(baselines=("oracle",))
    with pytest.raises(InvalidParameter):
        ExperimentConfig(mode=CONTEXTUAL, d=1)


def test_auto_psi():
    assert ExperimentConfig(d=2).n_arms() == 49
    assert ExperimentConfig(mode=CONTEXTUAL, d=2).n_arms() == 49
    # one-round runs use the two-round scale
    assert ExperimentConfig(horizon=1).resolved_psi() == ExperimentConfig(horizon=2).resolved_psi()


def test_table_rows():
    rows = run_table(small(trials=1, horizon=200), cells=[(1, 0.35), (2, 0.35)])
    assert [r["n_arms"] for r in rows] == [3, 9]
    assert all(set(r) == set(TABLE_FIELDS) for r in rows)


# ---------------------------------------------------------------- CSV


def test_trace_csv_single_row(tmp_path):
    path = write_trace_csv(run_trial(small(horizon=1), 0), tmp_path / "t.csv")
    text = path.read_bytes()
    assert b"\r" not in text
    assert text.count(b"\n") == 2
    assert text.startswith(b"t,principal_arm,greedy_arm,kappa,rho,gamma,observed,ell_t,pseudo_regret_inc,realized_regret_inc\n")


def test_summary_csv_header_only(tmp_path):
    cfg = small(trials=2, horizon=10)
    summary = summarize(cfg, run_trials(cfg), checkpoints=[])
    path = write_summary_csv(summary, tmp_path / "s.csv")
    assert path.read_text() == ",".join(SUMMARY_FIELDS) + "\n"


def test_summary_csv_round_trip(tmp_path):
    cfg = small(baselines=(GREEDY_ONLY,))
    summary = run_experiment(cfg)
    path = write_csv(summary, tmp_path / "s.csv", meta=default_meta(cfg))
    cols = read_summary_csv(path)
    # 17 significant digits reproduce every double exactly
    np.testing.assert_array_equal(cols["mean_pseudo_regret"], summary.mean_pseudo_regret)
    np.testing.assert_array_equal(cols["greedy_only_mean_compensation"], summary.baselines[GREEDY_ONLY].mean_compensation)
    meta = dict(read_csv_meta(path))
    assert meta["horizon"] == "1500" and meta["psi"] == "0.35" and "artifact_version" in meta


def test_table_csv(tmp_path):
    rows = [{"d": 1, "psi": 0.35, "n_arms": 3, "mean_regret": 1.5, "mean_compensation": 0.25}]
    path = write_csv(rows, tmp_path / "table.csv")
    assert path.read_text() == "d,psi,n_arms,mean_regret,mean_compensation\n1,0.34999999999999998,3,1.5,0.25\n"


def test_write_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_csv([], blocker / "sub" / "t.csv")


@pytest.mark.parametrize("body", ["a,b\n1,2,3\n", "a,b\n1,x\n", "# only = meta\n"])
def test_csv_parse_errors(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(CsvParseError):
        read_csv_columns(path)


def test_summary_missing_columns(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("checkpoint_t,foo\n1,2\n")
    with pytest.raises(CsvParseError):
        read_summary_csv(path)
