"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 invariant violation, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .contextual import snap_distances
from .core import check_trace
from .errors import BanditError, BudgetExceeded, InvalidParameter
from .harness import (
    CONTEXTUAL,
    STOCHASTIC,
    TABLE1_CELLS,
    CsvParseError,
    ExperimentConfig,
    config_lines,
    default_meta,
    read_csv_meta,
    read_summary_csv,
    run_experiment,
    run_table,
    run_trial,
    write_summary_csv,
    write_table_csv,
    write_trace_csv,
)
from .oracle import brute_force_expectation, monte_carlo_expectation
from .plotting import plot_summary
from .space import build_cover

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 2, 3, 4

_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT = {"horizon", "d", "trials", "master_seed", "max_arms"}
_OPT_INT = {"d_a", "d_x"}
_FLOAT = {"lipschitz", "psi_c", "noise_scale", "ell_low", "ell_high", "bound_c"}
_BOOL = {"clip_rewards"}


class ConfigError(BanditError, ValueError):
    pass


class InvariantViolation(BanditError):
    pass


def _convert(key: str, text: str):
    text = text.strip()
    try:
        if key in _INT:
            return int(text)
        if key in _OPT_INT:
            return None if text.lower() == "none" else int(text)
        if key in _FLOAT:
            return float(text)
        if key == "psi":
            return None if text.lower() == "auto" else float(text)
        if key in _BOOL:
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if key == "baselines":
            return () if text.lower() in ("", "none") else tuple(s.strip() for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, value)
    return values


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config_text(text, str(path))


def dump_config(config: ExperimentConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_lines(config))


def build_config(values: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig(**values)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None


# ------------------------------------------------------------------ parsing

# flag dest -> config key
_FLAG_KEYS = {
    "seed": "master_seed",
    "d": "d",
    "d_a": "d_a",
    "d_x": "d_x",
    "psi": "psi",
    "psi_c": "psi_c",
    "horizon": "horizon",
    "lipschitz": "lipschitz",
    "trials": "trials",
    "noise_scale": "noise_scale",
    "noise_interpretation": "noise_interpretation",
    "clip_rewards": "clip_rewards",
    "ell_low": "ell_low",
    "ell_high": "ell_high",
    "log_mode": "log_mode",
    "baselines": "baselines",
    "bound_c": "bound_c",
    "max_arms": "max_arms",
}


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", help="master seed (unsigned 64-bit)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes for trials")
    return p


def _model_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--d", help="(total) dimension")
    p.add_argument("--d-a", dest="d_a", help="arm dimension (contextual)")
    p.add_argument("--d-x", dest="d_x", help="context dimension (contextual)")
    p.add_argument("--psi", help="grid scale, or 'auto'")
    p.add_argument("--psi-c", dest="psi_c", help="multiplier for the automatic scale")
    p.add_argument("--horizon", "-T", help="number of rounds")
    p.add_argument("--lipschitz", "-L", help="Lipschitz constant of the mean reward")
    p.add_argument("--trials", help="independent trials")
    p.add_argument("--noise-scale", dest="noise_scale")
    p.add_argument("--noise-interpretation", dest="noise_interpretation", choices=("variance", "std"))
    p.add_argument("--clip-rewards", dest="clip_rewards", action="store_const", const="true")
    p.add_argument("--ell-low", dest="ell_low")
    p.add_argument("--ell-high", dest="ell_high")
    p.add_argument("--log-mode", dest="log_mode", choices=("log-t", "log-T"))
    p.add_argument("--baselines", help="comma list of greedy-only, ucb-no-incentive")
    p.add_argument("--bound-c", dest="bound_c")
    p.add_argument("--max-arms", dest="max_arms")
    return p


def make_parser() -> argparse.ArgumentParser:
    g, m = _global_flags(), _model_flags()
    parser = argparse.ArgumentParser(prog="incentive-bandits", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cover", parents=[g], help="report grid size and discretization gap")
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--psi", type=float, required=True)
    c.add_argument("--lipschitz", "-L", type=float, default=1.0)
    c.add_argument("--max-arms", dest="max_arms", type=int)

    sub.add_parser("run", parents=[g, m], help="stochastic episodes -> trace CSV")
    sub.add_parser("contextual", parents=[g, m], help="contextual episodes -> trace CSV")

    e = sub.add_parser("experiment", parents=[g, m], help="multi-trial summary (and the sensitivity grid)")
    e.add_argument("--mode", choices=(STOCHASTIC, CONTEXTUAL))
    e.add_argument("--dims", help="comma list of dimensions to sweep")
    e.add_argument("--table1", action="store_true", help="also run the nine-cell sensitivity grid")

    o = sub.add_parser("oracle", parents=[g], help="exact expectation on a tiny Bernoulli instance")
    o.add_argument("--p", default="0.9,0.1", help="comma list of arm success probabilities")
    o.add_argument("--horizon", "-T", type=int, default=6)
    o.add_argument("--ell", type=float, default=0.5)
    o.add_argument("--episodes", type=int, default=0, help="also run this many simulated episodes")

    pl = sub.add_parser("plot", parents=[g], help="SVG curves from a summary CSV")
    pl.add_argument("summary", help="summary CSV path")
    return parser


def effective_config(args, **defaults) -> ExperimentConfig:
    """Defaults < config file < flags."""
    values = dict(defaults)
    if args.config:
        values.update(load_config_file(args.config))
    for dest, key in _FLAG_KEYS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[key] = _convert(key, str(v))
    return build_config(values)


# ----------------------------------------------------------------- commands


def cmd_cover(args) -> int:
    kwargs = {"max_arms": args.max_arms} if args.max_arms else {}
    try:
        cover = build_cover(args.d, args.psi, **kwargs)
    except BudgetExceeded as exc:
        raise ConfigError(f"{exc} (k^d = {exc.size})") from None
    gap = args.lipschitz * args.d * (1.0 - float(cover.axis[-1]))
    print(f"d = {cover.d}")
    print(f"psi = {args.psi}")
    print(f"k = {cover.k}")
    print(f"n_arms = {cover.size}")
    print(f"cover_radius_linf = {cover.radius!r}")
    print(f"discretization_gap = {gap!r}")
    return EXIT_OK


def _write_traces(args, config: ExperimentConfig, contextual: bool) -> int:
    out = Path(args.out)
    arm, ctx = config.covers()
    driftm = config.drift_model()
    for trial in range(config.trials):
        result = run_trial(config, trial)
        name = "trace.csv" if config.trials == 1 else f"trace_{trial:03d}.csv"
        path = write_trace_csv(result, out / name, meta=default_meta(config, trial=trial))
        problems = check_trace(result, driftm)
        if contextual:
            far = np.flatnonzero(snap_distances(result, ctx) > ctx.radius + 1e-12)
            problems += [f"t={i + 1}: context snapped farther than psi/2" for i in far]
        if problems:
            raise InvariantViolation(f"{path}: {problems[0]} ({len(problems)} violations)")
        cells = f"{arm.size} arms x {ctx.size} contexts" if contextual else f"{arm.size} arms"
        print(f"wrote {path} ({result.T} rows, {cells})")
    return EXIT_OK


def cmd_run(args) -> int:
    return _write_traces(args, effective_config(args, mode=STOCHASTIC, trials=1), contextual=False)


def cmd_contextual(args) -> int:
    return _write_traces(args, effective_config(args, mode=CONTEXTUAL, d=2, trials=1), contextual=True)


def cmd_experiment(args) -> int:
    config = effective_config(args)
    if args.mode:
        config = config.replace(mode=args.mode)
    out = Path(args.out)
    dims = [int(s) for s in args.dims.split(",")] if args.dims else [config.d]
    for d in dims:
        cfg = config.replace(d=d)
        summary = run_experiment(cfg, workers=args.threads)
        path = write_summary_csv(summary, out / f"summary_{cfg.mode}_d{d}.csv", meta=default_meta(cfg))
        s = summary.slopes
        print(
            f"{cfg.mode} d={d} psi={cfg.resolved_psi():.6g} arms={summary.n_arms} "
            f"regret={summary.final('mean_pseudo_regret'):.2f} comp={summary.final('mean_compensation'):.2f} "
            f"bound={summary.final('bound_value'):.2f} rate={(cfg.total_dim + 1) / (cfg.total_dim + 2):.4f} "
            f"slope_regret={_fmt_slope(s.get('pseudo_regret'))} slope_comp={_fmt_slope(s.get('compensation'))}"
        )
        for kind, b in summary.baselines.items():
            print(
                f"  baseline {kind}: regret={b.final('mean_pseudo_regret'):.2f} "
                f"comp={b.final('mean_compensation'):.2f}"
            )
        print(f"wrote {path}")
    if args.table1:
        rows = run_table(config, TABLE1_CELLS, workers=args.threads)
        path = write_table_csv(rows, out / "table.csv", meta=default_meta(config))
        for r in rows:
            print(f"d={r['d']} psi={r['psi']} n_arms={r['n_arms']} regret={r['mean_regret']:.2f} comp={r['mean_compensation']:.2f}")
        print(f"wrote {path}")
    return EXIT_OK


def _fmt_slope(v) -> str:
    return "undefined" if v is None else f"{v:.4f}"


def cmd_oracle(args) -> int:
    try:
        p = [float(s) for s in args.p.split(",")]
    except ValueError:
        raise ConfigError(f"bad --p value {args.p!r}") from None
    try:
        regret, comp = brute_force_expectation(p, args.horizon, args.ell)
    except BudgetExceeded as exc:
        raise ConfigError(str(exc)) from None
    print(f"exact_regret = {regret!r}")
    print(f"exact_compensation = {comp!r}")
    if args.episodes:
        seed = int(args.seed) if args.seed is not None else 0
        mc = monte_carlo_expectation(p, args.horizon, args.ell, args.episodes, seed)
        for k, v in mc.items():
            print(f"mc_{k} = {v!r}")
    return EXIT_OK


def cmd_plot(args) -> int:
    columns = read_summary_csv(args.summary)
    meta = read_csv_meta(args.summary)
    for path in plot_summary(columns, args.out, meta=meta):
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "cover": cmd_cover,
    "run": cmd_run,
    "contextual": cmd_contextual,
    "experiment": cmd_experiment,
    "oracle": cmd_oracle,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except CsvParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, InvalidParameter, BudgetExceeded) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
