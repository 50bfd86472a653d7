"""Command-line entry point: ``gqaoa <subcommand> ...``.

Exit codes: 0 success, 1 runtime error, 2 configuration or usage error,
3 an acceptance check requested on the command line failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .cnf import (FormulaError, compute_spectrum, generate_random_instance, load_formula,
                  to_dimacs, to_json)
from .compiler import cost_report, emit_circuit_text, lower_round
from .instances import five_qubit, four_qubit
from .manifold import AngleSchedule
from .optimizer import (OptimizerConfig, find_min_rounds, optimize_full_schedule,
                        optimize_single_pair)
from .study import (StudyConfig, evaluate_counts, export_clustering, export_landscape,
                    format_table1, landscape_minimum, read_records, reproduce_table1,
                    run_speedup_study)

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3
BUILTIN = {"four_qubit": four_qubit, "five_qubit": five_qubit}

log = logging.getLogger("gqaoa")


class ConfigError(Exception):
    pass


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if p.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return data


def _formula(arg: str):
    if arg in BUILTIN:
        return BUILTIN[arg]()
    return load_formula(arg)


def _optimizer_config(args, cfg: dict) -> OptimizerConfig:
    data = dict(cfg.get("optimizer", {}))
    data.setdefault("seed", args.seed)
    if getattr(args, "spacing_deg", None):
        data["grid_spacing"] = math.radians(args.spacing_deg)
    try:
        return OptimizerConfig.from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _out_path(args, name: str) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# -- subcommands ----------------------------------------------------------------------


def cmd_generate(args, cfg) -> int:
    f = generate_random_instance(args.n, tuple(args.density), args.regime, args.seed)
    text = to_dimacs(f) if args.format == "dimacs" else to_json(f) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_spectrum(args, cfg) -> int:
    _emit(compute_spectrum(_formula(args.formula)).to_dict())
    return EXIT_OK


def cmd_optimize(args, cfg) -> int:
    spectrum = compute_spectrum(_formula(args.formula))
    config = _optimizer_config(args, cfg)
    fn = optimize_single_pair if args.mode == "single_pair" else optimize_full_schedule
    _emit(fn(spectrum, args.p, config, args.objective).to_dict())
    return EXIT_OK


def cmd_rounds(args, cfg) -> int:
    spectrum = compute_spectrum(_formula(args.formula))
    config = _optimizer_config(args, cfg)
    if args.linear_scan:
        config.linear_scan = True
    res = find_min_rounds(spectrum, args.target, args.objective, args.mode, config)
    _emit({"p_min": res.p_min, "target": res.target, "objective": res.objective,
           "mode": res.mode, "result": res.result.to_dict(),
           "history": [list(h) for h in res.history]})
    return EXIT_OK


def cmd_speedup(args, cfg) -> int:
    data = dict(cfg.get("study", {}))
    for key in ("n_values", "instances_per_n", "targets", "mode", "objective", "regime"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.density is not None:
        data["density_range"] = args.density
    data["seed"] = args.seed
    data["workers"] = args.threads
    data["output_dir"] = args.out_dir
    data["optimizer"] = _optimizer_config(args, cfg)
    try:
        config = StudyConfig.from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    result = run_speedup_study(config)
    summary = result.summary()
    _emit(summary)
    if args.expect_slope:
        lo, hi = args.expect_slope
        bad = [S for S, fit in result.fits.items() if fit is None or not lo <= fit.slope <= hi]
        if bad or not result.fits:
            log.error("slope check failed for targets %s", bad or "(no fit)")
            return EXIT_CHECK
    return EXIT_OK


def cmd_clustering(args, cfg) -> int:
    records = read_records(args.records)
    _, summary = export_clustering(records, _out_path(args, "clustering.csv"))
    _emit(summary)
    if args.expect_concentration:
        split = summary["median_split"]
        if split is None or not split["gamma_iqr_high"] < split["gamma_iqr_low"]:
            return EXIT_CHECK
    return EXIT_OK


def cmd_landscape(args, cfg) -> int:
    formulas = [_formula(f) for f in args.formulas]
    spacing = math.radians(args.spacing_deg)
    grid, grids, avg = export_landscape(formulas, args.p, spacing, args.out_dir)
    beta, gamma = landscape_minimum(grid, avg)
    _emit({"instances": len(grids), "grid_points": int(grid.size),
           "average_minimum": {"beta": beta, "gamma": gamma, "value": float(avg.min())}})
    return EXIT_OK


def cmd_table1(args, cfg) -> int:
    formula = _formula(args.formula)
    rows = reproduce_table1(formula, args.p, args.mixers, _optimizer_config(args, cfg),
                            args.trials_all, args.trials_reject, seed=args.seed)
    print(format_table1(rows))
    if args.json:
        Path(args.json).write_text(json.dumps([r.to_dict() for r in rows], indent=2))
    return EXIT_OK


def cmd_fairness(args, cfg) -> int:
    formula = _formula(args.formula)
    report = evaluate_counts(Path(args.counts), formula, args.trials_all, args.trials_reject,
                             args.alpha, args.cap, args.seed)
    _emit(report.to_dict())
    return EXIT_OK


def cmd_compile(args, cfg) -> int:
    if args.algorithm == "grover_baseline":
        report = cost_report(args.algorithm, args.n, args.m, P=args.P)
    else:
        report = cost_report(args.algorithm, args.n, args.m, rounds=args.rounds)
    _emit(report.to_dict())
    return EXIT_OK


def cmd_emit(args, cfg) -> int:
    formula = _formula(args.formula)
    sched = AngleSchedule.single(args.rounds, args.beta, args.gamma)
    gates = None
    for beta, gamma in sched.rounds():
        one = lower_round(formula, beta, gamma, args.mixer)
        gates = one if gates is None else gates.extend(one)
    text = emit_circuit_text(gates) if gates is not None else ""
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def _add_optimizer_flags(p) -> None:
    p.add_argument("--spacing-deg", type=float, default=None,
                   help="seed grid spacing in degrees (default 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gqaoa", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--seed", type=int, default=0, help="master seed")
    ap.add_argument("--threads", type=int, default=1, help="worker processes")
    ap.add_argument("--out-dir", default="results", help="output directory")
    ap.add_argument("--config", default=None, help="JSON or TOML config file")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="random 3-SAT instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=float, nargs=2, default=[2.0, 4.5], metavar=("LO", "HI"))
    p.add_argument("--regime", choices=["satisfiable", "unsatisfiable", "any"], default="any")
    p.add_argument("--format", choices=["dimacs", "json"], default="dimacs")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("spectrum", help="energy level counts")
    p.add_argument("formula", help="formula file or builtin name")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("optimize", help="optimize angles at fixed p")
    p.add_argument("formula")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--mode", choices=["single_pair", "per_round"], default="single_pair")
    p.add_argument("--objective", choices=["solutions", "min_energy"], default="solutions")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("rounds", help="minimal rounds for a target success")
    p.add_argument("formula")
    p.add_argument("--target", type=float, default=0.5)
    p.add_argument("--mode", choices=["single_pair", "per_round"], default="single_pair")
    p.add_argument("--objective", choices=["solutions", "min_energy"], default="solutions")
    p.add_argument("--linear-scan", action="store_true")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_rounds)

    p = sub.add_parser("speedup", help="p_min scaling study")
    p.add_argument("--n-values", dest="n_values", type=int, nargs="*", default=None)
    p.add_argument("--instances", dest="instances_per_n", type=int, default=None)
    p.add_argument("--density", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--regime", choices=["satisfiable", "unsatisfiable", "any"], default=None)
    p.add_argument("--targets", type=float, nargs="+", default=None)
    p.add_argument("--mode", choices=["single_pair", "per_round"], default=None)
    p.add_argument("--objective", choices=["solutions", "min_energy"], default=None)
    p.add_argument("--expect-slope", type=float, nargs=2, default=None, metavar=("LO", "HI"),
                   help="exit 3 unless every fitted slope lies in [LO, HI]")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_speedup)

    p = sub.add_parser("clustering", help="angle clustering export from records")
    p.add_argument("records", help="records.jsonl from a speedup run")
    p.add_argument("--expect-concentration", action="store_true",
                   help="exit 3 unless the large-m half has the smaller gamma IQR")
    p.set_defaults(func=cmd_clustering)

    p = sub.add_parser("landscape", help="energy landscape grids")
    p.add_argument("formulas", nargs="+")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--spacing-deg", type=float, default=1.0)
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("table1", help="X vs G comparison on a small instance")
    p.add_argument("formula", help="formula file, four_qubit or five_qubit")
    p.add_argument("--p", type=int, nargs="+", default=[1, 2])
    p.add_argument("--mixers", nargs="+", choices=["transverse_x", "grover"],
                   default=["transverse_x", "grover"])
    p.add_argument("--trials-all", type=int, default=100_000)
    p.add_argument("--trials-reject", type=int, default=10_000)
    p.add_argument("--json", help="also write rows as JSON")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("fairness", help="metrics from a bitstring count file")
    p.add_argument("counts")
    p.add_argument("formula")
    p.add_argument("--trials-all", type=int, default=100_000)
    p.add_argument("--trials-reject", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--cap", type=int, default=100_000)
    p.set_defaults(func=cmd_fairness)

    p = sub.add_parser("compile", help="entangling-gate cost report")
    p.add_argument("--algorithm", choices=["x_qaoa", "g_qaoa", "grover_baseline"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--P", type=float, default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("emit", help="gate-level circuit text")
    p.add_argument("formula")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--mixer", choices=["grover", "transverse_x"], default="grover")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_emit)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be positive")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormulaError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
