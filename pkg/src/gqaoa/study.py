"""Experiment orchestration: speedup studies, exports and Table-I style runs."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .cnf import (CnfFormula, compute_spectrum, enumerate_solutions, generate_random_instance,
                  load_formula, to_json)
from .compiler import cost_report
from .fairness import DEFAULT_ALPHA, DEFAULT_CAP, FairnessReport, fairness_report
from .manifold import TWO_PI, angle_grid, landscape_grid, write_landscape_csv
from .optimizer import OptimizerConfig, find_min_rounds, optimize_full_schedule
from .statevector import (StatevectorModel, counts_from_json, exact_distribution, simulate)

log = logging.getLogger(__name__)

SAT_DENSITIES = (2.0, 4.5)
UNSAT_DENSITIES = (4.6, 8.0)
M_BANDS = ((0, 60), (60, 90), (90, None))


@dataclass
class StudyConfig:
    n_values: list[int] = field(default_factory=lambda: [10, 11, 12, 13, 14])
    density_range: tuple[float, float] = SAT_DENSITIES
    regime: str = "satisfiable"
    instances_per_n: int = 100
    targets: list[float] = field(default_factory=lambda: [0.5])
    mode: str = "single_pair"
    objective: str = "solutions"
    seed: int = 0
    workers: int = 1
    output_dir: str | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "StudyConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown study options: {sorted(unknown)}")
        if "optimizer" in data and not isinstance(data["optimizer"], OptimizerConfig):
            data["optimizer"] = OptimizerConfig.from_mapping(data["optimizer"])
        if "density_range" in data:
            data["density_range"] = tuple(data["density_range"])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        lo, hi = self.density_range
        if not 0 < lo <= hi:
            raise ValueError(f"bad density range {self.density_range}")
        if self.regime not in ("satisfiable", "unsatisfiable", "any"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.objective == "solutions" and self.regime != "satisfiable":
            raise ValueError("objective 'solutions' needs regime 'satisfiable'")
        if any(not 0 < s < 1 for s in self.targets):
            raise ValueError("targets must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["density_range"] = list(self.density_range)
        return d


@dataclass
class ExperimentRecord:
    instance_id: str
    seed: int
    n: int
    m: int
    d: float
    P: float
    D: float
    regime: str
    S: float
    mode: str
    objective: str
    p_min: int
    betas: list[float]
    gammas: list[float]
    success_probability: float
    cost: float
    Q: int
    Q_per_round: int
    ancillas: int
    grover_iterations: int | None
    grover_Q: int | None
    formula: str
    wall_time: float = 0.0

    def to_json(self, with_time: bool = True) -> str:
        d = asdict(self)
        if not with_time:
            d.pop("wall_time")
        return json.dumps(d, sort_keys=True)


def derive_seed(master: int, index: int) -> int:
    """Per-instance seed that does not depend on scheduling."""
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def _run_instance(task) -> tuple[list[ExperimentRecord], list[str]]:
    """Records for one instance, one per target; unmet targets become failures."""
    index, n, config = task
    seed = derive_seed(config.seed, index)
    iid = f"n{n}-{index:05d}"
    start = time.perf_counter()
    try:
        formula = generate_random_instance(n, config.density_range, config.regime, seed)
        spectrum = compute_spectrum(formula)
    except (RuntimeError, ValueError) as exc:
        return [], [f"{iid}: {exc}"]
    grover = (cost_report("grover_baseline", n, formula.m, P=spectrum.solution_probability)
              if spectrum.satisfiable else None)
    memo: dict = {}
    records, failures = [], []
    for S in config.targets:
        try:
            search = find_min_rounds(spectrum, S, config.objective, config.mode,
                                     config.optimizer, memo=memo)
        except (RuntimeError, ValueError) as exc:
            failures.append(f"{iid} S={S}: {exc}")
            continue
        g = cost_report("g_qaoa", n, formula.m, search.p_min)
        sched = search.result.schedule
        records.append(ExperimentRecord(
            instance_id=iid, seed=seed, n=n, m=formula.m, d=formula.m / n,
            P=spectrum.solution_probability, D=spectrum.min_energy_probability,
            regime=config.regime, S=S, mode=config.mode, objective=config.objective,
            p_min=search.p_min, betas=list(sched.betas), gammas=list(sched.gammas),
            success_probability=search.result.success_probability,
            cost=search.result.cost, Q=g.entangling_total,
            Q_per_round=g.entangling_per_round, ancillas=g.ancillas,
            grover_iterations=grover.rounds if grover else None,
            grover_Q=grover.entangling_total if grover else None,
            formula=to_json(formula)))
    elapsed = time.perf_counter() - start
    for r in records:
        r.wall_time = elapsed
    return records, failures


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    stderr: float
    ci95: tuple[float, float]
    count: int

    def to_dict(self) -> dict:
        return asdict(self)


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> LogLogFit | None:
    """Least-squares line through (log x, log y); points with y <= 0 are dropped."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    x, y = x[keep], y[keep]
    if x.size < 3 or np.ptp(np.log(x)) == 0:
        return None
    res = stats.linregress(np.log(x), np.log(y))
    t = stats.t.ppf(0.975, x.size - 2)
    return LogLogFit(float(res.slope), float(res.intercept), float(res.stderr),
                     (float(res.slope - t * res.stderr), float(res.slope + t * res.stderr)),
                     int(x.size))


def speedup_fit(records: Iterable[ExperimentRecord], S: float | None = None) -> LogLogFit | None:
    """p_min against 1/P (solutions) or 1/D (min_energy)."""
    rs = [r for r in records if S is None or r.S == S]
    inv = [1.0 / (r.P if r.objective == "solutions" else r.D) for r in rs]
    return fit_loglog(inv, [r.p_min for r in rs])


def density_table(records: Iterable[ExperimentRecord], width: float = 0.5) -> list[dict]:
    bins: dict[int, list[int]] = {}
    for r in records:
        bins.setdefault(int(math.floor(r.d / width)), []).append(r.p_min)
    return [{"d_low": k * width, "d_high": (k + 1) * width, "count": len(v),
             "mean_p_min": float(np.mean(v)), "median_p_min": float(np.median(v))}
            for k, v in sorted(bins.items())]


@dataclass
class StudyResult:
    records: list[ExperimentRecord]
    failures: list[str]
    fits: dict[float, LogLogFit | None]
    densities: list[dict]

    def summary(self) -> dict:
        return {"records": len(self.records), "failures": self.failures,
                "fits": {str(S): (f.to_dict() if f else None) for S, f in self.fits.items()},
                "p_min_vs_density": self.densities}


def write_manifest(out_dir: Path, config: StudyConfig) -> None:
    manifest = {"config": config.to_dict(), "master_seed": config.seed, "version": __version__}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def run_speedup_study(config: StudyConfig) -> StudyResult:
    config.validate()
    tasks = []
    for n in config.n_values:
        for _ in range(config.instances_per_n):
            tasks.append((len(tasks), n, config))
    if config.workers > 1 and tasks:
        with ProcessPoolExecutor(config.workers) as pool:
            outcomes = list(pool.map(_run_instance, tasks))
    else:
        outcomes = [_run_instance(t) for t in tasks]
    records = [r for recs, _ in outcomes for r in recs]
    failures = [err for _, errs in outcomes for err in errs]
    for err in failures:
        log.warning("instance failed: %s", err)
    fits = {S: speedup_fit(records, S) for S in config.targets} if records else {}
    result = StudyResult(records, failures, fits, density_table(records))
    if config.output_dir:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out, config)
        with open(out / "records.jsonl", "w") as fh:
            for r in records:
                fh.write(r.to_json() + "\n")
        with open(out / "failures.log", "w") as fh:
            fh.writelines(err + "\n" for err in failures)
        (out / "summary.json").write_text(json.dumps(result.summary(), indent=2))
    return result


def read_records(path) -> list[ExperimentRecord]:
    with open(path) as fh:
        return [ExperimentRecord(**json.loads(line)) for line in fh if line.strip()]


# -- clustering ----------------------------------------------------------------------


def iqr(values: Sequence[float]) -> float:
    q1, q3 = np.percentile(values, [25, 75])
    return float(q3 - q1)


def export_clustering(records: Sequence[ExperimentRecord], path=None) -> tuple[list[dict], dict]:
    """One (n, m, beta, gamma) row per single-pair record, plus spread of gamma by m."""
    rows = []
    for r in records:
        if r.mode != "single_pair" or len(r.betas) != 1:
            raise ValueError(f"record {r.instance_id} does not carry a single angle pair")
        rows.append({"instance_id": r.instance_id, "n": r.n, "m": r.m, "beta": r.betas[0],
                     "gamma": r.gammas[0], "objective": r.objective, "S": r.S})
    summary: dict = {"bands": [], "median_split": None}
    for lo, hi in M_BANDS:
        gs = [row["gamma"] for row in rows if row["m"] >= lo and (hi is None or row["m"] < hi)]
        if len(gs) >= 2:
            summary["bands"].append({"m_low": lo, "m_high": hi, "count": len(gs),
                                     "gamma_iqr": iqr(gs), "gamma_median": float(np.median(gs))})
    if len(rows) >= 4:
        med = float(np.median([row["m"] for row in rows]))
        low = [row["gamma"] for row in rows if row["m"] < med]
        high = [row["gamma"] for row in rows if row["m"] >= med]
        if len(low) >= 2 and len(high) >= 2:
            summary["median_split"] = {"median_m": med, "count_low": len(low),
                                       "count_high": len(high), "gamma_iqr_low": iqr(low),
                                       "gamma_iqr_high": iqr(high)}
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["instance_id", "n", "m", "beta", "gamma",
                                               "objective", "S"])
            w.writeheader()
            w.writerows(rows)
    return rows, summary


# -- landscapes -------------------------------------------------------------------------


def export_landscape(formulas: Sequence[CnfFormula], p: int, spacing: float = math.pi / 180,
                     out_dir=None) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    """Energy landscapes per instance and their element-wise mean."""
    grid = angle_grid(spacing)
    grids = [landscape_grid(compute_spectrum(f), p, grid, grid) for f in formulas]
    average = np.mean(grids, axis=0) if grids else np.zeros((grid.size, grid.size))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, g in enumerate(grids):
            write_landscape_csv(out / f"landscape_{i:04d}.csv", grid, grid, g)
        write_landscape_csv(out / "landscape_average.csv", grid, grid, average)
    return grid, grids, average


def landscape_minimum(grid: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """(beta, gamma) of the minimum, taken over the half with gamma <= pi.

    The landscape is symmetric under (beta, gamma) -> (-beta, -gamma), so the
    other half only holds mirror images.
    """
    cols = grid <= math.pi + 1e-12
    sub = values[:, cols]
    i, j = np.unravel_index(np.argmin(sub), sub.shape)
    return float(grid[i]), float(grid[cols][j])


# -- small-instance reproductions ------------------------------------------------------------


@dataclass
class Table1Row:
    mixer: str
    p: int
    solution_percent: float
    shots_to_all: tuple[float, float] | None
    shots_to_reject: int | None
    betas: list[float]
    gammas: list[float]
    cost: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shots_to_reject"] = "cap" if self.shots_to_reject is None else self.shots_to_reject
        return d


def reproduce_table1(formula: CnfFormula, p_list: Sequence[int] = (1, 2),
                     mixers: Sequence[str] = ("transverse_x", "grover"),
                     config: OptimizerConfig | None = None,
                     trials_all: int = 100_000, trials_reject: int = 10_000,
                     alpha: float = DEFAULT_ALPHA, cap: int = DEFAULT_CAP,
                     seed: int = 0) -> list[Table1Row]:
    """Optimize on the exact energy, then score the noiseless output distribution."""
    solutions = enumerate_solutions(formula)
    if not solutions:
        raise ValueError("instance is unsatisfiable")
    config = config or OptimizerConfig()
    rows = []
    for mixer in mixers:
        model = StatevectorModel(formula, mixer)
        for p in p_list:
            res = optimize_full_schedule(model, p, config, "solutions")
            dist = exact_distribution(simulate(formula, res.schedule, mixer))
            report = fairness_report(dist, solutions, trials_all, trials_reject, alpha, cap, seed)
            to_all = report.shots_to_all
            rows.append(Table1Row(mixer, p, 100.0 * report.solution_fraction,
                                  None if to_all is None else (to_all.mean, to_all.half_width),
                                  report.shots_to_reject, list(res.schedule.betas),
                                  list(res.schedule.gammas), res.cost))
    return rows


def format_table1(rows: Sequence[Table1Row]) -> str:
    label = {"transverse_x": "X", "grover": "G"}
    lines = [f"{'':8}{'Solution %':>12}{'Shots-to-all':>18}{'Shots-to-reject':>18}"]
    for r in rows:
        to_all = "inf" if r.shots_to_all is None else f"{r.shots_to_all[0]:.2f}({r.shots_to_all[1]:.2f})"
        rej = "cap" if r.shots_to_reject is None else str(r.shots_to_reject)
        lines.append(f"p={r.p} {label.get(r.mixer, r.mixer):<3}{r.solution_percent:>12.1f}"
                     f"{to_all:>18}{rej:>18}")
    return "\n".join(lines)


def evaluate_counts(counts, formula: CnfFormula, trials_all: int = 100_000,
                    trials_reject: int = 10_000, alpha: float = DEFAULT_ALPHA,
                    cap: int = DEFAULT_CAP, seed: int = 0) -> FairnessReport:
    """Fairness metrics and solution fraction from a bitstring count file or its text."""
    if isinstance(counts, (str, bytes)) and not str(counts).lstrip().startswith("{"):
        counts = Path(counts).read_text()
    elif isinstance(counts, os.PathLike):
        counts = Path(counts).read_text()
    dist = counts_from_json(counts, formula.n)
    solutions = enumerate_solutions(formula)
    if not solutions:
        raise ValueError("formula has no solutions")
    return fairness_report(dist, solutions, trials_all, trials_reject, alpha, cap, seed)


def load_formulas(paths: Iterable) -> list[CnfFormula]:
    return [load_formula(p) for p in paths]


__all__ = [
    "StudyConfig", "ExperimentRecord", "StudyResult", "LogLogFit", "Table1Row",
    "run_speedup_study", "fit_loglog", "speedup_fit", "density_table", "export_clustering",
    "export_landscape", "landscape_minimum", "reproduce_table1", "format_table1",
    "evaluate_counts", "read_records", "derive_seed", "iqr", "TWO_PI",
]
