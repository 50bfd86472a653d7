"""Angle optimization and minimal-round search.

The cost minimized is always the expected number of violated clauses.
Seeds come from a dense angle grid (or random samples for large ``n``);
the best few are refined with L-BFGS-B using central-difference
gradients.  Success probability is reported at the optimum, never
optimized directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping

import numpy as np
from scipy.optimize import minimize

from .cnf import EnergySpectrum
from .manifold import TWO_PI, AngleSchedule, ManifoldModel, angle_grid

OBJECTIVES = ("solutions", "min_energy")
# costs closer than this are treated as ties and ordered by (gamma, beta)
_TIE = 1e-12


@dataclass
class OptimizerConfig:
    grid_spacing: float = math.pi / 180
    random_samples: int = 4000
    grid_max_n: int = 20
    top_k: int = 20
    grad_step: float = 1e-6
    rel_tol: float = 1e-6
    max_iter: int = 1000
    p_cap: int = 4096
    target: float = 0.5
    objective: str = "solutions"
    linear_scan: bool = False
    seed: int = 0

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "OptimizerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown optimizer options: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizationResult:
    schedule: AngleSchedule
    cost: float
    success_probability: float
    seed_point: tuple[float, float]
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {"schedule": self.schedule.to_dict(), "cost": self.cost,
                "success_probability": self.success_probability,
                "seed_point": list(self.seed_point), "iterations": self.iterations,
                "converged": self.converged}


@dataclass
class RoundSearchResult:
    p_min: int
    result: OptimizationResult
    target: float
    objective: str
    mode: str
    history: list[tuple[int, float]] = field(default_factory=list)


def as_model(target):
    """Wrap a spectrum in the manifold simulator; pass other models through."""
    return ManifoldModel(target) if isinstance(target, EnergySpectrum) else target


def seed_candidates(n: int, p: int, seed: int = 0,
                    config: OptimizerConfig | None = None) -> np.ndarray:
    """Starting (beta, gamma) points, one per row."""
    if p < 1:
        raise ValueError("p must be at least 1")
    config = config or OptimizerConfig()
    if n <= config.grid_max_n:
        grid = angle_grid(config.grid_spacing)
        bb, gg = np.meshgrid(grid, grid, indexing="ij")
        return np.column_stack([bb.ravel(), gg.ravel()])
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, TWO_PI, size=(config.random_samples, 2))


def _seed_costs(model, n: int, p: int, config: OptimizerConfig) -> tuple[np.ndarray, np.ndarray]:
    if n <= config.grid_max_n:
        grid = angle_grid(config.grid_spacing)
        costs = model.grid_costs(p, grid, grid).ravel()
        return seed_candidates(n, p, config.seed, config), costs
    points = seed_candidates(n, p, config.seed, config)
    return points, model.point_costs(p, points[:, 0], points[:, 1])


def _ranked(points: np.ndarray, costs: np.ndarray, k: int) -> np.ndarray:
    rounded = np.round(costs / _TIE) * _TIE
    order = np.lexsort((points[:, 0], points[:, 1], rounded))
    return order[:k]


def _central_gradient(f, h: float):
    def grad(x):
        g = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            g[i] = (f(x + e) - f(x - e)) / (2 * h)
        return g
    return grad


def _refine(f, x0: np.ndarray, config: OptimizerConfig):
    """L-BFGS-B from ``x0``; never returns a point worse than the start."""
    start_cost = f(x0)
    res = minimize(f, x0, jac=_central_gradient(f, config.grad_step), method="L-BFGS-B",
                   options={"ftol": config.rel_tol, "gtol": 1e-10, "maxiter": config.max_iter})
    if res.fun <= start_cost:
        return res.x, float(res.fun), int(res.nit), bool(res.success)
    return x0, float(start_cost), int(res.nit), bool(res.success)


def _better(a: OptimizationResult | None, b: OptimizationResult) -> bool:
    if a is None:
        return True
    if abs(a.cost - b.cost) > _TIE:
        return b.cost < a.cost
    ka = (a.schedule.gammas[0], a.schedule.betas[0])
    kb = (b.schedule.gammas[0], b.schedule.betas[0])
    return kb < ka


def _finish(model, schedule: AngleSchedule, cost: float, seed_point, nit: int,
            converged: bool, objective: str) -> OptimizationResult:
    schedule = schedule.canonical()
    betas, gammas = schedule.arrays()
    return OptimizationResult(schedule, max(cost, 0.0), model.success(betas, gammas, objective),
                              (float(seed_point[0]), float(seed_point[1])), nit, converged)


def _single_pair_from_seeds(model, p, seeds, config, objective) -> OptimizationResult:
    def f(x):
        return model.schedule_cost(np.full(p, x[0]), np.full(p, x[1]))

    best = None
    for seed_point in seeds:
        x, cost, nit, ok = _refine(f, np.array(seed_point, dtype=float), config)
        cand = _finish(model, AngleSchedule.single(p, x[0], x[1]), cost, seed_point, nit, ok, objective)
        if _better(best, cand):
            best = cand
    return best


def optimize_single_pair(target, p: int, config: OptimizerConfig | None = None,
                         objective: str | None = None) -> OptimizationResult:
    """Best single (beta, gamma) pair for ``p`` rounds."""
    if p < 1:
        raise ValueError("p must be at least 1")
    config = config or OptimizerConfig()
    objective = objective or config.objective
    model = as_model(target)
    points, costs = _seed_costs(model, model.n, p, config)
    seeds = points[_ranked(points, costs, config.top_k)]
    return _single_pair_from_seeds(model, p, seeds, config, objective)


def optimize_full_schedule(target, p: int, config: OptimizerConfig | None = None,
                           objective: str | None = None) -> OptimizationResult:
    """Per-round angles, started from the single-pair seeds repeated ``p`` times."""
    if p < 1:
        raise ValueError("p must be at least 1")
    config = config or OptimizerConfig()
    objective = objective or config.objective
    model = as_model(target)
    points, costs = _seed_costs(model, model.n, p, config)
    seeds = points[_ranked(points, costs, config.top_k)]
    single = _single_pair_from_seeds(model, p, seeds, config, objective)

    def f(x):
        return model.schedule_cost(x[:p], x[p:])

    starts = [(single.seed_point, np.concatenate([np.full(p, single.schedule.betas[0]),
                                                  np.full(p, single.schedule.gammas[0])]))]
    starts += [(s, np.concatenate([np.full(p, s[0]), np.full(p, s[1])])) for s in seeds]
    best = None
    for seed_point, x0 in starts:
        x, cost, nit, ok = _refine(f, x0, config)
        sched = AngleSchedule.per_round(list(zip(x[:p], x[p:])))
        cand = _finish(model, sched, cost, seed_point, nit, ok, objective)
        if _better(best, cand):
            best = cand
    return best


def _uniform_result(model, objective: str) -> OptimizationResult:
    cost = model.schedule_cost(np.empty(0), np.empty(0))
    return OptimizationResult(AngleSchedule.single(0, 0.0, 0.0), cost,
                              model.baseline(objective), (0.0, 0.0), 0, True)


def find_min_rounds(target, S: float | None = None, objective: str | None = None,
                    mode: str = "single_pair", config: OptimizerConfig | None = None,
                    memo: dict | None = None) -> RoundSearchResult:
    """Smallest p whose optimized state puts at least ``S`` on the objective.

    Probes p = 1, 2, 4, ... until the target is met, then bisects, assuming
    success grows with p (``config.linear_scan`` checks every p instead).
    ``memo`` may be shared between calls on the same instance and mode to
    reuse probes across targets.
    """
    config = config or OptimizerConfig()
    S = config.target if S is None else S
    objective = objective or config.objective
    if not 0 < S < 1:
        raise ValueError("target must lie in (0, 1)")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    if mode not in ("single_pair", "per_round"):
        raise ValueError(f"unknown mode {mode!r}")
    model = as_model(target)
    if objective == "solutions" and model.baseline("solutions") == 0.0:
        raise ValueError("formula is unsatisfiable; use objective='min_energy'")
    optimize = optimize_single_pair if mode == "single_pair" else optimize_full_schedule
    memo = {} if memo is None else memo

    def probe(p: int) -> OptimizationResult:
        key = (p, objective)
        if key not in memo:
            memo[key] = _uniform_result(model, objective) if p == 0 else optimize(model, p, config, objective)
        return memo[key]

    def ok(p: int) -> bool:
        return probe(p).success_probability >= S

    if ok(0):
        p_min = 0
    elif config.linear_scan:
        p_min = 1
        while not ok(p_min):
            p_min += 1
            if p_min > config.p_cap:
                raise RuntimeError(f"target {S} not reached within {config.p_cap} rounds")
    else:
        lo, hi = 0, 1
        while not ok(hi):
            lo, hi = hi, hi * 2
            if hi > config.p_cap:
                raise RuntimeError(f"target {S} not reached within {config.p_cap} rounds")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        p_min = hi
    history = sorted((p, r.success_probability) for (p, obj), r in memo.items() if obj == objective)
    return RoundSearchResult(p_min, probe(p_min), S, objective, mode, history)
