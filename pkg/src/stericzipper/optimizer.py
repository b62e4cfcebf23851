"""Hybrid simulated annealing with periodic discrete-gradient descent.

The annealer explores with Metropolis moves under a geometric cooling
schedule; every ``descent_period`` temperature levels it polishes the best
point found so far with steepest descent on a (finite-difference or
analytic) gradient.  The best point ever visited is returned.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .energy import LJParams, PairList, VDW, gradient as lj_gradient, lj_pairlist
from .exceptions import ObjectiveError, SingularityError
from .pdb_io import Structure, parse_address

ARMIJO_C = 1e-4
BACKTRACK = 0.5


@dataclass
class Objective:
    dimension: int
    evaluate: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass
class AnnealConfig:
    initial_temperature: float | None = None  # None: pick from sampled uphill moves
    cooling_factor: float = 0.95
    steps_per_temperature: int = 50
    step_size: float = 0.5
    adaptive_step: bool = True
    descent_period: int = 10
    descent_fd_step: float = 1e-3
    descent_max_steps: int = 500
    max_iterations: int = 100_000
    target_tolerance: float = 1e-8
    stall_levels: int = 30
    block_size: int | None = None  # None: every move perturbs all coordinates
    seed: int = 0

    def __post_init__(self):
        if self.initial_temperature is not None and not self.initial_temperature > 0:
            raise ValueError("initial_temperature must be positive (or None for auto)")
        if not 0.0 < self.cooling_factor < 1.0:
            raise ValueError("cooling_factor must lie in (0, 1)")
        for name in ("steps_per_temperature", "descent_period", "descent_max_steps", "max_iterations", "stall_levels"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.block_size is not None and self.block_size <= 0:
            raise ValueError("block_size must be positive (or None)")
        for name in ("step_size", "descent_fd_step", "target_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> AnnealConfig:
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown anneal settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class OptimizationResult:
    best_point: np.ndarray
    best_value: float
    iterations: int
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    rejected_nonfinite: int = 0
    values: list[float] = field(default_factory=list)


def _safe_eval(obj: Objective, x: np.ndarray) -> float:
    try:
        value = float(obj.evaluate(x))
    except (SingularityError, FloatingPointError, OverflowError, ZeroDivisionError):
        return math.inf
    return value if math.isfinite(value) else math.inf


def _check_start(obj: Objective, x0) -> tuple[np.ndarray, float]:
    x = np.array(x0, dtype=float).ravel()
    if x.size != obj.dimension:
        raise ValueError(f"start point has {x.size} entries, objective expects {obj.dimension}")
    f = _safe_eval(obj, x)
    if not math.isfinite(f):
        raise ObjectiveError("objective is not finite at the starting point")
    return x, f


def central_difference(obj: Objective, x: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (_safe_eval(obj, x + e) - _safe_eval(obj, x - e)) / (2.0 * h)
    return g


def discrete_gradient_descent(
    obj: Objective,
    x0,
    fd_step: float = 1e-3,
    max_steps: int = 1000,
    *,
    step_tol: float = 1e-13,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> OptimizationResult:
    """Steepest descent with Armijo backtracking.

    Uses ``obj.gradient`` when available, otherwise central differences with
    step ``fd_step``.  ``project`` (optional) maps trial points back onto a
    feasible set, turning this into projected gradient descent.

    The returned ``values`` list holds the objective after every accepted
    step (first entry is the start value); it is strictly decreasing.
    """
    x, f = _check_start(obj, x0)
    values = [f]
    trace = [(0, 0.0, f)]
    rejected = 0
    alpha = 1.0
    steps = 0
    while steps < max_steps:
        g = obj.gradient(x) if obj.gradient is not None else central_difference(obj, x, fd_step)
        g = np.asarray(g, dtype=float).ravel()
        if not np.all(np.isfinite(g)):
            break
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            break
        alpha = min(alpha * 2.0, 1e12)
        accepted = False
        while alpha * gnorm > step_tol:
            trial = x - alpha * g
            if project is not None:
                trial = project(trial)
            move = trial - x
            if not np.any(move):
                alpha *= BACKTRACK
                continue
            ft = _safe_eval(obj, trial)
            if not math.isfinite(ft):
                rejected += 1
            elif ft < f and ft <= f + ARMIJO_C * float(g @ move):
                accepted = True
                break
            alpha *= BACKTRACK
        if not accepted:
            break
        steps += 1
        x, f = trial, ft
        values.append(f)
        trace.append((steps, 0.0, f))
        if float(np.linalg.norm(move)) < step_tol:
            break
    return OptimizationResult(x, f, steps, trace, rejected, values)


def _auto_temperature(obj, x, f, step, rng, samples: int = 100, accept: float = 0.8) -> float:
    uphill = []
    for _ in range(samples):
        fc = _safe_eval(obj, x + step * rng.standard_normal(x.size))
        if math.isfinite(fc) and fc > f:
            uphill.append(fc - f)
    if not uphill:
        return 1.0
    return float(np.median(uphill)) / math.log(1.0 / accept)


def anneal(obj: Objective, x0, cfg: AnnealConfig | None = None) -> OptimizationResult:
    """Minimize ``obj`` from ``x0``; reproducible for a fixed ``cfg.seed``.

    Candidates where the objective is not finite are rejected and counted in
    ``rejected_nonfinite``.  ``trace`` holds one ``(iteration, temperature,
    best_value)`` row per temperature level.

    With ``cfg.block_size`` set, each move perturbs one randomly chosen block
    of that many consecutive coordinates (e.g. one atom) and every block keeps
    its own adaptive step size.  That keeps a settled block from throttling
    the moves of one that is still far from its minimum.
    """
    cfg = cfg or AnnealConfig()
    x, f = _check_start(obj, x0)
    if obj.dimension == 0:
        return OptimizationResult(x, f, 0, [(0, 0.0, f)])

    rng = np.random.default_rng(cfg.seed)
    width = x.size if cfg.block_size is None else min(cfg.block_size, x.size)
    starts = np.arange(0, x.size, width)
    step = np.full(len(starts), cfg.step_size)
    T = cfg.initial_temperature or _auto_temperature(obj, x, f, cfg.step_size, rng)
    best_x, best_f = x.copy(), f
    trace = [(0, T, best_f)]
    it = rejected = level = stall = 0

    def polish(start):
        nonlocal it, rejected, best_x, best_f
        res = discrete_gradient_descent(obj, start, cfg.descent_fd_step, cfg.descent_max_steps)
        it += res.iterations
        rejected += res.rejected_nonfinite
        if res.best_value < best_f:
            best_x, best_f = res.best_point.copy(), res.best_value
            return True
        return False

    while it < cfg.max_iterations:
        level_best = best_f
        tried = np.zeros(len(starts))
        accepted = np.zeros(len(starts))
        for _ in range(cfg.steps_per_temperature):
            if it >= cfg.max_iterations:
                break
            b = 0 if len(starts) == 1 else int(rng.integers(len(starts)))
            lo, hi = starts[b], min(starts[b] + width, x.size)
            cand = x.copy()
            cand[lo:hi] += step[b] * rng.standard_normal(hi - lo)
            fc = _safe_eval(obj, cand)
            it += 1
            tried[b] += 1
            if not math.isfinite(fc):
                rejected += 1
                continue
            delta = fc - f
            if delta <= 0.0 or rng.random() < math.exp(-delta / T):
                x, f = cand, fc
                accepted[b] += 1
                if f < best_f:
                    best_x, best_f = x.copy(), f
        level += 1

        if cfg.adaptive_step:
            rate = np.divide(accepted, tried, out=np.full(len(starts), 0.5), where=tried > 0)
            step = np.where(rate > 0.6, step * 1.1, step)
            step = np.where(rate < 0.4, np.maximum(step * 0.9, 1e-12), step)

        if level % cfg.descent_period == 0 and polish(best_x):
            x, f = best_x.copy(), best_f

        T *= cfg.cooling_factor
        trace.append((it, T, best_f))
        stall = 0 if level_best - best_f > cfg.target_tolerance else stall + 1
        if stall >= cfg.stall_levels:
            break

    polish(best_x)
    trace.append((it, T, best_f))
    return OptimizationResult(best_x, best_f, it, trace, rejected)


def multistart(
    obj: Objective, starts: Sequence, cfg: AnnealConfig | None = None
) -> tuple[OptimizationResult, list[OptimizationResult]]:
    """Anneal from every start with seeds ``cfg.seed + k``; lowest value wins, earliest on ties."""
    cfg = cfg or AnnealConfig()
    results = []
    for k, x0 in enumerate(starts):
        run_cfg = dataclasses.replace(cfg, seed=cfg.seed + k)
        results.append(anneal(obj, x0, run_cfg))
    best = min(range(len(results)), key=lambda k: (results[k].best_value, k))
    return results[best], results


def write_trace_csv(result: OptimizationResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "temperature", "best_value"])
        for row in result.trace:
            w.writerow([row[0], repr(row[1]), repr(row[2])])


# ------------------------------------------------------------ contact objective


@dataclass
class ContactObjective(Objective):
    fixed_indices: tuple[int, ...] = ()
    free_indices: tuple[int, ...] = ()
    start: np.ndarray = field(default_factory=lambda: np.zeros(0))


def make_contact_objective(
    s: Structure,
    fixed: Sequence,
    free: Sequence,
    pl: PairList,
    lj: LJParams = LJParams(),
) -> ContactObjective:
    """Objective over the raw coordinates of the ``free`` atoms.

    ``pl`` indexes the canonical atom ordering of ``s`` and may only touch
    fixed or free atoms.  Evaluating writes the candidate coordinates into
    the free atoms and returns the designated-pair LJ energy.
    """
    fixed_idx = tuple(s.index_of(*parse_address(a)) for a in fixed)
    free_idx = tuple(s.index_of(*parse_address(a)) for a in free)
    if set(fixed_idx) & set(free_idx):
        raise ValueError("an atom cannot be both fixed and free")
    involved = fixed_idx + free_idx
    local = {g: k for k, g in enumerate(involved)}
    stray = {i for p in pl for i in p[:2]} - set(involved)
    if stray:
        raise ValueError(f"pair list references atoms outside the fixed/free sets: {sorted(stray)}")
    local_pl = PairList(tuple((local[i], local[j], k) for i, j, k in pl if k == VDW))

    coords = s.coordinates()
    base = coords[list(involved)] if involved else np.zeros((0, 3))
    free_rows = np.arange(len(fixed_idx), len(involved))
    start = coords[list(free_idx)].ravel() if free_idx else np.zeros(0)

    def place(v):
        X = base.copy()
        X[free_rows] = np.asarray(v, dtype=float).reshape(-1, 3)
        return X

    def evaluate(v):
        return lj_pairlist(place(v), lj, local_pl)

    def grad(v):
        try:
            G = lj_gradient(place(v), lj, local_pl).reshape(-1, 3)
        except SingularityError:
            return np.full(len(free_rows) * 3, np.nan)
        return G[free_rows].ravel()

    return ContactObjective(
        dimension=3 * len(free_idx),
        evaluate=evaluate,
        gradient=grad,
        fixed_indices=fixed_idx,
        free_indices=free_idx,
        start=start,
    )
