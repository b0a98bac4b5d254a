"""
Brute-force verifiers for small instances.

Every search here enumerates candidate corrections directly and never touches
the linear-programming code, so the results can certify LP optima and the
two-population closed form.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.config import GRID_CAP, GRID_STEPS, ORACLE_WORKERS, TAU_EQ, TAU_FEAS
from app.errors import GridCapExceeded, InstanceError
from app.fairness.profile_space import Partition, PopulationModel, ProfileSpace, ScoreTable
from app.fairness.reduction import ResidualTargets
from app.fairness.simplex import LpSolution, LpStatus

logger = logging.getLogger(__name__)

ScoreFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GridSpec:
    """Axis of ``steps`` evenly spaced values in [lo, hi], shared by every dimension."""

    lo: float
    hi: float
    steps: int
    cap: int = GRID_CAP

    def __post_init__(self):
        if self.steps < 2:
            raise InstanceError(f"grid needs at least 2 steps, got {self.steps}")
        if not self.lo < self.hi:
            raise InstanceError(f"grid bounds must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        if self.cap < 1:
            raise InstanceError(f"grid cap must be positive, got {self.cap}")

    @classmethod
    def capped(
        cls,
        lo: float,
        hi: float,
        dims: int,
        steps: int = GRID_STEPS,
        cap: int = GRID_CAP,
    ) -> "GridSpec":
        """
        Largest odd step count not above ``steps`` whose full grid fits the cap.

        When the cap admits no odd count of at least 3, the grid falls back to
        the two endpoints, so 0 is then off the grid.
        """
        fitted = min(steps, int(math.floor(cap ** (1.0 / max(dims, 1)))) + 1)
        while fitted > 2 and fitted**dims > cap:
            fitted -= 1
        if fitted % 2 == 0 and fitted > 3:
            fitted -= 1
        if fitted**dims > cap:
            raise GridCapExceeded(f"even a {fitted}-step grid in {dims} dimensions exceeds the cap")
        return cls(lo=lo, hi=hi, steps=max(fitted, 2), cap=cap)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.steps - 1)

    def check(self, dims: int, steps: Optional[int] = None) -> None:
        count = (steps or self.steps) ** dims
        if count > self.cap:
            raise GridCapExceeded(f"grid of {count} points exceeds the cap of {self.cap}")


@dataclass(frozen=True, eq=False)
class OracleResult:
    found: bool
    best: Optional[float] = None
    table: Optional[ScoreTable] = None
    point: Optional[np.ndarray] = None
    evaluated: int = 0


@dataclass(frozen=True, eq=False)
class TwoPopVerdict:
    optimal: bool
    reason: str
    witness: Optional[ScoreTable] = None


def _group_masses(
    space: ProfileSpace, pops: Sequence[PopulationModel], partition: Partition
) -> np.ndarray:
    """Per-population mass of each group, summed cell by cell."""
    masses = np.zeros((len(pops), partition.m))
    for i, pop in enumerate(pops):
        for cell, group in enumerate(partition.group_of):
            masses[i, group - 1] += pop.density[cell] * space.weights[cell]
    return masses


def _search(
    axes: List[np.ndarray], score: ScoreFn, workers: int
) -> Tuple[float, Optional[np.ndarray], int]:
    """
    Minimize ``score`` over the cartesian product of ``axes``.

    The first axis is split across workers; ties resolve to the
    lexicographically smallest point whatever the schedule.
    """
    if len(axes) > 1:
        mesh = np.meshgrid(*axes[1:], indexing="ij")
        inner = np.stack([grid.ravel() for grid in mesh], axis=1)
    else:
        inner = np.zeros((1, 0))

    def evaluate(outer_index: int) -> Tuple[float, int]:
        block = np.hstack([np.full((inner.shape[0], 1), axes[0][outer_index]), inner])
        values = score(block)
        local = int(np.argmin(values))
        return float(values[local]), local

    outer = range(len(axes[0]))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, outer))
    else:
        results = [evaluate(i) for i in outer]

    best = math.inf
    best_point = None
    for outer_index, (value, local) in enumerate(results):
        if value < best:
            best = value
            best_point = np.concatenate([[axes[0][outer_index]], inner[local]])
    return best, best_point, len(axes[0]) * inner.shape[0]


def default_grid(
    v: np.ndarray,
    b: ResidualTargets,
    steps: int = GRID_STEPS,
    cap: int = GRID_CAP,
) -> GridSpec:
    """Symmetric grid of half-width 2 max|b_i| / min_i max_j v(i,j)."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    largest = float(np.max(np.abs(b.array), initial=0.0))
    smallest_peak = float(np.min(np.max(v, axis=1))) if v.size else 0.0
    bound = 2.0 * largest / smallest_peak if smallest_peak > 0 else 0.0
    if not bound > 0 or not math.isfinite(bound):
        bound = 1.0
    return GridSpec.capped(-bound, bound, dims=v.shape[1], steps=steps, cap=cap)


def brute_force_forward(
    space: ProfileSpace,
    pops: Sequence[PopulationModel],
    b: ResidualTargets,
    partition: Partition,
    grid: GridSpec,
    eq_tol: float = TAU_EQ,
    workers: int = ORACLE_WORKERS,
) -> OracleResult:
    """
    Smallest sup-norm over flat grid corrections whose population averages are
    within eq_tol of every residual target.
    """
    masses = _group_masses(space, pops, partition)
    dims = partition.m
    grid.check(dims)
    targets = b.array
    logger.info(f"Forward oracle: {grid.steps}^{dims} grid points, band {eq_tol!r}")

    def score(points: np.ndarray) -> np.ndarray:
        gaps = np.abs(points @ masses.T - targets)
        values = np.max(np.abs(points), axis=1)
        values[np.max(gaps, axis=1) > eq_tol] = np.inf
        return values

    best, point, evaluated = _search([grid.axis] * dims, score, workers)
    if not math.isfinite(best) or point is None:
        return OracleResult(found=False, evaluated=evaluated)
    table = ScoreTable(tuple(point[partition.indices]))
    return OracleResult(found=True, best=best, table=table, point=point, evaluated=evaluated)


def brute_force_inverse(
    space: ProfileSpace,
    pops: Sequence[PopulationModel],
    b: ResidualTargets,
    partition: Partition,
    epsilon: float,
    grid: GridSpec,
    workers: int = ORACLE_WORKERS,
) -> OracleResult:
    """Smallest worst residual gap over flat grid corrections bounded by epsilon."""
    if not epsilon >= 0:
        raise InstanceError(f"epsilon must be nonnegative, got {epsilon}")
    masses = _group_masses(space, pops, partition)
    dims = partition.m
    lo, hi = max(grid.lo, -epsilon), min(grid.hi, epsilon)
    if lo < hi:
        axis = np.linspace(lo, hi, grid.steps)
    else:
        # grid and budget barely or never overlap: the in-budget point nearest the grid
        nearest = min(max(0.0, grid.lo), grid.hi)
        axis = np.array([min(max(nearest, -epsilon), epsilon)])
    grid.check(dims, steps=len(axis))
    targets = b.array

    def score(points: np.ndarray) -> np.ndarray:
        return np.max(np.abs(points @ masses.T - targets), axis=1)

    best, point, evaluated = _search([axis] * dims, score, workers)
    table = ScoreTable(tuple(point[partition.indices])) if point is not None else None
    return OracleResult(found=True, best=best, table=table, point=point, evaluated=evaluated)


def verify_two_pop_optimality(
    space: ProfileSpace,
    p1: PopulationModel,
    p2: PopulationModel,
    f: ScoreTable,
    k: float,
    grid: GridSpec,
    eq_tol: float = TAU_EQ,
    workers: int = ORACLE_WORKERS,
) -> TwoPopVerdict:
    """
    Search the grid for a fair correction strictly cheaper than |k|.

    The claimed correction f + k u must itself be fair; the search then covers
    every perturbation with all |v(x)| <= |k| - grid step.
    """
    weighted = (p1.array - p2.array) * space.weight_array
    base_gap = float(weighted @ f.array)
    dims = space.size

    def fair_norm(points: np.ndarray) -> np.ndarray:
        values = np.max(np.abs(points), axis=1)
        values[np.abs(base_gap + points @ weighted) > eq_tol] = np.inf
        return values

    u = np.where(p1.array > p2.array, 1.0, -1.0)
    claimed = f.array + k * u
    if abs(float(weighted @ claimed)) > eq_tol:
        grid.check(dims)
        best, point, _ = _search([grid.axis] * dims, fair_norm, workers)
        if point is not None and math.isfinite(best):
            witness = ScoreTable(tuple(f.array + point))
        else:
            witness = ScoreTable(tuple(claimed))
        return TwoPopVerdict(
            optimal=False, reason="claimed correction does not equalize averages", witness=witness
        )

    radius = abs(k) - grid.step
    if radius < 0:
        return TwoPopVerdict(optimal=True, reason="no grid perturbation is cheaper than |k|")

    axis = grid.axis[np.abs(grid.axis) <= radius]
    if axis.size == 0:
        return TwoPopVerdict(optimal=True, reason="no grid perturbation is cheaper than |k|")
    grid.check(dims, steps=axis.size)
    logger.info(f"Two-population check: {axis.size}^{dims} perturbations within {radius!r}")
    best, point, _ = _search([axis] * dims, fair_norm, workers)
    if point is not None and math.isfinite(best):
        return TwoPopVerdict(
            optimal=False,
            reason=f"fair correction with sup-norm {best!r} < |k| = {abs(k)!r}",
            witness=ScoreTable(tuple(f.array + point)),
        )
    return TwoPopVerdict(optimal=True, reason="no cheaper fair correction on the grid")


def brute_force_lp(
    model,
    feas_tol: float = TAU_FEAS,
    cap: int = GRID_CAP,
) -> LpSolution:
    """
    Best basic feasible point of ``max c.x, A x <= d, x >= 0`` by enumerating
    every square subsystem of active constraints.

    Only meaningful for bounded programs with a handful of rows and variables.
    """
    c = np.asarray(model.objective, dtype=float)
    A = np.asarray(model.A, dtype=float)
    d = np.asarray(model.d, dtype=float)
    n = c.shape[0]
    rows = np.vstack([A, -np.eye(n)]) if A.size else -np.eye(n)
    rhs = np.concatenate([d, np.zeros(n)])
    if math.comb(rows.shape[0], n) > cap:
        raise GridCapExceeded(f"too many vertex candidates ({math.comb(rows.shape[0], n)})")

    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    best_value = -math.inf
    best_x = None
    for active in itertools.combinations(range(rows.shape[0]), n):
        system = rows[list(active)]
        if np.linalg.matrix_rank(system) < n:
            continue
        x = np.linalg.solve(system, rhs[list(active)])
        if np.any(rows @ x - rhs > feas_tol * scale * 10):
            continue
        value = float(c @ x)
        if value > best_value + 1e-12 * (1 + abs(best_value)) or best_x is None:
            best_value, best_x = value, x

    if best_x is None:
        return LpSolution(LpStatus.INFEASIBLE)
    return LpSolution(LpStatus.OPTIMAL, x=best_x, objective=best_value)
