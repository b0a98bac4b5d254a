"""
Dense-tableau two-phase simplex for canonical-form programs:

    maximize c . x   subject to   A x <= d,   x >= 0

Pivoting follows the largest-coefficient rule and switches to Bland's rule
once the objective stalls, which guarantees termination on degenerate models.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, TextIO, Tuple

import numpy as np

from app.config import BLAND_STALL_FACTOR, MAX_ITERATIONS, PIVOT_TOL, TAU_FEAS
from app.errors import DimensionError, InstanceError, SimplexError

if TYPE_CHECKING:
    from app.fairness.lp_builder import LpModel

logger = logging.getLogger(__name__)


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0
    # sum of artificials at the end of phase one (positive when infeasible)
    phase_one_objective: Optional[float] = None
    # improving direction when unbounded
    ray: Optional[np.ndarray] = None

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Unbounded(Exception):
    def __init__(self, column: int):
        self.column = column


class _Tableau:
    """
    Rows 0..R-1 hold the constraints, the last row holds reduced costs, the last
    column holds right-hand sides. ``basis[i]`` is the column basic in row i.
    """

    def __init__(self, T: np.ndarray, basis: List[int], names: List[str]):
        self.T = T
        self.basis = basis
        self.names = names

    @property
    def rows(self) -> int:
        return self.T.shape[0] - 1

    @property
    def cols(self) -> int:
        return self.T.shape[1] - 1

    @property
    def value(self) -> float:
        return float(self.T[-1, -1])

    def set_objective(self, costs: np.ndarray) -> None:
        """Install a maximization objective and price out the current basis."""
        self.T[-1, :] = 0.0
        self.T[-1, : costs.shape[0]] = -costs
        for i, column in enumerate(self.basis):
            if column < costs.shape[0] and costs[column] != 0:
                self.T[-1, :] += costs[column] * self.T[i, :]

    def pivot(self, row: int, column: int) -> None:
        pivot_row = self.T[row, :] / self.T[row, column]
        factors = self.T[:, column].copy()
        factors[row] = 0.0
        touched = np.flatnonzero(factors)
        if touched.size:
            # only columns where the pivot row is nonzero change
            nonzero = np.flatnonzero(pivot_row)
            self.T[np.ix_(touched, nonzero)] -= np.outer(factors[touched], pivot_row[nonzero])
        self.T[row, :] = pivot_row
        self.T[:, column] = 0.0
        self.T[row, column] = 1.0
        self.basis[row] = column

    def delete_row(self, row: int) -> None:
        self.T = np.delete(self.T, row, axis=0)
        del self.basis[row]

    def keep_columns(self, count: int) -> None:
        self.T = np.hstack([self.T[:, :count], self.T[:, -1:]])
        self.names = self.names[:count]

    def primal(self, count: int) -> np.ndarray:
        x = np.zeros(self.cols)
        for i, column in enumerate(self.basis):
            x[column] = self.T[i, -1]
        return x[:count]

    def dump(self, stream: TextIO, header: str) -> None:
        stream.write(f"{header}\n")
        stream.write("basis: " + " ".join(self.names[c] for c in self.basis) + "\n")
        stream.write(np.array2string(self.T, precision=6, suppress_small=True, max_line_width=200))
        stream.write("\n")


def _split_rows(
    A: np.ndarray, d: np.ndarray, merge_equalities: bool
) -> Tuple[List[int], List[int]]:
    """Indices of rows kept as inequalities, and of rows standing for merged equalities."""
    inequalities: List[int] = []
    equalities: List[int] = []
    if not merge_equalities:
        return list(range(A.shape[0])), equalities

    pending: Dict[Tuple[Tuple[float, ...], float], List[int]] = {}
    for k in range(A.shape[0]):
        mirror = (tuple(-A[k]), float(-d[k]))
        if pending.get(mirror):
            partner = pending[mirror].pop()
            inequalities.remove(partner)
            equalities.append(partner)
            continue
        pending.setdefault((tuple(A[k]), float(d[k])), []).append(k)
        inequalities.append(k)
    return inequalities, equalities


class SimplexSolver:
    """Two-phase simplex with a deterministic pivot policy."""

    def __init__(
        self,
        pivot_tol: float = PIVOT_TOL,
        feas_tol: float = TAU_FEAS,
        stall_factor: int = BLAND_STALL_FACTOR,
        max_iterations: int = MAX_ITERATIONS,
        merge_equalities: bool = True,
        debug_stream: Optional[TextIO] = None,
    ):
        self.pivot_tol = pivot_tol
        self.feas_tol = feas_tol
        self.stall_factor = stall_factor
        self.max_iterations = max_iterations
        self.merge_equalities = merge_equalities
        self.debug_stream = debug_stream
        self.iterations = 0

    def _check_model(self, model: "LpModel") -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        c = np.asarray(model.objective, dtype=float)
        A = np.asarray(model.A, dtype=float)
        d = np.asarray(model.d, dtype=float)
        if c.ndim != 1 or d.ndim != 1 or A.ndim != 2:
            raise DimensionError("objective and right-hand side must be vectors, A a matrix")
        if A.shape != (d.shape[0], c.shape[0]):
            raise DimensionError(
                f"A is {A.shape[0]}x{A.shape[1]} but there are {d.shape[0]} rows "
                f"and {c.shape[0]} variables"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(d))):
            raise InstanceError("non-finite coefficient in linear program")
        return c, A, d

    def solve(self, model: "LpModel") -> LpSolution:
        c, A, d = self._check_model(model)
        self.iterations = 0
        n = c.shape[0]

        # presolve: all-zero rows
        zero_rows = np.all(A == 0, axis=1)
        if np.any(zero_rows & (d < 0)):
            violation = float(-d[zero_rows].min())
            logger.info("Linear program infeasible: an all-zero row has a negative bound")
            return LpSolution(LpStatus.INFEASIBLE, phase_one_objective=violation)
        keep = ~zero_rows
        A_work, d_work = A[keep], d[keep]

        inequalities, equalities = _split_rows(A_work, d_work, self.merge_equalities)
        if equalities:
            logger.debug(f"Merged {len(equalities)} mirrored row pairs into equalities")

        tableau, artificials = self._standard_form(A_work, d_work, inequalities, equalities, n)
        scale = max(1.0, float(np.abs(d_work).max(initial=0.0)))

        if artificials:
            costs = np.zeros(tableau.cols)
            costs[artificials] = -1.0
            tableau.set_objective(costs)
            self._run(tableau, "phase 1")
            if -tableau.value > self.feas_tol * scale:
                logger.info(
                    f"Linear program infeasible (phase 1 residual {-tableau.value!r}, "
                    f"{self.iterations} iterations)"
                )
                return LpSolution(
                    LpStatus.INFEASIBLE,
                    iterations=self.iterations,
                    phase_one_objective=-tableau.value,
                )
            self._drive_out(tableau, set(artificials))
            tableau.keep_columns(min(artificials))

        costs = np.zeros(tableau.cols)
        costs[:n] = c
        tableau.set_objective(costs)
        try:
            self._run(tableau, "phase 2")
        except _Unbounded as unbounded:
            ray = np.zeros(tableau.cols)
            ray[unbounded.column] = 1.0
            for i, column in enumerate(tableau.basis):
                ray[column] = -tableau.T[i, unbounded.column]
            logger.info(f"Linear program unbounded after {self.iterations} iterations")
            return LpSolution(LpStatus.UNBOUNDED, iterations=self.iterations, ray=ray[:n])

        x = np.maximum(tableau.primal(n), 0.0)
        x.setflags(write=False)
        objective = float(c @ x)
        if A.shape[0]:
            violation = float(np.max(A @ x - d))
            if violation > self.feas_tol * scale:
                logger.warning(f"Optimal point violates a row by {violation!r}")
        logger.info(
            f"Linear program optimal: objective {objective!r} after {self.iterations} iterations"
        )
        return LpSolution(LpStatus.OPTIMAL, x=x, objective=objective, iterations=self.iterations)

    def _standard_form(
        self,
        A: np.ndarray,
        d: np.ndarray,
        inequalities: List[int],
        equalities: List[int],
        n: int,
    ) -> Tuple[_Tableau, List[int]]:
        """Slack per inequality, artificial per row whose slack cannot start basic."""
        rows = len(inequalities) + len(equalities)
        slack_count = len(inequalities)
        needs_artificial = [k for k in inequalities if d[k] < 0] + list(equalities)
        cols = n + slack_count + len(needs_artificial)

        T = np.zeros((rows + 1, cols + 1))
        basis: List[int] = []
        names = [f"x{k + 1}" for k in range(n)] + [f"s{k + 1}" for k in range(slack_count)]
        names += [f"a{k + 1}" for k in range(len(needs_artificial))]
        artificials: List[int] = []

        next_artificial = n + slack_count
        for i, k in enumerate(inequalities + equalities):
            T[i, :n] = A[k]
            T[i, -1] = d[k]
            if i < slack_count:
                T[i, n + i] = 1.0
            if T[i, -1] < 0:
                T[i, :] *= -1.0
            if i < slack_count and d[k] >= 0:
                basis.append(n + i)
            else:
                T[i, next_artificial] = 1.0
                basis.append(next_artificial)
                artificials.append(next_artificial)
                next_artificial += 1
        return _Tableau(T, basis, names), artificials

    def _drive_out(self, tableau: _Tableau, artificials: set) -> None:
        """Pivot zero-level artificials out of the basis; drop rows that are redundant."""
        first_artificial = min(artificials)
        row = 0
        while row < tableau.rows:
            if tableau.basis[row] not in artificials:
                row += 1
                continue
            candidates = np.flatnonzero(
                np.abs(tableau.T[row, :first_artificial]) > self.pivot_tol
            )
            if candidates.size:
                tableau.pivot(row, int(candidates[0]))
                row += 1
            else:
                logger.debug(f"Dropping redundant row {row}")
                tableau.delete_row(row)

    def _run(self, tableau: _Tableau, phase: str) -> None:
        """Pivot until no reduced cost is negative. Raises _Unbounded."""
        stall_limit = self.stall_factor * (tableau.rows + tableau.cols)
        best = tableau.value
        stalled = 0
        bland = False
        if self.debug_stream is not None:
            tableau.dump(self.debug_stream, f"{phase}: start")

        while True:
            reduced = tableau.T[-1, : tableau.cols]
            if bland:
                improving = np.flatnonzero(reduced < -self.feas_tol)
                if not improving.size:
                    return
                column = int(improving[0])
            else:
                column = int(np.argmin(reduced))
                if reduced[column] >= -self.feas_tol:
                    return

            entries = tableau.T[:-1, column]
            eligible = entries > self.pivot_tol
            if not np.any(eligible):
                raise _Unbounded(column)
            ratios = np.full(tableau.rows, np.inf)
            ratios[eligible] = np.maximum(tableau.T[:-1, -1][eligible], 0.0) / entries[eligible]
            smallest = ratios.min()
            ties = np.flatnonzero(ratios <= smallest + 1e-12 * (1.0 + smallest))
            if bland:
                row = int(min(ties, key=lambda r: tableau.basis[r]))
            else:
                row = int(ties[0])

            if self.iterations >= self.max_iterations:
                raise SimplexError(f"simplex exceeded {self.max_iterations} iterations")
            tableau.pivot(row, column)
            self.iterations += 1
            if self.debug_stream is not None:
                tableau.dump(
                    self.debug_stream,
                    f"{phase}: iteration {self.iterations}, "
                    f"enter {tableau.names[column]} in row {row}",
                )

            if tableau.value > best + 1e-12 * (1.0 + abs(best)):
                best = tableau.value
                stalled = 0
            else:
                stalled += 1
                if not bland and stalled > stall_limit:
                    bland = True
                    logger.info(f"{phase}: objective stalled, switching to Bland's rule")


def solve(model: "LpModel", **options) -> LpSolution:
    """Solve a canonical-form model; options are passed to SimplexSolver."""
    return SimplexSolver(**options).solve(model)
