"""
Builds the canonical-form linear programs for flat corrections and decodes their
solutions back into score tables.

Variables are ordered alpha_1..alpha_m, beta_1..beta_m, gamma; every model
maximizes -gamma subject to rows ``A x <= d`` and ``x >= 0``.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.config import TAU_NORM
from app.errors import DimensionError, InstanceError
from app.fairness.profile_space import Partition, PopulationModel, ProfileSpace, ScoreTable
from app.fairness.reduction import ResidualTargets
from app.fairness.simplex import LpSolution, LpStatus

logger = logging.getLogger(__name__)


class ModelKind(str, Enum):
    FORWARD = "forward"
    INVERSE = "inverse"
    GENERIC = "generic"


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GroupMassMatrix:
    """v[i][j]: mass of population i inside group j."""

    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen(np.atleast_2d(self.v)))

    @property
    def n(self) -> int:
        return int(self.v.shape[0])

    @property
    def m(self) -> int:
        return int(self.v.shape[1])

    def row_sums_ok(self, tau_norm: float = TAU_NORM) -> bool:
        return bool(np.all(np.abs(self.v.sum(axis=1) - 1.0) <= tau_norm))


@dataclass(frozen=True, eq=False)
class LpModel:
    """maximize objective . x  subject to  A x <= d,  x >= 0."""

    objective: np.ndarray
    A: np.ndarray
    d: np.ndarray
    variable_names: Tuple[str, ...]
    kind: ModelKind = ModelKind.GENERIC
    row_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "objective", _frozen(np.ravel(self.objective)))
        object.__setattr__(self, "A", _frozen(np.reshape(self.A, (-1, len(self.objective)))))
        object.__setattr__(self, "d", _frozen(np.ravel(self.d)))
        if not self.variable_names:
            names = tuple(f"x{k + 1}" for k in range(len(self.objective)))
            object.__setattr__(self, "variable_names", names)
        if not self.row_labels:
            object.__setattr__(self, "row_labels", tuple(f"r{k + 1}" for k in range(len(self.d))))

    @property
    def num_vars(self) -> int:
        return int(self.objective.shape[0])

    @property
    def num_rows(self) -> int:
        return int(self.d.shape[0])

    @property
    def groups(self) -> int:
        """Number of partition groups for bonus-malus models (alpha, beta per group + gamma)."""
        return (self.num_vars - 1) // 2

    @property
    def constraints(self) -> Iterator[Tuple[np.ndarray, str, float]]:
        for row, rhs in zip(self.A, self.d):
            yield row, "<=", float(rhs)

    def dual(self) -> "LpModel":
        """Canonical dual: maximize -d . y subject to -A^T y <= -c, y >= 0."""
        return LpModel(
            objective=-self.d,
            A=-self.A.T,
            d=-self.objective,
            variable_names=tuple(f"y{k + 1}" for k in range(self.num_rows)),
        )

    def to_listing(self) -> str:
        """Plain-text listing, one row per line."""

        def linear(coefficients: np.ndarray) -> str:
            terms = []
            for coef, name in zip(coefficients, self.variable_names):
                if coef == 0:
                    continue
                sign = "-" if coef < 0 else "+"
                magnitude = float(abs(coef))
                term = name if magnitude == 1 else f"{magnitude!r} {name}"
                terms.append(f"{sign} {term}")
            if not terms:
                return "0"
            text = " ".join(terms)
            return text[2:] if text.startswith("+ ") else text

        lines = [f"\\ {self.kind.value} model: {self.num_vars} variables, {self.num_rows} rows"]
        lines.append("maximize")
        lines.append(f"  obj: {linear(self.objective)}")
        lines.append("subject to")
        for label, (row, _, rhs) in zip(self.row_labels, self.constraints):
            lines.append(f"  {label}: {linear(row)} <= {rhs!r}")
        lines.append("bounds")
        for name in self.variable_names:
            lines.append(f"  {name} >= 0")
        lines.append("end")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class BonusMalusSolution:
    status: LpStatus
    kind: ModelKind
    u: Optional[ScoreTable] = None
    gamma: Optional[float] = None
    alpha: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    @cached_property
    def flat_values(self) -> Optional[np.ndarray]:
        """Correction value per group."""
        if self.alpha is None or self.beta is None:
            return None
        return self.alpha - self.beta


def _variable_names(m: int) -> Tuple[str, ...]:
    return (
        tuple(f"α{j}" for j in range(1, m + 1))
        + tuple(f"β{j}" for j in range(1, m + 1))
        + ("g",)
    )


def group_mass(
    space: ProfileSpace, pops: Sequence[PopulationModel], partition: Partition
) -> GroupMassMatrix:
    if len(partition.group_of) != space.size:
        raise DimensionError(
            f"partition has {len(partition.group_of)} entries for {space.size} cells"
        )
    m = partition.m
    rows = [
        np.bincount(partition.indices, weights=pop.array * space.weight_array, minlength=m)
        for pop in pops
    ]
    return GroupMassMatrix(np.vstack(rows) if rows else np.zeros((0, m)))


def _check_dimensions(v: GroupMassMatrix, b: ResidualTargets) -> None:
    if v.n != len(b):
        raise DimensionError(f"mass matrix has {v.n} rows but {len(b)} residual targets")
    if v.m < 1:
        raise DimensionError("partition has no groups")


def build_forward_lp(
    v: GroupMassMatrix, b: ResidualTargets, tolerance: float = 0.0
) -> LpModel:
    """
    Smallest flat correction hitting every residual target.

    Rows: alpha_j - gamma <= 0 and beta_j - gamma <= 0 for each group, then
    sum_j (alpha_j - beta_j) v(i,j) <= b_i + tolerance and its mirror
    sum_j (beta_j - alpha_j) v(i,j) <= -b_i + tolerance for each population.
    """
    _check_dimensions(v, b)
    if tolerance < 0:
        raise InstanceError(f"tolerance must be nonnegative, got {tolerance}")
    n, m = v.n, v.m
    num_vars = 2 * m + 1

    rows: List[np.ndarray] = []
    rhs: List[float] = []
    labels: List[str] = []
    for j in range(m):
        for offset, name in ((0, "α"), (m, "β")):
            row = np.zeros(num_vars)
            row[offset + j] = 1.0
            row[-1] = -1.0
            rows.append(row)
            rhs.append(0.0)
            labels.append(f"box_{name}{j + 1}")

    for i in range(n):
        row = np.concatenate([v.v[i], -v.v[i], [0.0]])
        rows.append(row)
        rhs.append(b.b[i] + tolerance)
        labels.append(f"hit_upper{i + 1}")
        rows.append(-row)
        rhs.append(-b.b[i] + tolerance)
        labels.append(f"hit_lower{i + 1}")

    objective = np.zeros(num_vars)
    objective[-1] = -1.0
    logger.debug(f"Built forward LP with {num_vars} variables and {len(rows)} rows")
    return LpModel(
        objective=objective,
        A=np.vstack(rows),
        d=np.asarray(rhs),
        variable_names=_variable_names(m),
        kind=ModelKind.FORWARD,
        row_labels=tuple(labels),
    )


def build_inverse_lp(v: GroupMassMatrix, b: ResidualTargets, epsilon: float) -> LpModel:
    """
    Flat correction bounded by epsilon that minimizes the worst target gap.

    Rows: alpha_j <= epsilon and beta_j <= epsilon for each group, then
    sum_j (alpha_j - beta_j) v(i,j) - gamma <= b_i and
    sum_j (beta_j - alpha_j) v(i,j) - gamma <= -b_i for each population.
    """
    _check_dimensions(v, b)
    if not epsilon >= 0:
        raise InstanceError(f"epsilon must be nonnegative, got {epsilon}")
    n, m = v.n, v.m
    num_vars = 2 * m + 1

    rows: List[np.ndarray] = []
    rhs: List[float] = []
    labels: List[str] = []
    for j in range(m):
        for offset, name in ((0, "α"), (m, "β")):
            row = np.zeros(num_vars)
            row[offset + j] = 1.0
            rows.append(row)
            rhs.append(float(epsilon))
            labels.append(f"budget_{name}{j + 1}")

    for i in range(n):
        spread = np.concatenate([v.v[i], -v.v[i]])
        rows.append(np.concatenate([spread, [-1.0]]))
        rhs.append(b.b[i])
        labels.append(f"gap_upper{i + 1}")
        rows.append(np.concatenate([-spread, [-1.0]]))
        rhs.append(-b.b[i])
        labels.append(f"gap_lower{i + 1}")

    objective = np.zeros(num_vars)
    objective[-1] = -1.0
    logger.debug(f"Built inverse LP (epsilon={epsilon!r}) with {len(rows)} rows")
    return LpModel(
        objective=objective,
        A=np.vstack(rows),
        d=np.asarray(rhs),
        variable_names=_variable_names(m),
        kind=ModelKind.INVERSE,
        row_labels=tuple(labels),
    )


def decode_solution(
    model: LpModel, solution: LpSolution, partition: Partition, space: ProfileSpace
) -> BonusMalusSolution:
    """Expand alpha_j - beta_j onto the cells of each group."""
    if not solution.is_optimal or solution.x is None:
        return BonusMalusSolution(
            status=solution.status, kind=model.kind, iterations=solution.iterations
        )

    m = model.groups
    if partition.m != m:
        raise DimensionError(f"model has {m} groups but partition has {partition.m}")
    if len(partition.group_of) != space.size:
        raise DimensionError("partition does not cover the profile space")

    x = np.asarray(solution.x, dtype=float)
    alpha = _frozen(x[:m])
    beta = _frozen(x[m : 2 * m])
    gamma = float(x[-1])
    u = (alpha - beta)[partition.indices]
    return BonusMalusSolution(
        status=solution.status,
        kind=model.kind,
        u=ScoreTable(tuple(u)),
        gamma=gamma,
        alpha=alpha,
        beta=beta,
        iterations=solution.iterations,
    )


def canonicalize_bonus_malus(
    alpha: Sequence[float], beta: Sequence[float], gamma: float
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Cancel the common part of each (alpha_j, beta_j) pair.

    Differences alpha_j - beta_j are unchanged, at most one of each pair is
    nonzero, and gamma shrinks to the largest remaining value.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if alpha.shape != beta.shape:
        raise DimensionError(f"alpha has {alpha.size} entries, beta has {beta.size}")
    diff = alpha - beta
    alpha_c = np.where(diff >= 0, diff, 0.0)
    beta_c = np.where(diff >= 0, 0.0, -diff)
    gamma_c = float(max(alpha_c.max(initial=0.0), beta_c.max(initial=0.0)))
    if gamma_c > gamma:
        logger.warning(f"Canonical gamma {gamma_c!r} exceeds input gamma {gamma!r}")
    return alpha_c, beta_c, gamma_c


def flat_to_bonus_malus(w: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, float]:
    """Split a flat correction into nonnegative (alpha, beta) and gamma = max |w_j|."""
    w = np.asarray(w, dtype=float)
    alpha = np.maximum(w, 0.0)
    beta = np.maximum(-w, 0.0)
    gamma = float(np.abs(w).max(initial=0.0))
    return alpha, beta, gamma
