"""
Discrete data model: profile cells, population densities, score tables and
partitions, plus the audit operations built on population averages.

All integrals over the profile set are finite sums over cells, each cell
contributing ``value * weight``.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.config import TAU_NORM
from app.errors import DimensionError, InstanceError

logger = logging.getLogger(__name__)


def _frozen_array(values: Sequence[float]) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    array.setflags(write=False)
    return array


def _as_float_tuple(values: Iterable[float]) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.asarray(list(values), dtype=float).ravel())


@dataclass(frozen=True)
class ProfileSpace:
    """Ordered cells with quadrature weights (1 for a purely discrete profile set)."""

    cell_ids: Tuple[str, ...]
    weights: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "cell_ids", tuple(str(c) for c in self.cell_ids))
        if not self.weights:
            object.__setattr__(self, "weights", tuple(1.0 for _ in self.cell_ids))
        else:
            object.__setattr__(self, "weights", _as_float_tuple(self.weights))

    @classmethod
    def uniform(cls, size: int, prefix: str = "c") -> "ProfileSpace":
        """Unit-weight space with generated cell labels."""
        width = max(len(str(size - 1)), 1)
        return cls(cell_ids=tuple(f"{prefix}{i:0{width}d}" for i in range(size)))

    @property
    def size(self) -> int:
        return len(self.cell_ids)

    @cached_property
    def weight_array(self) -> np.ndarray:
        return _frozen_array(self.weights)

    def integrate(self, values: np.ndarray) -> float:
        """Discretized integral of a per-cell quantity."""
        return float(np.dot(values, self.weight_array))


@dataclass(frozen=True)
class PopulationModel:
    """Tabulated density of one population over the cells."""

    name: str
    density: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "name", str(self.name))
        object.__setattr__(self, "density", _as_float_tuple(self.density))

    @cached_property
    def array(self) -> np.ndarray:
        return _frozen_array(self.density)


@dataclass(frozen=True)
class ScoreTable:
    """A real score per cell, in the cell order of its space."""

    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _as_float_tuple(self.values))

    @classmethod
    def constant(cls, size: int, value: float = 0.0) -> "ScoreTable":
        return cls(values=tuple(float(value) for _ in range(size)))

    @cached_property
    def array(self) -> np.ndarray:
        return _frozen_array(self.values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Partition:
    """Group index per cell, 1-based: ``group_of[c]`` is the group holding cell ``c``."""

    group_of: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "group_of", tuple(int(g) for g in self.group_of))

    @property
    def m(self) -> int:
        return max(self.group_of) if self.group_of else 0

    @cached_property
    def indices(self) -> np.ndarray:
        """0-based group index per cell."""
        indices = np.asarray(self.group_of, dtype=int) - 1
        indices.setflags(write=False)
        return indices

    def members(self, group: int) -> List[int]:
        """Cells (0-based positions) of a 1-based group."""
        return [c for c, g in enumerate(self.group_of) if g == group]


@dataclass(frozen=True)
class TargetVector:
    """Desired average score per population."""

    y: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "y", _as_float_tuple(self.y))

    @cached_property
    def array(self) -> np.ndarray:
        return _frozen_array(self.y)

    def __len__(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class PopulationGap:
    name: str
    average: float
    target: float
    gap: float


@dataclass(frozen=True)
class AuditReport:
    gaps: Tuple[PopulationGap, ...]
    max_abs_gap: float

    @property
    def averages(self) -> List[float]:
        return [g.average for g in self.gaps]


def validate_instance(
    space: ProfileSpace,
    pops: Sequence[PopulationModel],
    scores: Optional[ScoreTable],
    tau_norm: float = TAU_NORM,
) -> List[str]:
    """
    Check every invariant of an instance without raising.

    Returns:
        Human-readable violations, empty when the instance is valid.
    """
    violations: List[str] = []
    size = space.size

    if size < 1:
        violations.append("no cells")
    if len(set(space.cell_ids)) != size:
        violations.append("duplicate cell ids")
    if len(space.weights) != size:
        violations.append(f"weights has {len(space.weights)} entries for {size} cells")
    else:
        weights = space.weight_array
        if not np.all(np.isfinite(weights)):
            violations.append("non-finite weight")
        elif np.any(weights <= 0):
            bad = int(np.argmax(weights <= 0))
            violations.append(f"nonpositive weight at cell {space.cell_ids[bad]}")

    if scores is not None:
        if len(scores) != size:
            violations.append(f"scores has {len(scores)} entries for {size} cells")
        elif not np.all(np.isfinite(scores.array)):
            violations.append("non-finite score")

    if not pops:
        violations.append("no populations")

    weights_ok = len(space.weights) == size
    for pop in pops:
        density = pop.array
        if density.shape[0] != size:
            violations.append(
                f"population {pop.name}: density has {density.shape[0]} entries for {size} cells"
            )
            continue
        if not np.all(np.isfinite(density)):
            violations.append(f"population {pop.name}: non-finite density")
            continue
        if np.any(density < 0):
            violations.append(f"population {pop.name}: negative density")
        if weights_ok:
            mass = space.integrate(density)
            if not math.isfinite(mass) or abs(mass - 1.0) > tau_norm:
                violations.append(
                    f"density not normalized: population {pop.name} has mass {mass!r}"
                )

    names = [pop.name for pop in pops]
    if len(set(names)) != len(names):
        violations.append("duplicate population names")

    return violations


def validate_targets(pops: Sequence[PopulationModel], targets: TargetVector) -> List[str]:
    violations = []
    if len(targets) < 1:
        violations.append("no targets")
    if len(targets) != len(pops):
        violations.append(f"{len(targets)} targets for {len(pops)} populations")
    if not np.all(np.isfinite(targets.array)):
        violations.append("non-finite target")
    return violations


def require_valid(
    space: ProfileSpace,
    pops: Sequence[PopulationModel],
    scores: Optional[ScoreTable],
    tau_norm: float = TAU_NORM,
) -> None:
    """Raise InstanceError listing every violation, if any."""
    violations = validate_instance(space, pops, scores, tau_norm=tau_norm)
    if violations:
        logger.error(f"Instance failed validation with {len(violations)} violation(s)")
        raise InstanceError("invalid instance", violations)


def renormalize(space: ProfileSpace, pop: PopulationModel) -> PopulationModel:
    """Rescale a density to unit mass. Only used when explicitly requested."""
    mass = space.integrate(pop.array)
    if not mass > 0:
        raise InstanceError(f"population {pop.name} has no mass to renormalize")
    logger.warning(f"Renormalizing population {pop.name} (mass {mass!r})")
    return PopulationModel(name=pop.name, density=tuple(pop.array / mass))


def population_average(space: ProfileSpace, pop: PopulationModel, scores: ScoreTable) -> float:
    """Average score of a population: sum over cells of density * score * weight."""
    return space.integrate(pop.array * scores.array)


def audit(
    space: ProfileSpace,
    pops: Sequence[PopulationModel],
    scores: ScoreTable,
    targets: TargetVector,
) -> AuditReport:
    if len(pops) != len(targets):
        raise DimensionError(f"{len(pops)} populations but {len(targets)} targets")

    gaps = []
    for pop, target in zip(pops, targets.y):
        average = population_average(space, pop, scores)
        gap = average - target
        gaps.append(PopulationGap(name=pop.name, average=average, target=target, gap=gap))

    max_abs_gap = max((abs(g.gap) for g in gaps), default=0.0)
    return AuditReport(gaps=tuple(gaps), max_abs_gap=max_abs_gap)


def sup_norm_distance(a: ScoreTable, b: ScoreTable) -> float:
    if len(a) != len(b):
        raise DimensionError(f"score tables have {len(a)} and {len(b)} cells")
    if len(a) == 0:
        return 0.0
    return float(np.max(np.abs(a.array - b.array)))
