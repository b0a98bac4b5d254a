"""
Reductions between the target problems and their zero-shifted bonus-malus forms.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np

from app.errors import DimensionError
from app.fairness.profile_space import (
    PopulationModel,
    ProfileSpace,
    ScoreTable,
    TargetVector,
    population_average,
)


@dataclass(frozen=True)
class ResidualTargets:
    """What the correction alone must add to each population's average."""

    b: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))

    @cached_property
    def array(self) -> np.ndarray:
        array = np.asarray(self.b, dtype=float)
        array.setflags(write=False)
        return array

    def __len__(self) -> int:
        return len(self.b)


def residual_targets(
    space: ProfileSpace,
    pops: Sequence[PopulationModel],
    f: ScoreTable,
    targets: TargetVector,
) -> ResidualTargets:
    if len(pops) != len(targets):
        raise DimensionError(f"{len(pops)} populations but {len(targets)} targets")
    return ResidualTargets(
        tuple(y - population_average(space, pop, f) for pop, y in zip(pops, targets.y))
    )


def _add_tables(f: ScoreTable, u: ScoreTable) -> ScoreTable:
    if len(f) != len(u):
        raise DimensionError(f"score table has {len(f)} cells, correction has {len(u)}")
    return ScoreTable(tuple(f.array + u.array))


def assemble_forward(f: ScoreTable, u: ScoreTable) -> ScoreTable:
    """Corrected table h = f + u for the target-hitting problem."""
    return _add_tables(f, u)


def assemble_inverse(f: ScoreTable, u: ScoreTable) -> ScoreTable:
    """Corrected table u + f for the error-budgeted problem."""
    return _add_tables(f, u)


def bonus_malus_gaps(
    space: ProfileSpace,
    pops: Sequence[PopulationModel],
    u: ScoreTable,
    b: ResidualTargets,
) -> Tuple[List[float], float]:
    """Per-population |avg(u) - b_i| and their maximum."""
    if len(pops) != len(b):
        raise DimensionError(f"{len(pops)} populations but {len(b)} residual targets")
    gaps = [abs(population_average(space, pop, u) - bi) for pop, bi in zip(pops, b.b)]
    return gaps, max(gaps, default=0.0)


def target_distances(
    space: ProfileSpace,
    pops: Sequence[PopulationModel],
    g: ScoreTable,
    targets: TargetVector,
) -> Tuple[List[float], float]:
    """Per-population |avg(g) - y_i| and their maximum."""
    if len(pops) != len(targets):
        raise DimensionError(f"{len(pops)} populations but {len(targets)} targets")
    distances = [abs(population_average(space, pop, g) - y) for pop, y in zip(pops, targets.y)]
    return distances, max(distances, default=0.0)
