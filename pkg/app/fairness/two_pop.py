"""
Closed-form correction for two populations: a uniform bonus on the cells where
the first population is the majority and a uniform malus elsewhere.
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.fairness.profile_space import PopulationModel, ProfileSpace, ScoreTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TwoPopSolution:
    u: ScoreTable
    A: float
    B: float
    k: float
    h: ScoreTable

    @property
    def plus_cells(self) -> int:
        return int(np.sum(self.u.array > 0))

    @property
    def minus_cells(self) -> int:
        return int(np.sum(self.u.array < 0))


def solve_two_pop(
    space: ProfileSpace, p1: PopulationModel, p2: PopulationModel, f: ScoreTable
) -> TwoPopSolution:
    """
    Equalize the average scores of two populations with the smallest possible
    worst-case change to any individual score.

    Tie cells (equal densities) get u = -1; they contribute nothing to A or B.
    """
    diff = p1.array - p2.array
    # strict comparison on the stored densities, no tolerance band
    u = np.where(p1.array > p2.array, 1.0, -1.0)

    A = space.integrate(diff * u)
    B = space.integrate(diff * f.array)
    if A > 0:
        k = -B / A
    else:
        # p1 == p2 on every cell, hence B == 0 as well
        k = 0.0

    h = f.array + k * u
    logger.debug(f"Two-population correction: A={A!r} B={B!r} k={k!r}")
    return TwoPopSolution(u=ScoreTable(tuple(u)), A=A, B=B, k=k, h=ScoreTable(tuple(h)))
