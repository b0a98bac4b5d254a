import logging

import numpy as np

from app.errors import InstanceError
from app.fairness.profile_space import (
    PopulationModel,
    ProfileSpace,
    ScoreTable,
    TargetVector,
    population_average,
)
from app.services.instance_service import Instance

logger = logging.getLogger(__name__)


class SynthService:
    """
    Deterministic synthetic instances: one discretized bump per population over
    a line of cells, a noisy ramp of scores, and targets at the grand mean.
    """

    # Bump width, as a fraction of the unit interval the cells cover
    WIDTH = 0.15
    # Scores rise linearly by RAMP across the cells
    RAMP = 10.0
    NOISE = 0.5

    def __init__(self, cells: int, pops: int, seed: int = 0, separation: float = 0.2):
        if cells < 1:
            raise InstanceError(f"need at least 1 cell, got {cells}")
        if pops < 1:
            raise InstanceError(f"need at least 1 population, got {pops}")
        self.cells = cells
        self.pops = pops
        self.seed = seed
        self.separation = separation

    def positions(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) / self.cells

    def centers(self) -> np.ndarray:
        offsets = np.arange(self.pops) - (self.pops - 1) / 2.0
        return 0.5 + self.separation * offsets

    def density(self, center: float) -> np.ndarray:
        exponent = -((self.positions() - center) ** 2) / (2.0 * self.WIDTH**2)
        bump = np.exp(exponent - exponent.max())
        return bump / bump.sum()

    def generate(self) -> Instance:
        rng = np.random.default_rng(self.seed)
        space = ProfileSpace.uniform(self.cells)
        populations = tuple(
            PopulationModel(name=f"pop{i + 1}", density=tuple(self.density(center)))
            for i, center in enumerate(self.centers())
        )
        ramp = self.RAMP * self.positions()
        scores = ScoreTable(tuple(ramp + rng.normal(0.0, self.NOISE, self.cells)))

        grand_mean = float(np.mean([population_average(space, p, scores) for p in populations]))
        targets = TargetVector(tuple(grand_mean for _ in populations))
        logger.info(
            f"Generated instance: {self.cells} cells, {self.pops} populations, "
            f"seed {self.seed}, separation {self.separation}"
        )
        return Instance(space=space, populations=populations, scores=scores, targets=targets)
