import numpy as np
import pytest

from app.errors import DimensionError
from app.fairness.profile_space import ScoreTable, TargetVector, population_average
from app.fairness.reduction import (
    ResidualTargets,
    assemble_forward,
    assemble_inverse,
    bonus_malus_gaps,
    residual_targets,
    target_distances,
)


class TestResidualTargets:
    def test_worked_instance(self, worked_instance):
        b = residual_targets(
            worked_instance.space,
            worked_instance.populations,
            worked_instance.scores,
            worked_instance.targets,
        )
        assert b.b == pytest.approx((0.0, -0.6), abs=1e-12)

    def test_targets_at_current_averages_give_zero(self, instance_factory):
        instance = instance_factory(seed=11, cells=9, pops=3)
        averages = [
            population_average(instance.space, p, instance.scores) for p in instance.populations
        ]
        b = residual_targets(
            instance.space, instance.populations, instance.scores, TargetVector(tuple(averages))
        )
        assert np.all(b.array == 0.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_common_shift_of_scores_and_targets_cancels(self, instance_factory, seed):
        instance = instance_factory(seed=300 + seed, cells=4 + seed, pops=1 + seed % 4)
        shift = -5.0 + 0.5 * seed
        base = residual_targets(
            instance.space, instance.populations, instance.scores, instance.targets
        )
        shifted = residual_targets(
            instance.space,
            instance.populations,
            ScoreTable(tuple(instance.scores.array + shift)),
            TargetVector(tuple(instance.targets.array + shift)),
        )
        assert shifted.b == pytest.approx(base.b, abs=1e-9)

    def test_count_mismatch(self, worked_instance):
        with pytest.raises(DimensionError):
            residual_targets(
                worked_instance.space,
                worked_instance.populations,
                worked_instance.scores,
                TargetVector((1.0,)),
            )


class TestAssemble:
    def test_adds_cellwise(self):
        h = assemble_forward(ScoreTable((1.0, 2.0)), ScoreTable((0.5, -0.5)))
        assert h.values == (1.5, 1.5)
        assert assemble_inverse(ScoreTable((1.0, 2.0)), ScoreTable((0.5, -0.5))).values == h.values

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            assemble_forward(ScoreTable((1.0, 2.0)), ScoreTable((0.5,)))


class TestReductionIdentities:
    @pytest.mark.parametrize("seed", range(200))
    def test_hitting_residuals_hits_targets(self, instance_factory, seed):
        rng = np.random.default_rng(5000 + seed)
        cells = 2 + seed % 30
        pops = 1 + seed % 4
        instance = instance_factory(seed=seed, cells=cells, pops=pops)
        space, populations, f = instance.space, instance.populations, instance.scores

        u = ScoreTable(tuple(rng.normal(0.0, 1.0, cells)))
        targets = TargetVector(
            tuple(
                population_average(space, p, f) + population_average(space, p, u)
                for p in populations
            )
        )
        b = residual_targets(space, populations, f, targets)
        gaps, worst = bonus_malus_gaps(space, populations, u, b)
        assert worst == pytest.approx(0.0, abs=1e-12)

        h = assemble_forward(f, u)
        for pop, y in zip(populations, targets.y):
            assert population_average(space, pop, h) == pytest.approx(y, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("seed", range(200))
    def test_residual_gap_equals_target_distance(self, instance_factory, seed):
        rng = np.random.default_rng(9000 + seed)
        cells = 2 + seed % 30
        instance = instance_factory(seed=seed, cells=cells, pops=1 + seed % 4)
        space, populations, f = instance.space, instance.populations, instance.scores

        u = ScoreTable(tuple(rng.normal(0.0, 1.0, cells)))
        b = residual_targets(space, populations, f, instance.targets)
        gaps, worst_gap = bonus_malus_gaps(space, populations, u, b)
        distances, worst_distance = target_distances(
            space, populations, assemble_inverse(f, u), instance.targets
        )
        assert gaps == pytest.approx(distances, rel=1e-12, abs=1e-12)
        assert worst_gap == pytest.approx(worst_distance, rel=1e-12, abs=1e-12)

    def test_gap_count_mismatch(self, worked_instance):
        with pytest.raises(DimensionError):
            bonus_malus_gaps(
                worked_instance.space,
                worked_instance.populations,
                worked_instance.scores,
                ResidualTargets((0.0,)),
            )
