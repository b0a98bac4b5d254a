import pytest

from app.errors import InstanceError
from app.fairness.partitions import (
    block_partition,
    majority_partition,
    refine_partition,
    resolve_partition,
    single_group_partition,
    singleton_partition,
    validate_partition,
)
from app.fairness.profile_space import Partition, PopulationModel, ProfileSpace


@pytest.fixture
def six_cells():
    return ProfileSpace.uniform(6)


def _is_refinement(fine: Partition, coarse: Partition) -> bool:
    """Every fine group sits inside one coarse group."""
    owner = {}
    for f, c in zip(fine.group_of, coarse.group_of):
        if owner.setdefault(f, c) != c:
            return False
    return True


class TestStrategies:
    def test_singleton(self, six_cells):
        partition = singleton_partition(six_cells)
        assert partition.group_of == (1, 2, 3, 4, 5, 6)
        assert partition.m == 6

    def test_single_group(self, six_cells):
        assert single_group_partition(six_cells).group_of == (1,) * 6

    def test_blocks_near_equal(self, six_cells):
        assert block_partition(six_cells, 4).group_of == (1, 1, 2, 2, 3, 4)

    def test_blocks_clipped_to_cell_count(self, six_cells):
        assert block_partition(six_cells, 10).m == 6

    def test_blocks_reject_zero(self, six_cells):
        with pytest.raises(InstanceError):
            block_partition(six_cells, 0)

    def test_majority_matches_sign_regions_for_two_populations(self, worked_instance):
        partition = majority_partition(worked_instance.space, worked_instance.populations)
        # cell b is a tie and goes with p2
        assert partition.group_of == (1, 2, 2)

    def test_majority_has_no_empty_groups(self):
        space = ProfileSpace.uniform(4)
        pops = [
            PopulationModel(name="a", density=(0.1, 0.1, 0.4, 0.4)),
            PopulationModel(name="b", density=(0.05, 0.05, 0.45, 0.45)),
            PopulationModel(name="c", density=(0.7, 0.1, 0.1, 0.1)),
        ]
        partition = majority_partition(space, pops)
        # "a" dominates nowhere; the tie in the second cell goes to "c"
        assert partition.group_of == (1, 1, 2, 2)
        assert validate_partition(space, partition) == []


class TestRefine:
    def test_splits_every_multi_cell_group(self, six_cells):
        coarse = block_partition(six_cells, 2)
        fine = refine_partition(coarse)
        assert fine.group_of == (1, 2, 2, 3, 4, 4)
        assert _is_refinement(fine, coarse)

    def test_singletons_stay(self, six_cells):
        partition = singleton_partition(six_cells)
        assert refine_partition(partition) == partition


class TestValidate:
    def test_empty_group(self, six_cells):
        violations = validate_partition(six_cells, Partition((1, 1, 3, 3, 3, 3)))
        assert violations == ["empty groups: [2]"]

    def test_wrong_length(self, six_cells):
        assert validate_partition(six_cells, Partition((1, 2))) != []

    def test_zero_index(self, six_cells):
        assert validate_partition(six_cells, Partition((0, 1, 1, 1, 1, 1))) == [
            "group indices must be 1-based"
        ]


class TestResolve:
    @pytest.mark.parametrize(
        "spec,expected_m",
        [("auto", 3), ("single", 1), ("majority", 2), ("blocks:2", 2), ("[1, 1, 2]", 2)],
    )
    def test_named_strategies(self, worked_instance, spec, expected_m):
        partition = resolve_partition(spec, worked_instance.space, worked_instance.populations)
        assert partition.m == expected_m

    def test_explicit_sequence(self, worked_instance):
        partition = resolve_partition(
            [2, 1, 2], worked_instance.space, worked_instance.populations
        )
        assert partition.group_of == (2, 1, 2)

    @pytest.mark.parametrize("spec", ["nonsense", "blocks:x", "[1, 2", [1, 3, 3], [1, 1]])
    def test_invalid_specs(self, worked_instance, spec):
        with pytest.raises(InstanceError):
            resolve_partition(spec, worked_instance.space, worked_instance.populations)
