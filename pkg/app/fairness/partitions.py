"""
Partition strategies for flat corrections.

The finer the partition, the closer the flat optimum gets to the unrestricted
one; "auto" (one group per cell) is the finest available.
"""

import json
import logging
from typing import List, Sequence, Union

import numpy as np

from app.errors import InstanceError
from app.fairness.profile_space import Partition, PopulationModel, ProfileSpace

logger = logging.getLogger(__name__)

PartitionSpec = Union[str, Sequence[int]]


def _compact(labels: Sequence[int]) -> Partition:
    """Relabel groups 1..m in order of first appearance so no group is empty."""
    mapping = {}
    group_of = []
    for label in labels:
        if label not in mapping:
            mapping[label] = len(mapping) + 1
        group_of.append(mapping[label])
    return Partition(tuple(group_of))


def singleton_partition(space: ProfileSpace) -> Partition:
    return Partition(tuple(range(1, space.size + 1)))


def single_group_partition(space: ProfileSpace) -> Partition:
    return Partition(tuple(1 for _ in range(space.size)))


def majority_partition(space: ProfileSpace, pops: Sequence[PopulationModel]) -> Partition:
    """
    Group cells by the population with the largest density there.

    Ties go to the highest-indexed tied population, so for two populations the
    groups are exactly {p1 > p2} and the rest.
    """
    densities = np.vstack([pop.array for pop in pops])
    # argmax over the reversed stack picks the last maximal row
    dominant = densities.shape[0] - 1 - np.argmax(densities[::-1], axis=0)
    return _compact([int(d) for d in dominant])


def block_partition(space: ProfileSpace, k: int) -> Partition:
    """k contiguous blocks of near-equal size in cell order."""
    if k < 1:
        raise InstanceError(f"block count must be at least 1, got {k}")
    k = min(k, space.size)
    blocks = np.array_split(np.arange(space.size), k)
    group_of = [0] * space.size
    for j, block in enumerate(blocks, start=1):
        for cell in block:
            group_of[int(cell)] = j
    return Partition(tuple(group_of))


def refine_partition(partition: Partition) -> Partition:
    """Split every group holding two or more cells into two halves by cell order."""
    labels = list(partition.group_of)
    for group in range(1, partition.m + 1):
        members = partition.members(group)
        if len(members) < 2:
            continue
        for cell in members[len(members) // 2 :]:
            labels[cell] = -group
    return _compact(labels)


def validate_partition(space: ProfileSpace, partition: Partition) -> List[str]:
    violations = []
    if len(partition.group_of) != space.size:
        violations.append(
            f"partition has {len(partition.group_of)} entries for {space.size} cells"
        )
        return violations
    if any(g < 1 for g in partition.group_of):
        violations.append("group indices must be 1-based")
        return violations
    used = set(partition.group_of)
    empty = [j for j in range(1, partition.m + 1) if j not in used]
    if empty:
        violations.append(f"empty groups: {empty}")
    return violations


def resolve_partition(
    spec: PartitionSpec, space: ProfileSpace, pops: Sequence[PopulationModel]
) -> Partition:
    """
    Turn a partition specification into a Partition.

    Args:
        spec: "auto", "single", "majority", "blocks:K", a JSON array string, or
            an explicit sequence of 1-based group indices.
        space: Profile space the partition covers.
        pops: Populations, used by the "majority" strategy.

    Returns:
        A validated partition.
    """
    if isinstance(spec, str):
        text = spec.strip()
        if text == "auto":
            partition = singleton_partition(space)
        elif text == "single":
            partition = single_group_partition(space)
        elif text == "majority":
            partition = majority_partition(space, pops)
        elif text.startswith("blocks:"):
            try:
                k = int(text.split(":", 1)[1])
            except ValueError as e:
                raise InstanceError(f"invalid block count in partition spec {spec!r}") from e
            partition = block_partition(space, k)
        elif text.startswith("["):
            try:
                partition = Partition(tuple(json.loads(text)))
            except (ValueError, TypeError) as e:
                raise InstanceError(f"invalid partition array {spec!r}") from e
        else:
            raise InstanceError(f"unknown partition strategy {spec!r}")
    else:
        try:
            partition = Partition(tuple(spec))
        except (ValueError, TypeError) as e:
            raise InstanceError("partition entries must be integers") from e

    violations = validate_partition(space, partition)
    if violations:
        raise InstanceError("invalid partition", violations)
    logger.debug(f"Resolved partition {spec!r} into {partition.m} groups")
    return partition
