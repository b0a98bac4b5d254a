import json
from typing import Callable, Optional

import numpy as np
import pytest

from app.fairness.profile_space import PopulationModel, ProfileSpace, ScoreTable, TargetVector
from app.services.instance_service import Instance


def make_random_instance(
    seed: int,
    cells: int,
    pops: int,
    with_targets: bool = True,
    unit_weights: bool = False,
) -> Instance:
    """Seeded instance with positive densities, normal scores and targets near the averages."""
    rng = np.random.default_rng(seed)
    if unit_weights:
        weights = np.ones(cells)
    else:
        weights = rng.uniform(0.5, 1.5, cells)
    space = ProfileSpace(
        cell_ids=tuple(f"c{i}" for i in range(cells)), weights=tuple(weights)
    )
    populations = []
    for i in range(pops):
        raw = rng.random(cells) + 0.05
        density = raw / float(np.dot(raw, weights))
        populations.append(PopulationModel(name=f"p{i + 1}", density=tuple(density)))
    scores = ScoreTable(tuple(rng.normal(0.0, 1.0, cells)))

    targets = None
    if with_targets:
        averages = np.array([space.integrate(p.array * scores.array) for p in populations])
        targets = TargetVector(tuple(averages + rng.normal(0.0, 0.3, pops)))
    return Instance(space=space, populations=tuple(populations), scores=scores, targets=targets)


@pytest.fixture
def instance_factory() -> Callable[..., Instance]:
    """Return the seeded random instance builder."""
    return make_random_instance


@pytest.fixture
def worked_space():
    """Three unit-weight cells."""
    return ProfileSpace(cell_ids=("a", "b", "c"))


@pytest.fixture
def worked_instance(worked_space):
    """
    Two populations over three cells.

    Averages of f are 1.7 and 2.3; the closed-form correction is k = 1 with
    signs (+, -, -), giving h = (2, 1, 2) where both averages are 1.7.
    """
    return Instance(
        space=worked_space,
        populations=(
            PopulationModel(name="p1", density=(0.5, 0.3, 0.2)),
            PopulationModel(name="p2", density=(0.2, 0.3, 0.5)),
        ),
        scores=ScoreTable((1.0, 2.0, 3.0)),
        targets=TargetVector((1.7, 1.7)),
    )


@pytest.fixture
def worked_document():
    """The worked instance as an instance document."""
    return {
        "cells": ["a", "b", "c"],
        "weights": [1.0, 1.0, 1.0],
        "scores": [1.0, 2.0, 3.0],
        "populations": [
            {"name": "p1", "density": [0.5, 0.3, 0.2]},
            {"name": "p2", "density": [0.2, 0.3, 0.5]},
        ],
        "targets": [1.7, 1.7],
    }


@pytest.fixture
def one_cell_instance():
    """One population on one cell whose target sits 0.5 above its score."""
    return Instance(
        space=ProfileSpace(cell_ids=("x",)),
        populations=(PopulationModel(name="only", density=(1.0,)),),
        scores=ScoreTable((0.0,)),
        targets=TargetVector((0.5,)),
    )


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path as a string."""

    def _write(name: str, document, raw: Optional[str] = None) -> str:
        path = tmp_path / name
        path.write_text(raw if raw is not None else json.dumps(document), encoding="utf-8")
        return str(path)

    return _write
