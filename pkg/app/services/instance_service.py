import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from jsonschema import Draft7Validator

from app.config import TAU_NORM
from app.errors import InstanceError
from app.fairness.partitions import PartitionSpec
from app.fairness.profile_space import (
    PopulationModel,
    ProfileSpace,
    ScoreTable,
    TargetVector,
    renormalize,
    validate_instance,
    validate_targets,
)

logger = logging.getLogger(__name__)

SCHEMA_DIR = Path(__file__).resolve().parents[2] / "data" / "schemas"

PathLike = Union[str, "os.PathLike[str]"]


@dataclass(frozen=True)
class Instance:
    """Everything one instance document holds."""

    space: ProfileSpace
    populations: Tuple[PopulationModel, ...]
    scores: ScoreTable
    targets: Optional[TargetVector] = None
    partition: PartitionSpec = field(default="auto")

    def __post_init__(self):
        object.__setattr__(self, "populations", tuple(self.populations))
        if not isinstance(self.partition, str):
            object.__setattr__(self, "partition", tuple(int(g) for g in self.partition))

    @property
    def n(self) -> int:
        return len(self.populations)


class InstanceService:
    """Reads, validates and writes instance documents, score tables and partitions."""

    def __init__(
        self,
        schema_dir: Optional[Path] = None,
        tau_norm: float = TAU_NORM,
        renormalize: bool = False,
    ):
        self.schema_dir = Path(schema_dir) if schema_dir else SCHEMA_DIR
        self.tau_norm = tau_norm
        self.renormalize = renormalize
        self._validators: Dict[str, Draft7Validator] = {}

    def _validator(self, name: str) -> Draft7Validator:
        if name not in self._validators:
            with open(self.schema_dir / f"{name}.schema.json", "r", encoding="utf-8") as f:
                self._validators[name] = Draft7Validator(json.load(f))
        return self._validators[name]

    def _decode(self, text: str, source: str, schema: str) -> Any:
        """Parse JSON and check it against a schema, reporting positions."""
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise InstanceError(
                f"cannot parse {source}", [f"line {e.lineno}, column {e.colno}: {e.msg}"]
            ) from e

        errors = sorted(self._validator(schema).iter_errors(document), key=lambda e: list(e.path))
        if errors:
            diagnostics = []
            for error in errors:
                location = "/".join(str(p) for p in error.path) or "<root>"
                diagnostics.append(f"at {location}: {error.message}")
            raise InstanceError(f"{source} does not match the {schema} schema", diagnostics)
        return document

    def _read(self, path: PathLike) -> str:
        try:
            with open(path, "r", encoding="utf-8") as f:
                return f.read()
        except OSError as e:
            raise InstanceError(f"cannot read {path}: {e.strerror}") from e

    def load(self, path: PathLike) -> Instance:
        logger.info(f"Loading instance from {path}")
        return self.parse(self._read(path), source=str(path))

    def parse(self, text: str, source: str = "<instance>") -> Instance:
        document = self._decode(text, source, "instance")

        cells = document["cells"]
        space = ProfileSpace(cell_ids=tuple(cells), weights=tuple(document.get("weights") or ()))
        if "weights" in document and len(document["weights"]) != len(cells):
            raise InstanceError(
                "invalid instance",
                [f"weights has {len(document['weights'])} entries for {len(cells)} cells"],
            )
        populations = [
            PopulationModel(name=p["name"], density=tuple(p["density"]))
            for p in document["populations"]
        ]
        scores = ScoreTable(tuple(document["scores"]))

        if self.renormalize:
            populations = [
                renormalize(space, pop)
                if len(pop.density) == space.size
                and abs(space.integrate(pop.array) - 1.0) > self.tau_norm
                else pop
                for pop in populations
            ]

        violations = validate_instance(space, populations, scores, tau_norm=self.tau_norm)
        targets = None
        if "targets" in document:
            targets = TargetVector(tuple(document["targets"]))
            violations.extend(validate_targets(populations, targets))
        if violations:
            raise InstanceError(f"invalid instance {source}", violations)

        partition = document.get("partition", "auto")
        instance = Instance(
            space=space,
            populations=tuple(populations),
            scores=scores,
            targets=targets,
            partition=partition,
        )
        logger.info(
            f"Loaded instance with {space.size} cells and {instance.n} populations from {source}"
        )
        return instance

    def to_document(self, instance: Instance) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "cells": list(instance.space.cell_ids),
            "weights": list(instance.space.weights),
            "scores": list(instance.scores.values),
            "populations": [
                {"name": pop.name, "density": list(pop.density)} for pop in instance.populations
            ],
        }
        if instance.targets is not None:
            document["targets"] = list(instance.targets.y)
        document["partition"] = (
            instance.partition if isinstance(instance.partition, str) else list(instance.partition)
        )
        return document

    def dumps(self, document: Any) -> str:
        # repr-based float output round-trips exactly at double precision
        return json.dumps(document, indent=2, ensure_ascii=False) + "\n"

    def save(self, instance: Instance, path: PathLike) -> None:
        self._write(path, self.dumps(self.to_document(instance)))
        logger.info(f"Wrote instance to {path}")

    def _write(self, path: PathLike, text: str) -> None:
        try:
            with open(path, "w", encoding="utf-8") as f:
                f.write(text)
        except OSError as e:
            raise InstanceError(f"cannot write {path}: {e.strerror}") from e

    def save_score_table(self, table: ScoreTable, space: ProfileSpace, path: PathLike) -> None:
        document = {"cells": list(space.cell_ids), "scores": list(table.values)}
        self._write(path, self.dumps(document))
        logger.info(f"Wrote corrected score table to {path}")

    def load_score_table(self, path: PathLike, space: Optional[ProfileSpace] = None) -> ScoreTable:
        source = str(path)
        document = self._decode(self._read(path), source, "score_table")
        cells = [str(c) for c in document["cells"]]
        if len(cells) != len(document["scores"]):
            raise InstanceError(
                f"invalid score table {source}",
                [f"{len(document['scores'])} scores for {len(cells)} cells"],
            )
        if space is not None and tuple(cells) != space.cell_ids:
            raise InstanceError(f"score table {source} does not match the instance cells")
        scores = [float(s) for s in document["scores"]]
        if not all(math.isfinite(s) for s in scores):
            raise InstanceError(f"invalid score table {source}", ["non-finite score"])
        return ScoreTable(tuple(scores))

    def load_partition(self, path: PathLike) -> List[int]:
        document = self._decode(self._read(path), str(path), "partition")
        return [int(g) for g in document]
