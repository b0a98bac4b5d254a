"""
Pipelines behind every command: audit, the two-population correction, the
forward and inverse flat corrections and the error-budget sweep.

Post-correction numbers are always recomputed from the file that was written,
never taken from solver state.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Tuple

import numpy as np

from app.config import (
    GRID_CAP,
    GRID_STEPS,
    TAU_LP,
    VERIFY_MAX_CELLS,
    VERIFY_MAX_GROUPS,
)
from app.errors import (
    InfeasibleError,
    InstanceError,
    PopulationCountError,
    SimplexError,
    UnboundedError,
)
from app.fairness import oracle
from app.fairness.lp_builder import (
    BonusMalusSolution,
    GroupMassMatrix,
    LpModel,
    build_forward_lp,
    build_inverse_lp,
    decode_solution,
    group_mass,
)
from app.fairness.partitions import PartitionSpec, resolve_partition
from app.fairness.profile_space import (
    AuditReport,
    Partition,
    ScoreTable,
    TargetVector,
    audit,
    population_average,
    sup_norm_distance,
)
from app.fairness.reduction import (
    ResidualTargets,
    assemble_forward,
    assemble_inverse,
    residual_targets,
)
from app.fairness.simplex import LpStatus, SimplexSolver
from app.fairness.two_pop import solve_two_pop
from app.services.instance_service import Instance, InstanceService
from app.services.report_service import ReportService, RunReport

logger = logging.getLogger(__name__)

INFEASIBLE_MESSAGE = (
    "targets unreachable by any flat correction on this partition "
    "(no flat correction hits every target); the inverse command minimizes the gaps instead"
)


class CorrectionService:
    """Runs one command against one loaded instance."""

    def __init__(
        self,
        instance: Instance,
        source: str = "<instance>",
        instance_service: Optional[InstanceService] = None,
        partition: Optional[PartitionSpec] = None,
        verify: bool = False,
        dump_lp: Optional[str] = None,
        debug_stream: Optional[TextIO] = None,
    ):
        self.instance = instance
        self.source = source
        self.instance_service = instance_service or InstanceService()
        self.partition_spec = partition if partition is not None else instance.partition
        self.verify = verify
        self.dump_lp = dump_lp
        self.debug_stream = debug_stream

    # -- helpers ---------------------------------------------------------

    def _default_targets(self, scores: ScoreTable) -> TargetVector:
        """Every population aimed at the plain mean of the current averages."""
        averages = [
            population_average(self.instance.space, pop, scores)
            for pop in self.instance.populations
        ]
        mean = float(np.mean(averages))
        return TargetVector(tuple(mean for _ in averages))

    def _required_targets(self) -> TargetVector:
        if self.instance.targets is None:
            raise InstanceError("instance has no targets; this command needs them")
        return self.instance.targets

    def _audit(self, scores: ScoreTable, targets: TargetVector) -> AuditReport:
        return audit(self.instance.space, self.instance.populations, scores, targets)

    def _base_report(self, command: str, targets: TargetVector, **fields: Any) -> RunReport:
        pre = self._audit(self.instance.scores, targets)
        return RunReport(
            command=command,
            instance=self.source,
            cells=self.instance.space.size,
            populations=self.instance.n,
            pre=ReportService.entries(pre),
            max_gap_pre=pre.max_abs_gap,
            **fields,
        )

    def _emit(
        self, report: RunReport, table: ScoreTable, out_path: str, targets: Optional[TargetVector]
    ) -> Tuple[RunReport, ScoreTable]:
        """Write the corrected table, read it back and audit what was written."""
        space = self.instance.space
        self.instance_service.save_score_table(table, space, out_path)
        written = self.instance_service.load_score_table(out_path, space=space)
        post_targets = targets if targets is not None else self._default_targets(written)
        post = self._audit(written, post_targets)
        report = report.model_copy(
            update={
                "post": ReportService.entries(post),
                "max_gap_post": post.max_abs_gap,
                "correction_sup_norm": sup_norm_distance(written, self.instance.scores),
                "output": str(out_path),
            }
        )
        return report, written

    def _partition(self) -> Partition:
        spec = self.partition_spec
        if isinstance(spec, str) and Path(spec).is_file():
            spec = self.instance_service.load_partition(spec)
        return resolve_partition(spec, self.instance.space, self.instance.populations)

    def _solve(
        self, model: LpModel, partition: Partition, dump: bool = True
    ) -> BonusMalusSolution:
        if dump and self.dump_lp:
            Path(self.dump_lp).write_text(model.to_listing(), encoding="utf-8")
            logger.info(f"Wrote LP listing to {self.dump_lp}")
        solver = SimplexSolver(debug_stream=self.debug_stream)
        solution = solver.solve(model)
        return decode_solution(model, solution, partition, self.instance.space)

    def _residuals(self, partition: Partition) -> Tuple[GroupMassMatrix, ResidualTargets]:
        v = group_mass(self.instance.space, self.instance.populations, partition)
        b = residual_targets(
            self.instance.space,
            self.instance.populations,
            self.instance.scores,
            self._required_targets(),
        )
        return v, b

    def _forward_gamma(
        self, v: GroupMassMatrix, b: ResidualTargets, partition: Partition
    ) -> BonusMalusSolution:
        decoded = self._solve(build_forward_lp(v, b), partition)
        if decoded.status is LpStatus.INFEASIBLE:
            logger.error("Forward LP infeasible on this partition")
            raise InfeasibleError(INFEASIBLE_MESSAGE)
        if decoded.status is LpStatus.UNBOUNDED:
            logger.error("Forward LP reported unbounded; the instance is malformed")
            raise UnboundedError("forward linear program is unbounded (malformed input)")
        return decoded

    @staticmethod
    def _finish(report: RunReport, started: float) -> RunReport:
        return report.model_copy(update={"wall_time": time.perf_counter() - started})

    # -- commands --------------------------------------------------------

    def audit(self, scores: Optional[ScoreTable] = None) -> RunReport:
        started = time.perf_counter()
        table = scores if scores is not None else self.instance.scores
        targets = self.instance.targets
        if targets is None:
            targets = self._default_targets(table)
        result = self._audit(table, targets)
        report = RunReport(
            command="audit",
            instance=self.source,
            cells=self.instance.space.size,
            populations=self.instance.n,
            pre=ReportService.entries(result),
            max_gap_pre=result.max_abs_gap,
        )
        return self._finish(report, started)

    def two_pop(self, out_path: str) -> RunReport:
        started = time.perf_counter()
        if self.instance.n != 2:
            raise PopulationCountError(
                f"two-pop needs exactly 2 populations, instance has {self.instance.n}"
            )
        p1, p2 = self.instance.populations
        f = self.instance.scores
        solution = solve_two_pop(self.instance.space, p1, p2, f)
        logger.info(f"Two-population correction k={solution.k!r}")

        report = self._base_report(
            "two-pop",
            self._default_targets(f),
            k=solution.k,
            sign_pattern={"plus": solution.plus_cells, "minus": solution.minus_cells},
        )
        report, written = self._emit(report, solution.h, out_path, targets=None)

        if self.verify:
            report = report.model_copy(
                update={"verification": self._verify_two_pop(solution.k)}
            )
        return self._finish(report, started)

    def remove(self, out_path: str) -> RunReport:
        started = time.perf_counter()
        partition = self._partition()
        v, b = self._residuals(partition)
        decoded = self._forward_gamma(v, b, partition)
        assert decoded.u is not None

        h = assemble_forward(self.instance.scores, decoded.u)
        targets = self._required_targets()
        report = self._base_report(
            "remove",
            targets,
            groups=partition.m,
            gamma=decoded.gamma,
            solver_status=decoded.status.value,
            iterations=decoded.iterations,
        )
        report, written = self._emit(report, h, out_path, targets=targets)
        if report.max_gap_post is not None and report.max_gap_post > TAU_LP:
            logger.warning(f"Post-correction gap {report.max_gap_post!r} exceeds {TAU_LP}")

        if self.verify:
            report = report.model_copy(
                update={"verification": self._verify_forward(v, b, partition, decoded)}
            )
        return self._finish(report, started)

    def inverse(self, out_path: str, epsilon: float) -> RunReport:
        started = time.perf_counter()
        if not epsilon >= 0:
            raise InstanceError(f"epsilon must be nonnegative, got {epsilon}")
        partition = self._partition()
        v, b = self._residuals(partition)
        decoded = self._solve(build_inverse_lp(v, b, epsilon), partition)
        if not decoded.is_optimal or decoded.u is None:
            # alpha = beta = 0 with gamma = max |b_i| is always feasible
            raise SimplexError(f"inverse linear program returned {decoded.status.value}")

        h = assemble_inverse(self.instance.scores, decoded.u)
        targets = self._required_targets()
        report = self._base_report(
            "inverse",
            targets,
            groups=partition.m,
            gamma=decoded.gamma,
            epsilon=epsilon,
            solver_status=decoded.status.value,
            iterations=decoded.iterations,
        )
        report, written = self._emit(report, h, out_path, targets=targets)
        if report.correction_sup_norm is not None and report.correction_sup_norm > epsilon + TAU_LP:
            logger.warning(
                f"Correction {report.correction_sup_norm!r} exceeds the budget {epsilon!r}"
            )

        if self.verify:
            report = report.model_copy(
                update={
                    "verification": self._verify_inverse(v, b, partition, epsilon, decoded)
                }
            )
        return self._finish(report, started)

    def tradeoff(self, points: int = 11) -> RunReport:
        """Worst target gap against the error budget, from 0 to twice the forward optimum."""
        started = time.perf_counter()
        if points < 2:
            raise InstanceError(f"need at least 2 sweep points, got {points}")
        partition = self._partition()
        v, b = self._residuals(partition)
        forward = self._forward_gamma(v, b, partition)
        gamma_star = float(forward.gamma or 0.0)

        series: List[Dict[str, float]] = []
        for epsilon in np.linspace(0.0, 2.0 * gamma_star, points):
            decoded = self._solve(build_inverse_lp(v, b, float(epsilon)), partition)
            if not decoded.is_optimal or decoded.gamma is None:
                raise SimplexError(f"inverse linear program returned {decoded.status.value}")
            series.append({"epsilon": float(epsilon), "gamma": decoded.gamma})
            logger.debug(f"epsilon {epsilon!r} -> worst gap {decoded.gamma!r}")

        report = self._base_report(
            "tradeoff",
            self._required_targets(),
            groups=partition.m,
            gamma=gamma_star,
            solver_status=forward.status.value,
            iterations=forward.iterations,
            series=series,
        )
        return self._finish(report, started)

    # -- brute-force cross-checks ---------------------------------------

    def _verify_two_pop(self, k: float) -> Dict[str, Any]:
        space = self.instance.space
        if space.size > VERIFY_MAX_CELLS:
            logger.info(f"Skipping verification: {space.size} cells > {VERIFY_MAX_CELLS}")
            return {"result": "skipped", "reason": f"more than {VERIFY_MAX_CELLS} cells"}
        p1, p2 = self.instance.populations
        bound = max(2.0 * abs(k), 1.0)
        grid = oracle.GridSpec.capped(
            -bound, bound, dims=space.size, steps=GRID_STEPS, cap=GRID_CAP
        )
        verdict = oracle.verify_two_pop_optimality(space, p1, p2, self.instance.scores, k, grid)
        result = {"result": "agree" if verdict.optimal else "disagree", "reason": verdict.reason}
        if not verdict.optimal:
            logger.error(f"Two-population optimality check failed: {verdict.reason}")
        return result

    def _verify_forward(
        self,
        v: GroupMassMatrix,
        b: ResidualTargets,
        partition: Partition,
        decoded: BonusMalusSolution,
    ) -> Dict[str, Any]:
        if partition.m > VERIFY_MAX_GROUPS:
            logger.info(f"Skipping verification: {partition.m} groups > {VERIFY_MAX_GROUPS}")
            return {"result": "skipped", "reason": f"more than {VERIFY_MAX_GROUPS} groups"}
        gamma = float(decoded.gamma or 0.0)
        default = oracle.default_grid(v.v, b)
        bound = max(default.hi, 1.25 * gamma + default.step)
        grid = oracle.GridSpec.capped(-bound, bound, dims=partition.m)
        # slightly wider than half a step so the grid point nearest the optimum qualifies
        band = 0.6 * grid.step

        found = oracle.brute_force_forward(
            self.instance.space, self.instance.populations, b, partition, grid, eq_tol=band
        )
        relaxed = self._solve(build_forward_lp(v, b, tolerance=band), partition, dump=False)
        relaxed_gamma = float(relaxed.gamma or 0.0)
        upper = gamma + grid.step / 2.0 + TAU_LP
        lower = relaxed_gamma - TAU_LP
        agree = found.found and found.best is not None and lower <= found.best <= upper
        result = {
            "result": "agree" if agree else "disagree",
            "oracle_best": found.best,
            "lower": lower,
            "upper": upper,
            "grid_step": grid.step,
        }
        if not agree:
            logger.error(f"Forward oracle disagrees with the LP: {result}")
        return result

    def _verify_inverse(
        self,
        v: GroupMassMatrix,
        b: ResidualTargets,
        partition: Partition,
        epsilon: float,
        decoded: BonusMalusSolution,
    ) -> Dict[str, Any]:
        if partition.m > VERIFY_MAX_GROUPS:
            logger.info(f"Skipping verification: {partition.m} groups > {VERIFY_MAX_GROUPS}")
            return {"result": "skipped", "reason": f"more than {VERIFY_MAX_GROUPS} groups"}
        gamma = float(decoded.gamma or 0.0)
        half_width = epsilon if epsilon > 0 else 1.0
        grid = oracle.GridSpec.capped(-half_width, half_width, dims=partition.m)
        found = oracle.brute_force_inverse(
            self.instance.space, self.instance.populations, b, partition, epsilon, grid
        )
        step = grid.step if epsilon > 0 else 0.0
        lower, upper = gamma - TAU_LP, gamma + step / 2.0 + TAU_LP
        agree = found.best is not None and lower <= found.best <= upper
        result = {
            "result": "agree" if agree else "disagree",
            "oracle_best": found.best,
            "lower": lower,
            "upper": upper,
            "grid_step": step,
        }
        if not agree:
            logger.error(f"Inverse oracle disagrees with the LP: {result}")
        return result
