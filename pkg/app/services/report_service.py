import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.errors import InstanceError
from app.fairness.profile_space import AuditReport

logger = logging.getLogger(__name__)


class PopulationGapEntry(BaseModel):
    name: str
    average: float
    target: float
    gap: float


class RunReport(BaseModel):
    """Outcome of one command, emitted as text and as JSON."""

    command: str
    instance: str
    cells: int
    populations: int
    groups: Optional[int] = None
    pre: List[PopulationGapEntry]
    post: Optional[List[PopulationGapEntry]] = None
    max_gap_pre: float
    max_gap_post: Optional[float] = None
    k: Optional[float] = None
    gamma: Optional[float] = None
    epsilon: Optional[float] = None
    correction_sup_norm: Optional[float] = None
    solver_status: Optional[str] = None
    iterations: Optional[int] = None
    sign_pattern: Optional[Dict[str, int]] = None
    series: Optional[List[Dict[str, float]]] = None
    verification: Optional[Dict[str, Any]] = None
    output: Optional[str] = None
    wall_time: float = Field(default=0.0, ge=0.0)


class ReportService:
    """Turns audit results into report entries and writes reports out."""

    REPORT_SUFFIX = ".report.json"

    @staticmethod
    def entries(report: AuditReport) -> List[PopulationGapEntry]:
        return [
            PopulationGapEntry(name=g.name, average=g.average, target=g.target, gap=g.gap)
            for g in report.gaps
        ]

    @classmethod
    def report_path_for(cls, out_path: str) -> Path:
        """Machine report sits beside the output file."""
        path = Path(out_path)
        return path.with_name(path.stem + cls.REPORT_SUFFIX)

    @staticmethod
    def write_json(report: RunReport, path: Path) -> None:
        try:
            Path(path).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        except OSError as e:
            raise InstanceError(f"cannot write report {path}: {e.strerror}") from e
        logger.info(f"Wrote report to {path}")

    @staticmethod
    def render_text(report: RunReport) -> str:
        lines = [
            f"{report.command}: {report.instance}",
            f"  cells {report.cells}, populations {report.populations}"
            + (f", groups {report.groups}" if report.groups is not None else ""),
        ]

        def gap_table(title: str, entries: List[PopulationGapEntry], max_gap: float) -> None:
            lines.append(f"  {title}:")
            for e in entries:
                lines.append(
                    f"    {e.name:<12} average {e.average:.10g}  target {e.target:.10g}  "
                    f"gap {e.gap:+.3e}"
                )
            lines.append(f"    max |gap| {max_gap:.3e}")

        gap_table("before", report.pre, report.max_gap_pre)
        if report.post is not None and report.max_gap_post is not None:
            gap_table("after", report.post, report.max_gap_post)

        if report.k is not None:
            lines.append(f"  k = {report.k:.10g}")
        if report.sign_pattern is not None:
            lines.append(
                f"  bonus on {report.sign_pattern.get('plus', 0)} cells, "
                f"malus on {report.sign_pattern.get('minus', 0)} cells"
            )
        if report.epsilon is not None:
            lines.append(f"  epsilon = {report.epsilon:.10g}")
        if report.gamma is not None:
            lines.append(f"  gamma = {report.gamma:.10g}")
        if report.correction_sup_norm is not None:
            lines.append(f"  max individual change = {report.correction_sup_norm:.10g}")
        if report.solver_status is not None:
            lines.append(f"  solver {report.solver_status} after {report.iterations} iterations")
        if report.series:
            lines.append("  epsilon -> worst gap:")
            for point in report.series:
                lines.append(f"    {point['epsilon']:.6g} -> {point['gamma']:.6g}")
        if report.verification is not None:
            lines.append(f"  verification: {report.verification.get('result', 'n/a')}")
        if report.output:
            lines.append(f"  wrote {report.output}")
        lines.append(f"  {report.wall_time:.3f}s")
        return "\n".join(lines)
