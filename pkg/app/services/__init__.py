from .correction_service import CorrectionService
from .instance_service import Instance, InstanceService
from .report_service import ReportService, RunReport
from .synth_service import SynthService

__all__ = [
    "CorrectionService",
    "Instance",
    "InstanceService",
    "ReportService",
    "RunReport",
    "SynthService",
]
