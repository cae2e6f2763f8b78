"""Event-camera anti-UAV detection toolkit: hybrid frame/event tracking,
trajectory recording for fast objects, and an activity-gated NPU simulator."""

__version__ = "0.1.0"

from .events import DEFAULT_GEOMETRY, Event, GroundTruthBox, SensorGeometry
from .config import PipelineConfig, load_config
from .metrics import compute_iou, evaluate_tracking
from .pipeline import RunReport, report_metrics, run_pipeline

__all__ = [
    "__version__", "DEFAULT_GEOMETRY", "Event", "GroundTruthBox",
    "SensorGeometry", "PipelineConfig", "load_config", "compute_iou",
    "evaluate_tracking", "RunReport", "report_metrics", "run_pipeline",
]
