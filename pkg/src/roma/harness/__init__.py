"""Scenario ingestion, sweeps, detection scoring and report output."""

from roma.harness.detection import (
    Box,
    DetectionLog,
    Frame,
    detection_score,
    iou,
    match_detections,
    read_detection_log,
)
from roma.harness.report import emit_report, load_report, render
from roma.harness.scenario import Scenario, SweepSpec, StaticSpec, load_scenario, read_grid
from roma.harness.sweep import SweepResult, SweepRow, run_sweep

__all__ = [
    "Box",
    "DetectionLog",
    "Frame",
    "Scenario",
    "StaticSpec",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "detection_score",
    "emit_report",
    "iou",
    "load_report",
    "load_scenario",
    "match_detections",
    "read_detection_log",
    "read_grid",
    "render",
    "run_sweep",
]
