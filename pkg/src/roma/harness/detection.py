"""Weighted detection score over processed frames.

Per frame, true positives are counted by one-to-one IoU matching against the
ground truth; the score is the weighted mean of per-frame recall.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from roma.errors import ScenarioError, ValidationError

DEFAULT_IOU_THRESHOLD = 0.5
LOG_COLUMNS = ("frame_id", "kind", "x_min", "y_min", "x_max", "y_max")


class Box(NamedTuple):
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass
class Frame:
    frame_id: str
    gt: list[Box] = field(default_factory=list)
    pred: list[Box] = field(default_factory=list)


@dataclass
class DetectionLog:
    frames: list[Frame]
    weights: Optional[Mapping[str, float]] = None

    def validate(self) -> None:
        problems = []
        for fr in self.frames:
            for kind, boxes in (("gt", fr.gt), ("pred", fr.pred)):
                for b in boxes:
                    if len(b) != 4 or not (b[0] < b[2] and b[1] < b[3]):
                        problems.append(f"frame {fr.frame_id}: degenerate {kind} box {tuple(b)}")
        if self.weights is not None:
            for fid, w in self.weights.items():
                if not w >= 0:
                    problems.append(f"frame {fid}: negative weight {w}")
        if problems:
            raise ValidationError(problems, context="detection log")


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    """Intersection over union of two ``(x_min, y_min, x_max, y_max)`` boxes."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def match_detections(
    gt: Sequence[Sequence[float]],
    pred: Sequence[Sequence[float]],
    threshold: float = DEFAULT_IOU_THRESHOLD,
) -> int:
    """Number of true positives under one-to-one matching.

    A ground-truth box and a prediction may be paired when their IoU reaches
    ``threshold``; the count is the size of a maximum matching over those
    pairs. Greedy pairing by descending IoU can strand a ground-truth box
    whose only partner was taken by a better-overlapping neighbour, so the
    count does not depend on pairing order.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"IoU threshold must be in (0, 1], got {threshold}")
    if not gt or not pred:
        return 0
    ok = np.array([[iou(g, p) >= threshold for p in pred] for g in gt])
    if not ok.any():
        return 0
    match = maximum_bipartite_matching(csr_matrix(ok.astype(np.int8)), perm_type="column")
    return int(np.count_nonzero(match >= 0))


def detection_score(log: DetectionLog, threshold: float = DEFAULT_IOU_THRESHOLD) -> float:
    """Weighted sum of ``TP_f / GT_f`` over frames that have ground truth.

    Without explicit weights each frame counts in proportion to its number of
    ground-truth objects. Explicit weights are renormalised over the scorable
    frames.
    """
    log.validate()
    scorable = [fr for fr in log.frames if fr.gt]
    if not scorable:
        raise ValueError("no scorable frames")

    if log.weights is None:
        raw = {fr.frame_id: float(len(fr.gt)) for fr in scorable}
    else:
        missing = [fr.frame_id for fr in scorable if fr.frame_id not in log.weights]
        if missing:
            raise ValueError(f"no weight given for frames {missing}")
        raw = {fr.frame_id: float(log.weights[fr.frame_id]) for fr in scorable}
    total = math.fsum(raw.values())
    if total <= 0:
        raise ValueError("weights of scorable frames sum to zero")

    terms = []
    for fr in scorable:
        tp = match_detections(fr.gt, fr.pred, threshold)
        terms.append(raw[fr.frame_id] / total * tp / len(fr.gt))
    return math.fsum(terms)


def read_detection_log(path: str | Path, weights_path: str | Path | None = None) -> DetectionLog:
    """Parse a ``frame_id,kind,x_min,y_min,x_max,y_max`` file (kind is gt|pred).

    ``weights_path``, if given, is a ``frame_id,weight`` file.
    """
    path = Path(path)
    frames: dict[str, Frame] = {}
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != LOG_COLUMNS:
                raise ScenarioError(f"{path}:1: header must be {','.join(LOG_COLUMNS)}")
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 6:
                    raise ScenarioError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
                fid, kind = row[0].strip(), row[1].strip()
                if kind not in ("gt", "pred"):
                    raise ScenarioError(f"{path}:{lineno}: kind must be gt or pred, got {kind!r}")
                try:
                    box = Box(*(float(c) for c in row[2:]))
                except ValueError:
                    raise ScenarioError(f"{path}:{lineno}: non-numeric coordinate") from None
                fr = frames.setdefault(fid, Frame(fid))
                (fr.gt if kind == "gt" else fr.pred).append(box)
    except OSError as exc:
        raise ScenarioError(f"cannot read detection log {path}: {exc.strerror or exc}") from exc

    weights = None
    if weights_path is not None:
        weights = {}
        wp = Path(weights_path)
        try:
            with wp.open(newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header is None or [h.strip() for h in header] != ["frame_id", "weight"]:
                    raise ScenarioError(f"{wp}:1: header must be frame_id,weight")
                for lineno, row in enumerate(reader, start=2):
                    if not row:
                        continue
                    try:
                        weights[row[0].strip()] = float(row[1])
                    except (ValueError, IndexError):
                        raise ScenarioError(f"{wp}:{lineno}: bad weight row {row}") from None
        except OSError as exc:
            raise ScenarioError(f"cannot read weights file {wp}: {exc.strerror or exc}") from exc
    log = DetectionLog(list(frames.values()), weights)
    log.validate()
    return log
