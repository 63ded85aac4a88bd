import itertools
import random

import pytest

from oracles import max_matching_size
from roma.errors import ScenarioError
from roma.harness.detection import (
    DetectionLog,
    Frame,
    detection_score,
    iou,
    match_detections,
    read_detection_log,
)

A = (0, 0, 10, 10)


def test_iou_examples():
    assert iou(A, A) == 1.0
    assert iou(A, (20, 20, 30, 30)) == 0.0
    assert iou(A, (10, 0, 20, 10)) == 0.0  # touching edges
    assert iou(A, (5, 0, 15, 10)) == pytest.approx(50 / 150)


def test_iou_symmetric_exactly():
    rng = random.Random(3)
    for _ in range(500):
        boxes = []
        for _ in range(2):
            x, y = rng.uniform(0, 50), rng.uniform(0, 50)
            boxes.append((x, y, x + rng.uniform(0.1, 30), y + rng.uniform(0.1, 30)))
        assert iou(*boxes) == iou(*reversed(boxes))


def test_match_examples():
    assert match_detections([A, (20, 20, 30, 30)], [A, (20, 20, 30, 30)]) == 2
    assert match_detections([A], [A, A, A]) == 1
    assert match_detections([A], []) == 0
    assert match_detections([A], [(5, 0, 15, 10)]) == 0
    with pytest.raises(ValueError):
        match_detections([A], [A], threshold=0)


def test_greedy_differs_from_index_order():
    # gt0 overlaps pred0 a little and pred1 a lot; gt1 only overlaps pred1.
    gt = [(0, 0, 10, 10), (3, 0, 13, 10), (40, 0, 50, 10)]
    pred = [(1, 0, 11, 10), (3, 0, 13, 10), (40, 0, 50, 10)]
    ious = [[iou(g, p) for p in pred] for g in gt]
    assert ious[0][0] > ious[0][1] >= 0.5 and ious[1][1] == 1.0
    assert match_detections(gt, pred) == 3 == max_matching_size(gt, pred, 0.5, iou)


def test_best_overlap_does_not_strand_other_gt():
    # the highest IoU pair (gt0, pred2) is pred2's only option for gt1
    gt = [(7, 10, 13, 19), (8, 9, 16, 16)]
    pred = [(3, 10, 12, 15), (4, 11, 13, 20), (8, 10, 15, 19)]
    assert iou(gt[0], pred[2]) > iou(gt[1], pred[2]) >= 0.5 and iou(gt[0], pred[1]) >= 0.5
    assert match_detections(gt, pred) == 2 == max_matching_size(gt, pred, 0.5, iou)


def random_boxes(rng, n):
    out = []
    for _ in range(n):
        x, y = rng.randint(0, 12), rng.randint(0, 12)
        out.append((x, y, x + rng.randint(4, 10), y + rng.randint(4, 10)))
    return out


def test_count_agrees_with_maximum_matching_oracle():
    rng = random.Random(7)
    checked = 0
    while checked < 400:
        gt = random_boxes(rng, rng.randint(1, 4))
        pred = random_boxes(rng, rng.randint(1, 4))
        vals = [iou(g, p) for g in gt for p in pred]
        above = [v for v in vals if v >= 0.5]
        if len(set(above)) != len(above):
            continue
        assert match_detections(gt, pred) == max_matching_size(gt, pred, 0.5, iou)
        checked += 1


def two_frames():
    f1 = Frame("a", gt=[A, (20, 20, 30, 30)], pred=[A])
    f2 = Frame("b", gt=[A, (20, 0, 30, 10), (40, 0, 50, 10)], pred=[A, (20, 0, 30, 10), (40, 0, 50, 10)])
    return f1, f2


def test_score_examples():
    f1, f2 = two_frames()
    assert detection_score(DetectionLog([f2])) == 1.0
    assert detection_score(DetectionLog([Frame("x", gt=[A])])) == 0.0
    assert detection_score(DetectionLog([f1, f2])) == pytest.approx(0.8, abs=1e-15)


def test_score_invariances():
    f1, f2 = two_frames()
    empty = Frame("e", pred=[A])
    base = detection_score(DetectionLog([f1, f2, empty]))
    for perm in itertools.permutations([f1, f2, empty]):
        assert detection_score(DetectionLog(list(perm))) == pytest.approx(base, abs=1e-15)
    w = {"a": 1.0, "b": 3.0}
    ref = detection_score(DetectionLog([f1, f2], w))
    assert ref == pytest.approx(0.25 * 0.5 + 0.75 * 1.0)
    for k in (0.001, 2.0, 1e6):
        scaled = {f: v * k for f, v in w.items()}
        assert detection_score(DetectionLog([f2, f1], scaled)) == pytest.approx(ref, abs=1e-12)


def test_no_scorable_frames():
    with pytest.raises(ValueError, match="no scorable frames"):
        detection_score(DetectionLog([Frame("e", pred=[A])]))


def test_read_log(scenarios_dir, tmp_path):
    dlog = read_detection_log(scenarios_dir / "data" / "detections.csv")
    assert [f.frame_id for f in dlog.frames] == ["f1", "f2", "f3"]
    assert detection_score(dlog) == pytest.approx(0.8)
    wpath = tmp_path / "w.csv"
    wpath.write_text("frame_id,weight\nf1,1\nf2,1\nf3,5\n")
    assert detection_score(read_detection_log(scenarios_dir / "data" / "detections.csv", wpath)) == pytest.approx(0.75)


def test_read_log_rejects_bad_kind(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("frame_id,kind,x_min,y_min,x_max,y_max\nf1,truth,0,0,1,1\n")
    with pytest.raises(ScenarioError, match=r"d\.csv:2"):
        read_detection_log(path)
