"""FDDB-style discrete evaluation: matching, PR curve, TP-vs-FP curve, FN scatter."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, TextIO

import numpy as np

from .annotations import Detection, ImageRecord, RectFace, iou
from .exceptions import DomainError


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float


@dataclass
class EvalCurve:
    points: list
    total_gt: int

    def to_csv(self, sink: TextIO) -> None:
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["threshold", "tp", "fp", "fn", "precision", "recall"])
        for p in self.points:
            w.writerow([repr(p.threshold), p.tp, p.fp, p.fn, repr(p.precision), repr(p.recall)])


@dataclass(frozen=True)
class FNPoint:
    u: float
    v: float


@dataclass(frozen=True)
class MatchResult:
    is_tp: list
    gt_matched: list


@dataclass
class DatasetMatches:
    """Every detection in the dataset with its score and TP/FP label."""
    scores: np.ndarray
    is_tp: np.ndarray
    total_gt: int


def _score_order(dets) -> list[int]:
    # stable: equal scores keep input order
    return sorted(range(len(dets)), key=lambda i: -dets[i].score)


def match_detections(gt: list[RectFace], dets: list[Detection], iou_threshold: float = 0.5) -> MatchResult:
    """Greedy one-to-one matching in descending score order.

    Each detection takes the unmatched ground truth it overlaps most; it is a
    true positive when that IoU is at least ``iou_threshold``.  Labels are
    returned in the input order of ``dets``.
    """
    matched = [False] * len(gt)
    is_tp = [False] * len(dets)
    for i in _score_order(dets):
        best, best_j = -1.0, -1
        for j, g in enumerate(gt):
            if matched[j]:
                continue
            o = iou(dets[i].rect, g)
            if o > best:
                best, best_j = o, j
        if best_j >= 0 and best >= iou_threshold:
            matched[best_j] = True
            is_tp[i] = True
    return MatchResult(is_tp, matched)


def _group(detections):
    by_image: dict[str, list[Detection]] = {}
    for d in detections:
        by_image.setdefault(d.image_id, []).append(d)
    return by_image


def match_dataset(gt_records: list[ImageRecord], detections: list[Detection],
                  iou_threshold: float = 0.5) -> DatasetMatches:
    by_image = _group(detections)
    known = {r.image_path for r in gt_records}
    scores, labels = [], []
    total = 0
    for rec in gt_records:
        dets = by_image.get(rec.image_path, [])
        total += len(rec.faces)
        m = match_detections(rec.faces, dets, iou_threshold)
        scores.extend(d.score for d in dets)
        labels.extend(m.is_tp)
    # detections on images without ground truth entries are all false positives
    for image_id, dets in by_image.items():
        if image_id not in known:
            scores.extend(d.score for d in dets)
            labels.extend([False] * len(dets))
    return DatasetMatches(np.asarray(scores, dtype=float), np.asarray(labels, dtype=bool), total)


def _sweep(matches: DatasetMatches) -> list[CurvePoint]:
    if matches.total_gt <= 0:
        raise DomainError("evaluation needs at least one ground-truth face")
    order = np.argsort(-matches.scores, kind="stable")
    s = matches.scores[order]
    tp = np.cumsum(matches.is_tp[order])
    fp = np.cumsum(~matches.is_tp[order])
    points = []
    n = len(s)
    for i in range(n):
        if i + 1 < n and s[i + 1] == s[i]:
            continue
        t, f = int(tp[i]), int(fp[i])
        precision = t / (t + f) if t + f else 1.0
        points.append(CurvePoint(float(s[i]), t, f, matches.total_gt - t, precision,
                                 t / matches.total_gt))
    return points


def pr_curve(matches: DatasetMatches) -> tuple[EvalCurve, float]:
    """Precision/recall at every distinct score threshold, plus its area.

    For the area, each recall level uses the precision of the lowest
    threshold that reaches it, the curve is extended flat to recall 0, and
    the result is integrated with the trapezoid rule.  Thresholds below the
    one that first reaches the final recall add only false positives and are
    left out of the area.
    """
    points = _sweep(matches)
    curve = EvalCurve(points, matches.total_gt)
    top = max((p.recall for p in points), default=0.0)
    levels: dict[float, float] = {}
    for p in points:
        levels[p.recall] = p.precision
        if p.recall == top:
            break
    rec = [r for r in levels if r > 0]
    if not rec:
        return curve, 0.0
    rec.sort()
    prec = [levels[r] for r in rec]
    r = np.array([0.0] + rec)
    p = np.array([prec[0]] + prec)
    auc = float(np.sum(np.diff(r) * (p[1:] + p[:-1]) / 2))
    return curve, min(max(auc, 0.0), 1.0)


def discrete_roc(matches: DatasetMatches) -> EvalCurve:
    """TP rate against the absolute false-positive count, one point per threshold."""
    return EvalCurve(_sweep(matches), matches.total_gt)


def fn_location(gt: RectFace, image_side: float) -> FNPoint:
    """Ground-truth center in unit-circle coordinates, projected onto the circle if outside."""
    half = image_side / 2.0
    cx, cy = gt.center
    u, v = (cx - half) / half, (cy - half) / half
    r = math.hypot(u, v)
    if r > 1.0:
        u, v = u / r, v / r
    return FNPoint(u, v)


def fn_scatter(gt_records: list[ImageRecord], detections: list[Detection],
               image_sides, iou_threshold: float = 0.5,
               score_threshold: float | None = None) -> list[FNPoint]:
    """Unit-circle locations of every ground-truth face left unmatched.

    ``image_sides`` is either one side length for all images or a mapping
    from image path to side length.  Only detections scoring at least
    ``score_threshold`` take part (all of them when it is None).
    """
    by_image = _group(detections)
    out = []
    for rec in gt_records:
        dets = by_image.get(rec.image_path, [])
        if score_threshold is not None:
            dets = [d for d in dets if d.score >= score_threshold]
        side = image_sides[rec.image_path] if isinstance(image_sides, Mapping) else image_sides
        m = match_detections(rec.faces, dets, iou_threshold)
        out.extend(fn_location(g, side) for g, hit in zip(rec.faces, m.gt_matched) if not hit)
    return out


def write_roc_csv(curve: EvalCurve, sink: TextIO) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["threshold", "fp", "tp_rate"])
    for p in curve.points:
        w.writerow([repr(p.threshold), p.fp, repr(p.recall)])


def write_fn_csv(points: list[FNPoint], sink: TextIO) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["u", "v"])
    for p in points:
        w.writerow([repr(p.u), repr(p.v)])
