"""Object-detection evaluation: IoU matching, AP50, and a per-class report.

Average precision uses all-points interpolation (the precision envelope), and
the reported per-class precision/recall are taken at the confidence threshold
that maximizes F1, which is how single-number P/R columns are conventionally
produced for YOLO-family models. The aggregate "all" row averages per-class
values over the classes that appear in the ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ParseError

DEFAULT_IOU_THRESHOLD = 0.5

# Report row labels for the three rust classes, in class-id order.
DEFAULT_CLASS_LABELS = ("default (no rust)", "rust streaks", "complete rust")

Box = tuple[float, float, float, float]  # (cx, cy, w, h), normalized


@dataclass(frozen=True)
class GtBox:
    image_id: str
    class_id: int
    box: Box


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_id: int
    box: Box
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class ClassMetrics:
    """One report row. Metrics are None for classes absent from the ground truth."""

    label: str
    class_id: int
    precision: float | None
    recall: float | None
    ap50: float | None
    num_gt: int
    num_detections: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: tuple[ClassMetrics, ...]
    precision: float
    recall: float
    map50: float
    iou_threshold: float
    ignored_detections: int  # detections whose class id is unknown

    def to_json_dict(self) -> dict:
        return {
            "iou_threshold": self.iou_threshold,
            "classes": [
                {
                    "name": row.label,
                    "class_id": row.class_id,
                    "precision": row.precision,
                    "recall": row.recall,
                    "ap50": row.ap50,
                    "num_gt": row.num_gt,
                    "num_detections": row.num_detections,
                }
                for row in self.per_class
            ],
            "all": {"precision": self.precision, "recall": self.recall, "map50": self.map50},
            "ignored_detections": self.ignored_detections,
        }

    def format_table(self) -> str:
        width = max(len("all"), *(len(r.label) for r in self.per_class)) + 2
        fmt = lambda v: "   -  " if v is None else f"{v:.3f} "
        lines = [f"{'class':<{width}}{'precision':>10}{'recall':>10}{'ap50':>10}"]
        for row in self.per_class:
            lines.append(f"{row.label:<{width}}{fmt(row.precision):>10}{fmt(row.recall):>10}{fmt(row.ap50):>10}")
        lines.append(f"{'all':<{width}}{fmt(self.precision):>10}{fmt(self.recall):>10}{fmt(self.map50):>10}")
        return "\n".join(lines)


def _corners(box: Box) -> tuple[float, float, float, float]:
    cx, cy, w, h = box
    return cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two center-format boxes; 0 when the union is empty."""
    ax0, ay0, ax1, ay1 = _corners(a)
    bx0, by0, bx1, by1 = _corners(b)
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        inter = 0.0
    else:
        inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def match_detections(
    dets: list[Detection],
    gts: list[GtBox],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> dict[int, list[bool]]:
    """Greedy confidence-ordered matching; returns TP/FP flags per class.

    Within each class, detections are visited in descending confidence (ties
    keep input order). Each detection grabs the not-yet-matched ground truth
    of its class in the same image with the highest IoU; it is a TP iff that
    IoU reaches the threshold. Every ground truth matches at most once.
    """
    classes = {g.class_id for g in gts} | {d.class_id for d in dets}
    flags: dict[int, list[bool]] = {}
    for cls in sorted(classes):
        cls_gts = [g for g in gts if g.class_id == cls]
        cls_dets = sorted(
            (d for d in dets if d.class_id == cls),
            key=lambda d: -d.confidence,
        )
        matched = [False] * len(cls_gts)
        cls_flags = []
        for det in cls_dets:
            best_iou, best_idx = 0.0, -1
            for gi, gt in enumerate(cls_gts):
                if matched[gi] or gt.image_id != det.image_id:
                    continue
                value = iou(det.box, gt.box)
                if value > best_iou:
                    best_iou, best_idx = value, gi
            if best_idx >= 0 and best_iou >= iou_threshold:
                matched[best_idx] = True
                cls_flags.append(True)
            else:
                cls_flags.append(False)
        flags[cls] = cls_flags
    return flags


def average_precision(flags: list[bool], num_gt: int) -> float:
    """All-points interpolated AP from an ordered TP/FP sequence.

    Each true positive at rank k contributes the precision envelope value
    max(precision at rank >= k) weighted by the recall step 1/num_gt; this is
    the exact area under the interpolated precision-recall curve. With no
    ground truth the AP is 0 (callers decide whether the class counts toward
    the mean).

    Raises:
        ValueError: negative num_gt.
    """
    if num_gt < 0:
        raise ValueError(f"num_gt must be >= 0, got {num_gt}")
    if num_gt == 0 or not flags:
        return 0.0
    tp = 0
    precisions = []
    for rank, is_tp in enumerate(flags, start=1):
        tp += is_tp
        precisions.append(tp / rank)
    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    total = 0.0
    for is_tp, env in zip(flags, envelope):
        if is_tp:
            total += env
    return total / num_gt


def _pr_at_max_f1(flags: list[bool], num_gt: int) -> tuple[float, float]:
    """Precision/recall at the confidence cut maximizing F1; ties pick the lower cut."""
    if num_gt == 0 or not flags:
        return 0.0, 0.0
    best = (0.0, 0.0, 0.0)  # (f1, precision, recall)
    tp = 0
    for rank, is_tp in enumerate(flags, start=1):
        tp += is_tp
        p = tp / rank
        r = tp / num_gt
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        if f1 >= best[0]:  # >= keeps the lowest-threshold cut among ties
            best = (f1, p, r)
    return best[1], best[2]


def evaluate(
    gts: list[GtBox],
    dets: list[Detection],
    class_labels: tuple[str, ...] = DEFAULT_CLASS_LABELS,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> MetricsReport:
    """Score detections against ground truth and build the per-class report.

    Detections with a class id outside ``class_labels`` are counted in
    ``ignored_detections`` and excluded from scoring. Classes absent from the
    ground truth report None metrics and do not enter the "all" averages.
    """
    known = set(range(len(class_labels)))
    ignored = sum(1 for d in dets if d.class_id not in known)
    dets = [d for d in dets if d.class_id in known]

    flags = match_detections(dets, gts, iou_threshold)
    rows = []
    included = []
    for cls, label in enumerate(class_labels):
        cls_flags = flags.get(cls, [])
        num_gt = sum(1 for g in gts if g.class_id == cls)
        num_det = sum(1 for d in dets if d.class_id == cls)
        if num_gt == 0:
            rows.append(ClassMetrics(label, cls, None, None, None, num_gt, num_det))
            continue
        ap = average_precision(cls_flags, num_gt)
        precision, recall = _pr_at_max_f1(cls_flags, num_gt)
        rows.append(ClassMetrics(label, cls, precision, recall, ap, num_gt, num_det))
        included.append((precision, recall, ap))

    if included:
        mean_p = sum(p for p, _, _ in included) / len(included)
        mean_r = sum(r for _, r, _ in included) / len(included)
        map50 = sum(a for _, _, a in included) / len(included)
    else:
        mean_p = mean_r = map50 = 0.0
    return MetricsReport(
        per_class=tuple(rows),
        precision=mean_p,
        recall=mean_r,
        map50=map50,
        iou_threshold=iou_threshold,
        ignored_detections=ignored,
    )


def parse_predictions(source) -> list[Detection]:
    """Parse a predictions file: ``<image stem> <class> <conf> <cx> <cy> <w> <h>`` per line.

    Raises:
        ParseError: wrong field count or malformed numbers, with line number.
    """
    out = []
    for line_no, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 7:
            raise ParseError(f"expected 7 fields, got {len(fields)}", line_no)
        try:
            det = Detection(
                image_id=fields[0],
                class_id=int(fields[1]),
                confidence=float(fields[2]),
                box=tuple(float(f) for f in fields[3:7]),
            )
        except ValueError as exc:
            raise ParseError(f"malformed prediction line: {exc}", line_no) from None
        out.append(det)
    return out


def write_report_json(report: MetricsReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
        fh.write("\n")
