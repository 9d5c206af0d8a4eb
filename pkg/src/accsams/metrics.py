"""Evaluation harness: detection precision/recall/AP, reading-order average
relative distance, and hierarchy level distances.

AP uses greedy confidence-ordered matching and the 101-point interpolated
precision envelope; the ARD of a predicted order is the mean index
displacement against gold, with missing elements penalized by the gold
length.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import BBox, BlockCategory

RECALL_POINTS = tuple(i / 100.0 for i in range(101))
AP_IOU_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))

_CATEGORY_DISPLAY = {
    BlockCategory.HEADING: "Headings",
    BlockCategory.PARAGRAPH: "Paragraphs",
    BlockCategory.LIST_SYMBOL: "List symbols",
    BlockCategory.FIGURE: "Figures",
    BlockCategory.FORMULA: "Formulas",
    BlockCategory.TABLE: "Tables",
}


class DifferentPageError(ValueError):
    """IoU is undefined for boxes on different pages."""


class UnknownIdError(ValueError):
    """Predicted order contains an id missing from gold."""


class MismatchedIdSetsError(ValueError):
    """Gold and predicted annotations do not cover the same ids."""


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    category: BlockCategory
    confidence: float
    id: str = ""

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    bbox: BBox
    category: BlockCategory


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two same-page boxes; symmetric, in [0, 1]."""
    if a.page != b.page:
        raise DifferentPageError(f"boxes on pages {a.page} and {b.page}")
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.width * a.height + b.width * b.height - inter
    return inter / union


def _sorted_indices(preds: Sequence[Detection]) -> list[int]:
    return sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, preds[i].id, i))


def _match(preds: Sequence[Detection], gts: Sequence[GroundTruth], threshold: float) -> list[bool]:
    """Greedy matching in descending confidence: each prediction takes the
    unmatched ground truth with the highest IoU >= threshold."""
    taken: set[int] = set()
    hits: list[bool] = []
    for i in _sorted_indices(preds):
        pred = preds[i]
        best_g, best_iou = -1, 0.0
        for g, gt in enumerate(gts):
            if g in taken or gt.bbox.page != pred.bbox.page:
                continue
            value = iou(pred.bbox, gt.bbox)
            if value >= threshold and value > best_iou:
                best_g, best_iou = g, value
        if best_g >= 0:
            taken.add(best_g)
            hits.append(True)
        else:
            hits.append(False)
    return hits


def _pr_curve(hits: Sequence[bool], total_gt: int) -> tuple[list[float], list[float]]:
    precisions, recalls = [], []
    tp = 0
    for k, hit in enumerate(hits, start=1):
        tp += int(hit)
        precisions.append(tp / k)
        recalls.append(tp / total_gt)
    return precisions, recalls


def average_precision(preds: Sequence[Detection], gts: Sequence[GroundTruth], iou_threshold: float = 0.5) -> float:
    """AP for a single category: mean of the interpolated precision envelope
    sampled at the 101 recall points 0.00, 0.01, ..., 1.00."""
    if not gts:
        return 1.0 if not preds else 0.0
    if not preds:
        return 0.0
    precisions, recalls = _pr_curve(_match(preds, gts, iou_threshold), len(gts))
    total = 0.0
    for r in RECALL_POINTS:
        total += max((p for p, rec in zip(precisions, recalls) if rec >= r), default=0.0)
    return total / len(RECALL_POINTS)


def _max_f1_point(preds: Sequence[Detection], gts: Sequence[GroundTruth], iou_threshold: float = 0.5) -> tuple[float, float]:
    """Precision/recall at the confidence cutoff maximizing F1 (first maximum)."""
    if not preds or not gts:
        return 0.0, 0.0
    precisions, recalls = _pr_curve(_match(preds, gts, iou_threshold), len(gts))
    best_f1, best = 0.0, (0.0, 0.0)
    for p, r in zip(precisions, recalls):
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        if f1 > best_f1:
            best_f1, best = f1, (p, r)
    return best


@dataclass(frozen=True)
class CategoryMetrics:
    name: str
    instances: int
    precision: float
    recall: float
    ap50: float
    ap50_95: float


@dataclass
class EvalReport:
    rows: list[CategoryMetrics] = field(default_factory=list)
    ard_mean: Optional[float] = None
    ard_std: Optional[float] = None
    ard_raw_sums: Optional[list[float]] = None
    level_abs_mean: Optional[float] = None
    level_abs_std: Optional[float] = None
    level_rel_mean: Optional[float] = None
    level_rel_std: Optional[float] = None


def detection_report(preds: Sequence[Detection], gts: Sequence[GroundTruth]) -> EvalReport:
    """Per-category AP50/AP50-95 plus precision/recall at the max-F1 point;
    the All row is the unweighted mean over categories present in gts."""
    rows: list[CategoryMetrics] = []
    aggregate: list[CategoryMetrics] = []
    for category in BlockCategory:
        cat_preds = [p for p in preds if p.category is category]
        cat_gts = [g for g in gts if g.category is category]
        if not cat_preds and not cat_gts:
            continue
        ap50 = average_precision(cat_preds, cat_gts, 0.5)
        ap50_95 = statistics.fmean(average_precision(cat_preds, cat_gts, t) for t in AP_IOU_THRESHOLDS)
        precision, recall = _max_f1_point(cat_preds, cat_gts, 0.5)
        row = CategoryMetrics(_CATEGORY_DISPLAY[category], len(cat_gts), precision, recall, ap50, ap50_95)
        rows.append(row)
        if cat_gts:
            aggregate.append(row)
    if aggregate:
        rows.append(
            CategoryMetrics(
                "All",
                sum(r.instances for r in aggregate),
                statistics.fmean(r.precision for r in aggregate),
                statistics.fmean(r.recall for r in aggregate),
                statistics.fmean(r.ap50 for r in aggregate),
                statistics.fmean(r.ap50_95 for r in aggregate),
            )
        )
    return EvalReport(rows=rows)


@dataclass(frozen=True)
class OrderAnnotation:
    gold: tuple[str, ...]
    predicted: tuple[str, ...]


def ard(annotation: OrderAnnotation) -> float:
    """Average relative distance between predicted and gold reading orders.

    Each gold element at index i found at predicted index j contributes
    |i - j|; missing elements contribute n.  The sum is divided by n.
    """
    gold, predicted = annotation.gold, annotation.predicted
    if len(set(gold)) != len(gold):
        raise ValueError("gold order contains duplicate ids")
    if len(set(predicted)) != len(predicted):
        raise ValueError("predicted order contains duplicate ids")
    gold_index = {bid: i for i, bid in enumerate(gold)}
    for bid in predicted:
        if bid not in gold_index:
            raise UnknownIdError(f"predicted id {bid!r} not present in gold order")
    n = len(gold)
    if n == 0:
        return 0.0
    pred_index = {bid: j for j, bid in enumerate(predicted)}
    total = 0
    for i, bid in enumerate(gold):
        j = pred_index.get(bid)
        total += abs(i - j) if j is not None else n
    return total / n


@dataclass(frozen=True)
class LevelAnnotation:
    gold: dict[str, int]
    predicted: dict[str, int]
    order: tuple[str, ...]


@dataclass(frozen=True)
class HierarchyDistances:
    abs_mean: float
    rel_mean: float


def hierarchy_distances(annotation: LevelAnnotation) -> HierarchyDistances:
    """Mean absolute level distance per block, and mean distance between the
    level deltas of consecutive reading-order pairs (0 for a single block)."""
    gold, predicted, order = annotation.gold, annotation.predicted, annotation.order
    if set(gold) != set(predicted) or set(order) != set(gold):
        raise MismatchedIdSetsError("gold, predicted, and order must cover the same block ids")
    if not order:
        raise MismatchedIdSetsError("at least one block required")
    abs_mean = statistics.fmean(abs(predicted[b] - gold[b]) for b in order)
    if len(order) == 1:
        return HierarchyDistances(abs_mean, 0.0)
    rel_total = 0.0
    for prev, cur in zip(order, order[1:]):
        delta_pred = predicted[cur] - predicted[prev]
        delta_gold = gold[cur] - gold[prev]
        rel_total += abs(delta_pred - delta_gold)
    return HierarchyDistances(abs_mean, rel_total / (len(order) - 1))


def order_report(annotations: Sequence[OrderAnnotation]) -> EvalReport:
    values = [ard(a) for a in annotations]
    return EvalReport(
        ard_mean=statistics.fmean(values),
        ard_std=statistics.pstdev(values) if len(values) > 1 else 0.0,
        ard_raw_sums=[v * len(a.gold) for v, a in zip(values, annotations)],
    )


def hierarchy_report(annotations: Sequence[LevelAnnotation]) -> EvalReport:
    distances = [hierarchy_distances(a) for a in annotations]
    abs_values = [d.abs_mean for d in distances]
    rel_values = [d.rel_mean for d in distances]
    return EvalReport(
        level_abs_mean=statistics.fmean(abs_values),
        level_abs_std=statistics.pstdev(abs_values) if len(abs_values) > 1 else 0.0,
        level_rel_mean=statistics.fmean(rel_values),
        level_rel_std=statistics.pstdev(rel_values) if len(rel_values) > 1 else 0.0,
    )


def report_to_text(report: EvalReport) -> str:
    lines = []
    if report.rows:
        header = ("Classes", "# Instances", "Precision", "Recall", "mAP50", "mAP50-95")
        table = [header]
        for row in report.rows:
            table.append(
                (
                    row.name,
                    str(row.instances),
                    f"{row.precision:.3f}",
                    f"{row.recall:.3f}",
                    f"{row.ap50:.3f}",
                    f"{row.ap50_95:.3f}",
                )
            )
        widths = [max(len(r[c]) for r in table) for c in range(len(header))]
        for row in table:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    if report.ard_mean is not None:
        lines.append(f"ARD mean: {report.ard_mean:.4f}")
        lines.append(f"ARD std: {report.ard_std:.4f}")
        lines.append("Displacement sums: " + ", ".join(f"{v:.1f}" for v in report.ard_raw_sums or []))
    if report.level_abs_mean is not None:
        lines.append(f"Level abs mean: {report.level_abs_mean:.4f} (std {report.level_abs_std:.4f})")
        lines.append(f"Level rel mean: {report.level_rel_mean:.4f} (std {report.level_rel_std:.4f})")
    return "\n".join(lines) + "\n"


def report_to_json(report: EvalReport) -> str:
    payload: dict = {}
    if report.rows:
        payload["detection"] = [
            {
                "class": row.name,
                "instances": row.instances,
                "precision": row.precision,
                "recall": row.recall,
                "map50": row.ap50,
                "map50_95": row.ap50_95,
            }
            for row in report.rows
        ]
    if report.ard_mean is not None:
        payload["order"] = {
            "ard_mean": report.ard_mean,
            "ard_std": report.ard_std,
            "displacement_sums": report.ard_raw_sums,
        }
    if report.level_abs_mean is not None:
        payload["hierarchy"] = {
            "abs_mean": report.level_abs_mean,
            "abs_std": report.level_abs_std,
            "rel_mean": report.level_rel_mean,
            "rel_std": report.level_rel_std,
        }
    return json.dumps(payload, indent=2) + "\n"
