"""Detection/order/hierarchy metrics verified against independently coded oracles."""

from __future__ import annotations

import json
import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accsams.metrics import (
    AP_IOU_THRESHOLDS,
    Detection,
    DifferentPageError,
    GroundTruth,
    LevelAnnotation,
    MismatchedIdSetsError,
    OrderAnnotation,
    UnknownIdError,
    ard,
    average_precision,
    detection_report,
    hierarchy_distances,
    hierarchy_report,
    iou,
    order_report,
    report_to_json,
    report_to_text,
)
from accsams.model import BBox, BlockCategory


def box(x0, y0, x1, y1, page=0):
    return BBox(page=page, x0=x0, y0=y0, x1=x1, y1=y1)


# --- IoU ----------------------------------------------------------------------


def test_iou_identity_disjoint_and_hand_value():
    a = box(0, 0, 2, 2)
    assert iou(a, a) == 1.0
    assert iou(a, box(5, 5, 7, 7)) == 0.0
    # intersection 1x2 = 2, union 4 + 4 - 2 = 6
    assert iou(a, box(1, 0, 3, 2)) == pytest.approx(1 / 3, abs=1e-12)


def test_iou_requires_same_page():
    with pytest.raises(DifferentPageError):
        iou(box(0, 0, 1, 1, page=0), box(0, 0, 1, 1, page=1))


@given(
    st.tuples(*(st.floats(0, 100) for _ in range(4))),
    st.tuples(*(st.floats(0, 100) for _ in range(4))),
)
@settings(max_examples=120, deadline=None)
def test_iou_symmetric_and_bounded(raw_a, raw_b):
    ax0, ay0, aw, ah = raw_a
    bx0, by0, bw, bh = raw_b
    a = box(ax0, ay0, ax0 + aw + 1, ay0 + ah + 1)
    b = box(bx0, by0, bx0 + bw + 1, by0 + bh + 1)
    v = iou(a, b)
    assert 0.0 <= v <= 1.0 + 1e-12
    assert v == pytest.approx(iou(b, a), abs=1e-12)


# --- average precision ---------------------------------------------------------

CAT = BlockCategory.PARAGRAPH


def det(b, conf, cat=CAT, id=""):
    return Detection(bbox=b, category=cat, confidence=conf, id=id)


def gt(b, cat=CAT):
    return GroundTruth(bbox=b, category=cat)


def test_ap_perfect_single_prediction():
    g = [gt(box(0, 0, 10, 10))]
    p = [det(box(0, 0, 10, 10), 0.9)]
    assert average_precision(p, g) == pytest.approx(1.0)


def test_ap_no_predictions_is_zero():
    assert average_precision([], [gt(box(0, 0, 10, 10))]) == 0.0


def test_ap_empty_conventions():
    assert average_precision([], []) == 1.0
    assert average_precision([det(box(0, 0, 10, 10), 0.9)], []) == 0.0


def test_ap_reference_fixture():
    """2 ground truths; predictions TP@.9, FP@.8, TP@.7.

    Oracle by hand: PR points (1/1, 1/2), (1/2, 1/2), (2/3, 1).  Envelope:
    precision 1.0 for recall ≤ 0.5 (51 points), 2/3 above (50 points) →
    AP = (51·1.0 + 50·(2/3)) / 101 = 0.83498...
    """
    g = [gt(box(0, 0, 10, 10)), gt(box(20, 0, 30, 10))]
    p = [
        det(box(0, 0, 10, 10), 0.9),
        det(box(50, 50, 60, 60), 0.8),
        det(box(20, 0, 30, 10), 0.7),
    ]
    value = average_precision(p, g)
    expected = (51 * 1.0 + 50 * (2 / 3)) / 101
    assert value == pytest.approx(expected, abs=1e-12)
    assert abs(value - 0.8350) <= 0.0005


def test_ap_extra_low_confidence_miss_never_raises_ap():
    g = [gt(box(0, 0, 10, 10)), gt(box(20, 0, 30, 10))]
    p = [
        det(box(0, 0, 10, 10), 0.9),
        det(box(20, 0, 30, 10), 0.7),
    ]
    base = average_precision(p, g)
    worse = p + [det(box(70, 70, 80, 80), 0.1)]
    assert average_precision(worse, g) <= base + 1e-12


def test_ap_double_counting_prevented():
    # two predictions over one gt: only the higher-confidence one matches
    g = [gt(box(0, 0, 10, 10))]
    p = [det(box(0, 0, 10, 10), 0.9), det(box(0, 0, 10, 10), 0.8)]
    # PR: (1, 1), (1/2, 1) → envelope 1.0 everywhere
    assert average_precision(p, g) == pytest.approx(1.0)


# --- detection report vs brute-force oracle ------------------------------------


def _oracle_iou(a, b):
    ix = max(0.0, min(a.x1, b.x1) - max(a.x0, b.x0))
    iy = max(0.0, min(a.y1, b.y1) - max(a.y0, b.y0))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    area_a = (a.x1 - a.x0) * (a.y1 - a.y0)
    area_b = (b.x1 - b.x0) * (b.y1 - b.y0)
    return inter / (area_a + area_b - inter)


def _oracle_hits(preds, gts, thr):
    """Exhaustive re-derivation of the greedy match: confidence-descending
    predictions each claim the unmatched gt with the highest IoU ≥ thr."""
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, preds[i].id, i))
    free = list(range(len(gts)))
    hits = []
    for i in order:
        scored = []
        for g in free:
            if gts[g].bbox.page != preds[i].bbox.page:
                continue
            v = _oracle_iou(preds[i].bbox, gts[g].bbox)
            if v >= thr:
                scored.append((v, -g))
        if scored:
            v, neg_g = max(scored)
            free.remove(-neg_g)
            hits.append(True)
        else:
            hits.append(False)
    return hits


def _oracle_ap(preds, gts, thr):
    if not gts:
        return 1.0 if not preds else 0.0
    if not preds:
        return 0.0
    hits = _oracle_hits(preds, gts, thr)
    tp = 0
    points = []
    for k, h in enumerate(hits, start=1):
        tp += h
        points.append((tp / len(gts), tp / k))
    total = 0.0
    for i in range(101):
        r = i / 100
        best = 0.0
        for rec, prec in points:
            if rec >= r and prec > best:
                best = prec
        total += best
    return total / 101


def _oracle_pr_at_max_f1(preds, gts, thr):
    if not preds or not gts:
        return 0.0, 0.0
    hits = _oracle_hits(preds, gts, thr)
    best_f1, best = 0.0, (0.0, 0.0)
    tp = 0
    for k, h in enumerate(hits, start=1):
        tp += h
        p, r = tp / k, tp / len(gts)
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        if f1 > best_f1:
            best_f1, best = f1, (p, r)
    return best


def _mixed_fixture():
    """10 boxes across two categories: double detections, a false positive,
    a missed ground truth, and one prediction in a gt-less category."""
    H, P = BlockCategory.HEADING, BlockCategory.PARAGRAPH
    F = BlockCategory.FIGURE
    gts = [
        gt(box(0, 0, 100, 20), H),
        gt(box(0, 40, 100, 60), H),
        gt(box(0, 100, 200, 140), P),
        gt(box(0, 160, 200, 200), P),
        gt(box(0, 220, 200, 260), P),
    ]
    preds = [
        det(box(0, 0, 100, 20), 0.95, H, id="a"),       # exact TP
        det(box(0, 42, 100, 62), 0.80, H, id="b"),      # high-IoU TP
        det(box(0, 44, 100, 64), 0.60, H, id="c"),      # duplicate → FP
        det(box(0, 100, 200, 138), 0.90, P, id="d"),    # TP
        det(box(0, 300, 200, 340), 0.70, P, id="e"),    # FP, nothing there
        det(box(0, 162, 200, 198), 0.50, P, id="f"),    # TP (lower conf)
        det(box(500, 500, 600, 600), 0.40, F, id="g"),  # category without gts
    ]
    return preds, gts


def test_detection_report_matches_brute_force_oracle():
    preds, gts = _mixed_fixture()
    report = detection_report(preds, gts)
    rows = {r.name: r for r in report.rows}
    assert set(rows) == {"Headings", "Paragraphs", "Figures", "All"}

    per_cat = {}
    for name, cat in (("Headings", BlockCategory.HEADING), ("Paragraphs", BlockCategory.PARAGRAPH), ("Figures", BlockCategory.FIGURE)):
        cp = [p for p in preds if p.category is cat]
        cg = [g for g in gts if g.category is cat]
        ap50 = _oracle_ap(cp, cg, 0.5)
        ap5095 = sum(_oracle_ap(cp, cg, t) for t in AP_IOU_THRESHOLDS) / len(AP_IOU_THRESHOLDS)
        prec, rec = _oracle_pr_at_max_f1(cp, cg, 0.5)
        per_cat[name] = (len(cg), prec, rec, ap50, ap5095)

    for name, (n, prec, rec, ap50, ap5095) in per_cat.items():
        row = rows[name]
        assert row.instances == n
        assert abs(row.precision - prec) <= 1e-9, name
        assert abs(row.recall - rec) <= 1e-9, name
        assert abs(row.ap50 - ap50) <= 1e-9, name
        assert abs(row.ap50_95 - ap5095) <= 1e-9, name

    # All: macro mean over the two categories that have ground truths
    present = [per_cat["Headings"], per_cat["Paragraphs"]]
    all_row = rows["All"]
    assert all_row.instances == 5
    for idx, attr in ((1, "precision"), (2, "recall"), (3, "ap50"), (4, "ap50_95")):
        expected = sum(v[idx] for v in present) / len(present)
        assert abs(getattr(all_row, attr) - expected) <= 1e-9, attr


def test_detection_report_perfect_two_categories():
    gts = [gt(box(0, 0, 10, 10), BlockCategory.HEADING), gt(box(0, 20, 10, 30), BlockCategory.TABLE)]
    preds = [
        det(box(0, 0, 10, 10), 0.9, BlockCategory.HEADING),
        det(box(0, 20, 10, 30), 0.9, BlockCategory.TABLE),
    ]
    report = detection_report(preds, gts)
    for row in report.rows:
        assert row.precision == row.recall == row.ap50 == row.ap50_95 == pytest.approx(1.0)


def test_detection_report_empty_predictions_convention():
    gts = [gt(box(0, 0, 10, 10), BlockCategory.HEADING)]
    report = detection_report([], gts)
    rows = {r.name: r for r in report.rows}
    heading = rows["Headings"]
    assert heading.precision == heading.recall == heading.ap50 == heading.ap50_95 == 0.0


def test_detection_report_randomized_against_oracle():
    rng = random.Random(42)
    cats = [BlockCategory.HEADING, BlockCategory.PARAGRAPH, BlockCategory.FIGURE]
    for trial in range(15):
        gts, preds = [], []
        for _ in range(rng.randrange(0, 8)):
            cat = rng.choice(cats)
            x0, y0 = rng.uniform(0, 400), rng.uniform(0, 700)
            w, h = rng.uniform(20, 120), rng.uniform(10, 60)
            gts.append(gt(box(x0, y0, x0 + w, y0 + h), cat))
        for base in gts:
            if rng.random() < 0.8:  # jittered detection
                dx, dy = rng.uniform(-15, 15), rng.uniform(-10, 10)
                b = base.bbox
                preds.append(det(box(b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy), round(rng.uniform(0.05, 1.0), 3), base.category, id=f"p{len(preds)}"))
        for _ in range(rng.randrange(0, 4)):  # noise
            cat = rng.choice(cats)
            x0, y0 = rng.uniform(0, 400), rng.uniform(0, 700)
            preds.append(det(box(x0, y0, x0 + 50, y0 + 30), round(rng.uniform(0.05, 1.0), 3), cat, id=f"p{len(preds)}"))

        report = detection_report(preds, gts)
        for row in report.rows:
            if row.name == "All":
                continue
            cat = next(c for c, name in (
                (BlockCategory.HEADING, "Headings"), (BlockCategory.PARAGRAPH, "Paragraphs"), (BlockCategory.FIGURE, "Figures"),
            ) if name == row.name)
            cp = [p for p in preds if p.category is cat]
            cg = [g for g in gts if g.category is cat]
            assert abs(row.ap50 - _oracle_ap(cp, cg, 0.5)) <= 1e-9, f"trial {trial}"
            expected_5095 = sum(_oracle_ap(cp, cg, t) for t in AP_IOU_THRESHOLDS) / len(AP_IOU_THRESHOLDS)
            assert abs(row.ap50_95 - expected_5095) <= 1e-9, f"trial {trial}"
            prec, rec = _oracle_pr_at_max_f1(cp, cg, 0.5)
            assert abs(row.precision - prec) <= 1e-9 and abs(row.recall - rec) <= 1e-9, f"trial {trial}"


# --- ARD ------------------------------------------------------------------------


def test_ard_identity_is_zero():
    for n in (1, 4, 9):
        ids = tuple(f"b{i}" for i in range(n))
        assert ard(OrderAnnotation(gold=ids, predicted=ids)) == 0.0


def test_ard_reversed_four_elements():
    a = OrderAnnotation(gold=("A", "B", "C", "D"), predicted=("D", "C", "B", "A"))
    assert ard(a) == pytest.approx(2.0)


def test_ard_single_swap_three_elements():
    a = OrderAnnotation(gold=("A", "B", "C"), predicted=("B", "A", "C"))
    assert ard(a) == pytest.approx(2 / 3)


def test_ard_missing_elements_cost_n():
    a = OrderAnnotation(gold=("A", "B", "C", "D"), predicted=("A", "B"))
    # displacements 0, 0; two missing elements contribute 4 each
    assert ard(a) == pytest.approx(8 / 4)


def test_ard_unknown_predicted_id_raises():
    with pytest.raises(UnknownIdError):
        ard(OrderAnnotation(gold=("A", "B"), predicted=("A", "X")))


def test_ard_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        ard(OrderAnnotation(gold=("A", "A"), predicted=("A", "A")))
    with pytest.raises(ValueError):
        ard(OrderAnnotation(gold=("A", "B"), predicted=("A", "A")))


def _oracle_ard(gold, predicted):
    n = len(gold)
    if n == 0:
        return 0.0
    total = 0
    for i, el in enumerate(gold):
        if el in predicted:
            total += abs(i - predicted.index(el))
        else:
            total += n
    return total / n


def test_ard_matches_independent_oracle_on_1000_permutations():
    rng = random.Random(2024)
    start = time.perf_counter()
    for _ in range(1000):
        n = rng.randrange(1, 11)
        gold = tuple(f"b{i}" for i in range(n))
        predicted = list(gold)
        rng.shuffle(predicted)
        if rng.random() < 0.3:  # drop a suffix to exercise the missing penalty
            predicted = predicted[: rng.randrange(0, n + 1)]
        ours = ard(OrderAnnotation(gold=gold, predicted=tuple(predicted)))
        assert ours == _oracle_ard(gold, predicted)
        assert ours <= n
    assert time.perf_counter() - start < 1.0


def test_ard_symmetric_for_full_permutations():
    rng = random.Random(9)
    for _ in range(50):
        n = rng.randrange(1, 9)
        gold = tuple(f"b{i}" for i in range(n))
        predicted = list(gold)
        rng.shuffle(predicted)
        forward = ard(OrderAnnotation(gold=gold, predicted=tuple(predicted)))
        backward = ard(OrderAnnotation(gold=tuple(predicted), predicted=gold))
        assert forward == pytest.approx(backward)


# --- hierarchy distances ----------------------------------------------------------


def test_hierarchy_identity():
    a = LevelAnnotation(gold={"a": 1, "b": 2}, predicted={"a": 1, "b": 2}, order=("a", "b"))
    d = hierarchy_distances(a)
    assert d.abs_mean == 0.0 and d.rel_mean == 0.0


def test_hierarchy_hand_example():
    a = LevelAnnotation(
        gold={"a": 1, "b": 2, "c": 2},
        predicted={"a": 1, "b": 2, "c": 3},
        order=("a", "b", "c"),
    )
    d = hierarchy_distances(a)
    assert d.abs_mean == pytest.approx(1 / 3)
    assert d.rel_mean == pytest.approx(1 / 2)


def test_hierarchy_single_block_convention():
    a = LevelAnnotation(gold={"a": 2}, predicted={"a": 5}, order=("a",))
    d = hierarchy_distances(a)
    assert d.abs_mean == 3.0 and d.rel_mean == 0.0


def test_hierarchy_mismatched_id_sets():
    with pytest.raises(MismatchedIdSetsError):
        hierarchy_distances(LevelAnnotation(gold={"a": 1}, predicted={"b": 1}, order=("a",)))


def test_hierarchy_abs_zero_iff_identical():
    rng = random.Random(5)
    for _ in range(30):
        n = rng.randrange(1, 8)
        ids = tuple(f"b{i}" for i in range(n))
        gold = {i: rng.randrange(0, 4) for i in ids}
        predicted = {i: rng.randrange(0, 4) for i in ids}
        d = hierarchy_distances(LevelAnnotation(gold=gold, predicted=predicted, order=ids))
        assert d.abs_mean >= 0 and d.rel_mean >= 0
        assert (d.abs_mean == 0) == (gold == predicted)


# --- report rendering ----------------------------------------------------------------


def test_text_report_mirrors_table_column_order():
    preds, gts = _mixed_fixture()
    text = report_to_text(detection_report(preds, gts))
    header = text.splitlines()[0].split()
    assert header == ["Classes", "#", "Instances", "Precision", "Recall", "mAP50", "mAP50-95"]
    assert "All" in text


def test_json_report_shape():
    preds, gts = _mixed_fixture()
    report = detection_report(preds, gts)
    data = json.loads(report_to_json(report))
    assert {row["class"] for row in data["detection"]} == {"Headings", "Paragraphs", "Figures", "All"}
    for row in data["detection"]:
        assert set(row) == {"class", "instances", "precision", "recall", "map50", "map50_95"}


def test_order_report_aggregates():
    anns = [
        OrderAnnotation(gold=("A", "B"), predicted=("A", "B")),
        OrderAnnotation(gold=("A", "B", "C", "D"), predicted=("D", "C", "B", "A")),
    ]
    report = order_report(anns)
    assert report.ard_mean == pytest.approx(1.0)
    assert report.ard_raw_sums == [0.0, 8.0]
    data = json.loads(report_to_json(report))
    assert data["order"]["ard_mean"] == pytest.approx(1.0)
    assert data["order"]["displacement_sums"] == [0.0, 8.0]


def test_hierarchy_report_aggregates():
    anns = [
        LevelAnnotation(gold={"a": 1}, predicted={"a": 1}, order=("a",)),
        LevelAnnotation(
            gold={"a": 1, "b": 2, "c": 2},
            predicted={"a": 1, "b": 2, "c": 3},
            order=("a", "b", "c"),
        ),
    ]
    report = hierarchy_report(anns)
    assert report.level_abs_mean == pytest.approx((0 + 1 / 3) / 2)
    assert report.level_rel_mean == pytest.approx((0 + 1 / 2) / 2)
    text = report_to_text(report)
    assert "Hierarchy" in text or "level" in text.lower()


def test_confidence_validated():
    with pytest.raises(ValueError):
        det(box(0, 0, 1, 1), 1.5)
    with pytest.raises(ValueError):
        det(box(0, 0, 1, 1), -0.1)
