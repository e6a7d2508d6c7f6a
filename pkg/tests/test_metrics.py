import random

import pytest

from dsdnsim.metrics import (
    ConfusionCounts,
    TelemetrySeries,
    accuracy,
    confusion,
    f1,
    metrics_report,
    percent,
    precision,
    recall,
    roc_auc,
    summarize,
)

HEADLINE_COUNTS = ConfusionCounts(tp=6429, tn=19502, fp=2, fn=0)


def pairs_from(counts: ConfusionCounts):
    return (
        [(1, 1)] * counts.tp + [(0, 0)] * counts.tn + [(1, 0)] * counts.fp + [(0, 1)] * counts.fn
    )


def test_confusion_counts():
    c, gaps = confusion(pairs_from(HEADLINE_COUNTS))
    assert c == HEADLINE_COUNTS
    assert gaps == 0
    assert c.total == 25933


def test_all_correct_and_inverted():
    good = [(1, 1)] * 5 + [(0, 0)] * 5
    c, _ = confusion(good)
    assert c == ConfusionCounts(5, 5, 0, 0)
    c2, _ = confusion([(1 - p, l) for p, l in good])
    assert c2 == ConfusionCounts(0, 0, 5, 5)


def test_headline_metric_values():
    c = HEADLINE_COUNTS
    assert accuracy(c) == pytest.approx(25931 / 25933, rel=1e-12)
    assert precision(c) == pytest.approx(6429 / 6431, rel=1e-12)
    assert recall(c) == 1.0
    assert percent(accuracy(c)) == "99.99"
    assert percent(precision(c)) == "99.97"
    assert percent(recall(c)) == "100.00"
    assert percent(f1(c)) == "99.98"


def test_hand_computed_small_counts():
    c = ConfusionCounts(tp=3, tn=0, fp=1, fn=2)
    assert precision(c) == pytest.approx(0.75)
    assert recall(c) == pytest.approx(0.6)
    assert f1(c) == pytest.approx(2 / 3, rel=1e-9)


def test_perfect_counts():
    c = ConfusionCounts(1, 1, 0, 0)
    assert accuracy(c) == precision(c) == recall(c) == f1(c) == 1.0


def test_zero_denominators_are_absent():
    assert precision(ConfusionCounts(0, 5, 0, 0)) is None
    assert recall(ConfusionCounts(0, 5, 0, 0)) is None
    assert f1(ConfusionCounts(0, 5, 0, 0)) is None
    assert accuracy(ConfusionCounts(0, 0, 0, 0)) is None
    assert percent(None) is None


def test_gaps_counted_separately():
    c, gaps = confusion([(1, 1), (None, 1), (0, 0), (None, 0)])
    assert c == ConfusionCounts(1, 1, 0, 0)
    assert gaps == 2


def test_roc_three_points_and_headline_auc():
    points, auc = roc_auc(pairs_from(HEADLINE_COUNTS))
    assert points[0] == (0.0, 0.0) and points[-1] == (1.0, 1.0)
    fpr, tpr = points[1]
    assert fpr == pytest.approx(2 / 19504)
    assert tpr == 1.0
    assert auc == pytest.approx(1 - 1 / 19504, rel=1e-12)
    assert f"{auc:.2f}" == "1.00"


def test_roc_perfect_and_constant():
    _, auc = roc_auc([(1, 1), (0, 0)])
    assert auc == 1.0
    _, auc0 = roc_auc([(0, 1), (0, 0)])
    assert auc0 == 0.5  # chance line for a constant predictor


def test_roc_single_class_absent():
    assert roc_auc([(1, 1), (0, 1)]) is None
    assert roc_auc([]) is None


def test_f1_harmonic_identity_property():
    rng = random.Random(11)
    for _ in range(1000):
        c = ConfusionCounts(rng.randint(0, 500), rng.randint(0, 500), rng.randint(0, 500), rng.randint(0, 500))
        got = f1(c)
        if c.tp == 0:
            continue
        expected = 2 * c.tp / (2 * c.tp + c.fp + c.fn)
        assert got == pytest.approx(expected, rel=1e-12)


def test_auc_label_swap_symmetry_property():
    rng = random.Random(12)
    for _ in range(200):
        pairs = [(rng.randint(0, 1), rng.randint(0, 1)) for _ in range(50)]
        straight = roc_auc(pairs)
        if straight is None:
            continue
        swapped = roc_auc([(1 - p, l) for p, l in pairs])
        assert straight[1] + swapped[1] == pytest.approx(1.0, rel=1e-12)


def test_percent_rounds_half_away_from_zero():
    assert percent(0.99985) == "99.99"
    assert percent(0.12345) == "12.35"
    assert percent(0.5) == "50.00"


def test_metrics_report_shape():
    report = metrics_report(pairs_from(HEADLINE_COUNTS))
    assert report["confusion"] == {"tp": 6429, "tn": 19502, "fp": 2, "fn": 0}
    assert report["percent"]["accuracy"] == "99.99"
    assert report["gaps"] == 0
    assert 0.0 <= report["auc"] <= 1.0


def test_telemetry_summary():
    s = TelemetrySeries("victim_ingress_pps", "h6", tuple((i, float(i)) for i in range(10)))
    out = summarize(s, threshold=5.0)
    assert out["peak"] == 9.0
    assert out["mean"] == pytest.approx(4.5)
    assert out["time_above_threshold_s"] == 4
    assert out["samples"] == 10
