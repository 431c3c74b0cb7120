import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowfeat.dataset import FeatureTable, LabelVector
from flowfeat.metrics import (
    ConfusionCounts,
    classification_metrics,
    confusion,
    evaluate,
    roc_auc,
    timed_predict,
)
from oracles import auc_oracle


def test_confusion_examples():
    assert confusion(LabelVector([1, 1, 0, 0]), [0.9, 0.4, 0.6, 0.1]) == ConfusionCounts(tp=1, fp=1, tn=1, fn=1)
    c = confusion([1, 0, 1], [0.0, 0.0, 0.0])
    assert c.tp == 0 and c.fp == 0
    assert confusion([1], [0.5]).tp == 1
    with pytest.raises(ValueError, match="length"):
        confusion([1, 0], [0.5])


def test_classification_metrics_hand_example():
    m = classification_metrics(ConfusionCounts(tp=9, fp=2, tn=88, fn=1))
    assert m.recall == pytest.approx(0.9, abs=5e-5)
    assert m.precision == pytest.approx(0.8182, abs=5e-5)
    assert m.f1 == pytest.approx(0.8571, abs=5e-5)
    assert m.accuracy == pytest.approx(0.97, abs=5e-5)
    assert m.far == pytest.approx(0.0222, abs=5e-5)
    assert m.dr == m.recall
    assert m.degenerate == ()


def test_classification_metrics_degenerate_and_perfect():
    m = classification_metrics(ConfusionCounts(tp=0, fp=0, tn=5, fn=5))
    assert m.precision == 0.0 and m.recall == 0.0
    assert "precision" in m.degenerate
    p = classification_metrics(ConfusionCounts(tp=5, fp=0, tn=5, fn=0))
    assert (p.accuracy, p.recall, p.precision, p.f1, p.far) == (1.0, 1.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        classification_metrics(ConfusionCounts(0, 0, 0, 0))


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_accuracy_identity_and_f1(tp, fp, tn, fn):
    c = ConfusionCounts(tp, fp, tn, fn)
    if c.n == 0:
        return
    m = classification_metrics(c)
    assert m.accuracy == 1 - (fn + fp) / c.n or abs(m.accuracy - (1 - (fn + fp) / c.n)) <= 1e-15
    if m.precision + m.recall > 0:
        assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))
    for v in (m.accuracy, m.recall, m.precision, m.f1, m.far):
        assert 0.0 <= v <= 1.0


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_swapped_encoding_recomputes_specificity(seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, 40)
    s = rng.random(40)
    c = confusion(y, s)
    # flipping labels and scores around 0.5 (ties aside) turns negatives into positives
    s = np.where(s == 0.5, 0.25, s)
    c = confusion(y, s)
    flipped = confusion(1 - y, 1 - s)
    m = classification_metrics(flipped)
    if c.tn + c.fp:
        assert m.recall == pytest.approx(c.tn / (c.tn + c.fp))


def test_roc_auc_examples():
    assert roc_auc([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.1]) == 1.0
    assert roc_auc([1, 1, 0, 0], [0.1, 0.9, 0.1, 0.9]) == 0.5
    assert roc_auc([1, 0, 1, 0], [0.3] * 4) == 0.5
    with pytest.raises(ValueError, match="both classes"):
        roc_auc([1, 1], [0.2, 0.3])


def test_roc_auc_matches_pairwise_oracle():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        s = np.round(rng.random(n), int(rng.integers(1, 4)))
        assert abs(roc_auc(y, s) - auc_oracle(list(y), list(s))) <= 1e-12


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_roc_auc_transform_properties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 100))
    y = rng.integers(0, 2, n)
    y[0], y[1] = 0, 1
    s = np.round(rng.normal(size=n), 2)
    a = roc_auc(y, s)
    assert abs(a + roc_auc(y, -s) - 1.0) <= 1e-12
    assert abs(roc_auc(y, np.exp(s) * 3 + 1) - a) <= 1e-12


def test_timed_predict():
    X = FeatureTable(np.random.default_rng(0).random((500, 3)), list("abc"))

    def predict(t):
        return t.values.sum(axis=1) / 3

    scores, t1 = timed_predict(predict, X)
    assert t1 > 0
    np.testing.assert_array_equal(scores, predict(X))
    with pytest.raises(ValueError):
        timed_predict(predict, FeatureTable(np.empty((0, 3)), list("abc")))


def test_timed_predict_amortization_band():
    rng = np.random.default_rng(1)
    X = FeatureTable(rng.random((20000, 8)), list("abcdefgh"))
    X2 = FeatureTable(np.vstack([X.values, X.values]), list("abcdefgh"))
    w = rng.random(8)

    def predict(t):
        return 1 / (1 + np.exp(-(t.values @ w)))

    # median of repeats smooths scheduler noise
    t1 = np.median([timed_predict(predict, X)[1] for _ in range(15)])
    t2 = np.median([timed_predict(predict, X2)[1] for _ in range(15)])
    assert t1 / 3 <= t2 <= t1 * 3


def test_evaluate_combines():
    r = evaluate([1, 1, 0, 0], [0.9, 0.2, 0.3, 0.6])
    assert r.auc == 0.5
    assert r.accuracy == 0.5
