import numpy as np
import pytest
from conftest import encoded
from hypothesis import given, strategies as st

from textensemble.engine import partition
from textensemble.errors import DimensionMismatch, EmptyCorpus, SingleClassCorpus
from textensemble.linear_svm import (
    HyperplaneModel,
    OvRModel,
    SvmHyperParams,
    decision,
    margins_ovr,
    predict_ovr,
    svm_objective,
    train_binary_svm,
    train_ovr,
)
from textensemble.text_pipeline import FeatureVector, LabelSet, encode

fv = FeatureVector.from_dense


@pytest.mark.parametrize(
    "w, b, x, expected",
    [((0.0, 0.0), 1.5, (7, 3), 1.5), ((1.0, -1.0), 0.0, (2, 2), 0.0), ((1.0, 0.0), -1.0, (3, 0), 2.0)],
)
def test_decision_examples(w, b, x, expected):
    assert decision(HyperplaneModel(np.array(w), b), fv(x)) == expected


@given(
    st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    st.floats(-5, 5),
    st.lists(st.integers(0, 4), min_size=4, max_size=4),
    st.lists(st.integers(0, 4), min_size=4, max_size=4),
)
def test_decision_is_affine(w, b, x1, x2):
    m = HyperplaneModel(np.array(w), b)
    lhs = decision(m, fv(np.add(x1, x2)))
    rhs = decision(m, fv(x1)) + decision(m, fv(x2)) - b
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_separable_pair():
    data = partition([(1, fv([2, 0])), (-1, fv([-2, 0]))], 1)
    # raw counts are non-negative in practice, but the optimizer is generic
    model = train_binary_svm(data)
    assert decision(model, fv([2, 0])) > 0
    assert decision(model, fv([-2, 0])) < 0


def test_mirrored_data_keeps_zero_intercept():
    pts = [(1, [1.0, 2.0]), (1, [3.0, 0.5]), (1, [0.2, 1.0])]
    items = [(s, fv(x)) for s, x in pts] + [(-s, fv(np.negative(x))) for s, x in pts]
    model = train_binary_svm(partition(items, 3), SvmHyperParams(iterations=300))
    assert abs(model.b) < 1e-6


def test_objective_decreases_from_init(small_synth):
    data, labels, _ = encoded([(p.label, p.text) for p in small_synth], p=4)
    items = [(1 if lab == 0 else -1, x) for lab, x in data.collect()]
    hp = SvmHyperParams(iterations=50)
    model = train_binary_svm(partition(items, 4), hp)
    start = svm_objective(HyperplaneModel(np.zeros(model.dim), 0.0), items, hp.reg_lambda)
    assert start == pytest.approx(1.0)
    assert svm_objective(model, items, hp.reg_lambda) < start


def test_binary_errors():
    with pytest.raises(SingleClassCorpus):
        train_binary_svm(partition([(1, fv([1, 0])), (1, fv([0, 1]))], 1))
    with pytest.raises(EmptyCorpus):
        train_binary_svm(partition([], 1))


def test_ovr_two_classes_are_near_negations():
    data, labels, vocab = encoded([("A", "a b"), ("A", "a"), ("B", "c d"), ("B", "d")])
    model = train_ovr(data, labels)
    assert len(model.per_class) == 2
    for text in ("a", "d", "a c", "b d d"):
        m = margins_ovr(model, encode(text, vocab))
        # argmax of OvR agrees with the sign of class A's binary decision
        assert (np.argmax(m) == 0) == (m[0] > 0)


def test_ovr_ten_classes(small_synth):
    data, labels, vocab = encoded([(p.label, p.text) for p in small_synth], p=4)
    model = train_ovr(data, labels)
    assert len(model.per_class) == 10
    acc = np.mean([np.argmax(predict_ovr(model, x)) == y for y, x in data.collect()])
    assert acc == 1.0


def test_ovr_single_class():
    data, labels, _ = encoded([("A", "a"), ("A", "b")])
    with pytest.raises(SingleClassCorpus):
        train_ovr(data, labels)


def _fixed_ovr(margins):
    planes = tuple(HyperplaneModel(np.array([1e-300]), float(m)) for m in margins)
    return OvRModel(planes, LabelSet(tuple(f"c{i}" for i in range(len(margins)))))


@pytest.mark.parametrize(
    "margins, winner", [((0.5, 2.0, -1.0), 1), ((0.3, 0.3, 0.3), 0), ((-2, -1, -3), 1)]
)
def test_predict_ovr_one_hot(margins, winner):
    out = predict_ovr(_fixed_ovr(margins), fv([0.0]))
    expected = np.zeros(len(margins))
    expected[winner] = 1.0
    np.testing.assert_array_equal(out, expected)


def test_off_margin_maximal_gives_off_one_hot():
    labels = ("ATT", "CONFIG", "DISATT", "FDT", "GC", "OFF", "RIC", "SERV", "SERVIZIO_CLIENTI", "TS")
    margins = [-1.0] * 10
    margins[labels.index("OFF")] = 0.4
    planes = tuple(HyperplaneModel(np.array([0.0]), m) for m in margins)
    out = predict_ovr(OvRModel(planes, LabelSet(labels)), fv([0.0]))
    assert out[labels.index("OFF")] == 1.0 and out.sum() == 1.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        decision(HyperplaneModel(np.zeros(3), 0.0), fv([1, 2]))


def test_training_is_deterministic(small_synth):
    data, labels, _ = encoded([(p.label, p.text) for p in small_synth], p=3)
    a = train_ovr(data, labels, SvmHyperParams(iterations=30))
    b = train_ovr(data, labels, SvmHyperParams(iterations=30))
    for x, y in zip(a.per_class, b.per_class):
        np.testing.assert_array_equal(x.w, y.w)
        assert x.b == y.b


def test_partition_count_changes_model_only_by_rounding(small_synth):
    pairs = [(p.label, p.text) for p in small_synth]
    models = [train_ovr(*encoded(pairs, p)[:2], SvmHyperParams(iterations=30)) for p in (1, 7)]
    for x, y in zip(models[0].per_class, models[1].per_class):
        np.testing.assert_allclose(x.w, y.w, rtol=1e-9, atol=1e-12)
