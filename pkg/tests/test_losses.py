import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from riskcert.errors import DataError, DomainError, UsageError
from riskcert.losses import (
    ALL,
    LossSpec,
    PredictionRecord,
    clamped_softmax,
    disagreement_01,
    disagreement_l1,
    disagreement_label_prob,
    disagreement_loss,
    disagreement_stats,
    empirical_risk,
    eval_loss,
    loss_values,
    make_spec,
    smoothed_softmax,
    softmax,
)


def _records(rng, n, C=4, V=3, split="L"):
    out = []
    for i in range(n):
        f = rng.normal(size=C)
        h = f + rng.normal(scale=0.7, size=(V, C))
        out.append(PredictionRecord(f"r{i}", split, f, h, int(rng.integers(C))))
    return out


def test_spec_ranges():
    s = LossSpec.xent_clamped(10, 1e-3)
    assert s.b_lower == 0.0 and s.t_upper == pytest.approx(math.log(1e4)) and s.lipschitz == pytest.approx(1e4)
    sm = LossSpec.xent_smoothed(10, 1e-3)
    assert sm.lam == pytest.approx(math.log(1 + 0.999 * 10 / 1e-3), rel=1e-13)
    assert sm.b_lower > 0.0
    h = LossSpec.huber(10, 0.2)
    assert h.t_upper == 0.18 and h.lipschitz == 0.2
    assert LossSpec.zero_one(3).lam == 1.0


def test_spec_domain_errors():
    with pytest.raises(DomainError):
        LossSpec.xent_clamped(10, 0.0)
    with pytest.raises(DomainError):
        LossSpec.huber(10, 1.5)
    with pytest.raises(DomainError):
        LossSpec.zero_one(1)
    with pytest.raises(UsageError):
        make_spec("hinge", 3)
    assert make_spec("xent-smoothed", 5).kind == "xent_smoothed"


def test_softmax_variants():
    z = np.array([0.0, 0.0])
    assert softmax(z).tolist() == [0.5, 0.5]
    big = np.array([1000.0, 0.0, -1000.0])
    assert softmax(big)[0] == 1.0
    assert clamped_softmax(big, 2, 0.1) == pytest.approx(0.1 / 3)
    assert smoothed_softmax(big, 0, 0.1) == pytest.approx(0.9 + 0.1 / 3)
    with pytest.raises(DataError):
        softmax(np.array([np.nan, 1.0]))


def test_eval_loss_examples():
    z = np.array([2.0, 0.0, 0.0])
    assert eval_loss(LossSpec.zero_one(3), z, 0) == 0.0
    assert eval_loss(LossSpec.zero_one(3), z, 1) == 1.0
    # ties go to the lowest class index
    assert eval_loss(LossSpec.zero_one(2), np.array([1.0, 1.0]), 0) == 0.0
    s = LossSpec.xent_clamped(3, 0.3)
    assert eval_loss(s, np.array([50.0, 0.0, 0.0]), 1) == pytest.approx(s.t_upper)
    with pytest.raises(DataError):
        eval_loss(s, z, None)


def test_huber_reaches_ceiling():
    s = LossSpec.huber(2, 0.2)
    # a confident wrong prediction puts both coordinates at distance 1
    assert eval_loss(s, np.array([0.0, 60.0]), 0) == pytest.approx(0.18, abs=1e-15)
    assert eval_loss(s, np.array([60.0, 0.0]), 0) == pytest.approx(0.0, abs=1e-20)


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, (20, 5), elements=st.floats(-30, 30)),
    st.sampled_from(["xent_clamped", "xent_smoothed", "huber", "zero_one"]),
)
def test_losses_in_range(z, kind):
    spec = make_spec(kind, 5)
    y = np.arange(20) % 5
    vals = loss_values(spec, z, y)
    assert np.all(vals >= spec.b_lower) and np.all(vals <= spec.t_upper)


def test_record_validation():
    with pytest.raises(DataError):
        PredictionRecord("a", "X", [0, 1], [[0, 1]])
    with pytest.raises(DataError):
        PredictionRecord("a", "L", [0, 1], [[0, 1]])
    with pytest.raises(DataError):
        PredictionRecord("a", "U", [0, 1], [[0, 1, 2]])
    with pytest.raises(DataError):
        PredictionRecord("a", "L", [0, 1], [[0, 1]], label=2)
    r = PredictionRecord("a", "U", [0, 1], [0, 1])
    assert r.v_samples == 1 and r.num_classes == 2


def test_disagreement_01_counts():
    recs = [
        PredictionRecord("a", "U", [1, 0], [[1, 0], [0, 1]]),
        PredictionRecord("b", "U", [0, 1], [[1, 0], [0, 1]]),
        PredictionRecord("c", "U", [0, 1], [[0, 1], [0, 1]]),
    ]
    c0 = disagreement_01(recs, 0)
    assert (c0.k, c0.m) == (1, 3)
    assert disagreement_01(recs, 1).k == 1
    with pytest.raises(UsageError):
        disagreement_01(recs, ALL)
    with pytest.raises(UsageError):
        disagreement_01(recs, 2)


def test_stats_average_over_samples():
    rng = np.random.default_rng(1)
    recs = _records(rng, 30)
    spec = LossSpec.xent_smoothed(4)
    per = [disagreement_l1(recs, j) for j in range(3)]
    assert disagreement_l1(recs, ALL) == pytest.approx(np.mean(per))
    per = [disagreement_loss(recs, spec, j) for j in range(3)]
    assert disagreement_loss(recs, spec, ALL) == pytest.approx(np.mean(per))
    st_ = disagreement_stats(recs, spec, 1)
    assert st_.m == 30 and st_.dhat_mean is not None
    assert 0.0 <= empirical_risk(recs, spec) <= spec.t_upper
    assert empirical_risk(recs, spec, 2) == pytest.approx(float(loss_values(spec, np.stack([r.h_logits[2] for r in recs]), [r.label for r in recs]).mean()))


def test_label_prob_requires_xent():
    rng = np.random.default_rng(2)
    with pytest.raises(UsageError):
        disagreement_label_prob(_records(rng, 3), LossSpec.huber(4))


def test_statistics_permutation_invariant():
    rng = np.random.default_rng(3)
    recs = _records(rng, 40)
    spec = LossSpec.huber(4)
    perm = [recs[i] for i in rng.permutation(40)]
    assert disagreement_01(recs).k == disagreement_01(perm).k
    assert disagreement_l1(recs, ALL) == pytest.approx(disagreement_l1(perm, ALL), rel=1e-13)
    assert disagreement_loss(recs, spec) == pytest.approx(disagreement_loss(perm, spec), rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 10]))
def test_truth_table_and_lipschitz_chain(seed, C):
    rng = np.random.default_rng(seed)
    n = 50
    f = rng.normal(scale=3, size=(n, C))
    h = rng.normal(scale=3, size=(n, 1, C))
    recs = [PredictionRecord(str(i), "L", f[i], h[i], int(rng.integers(C))) for i in range(n)]
    d01 = disagreement_01(recs).rate
    assert disagreement_loss(recs, LossSpec.zero_one(C)) <= d01
    for spec in (LossSpec.xent_clamped(C, 0.1), LossSpec.xent_smoothed(C, 0.1)):
        assert disagreement_loss(recs, spec) <= spec.lipschitz * disagreement_label_prob(recs, spec)


def test_loss_gaps_match_direct_difference():
    from riskcert.losses import loss_gaps

    rng = np.random.default_rng(4)
    f = rng.normal(scale=3, size=(500, 6))
    h = rng.normal(scale=3, size=(500, 6))
    y = rng.integers(0, 6, 500)
    for spec in (LossSpec.xent_clamped(6, 0.01), LossSpec.xent_smoothed(6, 0.2), LossSpec.huber(6)):
        direct = np.abs(loss_values(spec, f, y) - loss_values(spec, h, y))
        np.testing.assert_allclose(loss_gaps(spec, f, h, y), direct, rtol=1e-9, atol=1e-13)
