"""Estimator facade: parameter plumbing, fitted attributes, transform."""
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from barysim.estimator import DecentralizedBarycenter

PARAM_NAMES = {
    "beta",
    "topology",
    "er_edge_prob",
    "variant",
    "horizon_s",
    "interval_s",
    "batch",
    "support",
    "master_seed",
    "eval_samples",
    "eval_seed",
}


def _rows(m=3, n=8, seed=0):
    rng = np.random.default_rng(seed)
    return rng.random((m, n)) + 0.05


def _small(**kw):
    kw.setdefault("horizon_s", 6.0)
    kw.setdefault("batch", 4)
    kw.setdefault("eval_samples", 64)
    return DecentralizedBarycenter(**kw)


def test_get_params_exposes_every_constructor_knob():
    assert set(DecentralizedBarycenter().get_params().keys()) == PARAM_NAMES


def test_set_params_round_trip():
    est = DecentralizedBarycenter()
    out = est.set_params(beta=0.2, topology="cycle")
    assert out is est
    got = est.get_params()
    assert got["beta"] == 0.2
    assert got["topology"] == "cycle"


def test_clone_copies_params_and_drops_fitted_state():
    est = _small(beta=0.07, topology="star", master_seed=3)
    est.fit(_rows())
    dup = clone(est)
    assert dup.get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        dup.transform(_rows())


def test_fit_sets_expected_attributes():
    X = _rows(m=3, n=8)
    est = _small().fit(X)
    assert est.n_features_in_ == 8
    assert est.dual_state_.shape == (3, 8)
    assert est.node_weights_.shape == (3, 8)
    assert est.barycenter_weights_.shape == (8,)
    assert len(est.trace_) >= 2
    times = [s.t for s in est.trace_]
    assert times == sorted(times)
    assert est.trace_[-1].iters_done > 0
    assert np.all(np.isfinite(est.dual_state_))


def test_fitted_weights_live_on_the_simplex():
    est = _small().fit(_rows(m=4, n=6, seed=2))
    assert np.all(est.node_weights_ >= 0)
    np.testing.assert_allclose(est.node_weights_.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(est.barycenter_weights_.sum(), 1.0, atol=1e-12)


def test_row_scaling_does_not_change_the_fit():
    # rows are normalized internally, so per-row positive scales are inert
    X = _rows(m=3, n=5, seed=4)
    scales = np.array([0.1, 7.0, 2.5])[:, None]
    a = _small().fit(X)
    b = _small().fit(X * scales)
    np.testing.assert_allclose(a.dual_state_, b.dual_state_, atol=1e-12)
    np.testing.assert_allclose(a.barycenter_weights_, b.barycenter_weights_, atol=1e-12)


def test_refit_with_the_same_seed_is_deterministic():
    X = _rows()
    a = _small(master_seed=9).fit(X)
    b = _small(master_seed=9).fit(X)
    np.testing.assert_array_equal(a.dual_state_, b.dual_state_)
    assert [s.objective for s in a.trace_] == [s.objective for s in b.trace_]


def test_master_seed_changes_the_run():
    X = _rows()
    a = _small(master_seed=0).fit(X)
    b = _small(master_seed=1).fit(X)
    assert np.abs(a.dual_state_ - b.dual_state_).max() > 0


def test_transform_returns_simplex_rows_of_the_same_shape():
    X = _rows(m=3, n=8)
    est = _small().fit(X)
    out = est.transform(X)
    assert out.shape == X.shape
    assert np.all(out >= 0)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)


def test_fit_transform_matches_fit_then_transform():
    X = _rows(m=3, n=6, seed=7)
    a = _small(master_seed=2).fit_transform(X)
    b = _small(master_seed=2).fit(X).transform(X)
    np.testing.assert_array_equal(a, b)


def test_transform_before_fit_raises():
    with pytest.raises(NotFittedError):
        DecentralizedBarycenter().transform(_rows())


def test_transform_rejects_wrong_width():
    est = _small().fit(_rows(m=3, n=8))
    with pytest.raises(ValueError, match="fitted support has 8"):
        est.transform(np.ones((2, 5)))


def test_transform_rejects_a_zero_row():
    est = _small().fit(_rows(m=3, n=4))
    bad = np.ones((2, 4))
    bad[1] = 0.0
    with pytest.raises(ValueError, match="row 1"):
        est.transform(bad)


def test_fit_rejects_a_single_row():
    with pytest.raises(ValueError, match="at least 2"):
        _small().fit(np.ones((1, 4)))


def test_fit_rejects_negative_weights():
    X = _rows()
    X[1, 2] = -0.5
    with pytest.raises(ValueError, match="nonnegative"):
        _small().fit(X)


def test_fit_rejects_a_zero_total_row():
    X = _rows()
    X[0] = 0.0
    with pytest.raises(ValueError, match="positive total weight"):
        _small().fit(X)


def test_fit_rejects_an_unknown_variant():
    with pytest.raises(ValueError, match="unknown variant"):
        _small(variant="gossip").fit(_rows())


def test_custom_support_size_must_match_columns():
    est = _small(support=np.linspace(0.0, 1.0, 3))
    with pytest.raises(ValueError, match="support has 3 points for 8"):
        est.fit(_rows(m=3, n=8))


def test_custom_support_accepts_1d_and_2d_points():
    X = _rows(m=3, n=5, seed=1)
    one_d = _small(support=np.array([0.0, 0.1, 0.5, 0.9, 1.0])).fit(X)
    assert one_d.barycenter_weights_.shape == (5,)
    pts = np.random.default_rng(0).random((5, 2))
    two_d = _small(support=pts).fit(X)
    assert two_d.barycenter_weights_.shape == (5,)


@pytest.mark.parametrize("variant", ["a2dwb", "a2dwbn", "sync_baseline"])
def test_every_variant_fits(variant):
    est = _small(variant=variant).fit(_rows(m=4, n=5, seed=3))
    assert np.all(np.isfinite(est.barycenter_weights_))
    np.testing.assert_allclose(est.barycenter_weights_.sum(), 1.0, atol=1e-12)


def test_er_graph_with_probability_one_matches_the_complete_graph():
    X = _rows(m=4, n=5, seed=6)
    full = _small(topology="complete", master_seed=5).fit(X)
    er = _small(topology="erdos_renyi", er_edge_prob=1.0, master_seed=5).fit(X)
    np.testing.assert_array_equal(full.dual_state_, er.dual_state_)


def test_identical_peaked_rows_keep_their_peak():
    # all nodes hold the same sharply peaked measure; the fitted average
    # must still put its largest weight on that column
    n = 8
    row = np.full(n, 0.1 / (n - 1))
    row[5] = 0.9
    X = np.tile(row, (4, 1))
    est = _small(beta=0.01, horizon_s=10.0).fit(X)
    assert int(np.argmax(est.barycenter_weights_)) == 5
