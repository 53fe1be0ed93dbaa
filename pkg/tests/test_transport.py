import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from barysim.rng import Purpose, stream
from barysim.transport import (
    DiscreteMeasure,
    Gaussian1D,
    SupportGrid,
    cost_column,
    dual_value_mc,
    exact_dual,
    grid_1d,
    sample_measure,
    softmax_primal,
    stochastic_grad,
)


def _random_discrete(rng, k, d=1):
    w = rng.random(k)
    return DiscreteMeasure(atoms=rng.normal(0, 1.5, size=(k, d)), weights=w / w.sum())


def test_cost_column_binary_grid():
    grid = SupportGrid(points=np.array([[0.0], [1.0]]))
    assert np.array_equal(cost_column(grid, np.array([0.0])), np.array([0.0, 1.0]))


def test_cost_column_three_points():
    grid = SupportGrid(points=np.array([[-1.0], [0.0], [1.0]]))
    assert np.allclose(cost_column(grid, np.array([0.5])), [2.25, 0.25, 0.25])


def test_cost_column_zero_at_grid_point():
    grid = grid_1d(-2.0, 2.0, 5)
    costs = cost_column(grid, grid.points[3])
    assert costs[3] == 0.0


def test_softmax_symmetric():
    p = softmax_primal(np.zeros(2), np.zeros(2), 1.0)
    assert np.allclose(p, [0.5, 0.5])


def test_softmax_logistic_value():
    p = softmax_primal(np.array([1.0, 0.0]), np.zeros(2), 1.0)
    assert np.allclose(p, [0.7310586, 0.2689414], atol=1e-7)


def test_softmax_flattens_at_large_beta():
    p = softmax_primal(np.array([1.0, 0.0]), np.zeros(2), 1000.0)
    assert np.all(np.abs(p - 0.5) < 3e-4)


def test_softmax_extreme_inputs_stay_normalized():
    for scale in (1e6, -1e6):
        eta = np.array([scale, 0.0, -scale])
        p = softmax_primal(eta, np.zeros(3), 1e-3)
        assert np.all(p >= 0)
        assert abs(p.sum() - 1.0) < 1e-12


@settings(max_examples=50, deadline=None)
@given(
    shift=st.floats(min_value=-100, max_value=100),
    seed=st.integers(min_value=0, max_value=1000),
)
def test_softmax_shift_invariance(shift, seed):
    rng = stream(seed, Purpose.GRADIENT)
    eta = rng.normal(0, 2, size=4)
    costs = rng.random(4)
    a = softmax_primal(eta, costs, 0.5)
    b = softmax_primal(eta + shift, costs, 0.5)
    assert np.allclose(a, b, atol=1e-12)


def test_stochastic_grad_single_atom_matches_softmax():
    grid = grid_1d(-1.0, 1.0, 4)
    mu = DiscreteMeasure(atoms=np.array([[0.3]]), weights=np.array([1.0]))
    eta = np.array([0.2, -0.1, 0.0, 0.4])
    sample = stochastic_grad(mu, grid, eta, 0.5, 1, stream(0, Purpose.GRADIENT))
    expected = softmax_primal(eta, cost_column(grid, np.array([0.3])), 0.5)
    assert np.allclose(sample.mean_gradient, expected)
    assert sample.samples_used == 1


def test_stochastic_grad_deterministic():
    grid = grid_1d(-1.0, 1.0, 4)
    mu = Gaussian1D(mean=0.0, std=1.0)
    eta = np.array([0.2, -0.1, 0.0, 0.4])
    a = stochastic_grad(mu, grid, eta, 0.5, 32, stream(5, Purpose.GRADIENT, 1))
    b = stochastic_grad(mu, grid, eta, 0.5, 32, stream(5, Purpose.GRADIENT, 1))
    assert np.array_equal(a.mean_gradient, b.mean_gradient)


def test_stochastic_grad_is_simplex():
    grid = grid_1d(-1.0, 1.0, 6)
    mu = Gaussian1D(mean=0.5, std=0.7)
    sample = stochastic_grad(mu, grid, np.zeros(6), 0.2, 16, stream(9, Purpose.GRADIENT))
    assert np.all(sample.mean_gradient >= 0)
    assert abs(sample.mean_gradient.sum() - 1.0) < 1e-10


def test_exact_dual_single_atom_linear():
    grid = SupportGrid(points=np.array([[0.0]]))
    mu = DiscreteMeasure(atoms=np.array([[0.0]]), weights=np.array([1.0]))
    value, grad = exact_dual(mu, grid, np.array([1.7]), beta=0.3)
    assert value == pytest.approx(1.7)
    assert np.allclose(grad, [1.0])


def test_exact_dual_gradient_is_simplex():
    rng = stream(2, Purpose.GRADIENT)
    grid = grid_1d(-2.0, 2.0, 5)
    mu = _random_discrete(rng, 6)
    _, grad = exact_dual(mu, grid, rng.normal(size=5), 0.4)
    assert np.all(grad >= 0)
    assert abs(grad.sum() - 1.0) < 1e-10


def test_exact_dual_against_direct_formula():
    # independent recomputation with plain loops over atoms and support
    rng = stream(4, Purpose.GRADIENT)
    grid = grid_1d(-1.5, 1.5, 4)
    mu = _random_discrete(rng, 3)
    eta = rng.normal(size=4)
    beta = 0.6
    value, grad = exact_dual(mu, grid, eta, beta)
    expected_value = 0.0
    expected_grad = np.zeros(4)
    for atom, q in zip(mu.atoms, mu.weights):
        exps = np.array(
            [np.exp((eta[l] - (grid.points[l, 0] - atom[0]) ** 2) / beta) for l in range(4)]
        )
        expected_value += q * beta * np.log(exps.sum())
        expected_grad += q * exps / exps.sum()
    assert value == pytest.approx(expected_value, rel=1e-12)
    assert np.allclose(grad, expected_grad, atol=1e-12)


def test_exact_dual_entropy_constant_flag():
    rng = stream(6, Purpose.GRADIENT)
    grid = grid_1d(-1.0, 1.0, 3)
    mu = _random_discrete(rng, 4)
    eta = rng.normal(size=3)
    plain, grad_plain = exact_dual(mu, grid, eta, 0.5)
    shifted, grad_shifted = exact_dual(mu, grid, eta, 0.5, include_entropy_constant=True)
    expected_constant = 0.5 * float(-(mu.weights * np.log(mu.weights)).sum())
    assert shifted - plain == pytest.approx(expected_constant, rel=1e-12)
    assert np.array_equal(grad_plain, grad_shifted)


def test_exact_dual_rejects_gaussian():
    with pytest.raises(TypeError):
        exact_dual(Gaussian1D(mean=0.0, std=1.0), grid_1d(0, 1, 3), np.zeros(3), 1.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_exact_dual_midpoint_convexity(seed):
    rng = stream(seed, Purpose.GRADIENT)
    grid = grid_1d(-2.0, 2.0, 4)
    mu = _random_discrete(rng, 4)
    eta1, eta2 = rng.normal(0, 2, size=(2, 4))
    v1, _ = exact_dual(mu, grid, eta1, 0.7)
    v2, _ = exact_dual(mu, grid, eta2, 0.7)
    vm, _ = exact_dual(mu, grid, (eta1 + eta2) / 2, 0.7)
    assert vm <= (v1 + v2) / 2 + 1e-10


def test_dual_value_mc_matches_exact_within_3se():
    rng = stream(8, Purpose.GRADIENT)
    grid = grid_1d(-2.0, 2.0, 4)
    mu = _random_discrete(rng, 5)
    eta = rng.normal(size=4)
    exact_value, _ = exact_dual(mu, grid, eta, 0.8)
    M = 100_000
    samples = np.array(
        [
            dual_value_mc(mu, grid, eta, 0.8, 1, stream(8, Purpose.EVAL, r))
            for r in range(200)
        ]
    )
    estimate = dual_value_mc(mu, grid, eta, 0.8, M, stream(8, Purpose.EVAL))
    se = samples.std(ddof=1) / np.sqrt(M)
    assert abs(estimate - exact_value) <= 3 * se + 1e-12


def test_dual_value_mc_zero_cost_zero_eta():
    grid = SupportGrid(points=np.array([[0.0]]))
    mu = DiscreteMeasure(atoms=np.array([[0.0]]), weights=np.array([1.0]))
    assert dual_value_mc(mu, grid, np.zeros(1), 1.0, 50, stream(0, Purpose.EVAL)) == pytest.approx(0.0)


def test_dual_value_mc_deterministic():
    grid = grid_1d(-1, 1, 3)
    mu = Gaussian1D(mean=0.2, std=0.5)
    a = dual_value_mc(mu, grid, np.zeros(3), 0.5, 64, stream(3, Purpose.EVAL))
    b = dual_value_mc(mu, grid, np.zeros(3), 0.5, 64, stream(3, Purpose.EVAL))
    assert a == b


def test_sample_measure_single_atom():
    mu = DiscreteMeasure(atoms=np.array([[2.5]]), weights=np.array([1.0]))
    for _ in range(5):
        assert sample_measure(mu, stream(0, Purpose.GRADIENT))[0] == 2.5


def test_sample_measure_gaussian_mean():
    mu = Gaussian1D(mean=0.0, std=1.0)
    draws = mu.sample(stream(1, Purpose.GRADIENT), 100_000)
    assert abs(draws.mean()) < 0.02


def test_sample_measure_deterministic():
    mu = Gaussian1D(mean=1.0, std=2.0)
    assert sample_measure(mu, stream(5, Purpose.GRADIENT)) == sample_measure(
        mu, stream(5, Purpose.GRADIENT)
    )


def test_discrete_measure_validates_weights():
    with pytest.raises(ValueError):
        DiscreteMeasure(atoms=np.array([[0.0], [1.0]]), weights=np.array([0.7, 0.2]))
    with pytest.raises(ValueError):
        DiscreteMeasure(atoms=np.array([[0.0]]), weights=np.array([-1.0]))


def test_gaussian_validates_std():
    with pytest.raises(ValueError):
        Gaussian1D(mean=0.0, std=0.0)
