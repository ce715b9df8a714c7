import numpy as np
import pytest

from rkhsdagma.errors import DataError, ShapeError
from rkhsdagma.kernel import KernelConfig, gram_bundle
from rkhsdagma.representer import (NodeParams, ModelParams, eval_node_on_data, eval_node_at, eval_nodes_at,
                                   predict, node_partials_on_data, rkhs_norm_sq)

from . import naive_norm_sq, random_params, restricted_kernel, rng, small_problem


def naive_eval(theta_j, X, x, j, gamma):
    c = 1.0 / gamma ** 2
    value = 0.0
    for l in range(X.shape[0]):
        k = restricted_kernel(x, X[l], j, gamma)
        value += theta_j.alpha[l] * k
        for a in range(X.shape[1]):
            if a != j:
                value += theta_j.beta[a, l] * 2 * c * (x[a] - X[l, a]) * k
    return value


def test_eval_matches_loops(small_problem, rng):
    X, cfg, bundles = small_problem
    theta = random_params(*X.shape, rng)
    for j, g in enumerate(bundles):
        on_data = eval_node_on_data(theta[j], g)
        for i in range(X.shape[0]):
            expected = naive_eval(theta[j], X, X[i], j, cfg.gamma)
            assert on_data[i] == pytest.approx(expected, rel=1e-10, abs=1e-12)
            assert eval_node_at(theta[j], X, X[i], cfg, j) == pytest.approx(on_data[i], rel=1e-10, abs=1e-12)
        x_new = rng.standard_normal(X.shape[1])
        assert eval_node_at(theta[j], X, x_new, cfg, j) == pytest.approx(naive_eval(theta[j], X, x_new, j,
                                                                                    cfg.gamma), rel=1e-10)


def test_zero_params_give_zero_function(small_problem):
    X, cfg, bundles = small_problem
    theta = ModelParams.zeros(*X.shape)
    for j, g in enumerate(bundles):
        np.testing.assert_array_equal(eval_node_on_data(theta[j], g), 0.0)
        np.testing.assert_array_equal(node_partials_on_data(theta[j], g), 0.0)
        assert rkhs_norm_sq(theta[j], g) == 0.0
    np.testing.assert_array_equal(predict(theta, X, X[:3] + 1.0, cfg), 0.0)


def test_function_is_linear_in_params(small_problem, rng):
    X, cfg, bundles = small_problem
    first, second = random_params(*X.shape, rng), random_params(*X.shape, rng)
    for j, g in enumerate(bundles):
        combined = 2.0 * first[j] + second[j] * -0.5
        np.testing.assert_allclose(eval_node_on_data(combined, g),
                                   2.0 * eval_node_on_data(first[j], g) - 0.5 * eval_node_on_data(second[j], g),
                                   atol=1e-12)


def test_partials_match_finite_differences(small_problem, rng):
    X, cfg, bundles = small_problem
    n, d = X.shape
    theta = random_params(n, d, rng)
    eps = 1e-6
    for j, g in enumerate(bundles):
        P = node_partials_on_data(theta[j], g)
        np.testing.assert_allclose(P[:, j], 0.0, atol=1e-14)
        for k in range(d):
            step = np.zeros(d)
            step[k] = eps
            fd = (eval_nodes_at(theta[j], X, X + step, cfg, j) - eval_nodes_at(theta[j], X, X - step, cfg, j)) / (2 * eps)
            np.testing.assert_allclose(P[:, k], fd, rtol=1e-5, atol=1e-7)


def test_norm_matches_quadruple_loop():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        n, d = rng.integers(2, 9), rng.integers(2, 4)
        X = rng.standard_normal((n, d))
        gamma = rng.uniform(0.5, 2.0)
        j = int(rng.integers(d))
        theta_j = NodeParams(rng.standard_normal(n), rng.standard_normal((d, n)), j)
        for materialize in ("always", "never"):
            g = gram_bundle(X, j, KernelConfig(gamma), materialize=materialize)
            expected = naive_norm_sq(theta_j, X, j, gamma)
            assert rkhs_norm_sq(theta_j, g) == pytest.approx(expected, rel=1e-10)
            assert rkhs_norm_sq(theta_j, g) >= -1e-10


def test_predict_stacks_nodes(small_problem, rng):
    X, cfg, bundles = small_problem
    theta = random_params(*X.shape, rng)
    X_new = rng.standard_normal((4, X.shape[1]))
    values = predict(theta, X, X_new, cfg)
    assert values.shape == (4, X.shape[1])
    for j in range(X.shape[1]):
        np.testing.assert_allclose(values[:, j], eval_nodes_at(theta[j], X, X_new, cfg, j), atol=1e-14)


def test_node_params_zero_own_row(rng):
    params = NodeParams(rng.standard_normal(5), rng.standard_normal((3, 5)), node=1)
    np.testing.assert_array_equal(params.beta[1], 0.0)
    with pytest.raises(ShapeError):
        NodeParams(np.zeros(5), np.zeros((3, 4)))
    with pytest.raises(DataError):
        NodeParams(np.array([np.inf, 0.0]), np.zeros((2, 2)))


def test_vector_layout(rng):
    n, d = 4, 3
    theta = random_params(n, d, rng)
    vector = theta.to_vector()
    assert vector.shape == (ModelParams.size(n, d),)
    # alpha of node 0 first, then its beta row by row
    np.testing.assert_array_equal(vector[:n], theta[0].alpha)
    np.testing.assert_array_equal(vector[n:n + d * n], theta[0].beta.ravel())
    restored = ModelParams.from_vector(vector, n, d)
    for j in range(d):
        np.testing.assert_array_equal(restored[j].alpha, theta[j].alpha)
        np.testing.assert_array_equal(restored[j].beta, theta[j].beta)
    with pytest.raises(ShapeError):
        ModelParams.from_vector(vector[:-1], n, d)


def test_save_and_load(tmp_path, rng):
    X = rng.standard_normal((5, 2))
    theta = random_params(5, 2, rng)
    path = tmp_path / "model.npz"
    theta.save(path, X, KernelConfig(0.8), mean=np.array([1.0, 2.0]))
    loaded, X_loaded, cfg, extras = ModelParams.load(path)
    assert cfg.gamma == pytest.approx(0.8)
    np.testing.assert_array_equal(X_loaded, X)
    np.testing.assert_array_equal(extras["mean"], [1.0, 2.0])
    np.testing.assert_allclose(predict(loaded, X, X, cfg), predict(theta, X, X, cfg))
