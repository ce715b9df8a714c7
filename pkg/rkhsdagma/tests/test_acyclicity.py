import itertools

import numpy as np
import pytest

from rkhsdagma.acyclicity import (DirectedGraph, is_dag, in_domain, h_ldet, grad_h_ldet, h_on_W, grad_h_ldet_wrt_W,
                                  LdetFactorization, DAG_TOLERANCE)
from rkhsdagma.errors import DataError, OutOfDomainError, ShapeError

from . import finite_difference, rng


def has_cycle(adjacency):
    """Oracle: a cycle exists iff some power of the adjacency matrix has a nonzero trace."""
    d = adjacency.shape[0]
    power = np.eye(d)
    for _ in range(d):
        power = power @ adjacency
        if np.trace(power) > 0:
            return True
    return False


def all_3x3_supports():
    slots = [(k, j) for k in range(3) for j in range(3) if k != j]
    for bits in itertools.product([0, 1], repeat=len(slots)):
        support = np.zeros((3, 3))
        for (k, j), bit in zip(slots, bits):
            support[k, j] = bit
        yield support


def test_zero_exactly_on_dags_3x3():
    supports = list(all_3x3_supports())
    assert len(supports) == 64
    for support in supports:
        A = 0.3 * support
        dag = is_dag(DirectedGraph(support))
        assert dag == (not has_cycle(support))
        assert in_domain(A, 1.0)
        value = h_ldet(A)
        if dag:
            assert abs(value) <= DAG_TOLERANCE
        else:
            assert value > DAG_TOLERANCE
        grad = grad_h_ldet(A)
        assert np.all(np.isfinite(grad)) and np.all(grad >= -1e-15)
        grad_W = grad_h_ldet_wrt_W(np.sqrt(A))
        if dag:
            np.testing.assert_allclose(grad_W, 0.0, atol=1e-12)
        else:
            assert np.max(np.abs(grad_W)) > 1e-3


def test_zero_exactly_on_dags_4x4(rng):
    for _ in range(500):
        support = (rng.random((4, 4)) < 0.4).astype(float)
        np.fill_diagonal(support, 0.0)
        A = support * rng.uniform(0.05, 0.3, (4, 4))
        dag = is_dag(DirectedGraph(support))
        assert dag == (not has_cycle(support))
        value = h_ldet(A)
        assert value >= -DAG_TOLERANCE
        assert (abs(value) <= DAG_TOLERANCE) == dag
        grad = grad_h_ldet(A)
        assert np.all(np.isfinite(grad)) and np.all(grad >= -1e-15)


def test_v_stability(rng):
    for _ in range(50):
        A = rng.uniform(0, 1, (4, 4))
        assert np.trace(A) > 0
        for eps in (1e-4, 1e-3, 1e-2):
            assert h_ldet(eps * A) >= eps * np.trace(A) / 2


def test_scale_identity(rng):
    A = rng.uniform(0, 0.05, (5, 5))
    assert np.max(np.abs(np.linalg.eigvals(A))) < 0.5
    for s in (0.5, 2.0, 3.0):
        assert h_ldet(A, s) == pytest.approx(h_ldet(A / s, 1.0), rel=1e-10, abs=1e-14)


def test_matches_slogdet(rng):
    A = rng.uniform(0, 0.2, (6, 6))
    sign, logdet = np.linalg.slogdet(np.eye(6) - A)
    assert sign > 0
    assert h_ldet(A) == pytest.approx(-logdet, rel=1e-12)
    np.testing.assert_allclose(grad_h_ldet(A), np.linalg.inv(np.eye(6) - A).T, rtol=1e-10)


def test_gradient_matches_finite_differences(rng):
    A = rng.uniform(0, 0.2, (4, 4))
    fd = finite_difference(lambda a: h_ldet(a.reshape(4, 4)), A.ravel()).reshape(4, 4)
    np.testing.assert_allclose(grad_h_ldet(A), fd, rtol=1e-6, atol=1e-9)

    W = rng.uniform(0, 0.2, (4, 4))
    for square in (True, False):
        value, grad = h_on_W(W, 1.0, square=square)
        fd = finite_difference(lambda w: h_on_W(w.reshape(4, 4), 1.0, square=square)[0], W.ravel()).reshape(4, 4)
        np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-9)


def test_out_of_domain():
    A = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert not in_domain(A, 1.0)
    with pytest.raises(OutOfDomainError) as info:
        h_ldet(A)
    assert info.value.pivot_index == 1
    assert in_domain(A, 2.5)
    with pytest.raises(OutOfDomainError):
        h_ldet(np.array([[1.5]]), 1.0)


def test_in_domain_matches_spectral_radius(rng):
    for _ in range(300):
        d = rng.integers(2, 7)
        A = rng.uniform(0, 1, (d, d)) * (rng.random((d, d)) < 0.6) * rng.uniform(0.1, 1.5)
        s = rng.uniform(0.2, 3.0)
        radius = np.max(np.abs(np.linalg.eigvals(A)))
        if abs(radius - s) < 1e-8:
            continue
        assert in_domain(A, s) == (radius < s)


def test_diagonal_entries():
    A = np.diag([0.5, 0.0])
    assert h_ldet(A) == pytest.approx(np.log(2.0))


def test_factorization_inverse(rng):
    A = rng.uniform(0, 0.1, (5, 5))
    factorization = LdetFactorization(A, 1.0)
    np.testing.assert_allclose(factorization.inverse() @ (np.eye(5) - A), np.eye(5), atol=1e-12)
    assert np.all(factorization.pivots > 0)


def test_directed_graph():
    graph = DirectedGraph.from_edges([(0, 1), (1, 2)], 3)
    assert graph.n_edges == 2 and graph.d == 3
    assert graph.edges() == [(0, 1), (1, 2)]
    assert is_dag(graph)
    assert not is_dag(DirectedGraph.from_edges([(0, 1), (1, 2), (2, 0)], 3))
    assert DirectedGraph.empty(3) == DirectedGraph(np.zeros((3, 3)))
    assert repr(graph) == "DirectedGraph(d=3, edges=[(1, 2), (2, 3)])"
    with pytest.raises(DataError):
        DirectedGraph(np.eye(2))
    with pytest.raises(ShapeError):
        DirectedGraph.from_edges([(0, 3)], 3)
    with pytest.raises(ShapeError):
        h_ldet(np.zeros((2, 3)))
