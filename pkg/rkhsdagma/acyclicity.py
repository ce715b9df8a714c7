"""
Log-determinant acyclicity function h(A) = -log det(sI - A) + d log s on the domain
{A >= 0 : rho(A) < s}, its gradients, and exact DAG checks.

For a nonnegative A, sI - A is a Z-matrix and rho(A) < s holds exactly when it is a
nonsingular M-matrix, i.e. when the LU factorization without pivoting has positive pivots.
The same factorization gives the log-determinant and the inverse.
"""
import logging
import typing

import numpy as np
import networkx as nx
from scipy.linalg import solve_triangular

from .errors import ConfigError, OutOfDomainError, ShapeError, DataError

logger = logging.getLogger(__name__)

DAG_TOLERANCE = 1e-9


class DirectedGraph:
    """
     Boolean adjacency matrix; adjacency[k, j] is True for the edge k -> j. Nodes are
     0-based in memory, edge-list files are 1-based.
    """

    def __init__(self, adjacency):
        adjacency = np.asarray(adjacency)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ShapeError("The adjacency matrix must be square. Received shape {}.".format(adjacency.shape))
        adjacency = adjacency != 0
        if np.any(np.diag(adjacency)):
            raise DataError("Self-loops are not allowed (nodes {})."
                            .format((np.where(np.diag(adjacency))[0] + 1).tolist()))
        self.adjacency = adjacency

    @classmethod
    def empty(cls, d):
        return cls(np.zeros((d, d), dtype=bool))

    @classmethod
    def from_edges(cls, edges: typing.Iterable, d):
        adjacency = np.zeros((d, d), dtype=bool)
        for src, dst in edges:
            if not (0 <= src < d and 0 <= dst < d):
                raise ShapeError("Edge ({}, {}) refers to a node outside [0, {}).".format(src, dst, d))
            adjacency[src, dst] = True
        return cls(adjacency)

    @property
    def d(self):
        return self.adjacency.shape[0]

    @property
    def n_edges(self):
        return int(self.adjacency.sum())

    def edges(self):
        return [(int(k), int(j)) for k, j in zip(*np.nonzero(self.adjacency))]

    def to_networkx(self):
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.d))
        graph.add_edges_from(self.edges())
        return graph

    def __eq__(self, other):
        return isinstance(other, DirectedGraph) and np.array_equal(self.adjacency, other.adjacency)

    def __repr__(self):
        return "DirectedGraph(d={}, edges={})".format(self.d, [(k + 1, j + 1) for k, j in self.edges()])


def is_dag(graph: DirectedGraph):
    return nx.is_directed_acyclic_graph(graph.to_networkx())


def _check_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError("Expected a square matrix. Received shape {}.".format(A.shape))
    return A


class LdetFactorization:
    """LU factorization of sI - A without pivoting, computed once per evaluation."""

    def __init__(self, A, s):
        A = _check_square(A)
        if s <= 0:
            raise ConfigError("s must be positive. Received: {}".format(s))
        d = A.shape[0]
        self.s = float(s)
        self.d = d
        U = self.s * np.eye(d) - A
        L = np.eye(d)
        for k in range(d):
            pivot = U[k, k]
            if not pivot > 0:
                raise OutOfDomainError(k, pivot)
            L[k + 1:, k] = U[k + 1:, k] / pivot
            U[k + 1:, k:] -= np.outer(L[k + 1:, k], U[k, k:])
            U[k + 1:, k] = 0.0
        self.L = L
        self.U = U

    @property
    def pivots(self):
        return np.diag(self.U)

    def h(self):
        return float(-np.sum(np.log(self.pivots)) + self.d * np.log(self.s))

    def inverse(self):
        Y = solve_triangular(self.L, np.eye(self.d), lower=True, unit_diagonal=True)
        return solve_triangular(self.U, Y, lower=False)


def in_domain(A, s):
    try:
        LdetFactorization(A, s)
    except OutOfDomainError:
        return False
    return True


def h_ldet(A, s=1.0):
    return LdetFactorization(A, s).h()


def grad_h_ldet(A, s=1.0):
    return LdetFactorization(A, s).inverse().T


def h_and_grad_ldet(A, s=1.0):
    factorization = LdetFactorization(A, s)
    return factorization.h(), factorization.inverse().T


def h_on_W(W, s=1.0, square=True):
    """
     h evaluated on W o W (square=True) or on W itself, with the gradient with respect to W.
    """
    W = _check_square(W)
    if square:
        value, grad = h_and_grad_ldet(W * W, s)
        return value, 2 * grad * W
    return h_and_grad_ldet(W, s)


def grad_h_ldet_wrt_W(W, s=1.0):
    return h_on_W(W, s, square=True)[1]
