"""
Restricted Gaussian kernels k^{-j}(x, y) = exp(-|x - y|^2_{-j} / gamma^2) and their exact
partial derivatives, gathered per node into GramBundle objects.

Indices are 0-based throughout the library: node j excludes column X[:, j].
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .utils import check_finite_matrix, parallel_map

logger = logging.getLogger(__name__)

MATERIALIZE_LIMIT = 2e8


@dataclass(frozen=True)
class KernelConfig:
    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise ConfigError("gamma must be a positive real. Received: {}".format(self.gamma))

    @classmethod
    def default(cls, d):
        return cls(gamma=0.4 * d)

    @property
    def c(self):
        return 1.0 / self.gamma ** 2

    def to_json(self):
        return {"gamma": self.gamma}


def difference_tensor(X):
    """Delta[i, l, a] = X[i, a] - X[l, a]."""
    X = check_finite_matrix(X)
    return X[:, None, :] - X[None, :, :]


def squared_distance_matrix(X, delta=None):
    if delta is None:
        delta = difference_tensor(X)
    return np.einsum("ila,ila->il", delta, delta)


def kernel_value(x, y, j, cfg: KernelConfig):
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    mask = np.ones(diff.shape[-1])
    mask[j] = 0.0
    return float(np.exp(-cfg.c * np.sum(mask * diff ** 2)))


def _check_node(j, d):
    if not isinstance(j, (int, np.integer)) or not 0 <= j < d:
        raise ShapeError("Node index must be an integer in [0, {}). Received: {}".format(d, j))


def should_materialize(n, d, n_bundles=1, materialize="auto", limit=MATERIALIZE_LIMIT):
    if materialize == "auto":
        return n_bundles * (n * d) ** 2 <= limit
    if materialize in ("always", True):
        return True
    if materialize in ("never", False):
        return False
    raise ConfigError("materialize must be 'auto', 'always' or 'never'. Received: {}".format(materialize))


class GramBundle:
    """
     Per-node cache of the restricted kernel and its derivatives on the sample.

       K[i, l]        = k(x^i, x^l)
       D1[i, l, a]    = dk(x^i, s)/ds_a at s = x^l
       D2[i, l, k, a] = d^2 k(x^i, x^l) / dx^i_k dx^l_a

     D2 is stored only when materialized; apply_d2 contracts it against a d x n coefficient
     matrix either from the stored tensor or from its closed form. Arrays are read-only.
    """

    def __init__(self, node, K, D1, delta, cfg: KernelConfig, materialized=True):
        self.node = node
        self.cfg = cfg
        self.K = K
        self.D1 = D1
        self.delta = delta
        self.mask = np.ones(delta.shape[2])
        self.mask[node] = 0.0
        self._D2 = self._build_d2() if materialized else None
        for array in (self.K, self.D1, self.delta, self.mask, self._D2):
            if array is not None:
                array.setflags(write=False)

    @property
    def n(self):
        return self.K.shape[0]

    @property
    def d(self):
        return self.delta.shape[2]

    @property
    def materialized(self):
        return self._D2 is not None

    def _build_d2(self):
        c = self.cfg.c
        outer = self.delta[:, :, :, None] * self.delta[:, :, None, :]
        return self.K[:, :, None, None] * (2 * c * np.diag(self.mask)[None, None] - 4 * c ** 2 * outer)

    @property
    def D2(self):
        if self._D2 is not None:
            return self._D2
        logger.debug("Building the D2 tensor of node %d on request.", self.node)
        return self._build_d2()

    def d2_slice(self, k):
        """D2[:, :, k, :] without building the full tensor."""
        if self._D2 is not None:
            return self._D2[:, :, k, :]
        c = self.cfg.c
        out = -4 * c ** 2 * self.K[:, :, None] * self.delta[:, :, k, None] * self.delta
        if self.mask[k]:
            out[:, :, k] += 2 * c * self.K
        return out

    def apply_d2(self, B):
        """out[i, k] = sum_{l, a} D2[i, l, k, a] B[a, l], for a d x n matrix B."""
        if B.shape != (self.d, self.n):
            raise ShapeError("Expected a ({}, {}) matrix. Received shape {}.".format(self.d, self.n, B.shape))
        if self._D2 is not None:
            return np.einsum("ilka,al->ik", self._D2, B)
        c = self.cfg.c
        u = np.einsum("ila,al->il", self.delta, B)
        return 2 * c * (self.K @ B.T) * self.mask - 4 * c ** 2 * np.einsum("il,ilk->ik", self.K * u, self.delta)

    def __repr__(self):
        return "GramBundle(node={}, n={}, d={}, materialized={})".format(self.node, self.n, self.d,
                                                                       self.materialized)


def gram_bundle(X, j, cfg: KernelConfig, materialize="auto", materialize_limit=MATERIALIZE_LIMIT,
                delta=None, sq_dist=None):
    """
     Build the GramBundle of node j. delta and sq_dist can be passed to share the O(n^2 d)
     precomputation between nodes; the restricted distance is obtained by subtracting the
     squared difference along coordinate j.
    """
    if not isinstance(cfg, KernelConfig):
        raise TypeError("cfg must be of type KernelConfig. Received type: {}".format(type(cfg)))
    X = check_finite_matrix(X)
    n, d = X.shape
    if n < 1:
        raise ShapeError("At least one sample is required.")
    _check_node(j, d)

    if delta is None:
        delta = difference_tensor(X)
    if sq_dist is None:
        sq_dist = squared_distance_matrix(X, delta)

    restricted = np.maximum(sq_dist - delta[:, :, j] ** 2, 0.0)
    K = np.exp(-cfg.c * restricted)
    node_delta = delta.copy()
    node_delta[:, :, j] = 0.0
    D1 = 2 * cfg.c * node_delta * K[:, :, None]

    materialized = should_materialize(n, d, 1, materialize, materialize_limit)
    return GramBundle(j, K, D1, node_delta, cfg, materialized=materialized)


def build_bundles(X, cfg: KernelConfig, materialize="auto", materialize_limit=MATERIALIZE_LIMIT, threads=None):
    """
     One GramBundle per node. In "auto" mode the memory limit applies to the D2 tensors of
     all d bundles together.
    """
    X = check_finite_matrix(X)
    n, d = X.shape
    delta = difference_tensor(X)
    sq_dist = squared_distance_matrix(X, delta)
    materialized = should_materialize(n, d, d, materialize, materialize_limit)
    logger.info("Building %d Gram bundles (n=%d, gamma=%g, D2 %s).", d, n, cfg.gamma,
                "materialized" if materialized else "on the fly")

    def build(j):
        return gram_bundle(X, j, cfg, materialize=materialized, delta=delta, sq_dist=sq_dist)

    return parallel_map(build, range(d), threads)
