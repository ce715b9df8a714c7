"""
Representer-form node functions

    f_j(x) = sum_i alpha_i k^{-j}(x, x^i) + sum_{i, a} beta_{ai} dk^{-j}(x, s)/ds_a |_{s = x^i}

evaluated on the sample, out of sample, differentiated, and measured in the RKHS norm.
"""
from pathlib import Path
import typing

import numpy as np

from .errors import ShapeError, DataError
from .kernel import GramBundle, KernelConfig


class NodeParams:
    """
     Coefficients of one node function. Row `node` of beta multiplies features that vanish
     under the restricted kernel and is kept at zero.
    """

    def __init__(self, alpha, beta, node=None):
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if alpha.ndim != 1 or beta.ndim != 2 or beta.shape[1] != alpha.shape[0]:
            raise ShapeError("alpha must have shape (n,) and beta shape (d, n). Received {} and {}."
                             .format(alpha.shape, beta.shape))
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise DataError("NodeParams must have finite entries.")
        if node is not None:
            beta = beta.copy()
            beta[node] = 0.0
        self.alpha = alpha
        self.beta = beta
        self.node = node

    @classmethod
    def zeros(cls, n, d, node=None):
        return cls(np.zeros(n), np.zeros((d, n)), node)

    @property
    def n(self):
        return self.alpha.shape[0]

    @property
    def d(self):
        return self.beta.shape[0]

    def __add__(self, other):
        return NodeParams(self.alpha + other.alpha, self.beta + other.beta, self.node)

    def __mul__(self, scalar):
        return NodeParams(scalar * self.alpha, scalar * self.beta, self.node)

    __rmul__ = __mul__

    def __repr__(self):
        return "NodeParams(node={}, n={}, d={})".format(self.node, self.n, self.d)


class ModelParams:
    def __init__(self, nodes: typing.List[NodeParams]):
        nodes = list(nodes)
        if not nodes:
            raise ShapeError("ModelParams needs at least one node.")
        d = len(nodes)
        for node in nodes:
            if node.d != d or node.n != nodes[0].n:
                raise ShapeError("ModelParams must hold exactly d NodeParams of shape (n,), (d, n).")
        self.nodes = nodes

    @classmethod
    def zeros(cls, n, d):
        return cls([NodeParams.zeros(n, d, j) for j in range(d)])

    @property
    def n(self):
        return self.nodes[0].n

    @property
    def d(self):
        return len(self.nodes)

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, j):
        return self.nodes[j]

    def __iter__(self):
        return iter(self.nodes)

    @staticmethod
    def size(n, d):
        return d * n * (d + 1)

    def to_vector(self):
        return np.concatenate([np.concatenate([p.alpha, p.beta.ravel()]) for p in self.nodes])

    @classmethod
    def from_vector(cls, vector, n, d):
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (cls.size(n, d),):
            raise ShapeError("Expected a vector of length {}. Received shape {}.".format(cls.size(n, d),
                                                                                      vector.shape))
        block = n * (d + 1)
        nodes = []
        for j in range(d):
            chunk = vector[j * block:(j + 1) * block]
            nodes.append(NodeParams(chunk[:n], chunk[n:].reshape(d, n), j))
        return cls(nodes)

    def save(self, file_name, X, cfg: KernelConfig, **extra):
        """Store the coefficients with the (standardized) sample they are expanded on."""
        file_name = Path(file_name)
        np.savez(file_name, X=np.asarray(X, dtype=float), gamma=cfg.gamma,
                 alpha=np.stack([p.alpha for p in self.nodes]),
                 beta=np.stack([p.beta for p in self.nodes]), **extra)

    @classmethod
    def load(cls, file_name):
        """:return: (ModelParams, X, KernelConfig, dict of the extra arrays)"""
        with np.load(Path(file_name)) as archive:
            content = {key: archive[key] for key in archive.files}
        alpha, beta = content.pop("alpha"), content.pop("beta")
        X = content.pop("X")
        cfg = KernelConfig(float(content.pop("gamma")))
        params = cls([NodeParams(alpha[j], beta[j], j) for j in range(alpha.shape[0])])
        return params, X, cfg, content


def _check_shapes(theta_j: NodeParams, g: GramBundle):
    if theta_j.n != g.n or theta_j.d != g.d:
        raise ShapeError("NodeParams of shape (n={}, d={}) do not match a GramBundle with n={}, d={}."
                         .format(theta_j.n, theta_j.d, g.n, g.d))


def d1_contract(beta, g: GramBundle):
    """sum_{l, a} D1[i, l, a] beta[a, l]"""
    return np.einsum("ila,al->i", g.D1, beta)


def eval_node_on_data(theta_j: NodeParams, g: GramBundle):
    _check_shapes(theta_j, g)
    return g.K @ theta_j.alpha + d1_contract(theta_j.beta, g)


def eval_node_at(theta_j: NodeParams, X, x_new, cfg: KernelConfig, j):
    X = np.asarray(X, dtype=float)
    x_new = np.asarray(x_new, dtype=float)
    if X.shape != (theta_j.n, theta_j.d) or x_new.shape != (theta_j.d,):
        raise ShapeError("x_new must have shape ({},) and X shape {}.".format(theta_j.d, (theta_j.n, theta_j.d)))
    if not np.all(np.isfinite(x_new)):
        raise DataError("x_new must be finite.")
    return float(eval_nodes_at(theta_j, X, x_new[None, :], cfg, j)[0])


def eval_nodes_at(theta_j: NodeParams, X, X_new, cfg: KernelConfig, j):
    """Vectorized out-of-sample evaluation of f_j on the rows of X_new."""
    mask = np.ones(X.shape[1])
    mask[j] = 0.0
    diff = (X_new[:, None, :] - X[None, :, :]) * mask
    k = np.exp(-cfg.c * np.sum(diff ** 2, axis=2))
    d1 = 2 * cfg.c * diff * k[:, :, None]
    return k @ theta_j.alpha + np.einsum("mia,ai->m", d1, theta_j.beta)


def predict(theta: ModelParams, X, X_new, cfg: KernelConfig):
    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    return np.stack([eval_nodes_at(p, X, X_new, cfg, j) for j, p in enumerate(theta)], axis=1)


def node_partials_on_data(theta_j: NodeParams, g: GramBundle):
    """
     P[i, k] = df_j(x^i)/dx_k. The alpha part uses dk(x^i, x^l)/dx^i_k = -D1[i, l, k].
    """
    _check_shapes(theta_j, g)
    return -np.einsum("ilk,l->ik", g.D1, theta_j.alpha) + g.apply_d2(theta_j.beta)


def rkhs_norm_sq(theta_j: NodeParams, g: GramBundle):
    _check_shapes(theta_j, g)
    alpha, beta = theta_j.alpha, theta_j.beta
    return float(alpha @ (g.K @ alpha)
                 + 2 * alpha @ d1_contract(beta, g)
                 + np.sum(beta.T * g.apply_d2(beta)))
