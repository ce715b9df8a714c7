"""
Penalized least-squares score of the representer model, the weighted adjacency matrix of
empirical partial-derivative norms, and the central-path objective

    mu * sum_j [ |X^j - f_j(X)|^2 / 2n + tau (2 Omega_j + lambda |f_j|_H^2) ] + h(W o W)

with its exact gradient.
"""
import logging
from dataclasses import dataclass, field
import typing

import numpy as np

from .acyclicity import h_on_W
from .errors import ConfigError, OutOfDomainError, ShapeError, NonFiniteError
from .kernel import GramBundle
from .representer import ModelParams, NodeParams, eval_node_on_data, node_partials_on_data, d1_contract
from .utils import parallel_map

logger = logging.getLogger(__name__)

SMOOTHING = 1e-12


@dataclass(frozen=True)
class ObjectiveConfig:
    tau: float = 1e-4
    lambda_: float = 1e-3
    s: float = 1.0
    square_w: bool = True
    smoothing: float = SMOOTHING

    def __post_init__(self):
        if self.tau < 0 or self.lambda_ < 0:
            raise ConfigError("tau and lambda must be nonnegative. Received tau={}, lambda={}."
                              .format(self.tau, self.lambda_))
        if not self.s > 0:
            raise ConfigError("s must be positive. Received: {}".format(self.s))
        if self.smoothing < 0:
            raise ConfigError("smoothing must be nonnegative. Received: {}".format(self.smoothing))


@dataclass
class ObjectiveReport:
    fit: float
    sparsity: float
    complexity: float
    h_value: float
    W: np.ndarray = field(repr=False)
    total: float
    in_domain: bool = True

    def to_json(self):
        return {"fit": self.fit, "sparsity": self.sparsity, "complexity": self.complexity,
                "h_value": self.h_value if self.in_domain else None, "total": self.total,
                "in_domain": self.in_domain, "W": self.W.tolist()}


class _NodeTerms:
    """Per-node quantities shared by the value and the gradient."""

    def __init__(self, theta_j, g: GramBundle, x_j):
        self.pred = eval_node_on_data(theta_j, g)
        self.residual = self.pred - x_j
        self.d2_beta = g.apply_d2(theta_j.beta)
        self.partials = -np.einsum("ilk,l->ik", g.D1, theta_j.alpha) + self.d2_beta
        self.fit = float(self.residual @ self.residual) / (2 * g.n)
        self.complexity = float(theta_j.alpha @ self.pred + np.sum(theta_j.beta.T * self.d2_beta)
                                + theta_j.alpha @ d1_contract(theta_j.beta, g))


def _check_inputs(theta: ModelParams, X, bundles: typing.Sequence[GramBundle]):
    X = np.asarray(X, dtype=float)
    if X.shape != (theta.n, theta.d) or len(bundles) != theta.d:
        raise ShapeError("Inconsistent shapes: theta (n={}, d={}), data {}, {} bundles."
                         .format(theta.n, theta.d, X.shape, len(bundles)))
    for j, g in enumerate(bundles):
        if g.node != j or g.n != theta.n or g.d != theta.d:
            raise ShapeError("Bundle {} does not match node {} with n={}, d={}.".format(g, j, theta.n, theta.d))
    return X


def _node_terms(theta, X, bundles, threads):
    return parallel_map(lambda j: _NodeTerms(theta[j], bundles[j], X[:, j]), range(theta.d), threads)


def _adjacency_from_partials(partials, smoothing=0.0):
    d = len(partials)
    W = np.zeros((d, d))
    for j, P in enumerate(partials):
        W[:, j] = np.sqrt(np.mean(P ** 2, axis=0) + smoothing)
        W[j, j] = 0.0
    return W


def weighted_adjacency(theta: ModelParams, bundles, threads=None):
    partials = parallel_map(lambda j: node_partials_on_data(theta[j], bundles[j]), range(theta.d), threads)
    return _adjacency_from_partials(partials)


def sparsity_penalty(W, j):
    W = np.asarray(W, dtype=float)
    if not 0 <= j < W.shape[1]:
        raise ShapeError("Node index {} out of range for a {}x{} matrix.".format(j, *W.shape))
    return float(W[:, j].sum())


def _report(terms, cfg: ObjectiveConfig):
    W = _adjacency_from_partials([t.partials for t in terms])
    fit = sum(t.fit for t in terms)
    sparsity = float(W.sum())
    complexity = sum(t.complexity for t in terms)
    try:
        h_value, grad_W = h_on_W(W, cfg.s, cfg.square_w)
        domain = True
    except OutOfDomainError:
        h_value, grad_W, domain = np.inf, None, False
    total = fit + cfg.tau * (2 * sparsity + cfg.lambda_ * complexity)
    for name, value in (("fit", fit), ("sparsity", sparsity), ("complexity", complexity), ("total", total)):
        if not np.isfinite(value):
            raise NonFiniteError(None, "{}={}".format(name, value))
    report = ObjectiveReport(fit=fit, sparsity=sparsity, complexity=complexity, h_value=float(h_value),
                             W=W, total=float(total), in_domain=domain)
    return report, grad_W


def score(theta: ModelParams, X, bundles, cfg: ObjectiveConfig, threads=None):
    X = _check_inputs(theta, X, bundles)
    return _report(_node_terms(theta, X, bundles, threads), cfg)[0]


def central_path_value_and_gradient(theta: ModelParams, X, bundles, cfg: ObjectiveConfig, mu, threads=None):
    """
     :return: (value, gradient, report); the gradient is a ModelParams with zero rows at the
              excluded coordinates. Raises OutOfDomainError when W o W leaves the domain.
    """
    X = _check_inputs(theta, X, bundles)
    n, d = X.shape
    terms = _node_terms(theta, X, bundles, threads)
    report, grad_W = _report(terms, cfg)
    if not report.in_domain:
        raise OutOfDomainError(msg="W o W is outside of the log-det domain (s={}).".format(cfg.s))
    value = mu * report.total + report.h_value

    W_smooth = _adjacency_from_partials([t.partials for t in terms], cfg.smoothing)
    weight = mu * 2 * cfg.tau + grad_W

    def node_gradient(j):
        g, t, theta_j = bundles[j], terms[j], theta[j]
        denominator = n * np.where(W_smooth[:, j] > 0, W_smooth[:, j], 1.0)
        R = t.partials * (weight[:, j] / denominator)
        R[:, j] = 0.0

        alpha = mu * (g.K @ t.residual / n + 2 * cfg.tau * cfg.lambda_ * t.pred) \
            - np.einsum("ik,ilk->l", R, g.D1)
        beta = mu * (np.einsum("i,ila->al", t.residual, g.D1) / n
                     + 2 * cfg.tau * cfg.lambda_ * (np.einsum("i,ila->al", theta_j.alpha, g.D1) + t.d2_beta.T)) \
            + g.apply_d2(np.ascontiguousarray(R.T)).T
        beta[j] = 0.0
        return alpha, beta

    grads = parallel_map(node_gradient, range(d), threads)
    gradient = ModelParams([NodeParams(a, b, j) for j, (a, b) in enumerate(grads)])
    return value, gradient, report


def central_path_value(theta: ModelParams, X, bundles, cfg: ObjectiveConfig, mu, threads=None):
    report = score(theta, X, bundles, cfg, threads)
    if not report.in_domain:
        raise OutOfDomainError(msg="W o W is outside of the log-det domain (s={}).".format(cfg.s))
    return mu * report.total + report.h_value


def central_path_gradient(theta: ModelParams, X, bundles, cfg: ObjectiveConfig, mu, threads=None):
    return central_path_value_and_gradient(theta, X, bundles, cfg, mu, threads)[1]
