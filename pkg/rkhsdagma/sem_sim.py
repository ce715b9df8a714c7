"""
Ground-truth DAGs and nonlinear SEM data: X_j = g_j(X_pa(j)) + eps_j, eps_j ~ N(0, 1).
"""
import logging
import typing
from dataclasses import dataclass, field, asdict
from warnings import warn

import numpy as np
import networkx as nx
from scipy import linalg

from .acyclicity import DirectedGraph
from .errors import ConfigError

logger = logging.getLogger(__name__)

MECHANISMS = ("gp", "gp-additive", "mlp", "combinatorial")

COMBINATORIAL_FUNCTIONS = {
    "exp_abs": lambda x: np.exp(-np.abs(x)),
    "square": lambda x: 0.05 * x ** 2,
    "sin": np.sin,
}

JITTER_START = 1e-8
JITTER_MAX = 1e-2


@dataclass(frozen=True)
class SemSpec:
    d: int
    m: float = 4
    mechanism: str = "gp-additive"
    n: int = 500
    seed: int = 0
    lengthscale: float = 1.0
    hidden: int = 100

    def __post_init__(self):
        if self.d < 2:
            raise ConfigError("d must be at least 2. Received: {}".format(self.d))
        if self.m < 1:
            raise ConfigError("m must be at least 1. Received: {}".format(self.m))
        if self.n < 1:
            raise ConfigError("n must be at least 1. Received: {}".format(self.n))
        if self.mechanism not in MECHANISMS:
            raise ConfigError("Unknown mechanism '{}'. Choose from {}.".format(self.mechanism, list(MECHANISMS)))

    def to_json(self):
        return asdict(self)


@dataclass
class SimulatedDataset:
    X: np.ndarray
    dag: DirectedGraph
    spec: SemSpec
    noise: np.ndarray = field(repr=False)
    details: dict = field(default_factory=dict, repr=False)


def er_dag(d, m, rng: np.random.Generator):
    """
     Erdos-Renyi DAG with m*d expected edges: a random permutation fixes the topological
     order and every order-respecting pair is an edge with probability m*d / (d(d-1)/2).
    """
    if d < 2:
        raise ConfigError("d must be at least 2. Received: {}".format(d))
    p = min(1.0, m * d / (d * (d - 1) / 2))
    order = rng.permutation(d)
    in_order = np.triu(rng.random((d, d)) < p, k=1)
    adjacency = np.zeros((d, d), dtype=bool)
    adjacency[np.ix_(order, order)] = in_order
    return DirectedGraph(adjacency)


def rbf_covariance(X, lengthscale=1.0):
    X = np.asarray(X, dtype=float)
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2)
    return np.exp(-sq / (2 * lengthscale ** 2))


def jitter_cholesky(K):
    """
     Lower Cholesky factor of K + jitter I, the jitter starting at 1e-8 times the mean diagonal
     and growing tenfold up to 1e-2 times it.
    """
    scale = float(np.mean(np.diag(K)))
    jitter = JITTER_START * scale
    while True:
        try:
            L = linalg.cholesky(K + jitter * np.eye(K.shape[0]), lower=True)
            if jitter > JITTER_START * scale:
                warn("GP covariance needed a jitter of {:g} to be factorized.".format(jitter))
            return L
        except linalg.LinAlgError:
            if jitter >= JITTER_MAX * scale:
                raise linalg.LinAlgError("The GP covariance could not be factorized even with a jitter of {:g}."
                                         .format(jitter))
            jitter *= 10


def sample_gp(parents, lengthscale, rng: np.random.Generator):
    parents = np.asarray(parents, dtype=float)
    if parents.ndim == 1:
        parents = parents[:, None]
    if parents.shape[1] < 1:
        raise ConfigError("sample_gp needs at least one parent column.")
    L = jitter_cholesky(rbf_covariance(parents, lengthscale))
    return L @ rng.standard_normal(parents.shape[0])


def sample_weights(shape, rng: np.random.Generator, low=0.5, high=2.0):
    """Uniform draws on (-high, -low) U (low, high)."""
    return rng.uniform(low, high, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _mechanism(spec: SemSpec, parents, rng):
    if spec.mechanism == "gp":
        return sample_gp(parents, spec.lengthscale, rng), {}
    if spec.mechanism == "gp-additive":
        return sum(sample_gp(parents[:, k], spec.lengthscale, rng) for k in range(parents.shape[1])), {}
    if spec.mechanism == "mlp":
        w_in = sample_weights((parents.shape[1], spec.hidden), rng)
        w_out = sample_weights(spec.hidden, rng)
        return _sigmoid(parents @ w_in) @ w_out, {"w_in": w_in, "w_out": w_out}
    names = list(COMBINATORIAL_FUNCTIONS)
    chosen = [names[i] for i in rng.integers(len(names), size=parents.shape[1])]
    value = sum(COMBINATORIAL_FUNCTIONS[name](parents[:, k]) for k, name in enumerate(chosen))
    return value, {"functions": chosen}


def simulate_sem(spec: SemSpec, dag: DirectedGraph = None, noise: typing.Optional[dict] = None):
    """
     Simulate a dataset. Every node draws its mechanism and its noise from its own
     generator spawned from spec.seed, so replacing the noise of one node (noise={j: eps})
     changes only that node and its descendants.
    """
    streams = np.random.SeedSequence(spec.seed).spawn(1 + 2 * spec.d)
    if dag is None:
        dag = er_dag(spec.d, spec.m, np.random.default_rng(streams[0]))
    elif dag.d != spec.d:
        raise ConfigError("The DAG has {} nodes but the spec asks for {}.".format(dag.d, spec.d))
    graph = dag.to_networkx()
    order = list(nx.topological_sort(graph))

    X = np.zeros((spec.n, spec.d))
    eps = np.zeros((spec.n, spec.d))
    details = {}
    for j in order:
        mechanism_rng = np.random.default_rng(streams[1 + j])
        noise_rng = np.random.default_rng(streams[1 + spec.d + j])
        eps[:, j] = noise_rng.standard_normal(spec.n)
        if noise is not None and j in noise:
            eps[:, j] = np.asarray(noise[j], dtype=float)
        parents = np.where(dag.adjacency[:, j])[0]
        if len(parents):
            value, info = _mechanism(spec, X[:, parents], mechanism_rng)
            details[j] = dict(info, parents=parents.tolist())
            X[:, j] = value
        X[:, j] += eps[:, j]

    logger.info("Simulated %s data: n=%d, d=%d, %d edges.", spec.mechanism, spec.n, spec.d, dag.n_edges)
    return SimulatedDataset(X=X, dag=dag, spec=spec, noise=eps, details=details)
