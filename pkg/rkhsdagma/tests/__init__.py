import itertools
from collections import deque

import numpy as np
import pytest

from rkhsdagma.kernel import KernelConfig, build_bundles
from rkhsdagma.metrics import PairDataset, A_TO_B
from rkhsdagma.representer import ModelParams, NodeParams
from rkhsdagma.sem_sim import COMBINATORIAL_FUNCTIONS


def restricted_kernel(x, y, j, gamma):
    total = sum((x[a] - y[a]) ** 2 for a in range(len(x)) if a != j)
    return np.exp(-total / gamma ** 2)


def finite_difference(fun, x, eps=1e-6, five_point=False):
    """Central differences of a scalar function of a flat array (fourth order with five_point)."""
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    for index in range(x.size):
        step = np.zeros_like(x)
        step[index] = eps
        if five_point:
            grad[index] = (8 * (fun(x + step) - fun(x - step)) - fun(x + 2 * step) + fun(x - 2 * step)) / (12 * eps)
        else:
            grad[index] = (fun(x + step) - fun(x - step)) / (2 * eps)
    return grad


def random_params(n, d, rng, scale=0.3):
    return ModelParams([NodeParams(scale * rng.standard_normal(n), scale * rng.standard_normal((d, n)), j)
                        for j in range(d)])


def naive_norm_sq(theta_j: NodeParams, X, j, gamma):
    """alpha' K alpha + 2 alpha' D1 beta + beta' D2 beta by explicit loops over the kernel derivatives."""
    n, d = X.shape
    c = 1.0 / gamma ** 2

    def k(i, l):
        return restricted_kernel(X[i], X[l], j, gamma)

    def d1(i, l, a):
        return 0.0 if a == j else 2 * c * (X[i, a] - X[l, a]) * k(i, l)

    def d2(i, l, b, a):
        if a == j or b == j:
            return 0.0
        return k(i, l) * (2 * c * (a == b) - 4 * c ** 2 * (X[i, b] - X[l, b]) * (X[i, a] - X[l, a]))

    alpha, beta = theta_j.alpha, theta_j.beta
    value = 0.0
    for i in range(n):
        for l in range(n):
            value += alpha[i] * alpha[l] * k(i, l)
            for a in range(d):
                value += 2 * alpha[i] * beta[a, l] * d1(i, l, a)
                for b in range(d):
                    value += beta[b, i] * beta[a, l] * d2(i, l, b, a)
    return value


PAIR_STATES = [(0, 0), (1, 0), (0, 1), (1, 1)]


def _pair_neighbours(state):
    forward, backward = state
    # additions and deletions
    yield (1 - forward, backward)
    yield (forward, 1 - backward)
    # reversal of a single edge
    if forward != backward:
        yield (backward, forward)


def pair_edit_distance(start, goal):
    distances = {start: 0}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == goal:
            return distances[state]
        for neighbour in _pair_neighbours(state):
            if neighbour not in distances:
                distances[neighbour] = distances[state] + 1
                queue.append(neighbour)
    raise RuntimeError("unreachable state")


def brute_force_shd(estimated, truth):
    """Minimal number of additions, deletions and reversals, one unordered node pair at a time."""
    E, T = estimated.adjacency, truth.adjacency
    return sum(pair_edit_distance((int(E[k, j]), int(E[j, k])), (int(T[k, j]), int(T[j, k])))
               for k, j in itertools.combinations(range(truth.d), 2))


def graph_edit_distance(estimated, truth):
    """Breadth-first search over whole graphs (small d only)."""
    d = truth.d
    slots = [(k, j) for k in range(d) for j in range(d) if k != j]

    def encode(adjacency):
        return tuple(int(adjacency[k, j]) for k, j in slots)

    start, goal = encode(estimated.adjacency), encode(truth.adjacency)
    index = {slot: i for i, slot in enumerate(slots)}
    distances = {start: 0}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == goal:
            return distances[state]
        for i, (k, j) in enumerate(slots):
            flipped = list(state)
            flipped[i] = 1 - flipped[i]
            candidates = [tuple(flipped)]
            opposite = index[j, k]
            if state[i] and not state[opposite]:
                reversed_ = list(state)
                reversed_[i], reversed_[opposite] = 0, 1
                candidates.append(tuple(reversed_))
            for candidate in candidates:
                if candidate not in distances:
                    distances[candidate] = distances[state] + 1
                    queue.append(candidate)
    raise RuntimeError("unreachable state")


def quadratic_toy(seed, n=100):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 10, n)
    return np.column_stack([x, x ** 2 + rng.standard_normal(n)])


def sine_toy(seed, n=100):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3, 3, n)
    return np.column_stack([x, 10 * np.sin(x) + rng.standard_normal(n)])


def combinatorial_pairs(seed, n_pairs=20, n=100, noise=0.1):
    """
     Cause-effect pairs whose effect is one of the combinatorial mechanisms of the cause,
     every other pair stored effect first. Weights are drawn in [0.5, 1.5].
    """
    rng = np.random.default_rng(seed)
    names = list(COMBINATORIAL_FUNCTIONS)
    pairs = []
    for index in range(n_pairs):
        x = rng.uniform(-3, 3, n)
        y = COMBINATORIAL_FUNCTIONS[names[index % len(names)]](x) + noise * rng.standard_normal(n)
        pair = PairDataset(x, y, A_TO_B, weight=rng.uniform(0.5, 1.5), name="pair{:02d}".format(index))
        pairs.append(pair.swapped() if index % 2 else pair)
    return pairs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=["materialized", "lazy"])
def small_problem(request):
    """n=10, d=3 random data with its Gram bundles, in both D2 modes."""
    rng = np.random.default_rng(7)
    X = rng.standard_normal((10, 3))
    cfg = KernelConfig.default(3)
    materialize = "always" if request.param == "materialized" else "never"
    return X, cfg, build_bundles(X, cfg, materialize=materialize, threads=1)


@pytest.fixture
def isolated_config(monkeypatch, tmp_path):
    """Point the user configuration at an empty home directory."""
    monkeypatch.setenv("HOME", str(tmp_path / "home"))
    (tmp_path / "home").mkdir()
    return tmp_path
