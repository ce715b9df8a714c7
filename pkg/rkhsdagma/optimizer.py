"""
ADAM and the central-path outer loop: starting from theta = 0, each round minimizes
mu_t * score + h(W o W) with warm starts and mu_{t+1} = decay * mu_t, then W is
thresholded at omega.
"""
import logging
import typing
from dataclasses import dataclass, field, asdict
from warnings import warn

import numpy as np

from .acyclicity import DirectedGraph, is_dag
from .errors import ConfigError, NonFiniteError, OptimizationError, OutOfDomainError, ShapeError
from .kernel import KernelConfig, build_bundles, MATERIALIZE_LIMIT
from .objective import ObjectiveConfig, ObjectiveReport, central_path_value_and_gradient, score
from .representer import ModelParams
from .utils import check_finite_matrix, standardize

logger = logging.getLogger(__name__)


@dataclass
class AdamSettings:
    lr: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iter: int = 3000
    tol: float = 1e-7
    max_halvings: int = 30
    log_every: int = 500

    def __post_init__(self):
        if not self.lr > 0 or not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1 or not self.eps > 0:
            raise ConfigError("Invalid ADAM settings: {}".format(asdict(self)))
        if self.max_iter < 0 or self.max_halvings < 0:
            raise ConfigError("max_iter and max_halvings must be nonnegative.")


@dataclass
class DagmaConfig:
    mu0: float = 1.0
    decay: float = 0.1
    tau: float = 1e-4
    lambda_: float = 1e-3
    s: typing.Union[float, typing.List[float]] = 1.0
    T: int = 6
    omega: float = 0.1
    gamma: typing.Optional[float] = None
    adam: AdamSettings = field(default_factory=AdamSettings)
    escalation_rounds: int = 1
    final_round_iters: typing.Optional[int] = None
    standardize: bool = False
    square_w: bool = True
    materialize: str = "auto"
    materialize_limit: float = MATERIALIZE_LIMIT

    def __post_init__(self):
        if isinstance(self.adam, dict):
            self.adam = AdamSettings(**self.adam)
        if not self.mu0 > 0:
            raise ConfigError("mu0 must be positive. Received: {}".format(self.mu0))
        if not 0 < self.decay < 1:
            raise ConfigError("decay must lie in (0, 1). Received: {}".format(self.decay))
        if self.tau < 0 or self.lambda_ < 0:
            raise ConfigError("tau and lambda must be nonnegative.")
        s_values = self.s if isinstance(self.s, (list, tuple)) else [self.s]
        if not s_values or any(not s > 0 for s in s_values):
            raise ConfigError("s must be positive (or a non-empty list of positive values). Received: {}"
                              .format(self.s))
        if self.T < 1:
            raise ConfigError("T must be at least 1. Received: {}".format(self.T))
        if self.omega < 0:
            raise ConfigError("omega must be nonnegative. Received: {}".format(self.omega))
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("gamma must be positive. Received: {}".format(self.gamma))
        if self.escalation_rounds < 0:
            raise ConfigError("escalation_rounds must be nonnegative.")

    @classmethod
    def from_config(cls, config: dict):
        """Build from the 'dagma' and 'kernel' sections of a configuration mapping."""
        values = dict(config.get("dagma", {}) or {})
        if "lambda" in values:
            values["lambda_"] = values.pop("lambda")
        kernel = config.get("kernel", {}) or {}
        for key in ("gamma", "materialize", "materialize_limit"):
            if kernel.get(key) is not None:
                values[key] = kernel[key]
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError("Invalid 'dagma' configuration section: {}".format(e))

    def to_json(self):
        json_ = asdict(self)
        json_["lambda"] = json_.pop("lambda_")
        return json_

    def kernel_config(self, d):
        return KernelConfig(self.gamma) if self.gamma is not None else KernelConfig.default(d)

    def s_at(self, t):
        if isinstance(self.s, (list, tuple)):
            return float(self.s[min(t, len(self.s) - 1)])
        return float(self.s)

    def mu_at(self, t):
        return self.mu0 * self.decay ** t

    def objective_config(self, t):
        return ObjectiveConfig(tau=self.tau, lambda_=self.lambda_, s=self.s_at(t), square_w=self.square_w)


class Adam:
    """Plain ADAM on a flat parameter vector."""

    def __init__(self, lr=3e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.reset()

    def reset(self):
        self.m = None
        self.v = None
        self.t = 0

    def step(self, x, grad):
        if self.m is None:
            self.m = np.zeros_like(x)
            self.v = np.zeros_like(x)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return x - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class AdamMinimizer:
    """
     Runs ADAM on fun(x) -> (value, gradient). A step that lands outside of the log-det
     domain (fun raises OutOfDomainError) is rejected: the iterate stays at the last accepted
     point, the moment estimates are cleared and the learning rate is halved. The run is
     abandoned after more than max_halvings consecutive rejections.
    """

    def __init__(self, settings: AdamSettings = None):
        self.settings = AdamSettings() if settings is None else settings
        self.n_iter = 0
        self.n_rejected = 0
        self.lr = self.settings.lr
        self.value = None

    def minimize(self, fun, x0, max_iter=None, admissible=None):
        """
        :param admissible: Optional predicate evaluated right after each accepted step. When
                           given, the lowest-objective accepted iterate satisfying it is
                           returned instead of the last iterate; x0 always qualifies.
        """
        settings = self.settings
        max_iter = settings.max_iter if max_iter is None else max_iter
        adam = Adam(settings.lr, settings.beta1, settings.beta2, settings.eps)

        x = np.array(x0, dtype=float)
        value, grad = fun(x)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise NonFiniteError(0, value)
        best_x, best_value = x, value
        consecutive = 0

        for iteration in range(1, max_iter + 1):
            if np.max(np.abs(grad), initial=0.0) < settings.tol:
                logger.debug("ADAM stopped at iteration %d: gradient below %g.", iteration - 1, settings.tol)
                break
            x_new = adam.step(x, grad)
            self.n_iter = iteration
            try:
                value_new, grad_new = fun(x_new)
            except OutOfDomainError:
                adam.reset()
                adam.lr /= 2
                self.n_rejected += 1
                consecutive += 1
                logger.debug("Step %d left the domain; learning rate halved to %g.", iteration, adam.lr)
                if consecutive > settings.max_halvings:
                    raise OptimizationError("The iterates left the log-det domain {} times in a row; giving up at "
                                            "iteration {} (learning rate {}).".format(consecutive, iteration,
                                                                                     adam.lr))
                continue
            if not np.isfinite(value_new) or not np.all(np.isfinite(grad_new)):
                raise NonFiniteError(iteration, value_new)
            consecutive = 0
            x, value, grad = x_new, value_new, grad_new
            if admissible is not None and value < best_value and admissible(x):
                best_x, best_value = x, value
            if settings.log_every and iteration % settings.log_every == 0:
                logger.debug("ADAM iteration %d: objective %.8g, max |grad| %.3g", iteration, value,
                             np.max(np.abs(grad)))

        if self.n_rejected:
            warn("{} ADAM step(s) left the log-det domain and were rejected; the learning rate was "
                 "reduced to {:g}.".format(self.n_rejected, adam.lr))
        self.lr = adam.lr
        if admissible is None:
            best_x, best_value = x, value
        self.value = best_value
        return best_x


def adam_minimize(fun, theta0, settings: AdamSettings = None):
    """
     Minimize fun starting at theta0. theta0 is either a flat array, in which case fun maps
     arrays to (value, gradient array), or a ModelParams, in which case fun maps ModelParams
     to (value, gradient ModelParams) and a ModelParams is returned.
    """
    minimizer = AdamMinimizer(settings)
    if isinstance(theta0, ModelParams):
        n, d = theta0.n, theta0.d

        def flat_fun(vector):
            value, grad = fun(ModelParams.from_vector(vector, n, d))
            return value, grad.to_vector()

        return ModelParams.from_vector(minimizer.minimize(flat_fun, theta0.to_vector()), n, d)
    return minimizer.minimize(fun, theta0)


def threshold(W_raw, omega):
    if omega < 0:
        raise ConfigError("omega must be nonnegative. Received: {}".format(omega))
    W_raw = np.asarray(W_raw, dtype=float)
    W_hat = W_raw * (W_raw > omega)
    return W_hat, DirectedGraph(W_hat > 0)


@dataclass
class DiscoveryResult:
    W_raw: np.ndarray
    W_hat: np.ndarray
    graph: DirectedGraph
    theta: ModelParams = field(repr=False)
    trace: typing.List[ObjectiveReport] = field(repr=False)
    is_dag_flag: bool
    rounds: typing.List[dict] = field(default_factory=list, repr=False)
    X: typing.Optional[np.ndarray] = field(default=None, repr=False)
    mean: typing.Optional[np.ndarray] = field(default=None, repr=False)
    scale: typing.Optional[np.ndarray] = field(default=None, repr=False)
    kernel: typing.Optional[KernelConfig] = None

    def to_json(self):
        return {"is_dag": self.is_dag_flag,
                "edges": [[k + 1, j + 1] for k, j in self.graph.edges()],
                "W_raw": self.W_raw.tolist(),
                "rounds": [dict(record, report=report.to_json()) for record, report in zip(self.rounds, self.trace)]}


def _check_data(X):
    X = check_finite_matrix(X)
    n, d = X.shape
    if n < 2 or d < 2:
        raise ShapeError("RKHS-DAGMA needs at least 2 samples and 2 variables. Received shape {}.".format(X.shape))
    return X


def rkhs_dagma(X, cfg: DagmaConfig = None, threads=None):
    if cfg is None:
        cfg = DagmaConfig()
    X = _check_data(X)
    n, d = X.shape
    mean, scale = np.zeros(d), np.ones(d)
    if cfg.standardize:
        X, mean, scale = standardize(X)
    kernel = cfg.kernel_config(d)
    bundles = build_bundles(X, kernel, cfg.materialize, cfg.materialize_limit, threads)

    theta = ModelParams.zeros(n, d)
    trace, rounds = [], []

    def run_round(t, theta, is_last):
        mu = cfg.mu_at(t)
        obj_cfg = cfg.objective_config(t)

        latest = {}

        def fun(vector):
            value, grad, latest["report"] = central_path_value_and_gradient(ModelParams.from_vector(vector, n, d), X,
                                                                            bundles, obj_cfg, mu, threads)
            return value, grad.to_vector()

        start = score(theta, X, bundles, obj_cfg, threads)
        max_iter = cfg.final_round_iters if is_last and cfg.final_round_iters is not None else None
        # past the first round, a round never hands over a larger h than it started from
        admissible = None if t == 0 else lambda _: latest["report"].h_value <= start.h_value
        minimizer = AdamMinimizer(cfg.adam)
        try:
            vector = minimizer.minimize(fun, theta.to_vector(), max_iter, admissible)
        except OptimizationError as e:
            e.trace = trace
            raise
        theta = ModelParams.from_vector(vector, n, d)
        report = score(theta, X, bundles, obj_cfg, threads)
        trace.append(report)
        rounds.append({"round": t, "mu": mu, "s": obj_cfg.s, "iterations": minimizer.n_iter,
                       "rejected_steps": minimizer.n_rejected, "lr": minimizer.lr, "start_total": start.total,
                       "start_h_value": start.h_value})
        logger.info("Round %d: mu=%.3g, h=%.3g, score=%.6g, %d ADAM iterations.", t, mu, report.h_value,
                    report.total, minimizer.n_iter)
        return theta

    for t in range(cfg.T):
        theta = run_round(t, theta, t == cfg.T - 1)

    W_raw = trace[-1].W
    W_hat, graph = threshold(W_raw, cfg.omega)
    dag = is_dag(graph)
    for extra in range(cfg.escalation_rounds):
        if dag:
            break
        t = cfg.T + extra
        warn("The thresholded graph is not a DAG after {} rounds; running round {}.".format(t, t + 1))
        theta = run_round(t, theta, True)
        W_raw = trace[-1].W
        W_hat, graph = threshold(W_raw, cfg.omega)
        dag = is_dag(graph)

    if not dag:
        logger.warning("The final thresholded graph is not a DAG.")
    return DiscoveryResult(W_raw=W_raw, W_hat=W_hat, graph=graph, theta=theta, trace=trace, is_dag_flag=dag,
                           rounds=rounds, X=X, mean=mean, scale=scale, kernel=kernel)
