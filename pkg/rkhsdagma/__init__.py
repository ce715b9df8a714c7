__version__ = "0.1.0"

from .errors import (RkhsDagmaError, ShapeError, DataError, ConfigError, OutOfDomainError, NonFiniteError,
                     OptimizationError)
from .kernel import KernelConfig, GramBundle, gram_bundle, build_bundles
from .representer import NodeParams, ModelParams, eval_node_on_data, eval_node_at, predict, rkhs_norm_sq
from .acyclicity import DirectedGraph, is_dag, h_ldet, grad_h_ldet, grad_h_ldet_wrt_W
from .objective import ObjectiveConfig, ObjectiveReport, score, central_path_value, central_path_gradient
from .optimizer import AdamSettings, DagmaConfig, DiscoveryResult, adam_minimize, rkhs_dagma
from .sem_sim import SemSpec, SimulatedDataset, er_dag, simulate_sem
from .metrics import PairDataset, EvalReport, shd, count_accuracy, pairs_preprocess, orient_pair, evaluate_pairs
from .config import load_config
from .job import Job, KeyDict
from .campaign import Campaign
