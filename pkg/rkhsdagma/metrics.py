"""
Graph-recovery scores and the bivariate cause-effect pipeline.
"""
import logging
from pathlib import Path
import typing
from dataclasses import dataclass, asdict, replace
from warnings import warn

import numpy as np
import pandas as pd

from .acyclicity import DirectedGraph
from .errors import DataError, ShapeError
from .optimizer import rkhs_dagma
from .utils import standardize, parallel_map

logger = logging.getLogger(__name__)

A_TO_B = "a->b"
B_TO_A = "b->a"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class EvalReport:
    shd: int
    extra: int
    missing: int
    reversed: int
    predicted_edges: int

    def to_json(self):
        return asdict(self)


# Minimal (extra, missing, reversed) moves between the states of one unordered node pair,
# a state being (edge k->j present, edge j->k present).
_PAIR_MOVES = {}
for _e in [(0, 0), (1, 0), (0, 1), (1, 1)]:
    for _t in [(0, 0), (1, 0), (0, 1), (1, 1)]:
        _pred, _true = sum(_e), sum(_t)
        if _pred == 1 and _true == 1 and _e != _t:
            _PAIR_MOVES[_e, _t] = (0, 0, 1)
        else:
            _PAIR_MOVES[_e, _t] = (max(_pred - _true, 0), max(_true - _pred, 0), 0)


def shd(estimated: DirectedGraph, truth: DirectedGraph):
    """
     Structural Hamming distance: additions, deletions and reversals (each costing 1)
     turning the estimated graph into the true graph.
    """
    if estimated.d != truth.d:
        raise ShapeError("Graphs of different sizes: {} and {} nodes.".format(estimated.d, truth.d))
    E, T = estimated.adjacency, truth.adjacency
    extra = missing = reversed_ = 0
    for k, j in zip(*np.triu_indices(truth.d, k=1)):
        moves = _PAIR_MOVES[(int(E[k, j]), int(E[j, k])), (int(T[k, j]), int(T[j, k]))]
        extra += moves[0]
        missing += moves[1]
        reversed_ += moves[2]
    return EvalReport(shd=extra + missing + reversed_, extra=extra, missing=missing, reversed=reversed_,
                      predicted_edges=estimated.n_edges)


def count_accuracy(estimated: DirectedGraph, truth: DirectedGraph):
    """False discovery, true positive and false positive rates as reported for DAGMA-style methods."""
    report = shd(estimated, truth)
    E, T = estimated.adjacency, truth.adjacency
    true_positive = int(np.sum(E & T))
    reversed_ = int(np.sum(E & ~T & T.T))
    false_positive = int(np.sum(E & ~T & ~T.T))
    d = truth.d
    condition_negative = d * (d - 1) / 2 - truth.n_edges
    return {"fdr": (reversed_ + false_positive) / max(report.predicted_edges, 1),
            "tpr": true_positive / max(truth.n_edges, 1),
            "fpr": (reversed_ + false_positive) / max(condition_negative, 1),
            "shd": report.shd,
            "nnz": report.predicted_edges}


@dataclass(frozen=True)
class PairDataset:
    a: np.ndarray
    b: np.ndarray
    label: str = A_TO_B
    weight: float = 1.0
    name: str = ""

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise ShapeError("Both variables of a pair must be vectors of equal length. Received shapes {} and {}."
                             .format(a.shape, b.shape))
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise DataError("Pair {} contains non-finite values.".format(self.name))
        if self.label not in (A_TO_B, B_TO_A):
            raise DataError("The label of a pair must be '{}' or '{}'. Received: {}".format(A_TO_B, B_TO_A, self.label))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.shape[0]

    def matrix(self):
        return np.column_stack([self.a, self.b])

    def swapped(self):
        return replace(self, a=self.b, b=self.a, label=B_TO_A if self.label == A_TO_B else A_TO_B)


def pairs_preprocess(pair: PairDataset, max_samples=400, n_grids=300):
    """
     Standardize both variables; pairs longer than max_samples are sorted by the first
     variable, cut into n_grids contiguous grids, and each grid is represented by its
     lower-median row.
    """
    try:
        Z = standardize(pair.matrix())[0]
    except DataError as e:
        raise DataError("Pair {}: {}".format(pair.name, e))
    if pair.n > max_samples:
        order = np.argsort(Z[:, 0], kind="stable")
        rows = [grid[(len(grid) - 1) // 2] for grid in np.array_split(order, n_grids) if len(grid)]
        Z = Z[rows]
    return replace(pair, a=Z[:, 0], b=Z[:, 1])


@dataclass(frozen=True)
class PairDecision:
    direction: str
    tiebreak: bool
    W_raw: np.ndarray

    def to_json(self):
        return {"direction": self.direction, "tiebreak": self.tiebreak, "W_raw": self.W_raw.tolist()}


def decide_direction(W_raw, W_hat):
    forward, backward = W_hat[0, 1] > 0, W_hat[1, 0] > 0
    if forward and not backward:
        return PairDecision(A_TO_B, False, W_raw)
    if backward and not forward:
        return PairDecision(B_TO_A, False, W_raw)
    if forward and backward:
        direction = A_TO_B if W_raw[0, 1] > W_raw[1, 0] else B_TO_A if W_raw[1, 0] > W_raw[0, 1] else UNDECIDED
        return PairDecision(direction, direction != UNDECIDED, W_raw)
    return PairDecision(UNDECIDED, False, W_raw)


def orient_pair(pair: PairDataset, cfg=None, threads=None):
    result = rkhs_dagma(pair.matrix(), cfg, threads)
    return decide_direction(result.W_raw, result.W_hat)


def _read_numeric_table(path):
    table = pd.read_csv(path, header=None, sep=r"[\s,]+", engine="python")
    table = table.apply(pd.to_numeric, errors="coerce")
    if len(table) and table.iloc[0].isna().any():
        table = table.iloc[1:]
    table = table.dropna(axis=1, how="all")
    if table.isna().any().any():
        row = int(np.where(table.isna().any(axis=1))[0][0]) + 1
        raise DataError("{} contains non-numeric values.".format(path), row=row)
    return table.to_numpy(dtype=float)


def _metadata_csv(directory):
    meta = pd.read_csv(directory / "metadata.csv")
    missing = {"pair", "direction"} - set(meta.columns)
    if missing:
        raise DataError("metadata.csv is missing the column(s) {}.".format(sorted(missing)))
    if "weight" not in meta.columns:
        meta["weight"] = 1.0
    for row in meta.itertuples(index=False):
        yield str(row.pair), directory / "{}.csv".format(row.pair), str(row.direction).strip(), float(row.weight)


def _metadata_tuebingen(directory):
    meta = pd.read_csv(directory / "pairmeta.txt", header=None, sep=r"\s+")
    for row in meta.itertuples(index=False):
        pair_id, cause_first, cause_last, effect_first, effect_last, weight = (list(row) + [1.0])[:6]
        name = "pair{:04d}".format(int(pair_id))
        if cause_first != cause_last or effect_first != effect_last:
            direction = None
        else:
            direction = A_TO_B if int(cause_first) == 1 else B_TO_A
        yield name, directory / "{}.txt".format(name), direction, float(weight)


def load_pairs_corpus(directory):
    """
     :return: (pairs, skipped) where pairs is a list of PairDataset and skipped a list of
              (name, reason) tuples for the multi-dimensional pairs left out.
    """
    directory = Path(directory)
    if (directory / "metadata.csv").exists():
        entries = _metadata_csv(directory)
    elif (directory / "pairmeta.txt").exists():
        entries = _metadata_tuebingen(directory)
    else:
        raise DataError("No metadata.csv or pairmeta.txt found in {}.".format(directory))

    pairs, skipped = [], []
    for name, path, direction, weight in entries:
        if direction is None:
            skipped.append((name, "multi-dimensional variables"))
            continue
        if not path.exists():
            raise DataError("Data file {} listed in the metadata does not exist.".format(path))
        data = _read_numeric_table(path)
        if data.shape[1] != 2:
            skipped.append((name, "{} columns".format(data.shape[1])))
            continue
        pairs.append(PairDataset(data[:, 0], data[:, 1], direction, weight, name))

    for name, reason in skipped:
        warn("Skipping pair {} ({}).".format(name, reason))
    if not pairs:
        raise DataError("The corpus {} does not contain any usable pair.".format(directory))
    logger.info("Loaded %d pairs from %s (%d skipped).", len(pairs), directory, len(skipped))
    return pairs, skipped


def evaluate_pairs(pairs: typing.Sequence[PairDataset], cfg=None, max_samples=400, n_grids=300, threads=None):
    weights = np.array([pair.weight for pair in pairs], dtype=float)
    if not np.sum(weights) > 0:
        raise DataError("The pair weights sum to {}; weighted accuracy needs a positive total weight."
                        .format(np.sum(weights)))

    def evaluate(pair):
        return orient_pair(pairs_preprocess(pair, max_samples, n_grids), cfg, threads=1)

    decisions = parallel_map(evaluate, pairs, threads)
    records = []
    for pair, decision in zip(pairs, decisions):
        records.append({"pair": pair.name, "truth": pair.label, "predicted": decision.direction,
                        "tiebreak": decision.tiebreak, "weight": pair.weight,
                        "correct": decision.direction == pair.label, "W_raw": decision.W_raw.tolist()})
    correct = np.array([r["correct"] for r in records], dtype=float)
    return {"decisions": records,
            "accuracy": float(correct.mean()),
            "weighted_accuracy": float(np.sum(weights * correct) / np.sum(weights)),
            "n_pairs": len(records),
            "n_tiebreak": int(sum(r["tiebreak"] for r in records)),
            "n_undecided": int(sum(r["predicted"] == UNDECIDED for r in records))}
