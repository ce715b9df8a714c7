"""
File formats: data matrices and d x d weight matrices as CSV with a header row, graphs as
1-indexed (src,dst) edge lists, traces and manifests as JSON.
"""
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
import typing

import numpy as np
import pandas as pd

from .acyclicity import DirectedGraph
from . import __version__
from .errors import DataError, ShapeError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def column_names(d):
    return ["X{}".format(j + 1) for j in range(d)]


def _ensure_parent(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except PermissionError:
        raise PermissionError("The output directory {} does not exist and could not be created."
                              .format(path.parent))
    return path


def _read_csv(path, **kwargs):
    path = Path(path)
    if not path.exists():
        raise DataError("The file {} does not exist.".format(path))
    try:
        return pd.read_csv(path, float_precision="round_trip", **kwargs)
    except pd.errors.EmptyDataError:
        raise DataError("The file {} is empty.".format(path))
    except pd.errors.ParserError as e:
        raise DataError("The file {} is not a well-formed CSV: {}".format(path, e))


def _to_numeric(table: pd.DataFrame, path):
    if table.empty:
        return np.zeros(table.shape, dtype=float)
    numeric = table.apply(pd.to_numeric, errors="coerce").astype(float)
    bad = numeric.isna() | ~np.isfinite(numeric.fillna(0.0))
    if bad.to_numpy().any():
        row, column = map(int, np.argwhere(bad.to_numpy())[0])
        raise DataError("{}: value '{}' in column {} is not a finite number."
                        .format(path, table.iat[row, column], table.columns[column]), row=row + 1)
    return numeric.to_numpy(dtype=float)


def read_data_csv(path):
    """
     Read a data matrix with a header row. Row numbers in error messages count data rows,
     starting at 1.
    """
    table = _read_csv(path)
    X = _to_numeric(table, path)
    logger.info("Read a %d x %d data matrix from %s.", X.shape[0], X.shape[1], path)
    return X


def write_data_csv(path, X, columns=None):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("Expected a 2D matrix. Received shape {}.".format(X.shape))
    if columns is None:
        columns = column_names(X.shape[1])
    path = _ensure_parent(path)
    pd.DataFrame(X, columns=columns).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_matrix_csv(path, W):
    """d x d matrices use the same layout as data, with 17 significant digits."""
    return write_data_csv(path, W)


read_matrix_csv = read_data_csv


def write_edge_list(path, graph: DirectedGraph):
    path = _ensure_parent(path)
    edges = [(k + 1, j + 1) for k, j in graph.edges()]
    pd.DataFrame(edges, columns=["src", "dst"], dtype=int).to_csv(path, index=False, lineterminator="\n")
    return path


def read_edge_list(path):
    """:return: list of 0-based (src, dst) tuples"""
    table = _read_csv(path)
    if list(table.columns) != ["src", "dst"]:
        raise DataError("{}: an edge list must have the header 'src,dst'. Received: {}"
                        .format(path, ",".join(map(str, table.columns))))
    values = _to_numeric(table, path)
    if values.size and (np.any(values != np.round(values)) or np.any(values < 1)):
        row = int(np.where(np.any((values != np.round(values)) | (values < 1), axis=1))[0][0])
        raise DataError("{}: node indices must be integers starting at 1.".format(path), row=row + 1)
    return [(int(src) - 1, int(dst) - 1) for src, dst in values]


def read_graph(path, d=None):
    edges = read_edge_list(path)
    needed = max([max(edge) + 1 for edge in edges], default=0)
    if d is None:
        d = needed
    elif needed > d:
        raise ShapeError("{} refers to node {} but the graph has {} nodes.".format(path, needed, d))
    return DirectedGraph.from_edges(edges, d)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError("Object of type {} is not JSON serializable.".format(type(obj)))


def to_json_str(obj):
    return json.dumps(obj, indent=2, default=_json_default)


def write_json(path, obj):
    path = _ensure_parent(path)
    with path.open("w") as f:
        f.write(to_json_str(obj) + "\n")
    return path


def read_json(path):
    with Path(path).open("r") as f:
        return json.load(f)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: typing.Optional[int] = None
    inputs: typing.Dict[str, str] = field(default_factory=dict)
    outputs: typing.Dict[str, str] = field(default_factory=dict)
    duration: float = 0.0
    version: str = ""
    argv: typing.List[str] = field(default_factory=list)
    python: str = field(default_factory=platform.python_version)
    _start: float = field(default_factory=time.perf_counter, repr=False)

    def __post_init__(self):
        if not self.version:
            self.version = __version__
        if not self.argv:
            self.argv = list(sys.argv)

    def add_input(self, name, path):
        self.inputs[name] = str(path)

    def add_output(self, name, path):
        self.outputs[name] = str(path)

    def to_json(self):
        json_ = asdict(self)
        del json_["_start"]
        return json_

    def save(self, path):
        self.duration = time.perf_counter() - self._start
        self.add_output("manifest", path)
        return write_json(path, self.to_json())
