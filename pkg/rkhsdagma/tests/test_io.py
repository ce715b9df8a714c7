import numpy as np
import pytest

from rkhsdagma import __version__
from rkhsdagma.acyclicity import DirectedGraph
from rkhsdagma.errors import DataError, ShapeError
from rkhsdagma.io import (read_data_csv, write_data_csv, write_matrix_csv, read_matrix_csv, write_edge_list,
                          read_edge_list, read_graph, write_json, read_json, to_json_str, RunManifest)

from . import rng


def test_data_csv_keeps_full_precision(tmp_path, rng):
    X = rng.standard_normal((7, 3)) * 10.0 ** rng.integers(-8, 8, (7, 3))
    path = write_data_csv(tmp_path / "sub" / "data.csv", X)
    assert path.read_text().splitlines()[0] == "X1,X2,X3"
    np.testing.assert_array_equal(read_data_csv(path), X)

    W = rng.uniform(0, 1, (3, 3))
    write_matrix_csv(tmp_path / "W.csv", W)
    np.testing.assert_array_equal(read_matrix_csv(tmp_path / "W.csv"), W)


def test_data_csv_diagnostics(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n3,oops\n")
    with pytest.raises(DataError) as info:
        read_data_csv(path)
    assert info.value.row == 2 and "oops" in str(info.value)

    path.write_text("a,b\n1,2\n3,inf\n")
    with pytest.raises(DataError):
        read_data_csv(path)

    path.write_text("")
    with pytest.raises(DataError, match="empty"):
        read_data_csv(path)

    with pytest.raises(DataError, match="does not exist"):
        read_data_csv(tmp_path / "missing.csv")

    with pytest.raises(ShapeError):
        write_data_csv(tmp_path / "vector.csv", np.zeros(3))


def test_edge_lists(tmp_path):
    graph = DirectedGraph.from_edges([(0, 2), (2, 1)], 4)
    path = write_edge_list(tmp_path / "graph.csv", graph)
    assert path.read_text() == "src,dst\n1,3\n3,2\n"
    assert read_edge_list(path) == [(0, 2), (2, 1)]
    assert read_graph(path, 4) == graph
    assert read_graph(path).d == 3
    with pytest.raises(ShapeError):
        read_graph(path, 2)

    empty = write_edge_list(tmp_path / "empty.csv", DirectedGraph.empty(3))
    assert read_edge_list(empty) == []
    assert read_graph(empty, 3) == DirectedGraph.empty(3)


def test_edge_list_validation(tmp_path):
    path = tmp_path / "graph.csv"
    path.write_text("from,to\n1,2\n")
    with pytest.raises(DataError, match="src,dst"):
        read_edge_list(path)
    path.write_text("src,dst\n1,2\n0,1\n")
    with pytest.raises(DataError) as info:
        read_edge_list(path)
    assert info.value.row == 2
    path.write_text("src,dst\n1.5,2\n")
    with pytest.raises(DataError):
        read_edge_list(path)


def test_json(tmp_path):
    path = write_json(tmp_path / "out.json", {"W": np.eye(2), "n": np.int64(3), "path": tmp_path})
    content = read_json(path)
    assert content["W"] == [[1.0, 0.0], [0.0, 1.0]] and content["n"] == 3
    assert content["path"] == str(tmp_path)
    with pytest.raises(TypeError):
        to_json_str({"bad": object()})


def test_manifest(tmp_path):
    manifest = RunManifest("discover", {"dagma": {"T": 2}}, seed=3, argv=["rkhsdagma", "discover"])
    manifest.add_input("data", tmp_path / "data.csv")
    manifest.add_output("graph", tmp_path / "graph.csv")
    manifest.save(tmp_path / "manifest.json")
    content = read_json(tmp_path / "manifest.json")
    assert content["command"] == "discover" and content["seed"] == 3
    assert content["version"] == __version__
    assert content["inputs"] == {"data": str(tmp_path / "data.csv")}
    assert set(content["outputs"]) == {"graph", "manifest"}
    assert content["duration"] >= 0.0
    assert "_start" not in content
