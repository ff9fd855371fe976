import json
from pathlib import Path

import numpy as np
import pytest

import rmask

DATA = Path(__file__).resolve().parents[2] / "data"


def path3():
    return rmask.Graph(3, np.array([[0, 1], [1, 2]]))


def test_graph_basics():
    g = path3()
    assert g.num_nodes == 3
    assert g.num_edges == 2
    assert g.neighbors(1) == [0, 2]
    assert g.with_self_loops().degree(1) == 3


def test_bad_edges_raise():
    with pytest.raises(rmask.DataError):
        rmask.Graph(2, np.array([[0, 5]]))
    with pytest.raises(rmask.ParameterError):
        rmask.Graph(3, np.array([0, 1, 2]))


def test_propagate_matches_numpy():
    rng = np.random.default_rng(0)
    n = 30
    edges = np.array([(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.15])
    g = rmask.Graph(n, edges)
    a = np.eye(n)
    a[edges[:, 0], edges[:, 1]] = 1
    a[edges[:, 1], edges[:, 0]] = 1
    d = a.sum(1)
    norm = a / np.sqrt(np.outer(d, d))
    x = rng.normal(size=(n, 4))
    hops = rmask.propagate(g, x, 3)
    assert len(hops) == 4
    np.testing.assert_allclose(hops[3], norm @ norm @ norm @ x, atol=1e-12)


def test_hop_mask_path():
    m = rmask.build_hop_mask(path3(), 2)
    assert m.at(0, 1) == [1]
    assert m.at(0, 2) == [2]
    assert m.at(1, 2) == []


def test_ppr_push_close_to_exact():
    g = path3()
    exact = rmask.ppr_exact(g, 0.15)
    for s in range(3):
        row = rmask.ppr_push(g, s, 0.15, 1e-6)
        for v in range(3):
            assert abs(row.get(v, 0.0) - exact[s, v]) <= 1e-5


def test_rmask_features_path_endpoints():
    x = np.eye(3)
    hops, stats = rmask.rmask_features(path3(), x, 2, walks_T=50, seed=3)
    np.testing.assert_array_equal(hops[0], x)
    np.testing.assert_allclose(hops[2][0], [0, 0, 1])
    np.testing.assert_allclose(hops[2][1], [0, 0, 0])
    assert stats[0]["acceptance_rate"] == 1.0


def test_gsl_constant_rows():
    assert rmask.gsl(np.ones((5, 3))) == pytest.approx(1.0, abs=1e-15)


def test_combine_average():
    hops = [np.ones((2, 2)), 3 * np.ones((2, 2))]
    np.testing.assert_allclose(rmask.combine(hops, "s2gc_average"), 2 * np.ones((2, 2)))
    assert rmask.combine(hops, "sign_concat").shape == (2, 4)


def toy_config(tmp_path):
    edges = "4 2\n0 1\n2 3\n"
    (tmp_path / "edges.txt").write_text(edges)
    (tmp_path / "features.txt").write_text("1 0\n1 0.1\n0 1\n0.1 1\n")
    (tmp_path / "labels.txt").write_text("0\n0\n1\n1\n")
    (tmp_path / "train.txt").write_text("0\n2\n")
    (tmp_path / "val.txt").write_text("1\n")
    (tmp_path / "test.txt").write_text("3\n")
    return {
        "graph": {"edge_list": "edges.txt", "features": "features.txt", "labels": "labels.txt",
                  "splits": {"train": "train.txt", "val": "val.txt", "test": "test.txt"}},
        "propagation": {"mode": "rmask", "depth_H": 1, "walks_T": 5},
        "combine": {"method": "sign_concat"},
        "train": {"learning_rate": 0.1, "max_epochs": 50, "patience": 50},
    }


def test_config_level_round_trip(tmp_path):
    cfg = toy_config(tmp_path)
    full = rmask.load_config(cfg, base_dir=tmp_path)
    assert full["propagation"]["r"] == 0.5
    hops, coverage = rmask.preprocess(cfg, base_dir=tmp_path)
    assert len(hops) == 2
    assert coverage[0]["hop"] == 1
    metrics = rmask.evaluate(hops, cfg, base_dir=tmp_path)
    assert metrics["test_acc"] == 1.0
    out = tmp_path / "run"
    again = rmask.run_pipeline(cfg, out, base_dir=tmp_path)
    assert again == metrics
    assert json.loads((out / "metrics.json").read_text()) == metrics


def test_config_errors(tmp_path):
    cfg = toy_config(tmp_path)
    cfg["propagation"]["bogus"] = 1
    with pytest.raises(rmask.ParameterError, match="bogus"):
        rmask.load_config(cfg, base_dir=tmp_path)


@pytest.mark.skipif(not (DATA / "configs" / "cora_baseline.json").exists(), reason="no Cora bundle")
def test_cora_config_loads():
    cfg = rmask.load_config(DATA / "configs" / "cora_baseline.json")
    assert cfg["propagation"]["mode"] == "baseline"
