import json
import os
from pathlib import Path

import numpy as np
import pytest

import r4surf

EXAMPLES = Path(os.environ.get("R4SURF_EXAMPLES", Path(__file__).resolve().parents[2] / "examples_cfg"))

ELLIPSES = {
    "kind": "product",
    "domain": [1.7, 2.6, 1.7, 2.6],
    "curve1": {"kind": "ellipse", "a": 2, "b": 1},
    "curve2": {"kind": "ellipse", "a": 3, "b": 1},
}
TORUS = {
    "kind": "product",
    "domain": [0.3, 2.8, 0.3, 2.8],
    "curve1": {"kind": "circle", "r": 1, "arc_length": True},
    "curve2": {"kind": "circle", "r": 1, "arc_length": True},
}


def curve_evolute(a, b, t):
    d = a * a - b * b
    return d / a * np.cos(t) ** 3, -d / b * np.sin(t) ** 3


def test_version():
    assert r4surf.__version__.count(".") == 2


def test_evolute_matches_curve_evolutes():
    pts, rank = r4surf.transform(ELLIPSES, "evolute", grid=(16, 12))
    assert pts.shape == (12, 16, 4)
    assert (rank == 2).all()
    u = np.linspace(1.7, 2.6, 16)[None, :]
    v = np.linspace(1.7, 2.6, 12)[:, None]
    x1, x2 = curve_evolute(2, 1, u)
    x3, x4 = curve_evolute(3, 1, v)
    expect = np.stack(np.broadcast_arrays(x1, x2, x3, x4), axis=-1)
    assert np.abs(pts - expect).max() < 1e-8


def test_torus_evolute_rank_zero():
    pts, rank = r4surf.transform(TORUS, {"kind": "evolute"}, grid=(10, 10))
    assert (rank == 0).all()
    assert np.abs(pts).max() < 1e-12


def test_geometry_at_vertex():
    g = r4surf.geometry({**ELLIPSES, "domain": [-1, 1, -1, 1]}, 0.0, 0.0)
    assert g["class"] == "semiumbilic_regular"
    assert abs(g["gauss_K"]) < 1e-12
    point = np.array(g["point"]) + np.array(g["c"])
    assert np.allclose(point, [1.5, 0, 8 / 3, 0], atol=1e-12)


def test_check_dict_config():
    r = r4surf.check({"surface": ELLIPSES, "grid": [24, 24], "pipeline": [{"kind": "orthogonal", "t": 0.5}]})
    assert r.meshes == []
    (pb,) = r.checks("pullback_c")
    assert pb["status"] == "pass"
    assert pb["max_error"] < 1e-4
    assert r.report["header"]["pipeline"] == [{"kind": "orthogonal", "t": 0.5}]
    names = {c["name"] for c in r.report["checks"]}
    assert names <= set(r4surf.check_names())


def test_run_example_config():
    r = r4surf.run(EXAMPLES / "torus_evolute.json")
    assert r.passed
    assert len(r.meshes) == 2
    _, rank = r.meshes[1]
    assert (rank == 0).all()
    assert all(c["status"] != "fail" for c in r.report["checks"])


def test_report_is_deterministic():
    cfg = {"surface": TORUS, "grid": [12, 12], "pipeline": ["evolute"]}
    a = r4surf.check(cfg).report
    b = r4surf.check(cfg).report
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_classify():
    s = r4surf.classify(EXAMPLES / "graph_classify.json")
    assert s["tangent_bundle"]["flat"] is False
    assert s["rank"]["2"] == s["nodes"]


def test_errors():
    with pytest.raises(r4surf.ConfigError, match="grid too small"):
        r4surf.check({"surface": TORUS, "grid": [4, 40]})
    with pytest.raises(r4surf.ConfigError, match="unknown pipeline stage"):
        r4surf.check({"surface": TORUS, "pipeline": ["involute"]})
    with pytest.raises(r4surf.ConfigError, match="needs a flat surface"):
        r4surf.check(EXAMPLES / "graph_classify.json")
    with pytest.raises(r4surf.IoError):
        r4surf.run(EXAMPLES / "no_such_config.json")
    with pytest.raises(r4surf.Error):
        r4surf.transform({"kind": "expression", "domain": [0, 1, 0, 1], "x": ["u", "v", "w", "0"]}, "evolute")
