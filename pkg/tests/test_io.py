import json
import math

import numpy as np

from kmslab import io


def test_jsonable_conversions():
    out = io.to_jsonable({"a": np.float64(1.5), "b": np.int64(3), "c": 1 + 2j, "d": [np.nan, np.inf, -np.inf],
                          "e": np.arange(3), 4: np.bool_(True)})
    assert out == {"a": 1.5, "b": 3, "c": {"re": 1.0, "im": 2.0}, "d": ["nan", "inf", "-inf"],
                   "e": [0, 1, 2], "4": True}


def test_json_header_and_stable_order(tmp_path):
    cfg = {"seed": 1, "beta": 1.0}
    text = io.dumps_json({"z": 1, "a": 2}, cfg, {"tol": 1e-10})
    doc = json.loads(text)
    assert list(doc) == sorted(doc)
    assert doc["header"]["config_hash"] == io.config_hash(cfg)
    assert doc["header"]["tolerances"] == {"tol": 1e-10}
    assert set(doc["header"]["versions"]) == {"kmslab", "numpy", "scipy", "python"}
    assert io.dumps_json({"a": 2, "z": 1}, cfg, {"tol": 1e-10}) == text


def test_config_hash_depends_on_content_only():
    assert io.config_hash({"a": 1, "b": 2}) == io.config_hash({"b": 2, "a": 1})
    assert io.config_hash({"a": 1}) != io.config_hash({"a": 2})


def test_csv_round_trip_and_quoting(tmp_path):
    rows = [{"x": 0.1, "name": 'a,"b"', "c": 1 - 1j}, {"x": 2.0, "name": "plain", "c": 0j}]
    path = io.write_csv(tmp_path / "t.csv", rows, ["x", "name", "c"], {"k": 1}, {"tol": 1e-9})
    raw = path.read_bytes()
    assert b"\r\n" in raw and raw.startswith(b"# config_hash: ")
    assert b'"a,""b"""' in raw
    back = io.read_csv(path)
    assert back[0]["name"] == 'a,"b"' and float(back[0]["x"]) == 0.1
    assert complex(back[0]["c"]) == 1 - 1j


def test_csv_floats_round_trip_exactly(tmp_path):
    vals = [math.pi, 1e-300, -2.5e17]
    path = io.write_csv(tmp_path / "f.csv", [{"v": v} for v in vals], ["v"])
    assert [float(r["v"]) for r in io.read_csv(path)] == vals


def test_gnuplot_files(tmp_path):
    io.write_gnuplot(tmp_path, "curve", {"x": [0, 1], "y": [2.0, 3.0]}, "plot '{dat}' using 1:2\n")
    assert (tmp_path / "curve.dat").read_text().splitlines() == ["# x y", "0.0 2.0", "1.0 3.0"]
    assert (tmp_path / "curve.gp").read_text() == "plot 'curve.dat' using 1:2\n"
