import csv
import json

import numpy as np
import pytest
import yaml

from capillary_mm.cli import main
from capillary_mm.fieldio import load_field


def write_cfg(path, **over):
    cfg = {"domain": {"shape": "strip", "nx": 16, "width": 2.0, "height": 2.0},
           "beta": 0.3, "initial": {"kind": "half_plane", "slope": 0.2}, "h": 0.02, "steps": 2,
           "output": {"dir": str(path / "out")}}
    cfg.update(over)
    p = path / "run.yaml"
    p.write_text(yaml.safe_dump(cfg))
    return p


def read(path):
    return list(csv.DictReader(open(path)))


def test_distance_writes_field(tmp_path):
    p = write_cfg(tmp_path)
    assert main(["distance", "--config", str(p)]) == 0
    d, head = load_field(tmp_path / "out" / "distance.field")
    assert head.nx == 16 and d.min() < 0 < d.max()


def test_solve_and_step(tmp_path):
    p = write_cfg(tmp_path)
    assert main(["solve", "--config", str(p)]) == 0
    assert read(tmp_path / "out" / "solve.csv")[0]["converged"] == "True"
    assert main(["step", "--config", str(p)]) == 0
    assert (tmp_path / "out" / "step.set").exists()


def test_function_step_with_interpolation(tmp_path):
    p = write_cfg(tmp_path, initial={"kind": "plane", "slope": 0.3}, n_levels=16)
    assert main(["step", "--config", str(p), "--interpolate"]) == 0
    rows = read(tmp_path / "out" / "step_levels.csv")
    assert len(rows) == 17


def test_evolve_writes_interface_table(tmp_path):
    p = write_cfg(tmp_path, domain={"shape": "strip", "nx": 32, "width": 2.0, "height": 2.0})
    assert main(["evolve", "--config", str(p)]) == 0
    rows = read(tmp_path / "out" / "interface.csv")
    assert [r["step"] for r in rows] == ["0", "1", "2"]
    assert {"t", "area", "interface_length", "angle_left", "angle_right"} <= set(rows[0])
    assert len({r["config_hash"] for r in rows}) == 1
    schema = json.loads((tmp_path / "out" / "interface.schema.json").read_text())
    assert schema["columns"][0]["name"] == "config_hash"


def test_evolve_disk_records_extinction(tmp_path):
    p = write_cfg(tmp_path, domain={"shape": "disk", "nx": 32, "radius": 1.0}, beta=0.0,
                  initial={"kind": "disk", "radius": 0.2}, h=0.005, steps=40)
    assert main(["evolve", "--config", str(p)]) == 0
    ext = read(tmp_path / "out" / "extinction.csv")[0]["extinction_time"]
    assert 0.01 < float(ext) < 0.04


def test_evolve_field_mode(tmp_path):
    p = write_cfg(tmp_path, initial={"kind": "plane", "slope": 0.3}, n_levels=16)
    assert main(["evolve", "--config", str(p)]) == 0
    assert len(read(tmp_path / "out" / "evolve.csv")) == 3


def test_soliton_test_exit_code(tmp_path):
    b = -2 ** -0.5
    p = write_cfg(tmp_path, domain={"shape": "strip", "nx": 32, "width": 2.0, "height": 4.0},
                  beta={"left": b, "right": b, "else": 0.0}, initial={"kind": "soliton", "b": b},
                  h=0.01, steps=2)
    assert main(["soliton-test", "--config", str(p)]) == 0
    assert len(read(tmp_path / "out" / "soliton.csv")) == 2
    assert main(["soliton-test", "--config", str(p), "--max-hausdorff", "-1"]) == 1


def test_suite_has_one_row_per_property(tmp_path):
    p = write_cfg(tmp_path)
    code = main(["suite", "--config", str(p), "--trials", "1"])
    rows = read(tmp_path / "out" / "suite.csv")
    assert [r["property"] for r in rows][:4] == ["l2_contraction", "order_preservation",
                                               "sup_contraction", "shift_equivariance"]
    assert code == (0 if all(r["violations"] == "0" for r in rows) else 1)


def test_consistency_linear(tmp_path):
    p = write_cfg(tmp_path)
    code = main(["consistency", "--config", str(p), "--field", "linear", "--z", "0.05", "0.02",
                 "--h-list", "0.04", "0.02", "--half-width", "0.3"])
    assert code in (0, 1)
    assert len(read(tmp_path / "out" / "consistency.csv")) == 2


def test_bad_config_exit_2_lists_errors(tmp_path, capsys):
    p = write_cfg(tmp_path, beta=1.0, h=-1.0)
    assert main(["solve", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "beta" in err and "h:" in err


def test_usage_errors_exit_2(tmp_path):
    assert main(["nonsense"]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_overrides(tmp_path):
    p = write_cfg(tmp_path)
    out = tmp_path / "elsewhere"
    assert main(["evolve", "--config", str(p), "--out", str(out), "--steps", "1", "--h", "0.01"]) == 0
    rows = read(out / "interface.csv")
    assert [float(r["t"]) for r in rows] == pytest.approx([0.0, 0.01])
