import csv
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from capillary_mm.config import ConfigError, load_config, parse_config
from capillary_mm.fieldio import (FieldFormatError, config_hash, dump_field, dump_set, load_field, load_set,
                                  read_header, write_csv)
from capillary_mm.grid import RegionSet, build_strip

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_field_round_trip_is_bit_identical(tmp_path, rng):
    d = build_strip(1, 1, 64)
    f = rng.normal(size=(64, 64))
    dump_field(f, tmp_path / "f.field", d)
    g, head = load_field(tmp_path / "f.field", d)
    assert g.tobytes() == f.tobytes()
    assert (head.ny, head.nx, head.kind, head.endian) == (64, 64, "field", "little")


@settings(max_examples=20)
@given(arrays(np.float64, (9, 8), elements=st.floats(allow_nan=True, allow_infinity=True, width=64)))
def test_round_trip_any_values(tmp_path_factory, f):
    d = build_strip(1, 1.125, 8)
    p = tmp_path_factory.mktemp("rt") / "f.field"
    dump_field(f, p, d)
    g, _ = load_field(p)
    assert g.tobytes() == np.ascontiguousarray(f).tobytes()


def test_header_is_one_json_line(tmp_path):
    d = build_strip(2, 1, 16)
    p = dump_field(np.zeros((8, 16)), tmp_path / "z.field", d)
    first = p.read_bytes().split(b"\n", 1)[0]
    meta = json.loads(first)
    assert meta["dtype"] == "float64" and meta["endian"] == "little" and meta["shape"] == "strip"
    assert p.stat().st_size == len(first) + 1 + 8 * 16 * 8


def test_truncated_payload_rejected(tmp_path):
    d = build_strip(1, 1, 16)
    p = dump_field(np.ones((16, 16)), tmp_path / "t.field", d)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(FieldFormatError):
        load_field(p)


def test_corrupt_header_rejected(tmp_path):
    p = tmp_path / "bad.field"
    p.write_bytes(b"not json\n" + b"\0" * 64)
    with pytest.raises(FieldFormatError):
        read_header(p)


def test_mismatched_domain_rejected(tmp_path):
    d = build_strip(1, 1, 16)
    p = dump_field(np.ones((16, 16)), tmp_path / "m.field", d)
    with pytest.raises(FieldFormatError):
        load_field(p, build_strip(2, 2, 16))


def test_set_round_trip(tmp_path):
    d = build_strip(1, 1, 16)
    X, Y = d.coords
    r = RegionSet.from_levels(Y, d.mask)
    dump_set(r, tmp_path / "s.set", d)
    back = load_set(tmp_path / "s.set", d)
    assert np.array_equal(back.membership, r.membership)
    dump_field(np.full((16, 16), 0.5), tmp_path / "f.field", d)
    with pytest.raises(FieldFormatError):
        load_set(tmp_path / "f.field", d)


def test_csv_carries_hash_and_schema(tmp_path):
    p = write_csv([{"t": 0.0, "n": 1}, {"t": 0.1, "n": 2}], tmp_path / "x.csv", "abc", {"t": "time"})
    rows = list(csv.DictReader(open(p)))
    assert all(r["config_hash"] == "abc" for r in rows)
    schema = json.loads((tmp_path / "x.schema.json").read_text())
    cols = {c["name"]: c for c in schema["columns"]}
    assert cols["t"]["type"] == "float" and cols["n"]["type"] == "int" and cols["t"]["description"] == "time"


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_minimal_config_fills_defaults():
    cfg = parse_config({"domain": {"shape": "strip", "nx": 32}})
    assert cfg.solver.tol == 1e-6 and cfg.dlam is None
    assert cfg.build_domain().nx == 32


@pytest.mark.parametrize("data,path", [
    ({"beta": 1.0}, "beta"),
    ({"beta": {"left": 1.0}}, "beta.left"),
    ({"h": 0.0}, "h"),
    ({"h": -1}, "h"),
    ({"domain": {"nx": 4}}, "domain.nx"),
    ({"solver": {"tolerance": 1e-3}}, "solver.tolerance"),
    ({"initial": {"kind": "blob"}}, "initial.kind"),
])
def test_invalid_config_names_field(data, path):
    with pytest.raises(ConfigError) as err:
        parse_config(data)
    assert path in [p for p, _ in err.value.errors]


def test_all_violations_are_listed():
    with pytest.raises(ConfigError) as err:
        parse_config({"h": 0, "beta": 2, "extra": 1})
    assert {p for p, _ in err.value.errors} == {"h", "beta", "extra"}


def test_yaml_errors(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("h: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.yaml")))
def test_shipped_configs_validate(name):
    cfg = load_config(CONFIGS / name)
    d = cfg.build_domain()
    f = cfg.initial.level_function(d, cfg.side_beta())
    assert np.isfinite(f[d.mask]).all()


def test_file_initial_condition(tmp_path):
    cfg = parse_config({"domain": {"nx": 16}})
    d = cfg.build_domain()
    dump_field(np.arange(256.0).reshape(16, 16), tmp_path / "u.field", d)
    cfg = parse_config({"domain": {"nx": 16}, "initial": {"kind": "file", "path": str(tmp_path / "u.field")}})
    assert cfg.initial.level_function(d)[3, 2] == 50.0
