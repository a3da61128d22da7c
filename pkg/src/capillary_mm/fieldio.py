"""Binary field dumps and CSV tables.

A dump is one line of JSON followed by the values as row-major little-endian
float64.  The header records the grid dimensions, cell size, origin, domain
shape tag, the endianness marker and whether the payload is a set (values 0/1).
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridDomain, RegionSet

MAGIC = "capillary-field"
VERSION = 1


class FieldFormatError(ValueError):
    """Corrupt header, payload size mismatch or grid mismatch."""


@dataclass
class FieldHeader:
    ny: int
    nx: int
    dx: float
    x0: float
    y0: float
    shape: str
    kind: str = "field"
    endian: str = "little"

    def to_json(self) -> str:
        d = {"magic": MAGIC, "version": VERSION, **self.__dict__, "dtype": "float64"}
        return json.dumps(d, sort_keys=True)


def _header_for(domain: GridDomain, kind: str) -> FieldHeader:
    return FieldHeader(ny=domain.ny, nx=domain.nx, dx=domain.dx, x0=domain.x0, y0=domain.y0,
                       shape=domain.shape, kind=kind)


def dump_field(field: np.ndarray, path, domain: GridDomain, kind: str = "field") -> Path:
    """Write ``field`` with a header describing ``domain``."""
    domain.check_shape(field, "field")
    if kind not in ("field", "set"):
        raise ValueError("kind must be 'field' or 'set'")
    path = Path(path)
    head = _header_for(domain, kind).to_json()
    payload = np.ascontiguousarray(field, dtype="<f8").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii") + b"\n")
        fh.write(payload)
    return path


def dump_set(region: RegionSet, path, domain: GridDomain) -> Path:
    return dump_field(region.membership.astype(float), path, domain, kind="set")


def read_header(path) -> tuple[FieldHeader, int]:
    """Parse the header; returns it with the payload offset."""
    with open(path, "rb") as fh:
        line = fh.readline()
    try:
        d = json.loads(line.decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"{path}: corrupt header") from exc
    if not isinstance(d, dict) or d.get("magic") != MAGIC:
        raise FieldFormatError(f"{path}: not a field dump")
    if d.get("endian") != "little" or d.get("dtype") != "float64":
        raise FieldFormatError(f"{path}: unsupported encoding")
    try:
        h = FieldHeader(ny=int(d["ny"]), nx=int(d["nx"]), dx=float(d["dx"]), x0=float(d["x0"]),
                        y0=float(d["y0"]), shape=str(d["shape"]), kind=str(d["kind"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"{path}: incomplete header") from exc
    if h.ny < 1 or h.nx < 1 or not h.dx > 0:
        raise FieldFormatError(f"{path}: invalid dimensions")
    return h, len(line)


def load_field(path, domain: GridDomain | None = None) -> tuple[np.ndarray, FieldHeader]:
    """Read a dump; with ``domain`` the grid must match it."""
    h, off = read_header(path)
    raw = Path(path).read_bytes()[off:]
    expected = h.ny * h.nx * 8
    if len(raw) != expected:
        raise FieldFormatError(f"{path}: payload has {len(raw)} bytes, header implies {expected}")
    arr = np.frombuffer(raw, dtype="<f8").reshape(h.ny, h.nx).astype(float)
    if domain is not None:
        same = ((h.ny, h.nx) == (domain.ny, domain.nx) and np.isclose(h.dx, domain.dx, rtol=1e-12)
                and np.isclose(h.x0, domain.x0, rtol=0, atol=1e-12 * max(1.0, abs(domain.x0)))
                and np.isclose(h.y0, domain.y0, rtol=0, atol=1e-12 * max(1.0, abs(domain.y0)))
                and h.shape == domain.shape)
        if not same:
            raise FieldFormatError(f"{path}: grid does not match the domain")
    if h.kind == "set" and not np.isin(arr, (0.0, 1.0)).all():
        raise FieldFormatError(f"{path}: set payload must be 0/1")
    return arr, h


def load_set(path, domain: GridDomain) -> RegionSet:
    arr, h = load_field(path, domain)
    if h.kind != "set":
        raise FieldFormatError(f"{path}: not a set dump")
    return RegionSet(arr > 0.5)


# -- tables ------------------------------------------------------------------------


def config_hash(obj) -> str:
    """Short SHA-256 of the canonical JSON form of ``obj``."""
    text = json.dumps(obj, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def write_csv(rows, path, chash: str, descriptions: dict | None = None) -> Path:
    """Write rows with a leading ``config_hash`` column and a ``.schema.json`` next to it."""
    path = Path(path)
    rows = [{"config_hash": chash, **{k: _plain(v) for k, v in r.items()}} for r in rows]
    cols = ["config_hash"]
    for r in rows:
        cols += [k for k in r if k not in cols]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    descriptions = descriptions or {}
    schema = {"table": path.name, "columns": [
        {"name": c, "type": _kind(rows, c), "description": descriptions.get(c, "")} for c in cols]}
    path.with_suffix(".schema.json").write_text(json.dumps(schema, indent=2) + "\n")
    return path


def _kind(rows, col) -> str:
    for r in rows:
        v = r.get(col)
        if v is None:
            continue
        if isinstance(v, bool):
            return "bool"
        if isinstance(v, int):
            return "int"
        if isinstance(v, float):
            return "float"
        return "str"
    return "str"
