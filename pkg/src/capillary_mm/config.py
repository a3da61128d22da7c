"""Run configuration: a YAML file with a fixed schema.

Unknown keys are rejected and every violation is reported with its field
path, e.g. ``beta.left: |beta| must be < 1``.
"""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .grid import WALL_NAMES, GridDomain, RegionSet, build_disk, build_polygon, build_strip, set_beta


class ConfigError(ValueError):
    """Parse or validation failure; ``errors`` lists ``(path, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


@dataclass
class DomainSpec:
    shape: str = "strip"
    nx: int = 64
    width: float = 2.0
    height: float = 2.0
    y0: typing.Optional[float] = None
    radius: float = 1.0
    center: typing.List[float] = field(default_factory=lambda: [0.0, 0.0])
    vertices: typing.Optional[typing.List[typing.List[float]]] = None

    def check(self, path, errors):
        if self.shape not in ("strip", "disk", "polygon"):
            errors.append((f"{path}.shape", "must be one of strip, disk, polygon"))
        if self.nx < 8:
            errors.append((f"{path}.nx", "must be at least 8"))
        if self.shape == "strip":
            for k in ("width", "height"):
                if not getattr(self, k) > 0:
                    errors.append((f"{path}.{k}", "must be positive"))
        if self.shape == "disk":
            if not self.radius > 0:
                errors.append((f"{path}.radius", "must be positive"))
            if self.nx < 16:
                errors.append((f"{path}.nx", "disk needs at least 16 cells across"))
            if len(self.center) != 2:
                errors.append((f"{path}.center", "must have two entries"))
        if self.shape == "polygon" and (self.vertices is None or len(self.vertices) < 3):
            errors.append((f"{path}.vertices", "polygon needs at least three vertices"))

    def build(self) -> GridDomain:
        if self.shape == "strip":
            return build_strip(self.width, self.height, self.nx, y0=self.y0)
        if self.shape == "disk":
            return build_disk(self.radius, self.nx, self.center)
        return build_polygon(self.vertices, self.nx)


@dataclass
class InitialSpec:
    """Initial set or field.

    ``kind`` is one of ``soliton`` (subgraph of the translating profile for the
    side-wall contact value), ``disk``, ``half_plane`` (``y <= slope x + offset``),
    ``plane`` (field ``slope x + y + offset``), ``radial`` (field ``|x - center|``)
    or ``file`` (a field dump).
    """

    kind: str = "half_plane"
    b: typing.Optional[float] = None
    mu: float = 0.0
    radius: float = 0.5
    center: typing.List[float] = field(default_factory=lambda: [0.0, 0.0])
    slope: float = 0.0
    offset: float = 0.0
    path: typing.Optional[str] = None

    SET_KINDS = ("soliton", "disk", "half_plane")
    FIELD_KINDS = ("plane", "radial", "file")

    def check(self, path, errors):
        if self.kind not in self.SET_KINDS + self.FIELD_KINDS:
            errors.append((f"{path}.kind", f"must be one of {', '.join(self.SET_KINDS + self.FIELD_KINDS)}"))
        if self.kind == "disk" and not self.radius > 0:
            errors.append((f"{path}.radius", "must be positive"))
        if self.kind == "file" and not self.path:
            errors.append((f"{path}.path", "required for kind 'file'"))
        if self.b is not None and not abs(self.b) < 1:
            errors.append((f"{path}.b", "|b| must be < 1"))
        if len(self.center) != 2:
            errors.append((f"{path}.center", "must have two entries"))

    @property
    def is_set(self) -> bool:
        return self.kind in self.SET_KINDS

    def level_function(self, domain: GridDomain, beta_side: float | None = None) -> np.ndarray:
        """Level function negative on the initial set (set kinds) or the field itself."""
        from .analytic import SolitonParams, soliton_profile
        from .fieldio import load_field

        X, Y = domain.coords
        cx, cy = self.center
        if self.kind == "soliton":
            b = self.b if self.b is not None else beta_side
            if b is None:
                raise ConfigError([("initial.b", "soliton needs b or a side-wall beta")])
            out = Y - soliton_profile(SolitonParams(b, self.mu), X, 0.0)
        elif self.kind == "disk":
            out = np.hypot(X - cx, Y - cy) - self.radius
        elif self.kind == "half_plane":
            out = Y - (self.slope * X + self.offset)
        elif self.kind == "plane":
            out = self.slope * X + Y + self.offset
        elif self.kind == "radial":
            out = np.hypot(X - cx, Y - cy)
        else:
            out, _ = load_field(self.path, domain)
        return np.where(domain.mask, out, 1.0 if self.is_set else 0.0)

    def region(self, domain: GridDomain, beta_side: float | None = None) -> RegionSet:
        return RegionSet.from_levels(self.level_function(domain, beta_side), domain.mask)


@dataclass
class SolverSpec:
    tol: float = 1e-6
    max_iter: int = 20000

    def check(self, path, errors):
        if not self.tol > 0:
            errors.append((f"{path}.tol", "must be positive"))
        if self.max_iter < 1:
            errors.append((f"{path}.max_iter", "must be at least 1"))


@dataclass
class OutputSpec:
    dir: str = "out"
    snapshot_every: int = 1

    def check(self, path, errors):
        if self.snapshot_every < 1:
            errors.append((f"{path}.snapshot_every", "must be at least 1"))


@dataclass
class RunConfig:
    domain: DomainSpec = field(default_factory=DomainSpec)
    beta: typing.Any = 0.0
    initial: InitialSpec = field(default_factory=InitialSpec)
    h: float = 0.01
    T: typing.Optional[float] = None
    steps: int = 10
    dlam: typing.Optional[float] = None
    n_levels: int = 256
    solver: SolverSpec = field(default_factory=SolverSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0

    def check(self, path, errors):
        if not self.h > 0:
            errors.append(("h", "time step must be positive"))
        if self.T is not None and not self.T > 0:
            errors.append(("T", "must be positive"))
        if self.steps < 1:
            errors.append(("steps", "must be at least 1"))
        if self.dlam is not None and not self.dlam > 0:
            errors.append(("dlam", "must be positive"))
        if self.n_levels < 1:
            errors.append(("n_levels", "must be at least 1"))
        _check_beta(self.beta, errors)

    def build_domain(self) -> GridDomain:
        d = self.domain.build()
        return set_beta(d, self.beta)

    def side_beta(self) -> float | None:
        b = self.beta
        if isinstance(b, (int, float)):
            return float(b)
        if isinstance(b, dict):
            for k in ("left", "right", "else"):
                if k in b:
                    return float(b[k])
        return None

    def solver_config(self):
        from .solver import SolverConfig

        return SolverConfig(tol=self.solver.tol, max_iter=self.solver.max_iter)

    @property
    def n_steps(self) -> int:
        if self.T is not None:
            return int(math.floor(self.T / self.h + 1e-9))
        return self.steps

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _check_beta(beta, errors):
    if isinstance(beta, bool) or beta is None:
        errors.append(("beta", "must be a number or a mapping of walls to numbers"))
        return
    if isinstance(beta, (int, float)):
        if not abs(beta) < 1:
            errors.append(("beta", "|beta| must be < 1"))
        return
    if isinstance(beta, dict):
        for k, v in beta.items():
            if k not in WALL_NAMES and k != "else":
                errors.append((f"beta.{k}", "unknown wall (left, right, bottom, top, else)"))
            elif isinstance(v, bool) or not isinstance(v, (int, float)):
                errors.append((f"beta.{k}", "must be a number"))
            elif not abs(v) < 1:
                errors.append((f"beta.{k}", "|beta| must be < 1"))
        return
    errors.append(("beta", "must be a number or a mapping of walls to numbers"))


def _coerce(value, tp, path, errors):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if tp is typing.Any:
        return value
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(value, inner, path, errors)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            errors.append((path, "must be a mapping"))
            return tp()
        return _build(tp, value, path, errors)
    if origin in (list, typing.List):
        if not isinstance(value, (list, tuple)):
            errors.append((path, "must be a list"))
            return value
        return [_coerce(v, args[0], f"{path}[{i}]", errors) for i, v in enumerate(value)] if args else list(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append((path, "must be a number"))
            return value
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append((path, "must be an integer"))
            return value
        return value
    if tp is str:
        if not isinstance(value, str):
            errors.append((path, "must be a string"))
        return value
    return value


def _build(cls, data: dict, prefix: str, errors):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for k in data:
        if k not in names:
            errors.append((f"{prefix}.{k}" if prefix else str(k), "unknown key"))
    kw = {}
    for k in names:
        if k in data:
            kw[k] = _coerce(data[k], hints[k], f"{prefix}.{k}" if prefix else k, errors)
    try:
        obj = cls(**kw)
    except TypeError as exc:
        errors.append((prefix or "<root>", str(exc)))
        return cls()
    if hasattr(obj, "check"):
        obj.check(prefix, errors)
    return obj


def parse_config(data) -> RunConfig:
    """Validate a mapping; raises :class:`ConfigError` listing every violation."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "config must be a mapping")])
    errors: list = []
    cfg = _build(RunConfig, data, "", errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([("<file>", f"cannot read {path}: {exc.strerror}")]) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("<file>", f"parse error: {exc}")]) from exc
    return parse_config(data)
