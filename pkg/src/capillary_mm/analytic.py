"""Closed-form references: the curvature operator, the contact operator, the
translating soliton in a strip and the shrinking circle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ZeroGradient(ValueError):
    """The curvature operator is undefined at a vanishing gradient."""


class PastExtinction(ValueError):
    """The shrinking circle has already vanished."""


def eval_F(p, X) -> float:
    """``-tr((I - p p^T / |p|^2) X)``; raises :class:`ZeroGradient` for ``p = 0``."""
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, dtype=float)
    n2 = float(p @ p)
    if n2 == 0.0:
        raise ZeroGradient("F is undefined at p = 0")
    P = np.eye(len(p)) - np.outer(p, p) / n2
    return -float(np.trace(P @ X))


def eval_B(p, normal, beta: float) -> float:
    """``<p, nu> + beta |p|`` at a boundary point with outward normal ``nu``."""
    p = np.asarray(p, dtype=float)
    return float(p @ np.asarray(normal, dtype=float) + beta * np.linalg.norm(p))


def eval_B_at(domain, face: int, p) -> float:
    """Contact operator at boundary face ``face`` of a domain."""
    return eval_B(p, domain.normals[face], float(domain.beta[face]))


@dataclass(frozen=True)
class SolitonParams:
    """Translating soliton in ``[-1, 1] x R`` for the contact value ``b``.

    ``alpha = -b / sqrt(1 - b^2)`` and the vertical speed is ``c = arctan(alpha)``;
    the subgraph ``{y <= u(x, t)}`` moves down at speed ``c`` (up when ``c < 0``).
    """

    b: float
    mu: float = 0.0

    def __post_init__(self):
        if not abs(self.b) < 1:
            raise ValueError("soliton needs |b| < 1")

    @property
    def alpha(self) -> float:
        return -self.b / math.sqrt(1 - self.b**2)

    @property
    def speed(self) -> float:
        return math.atan(self.alpha)

    @classmethod
    def from_alpha(cls, alpha: float, mu: float = 0.0) -> "SolitonParams":
        return cls(b=-alpha / math.sqrt(1 + alpha**2), mu=mu)


def soliton_profile(params: SolitonParams, x, t=0.0):
    """``(1/c) log|cos(c x)| - c t + mu`` with ``c = arctan(alpha)`` (flat for ``c = 0``)."""
    c = params.speed
    x = np.asarray(x, dtype=float)
    if c == 0.0:
        return np.full(x.shape, params.mu) if x.ndim else params.mu
    arg = np.cos(c * x)
    if np.any(np.abs(c * x) >= math.pi / 2):
        raise ValueError("soliton profile undefined where |c x| >= pi/2")
    out = np.log(np.abs(arg)) / c - c * t + params.mu
    return out if out.ndim else float(out)


def soliton_slope(params: SolitonParams, x):
    """``d/dx`` of the profile, ``-tan(c x)``."""
    return -np.tan(params.speed * np.asarray(x, dtype=float))


def soliton_field(params: SolitonParams, X, Y, t=0.0):
    """``W(x, y) = profile(x, t) - y``, positive on the subgraph."""
    return soliton_profile(params, X, t) - Y


def soliton_curvature(params: SolitonParams, x):
    """Curvature of the profile graph, positive where the subgraph is locally convex."""
    c = params.speed
    return c * np.cos(c * np.asarray(x, dtype=float))


def shrinking_circle_radius(r0: float, t: float) -> float:
    """``sqrt(r0^2 - 2 t)``; raises :class:`PastExtinction` for ``t >= r0^2 / 2``."""
    if r0 <= 0 or t < 0:
        raise ValueError("need r0 > 0 and t >= 0")
    if t >= 0.5 * r0**2:
        raise PastExtinction(f"circle of radius {r0} vanishes at t = {0.5 * r0 ** 2}")
    return math.sqrt(r0**2 - 2 * t)


def extinction_time(r0: float) -> float:
    return 0.5 * r0**2
