"""Sampled functions on uniform grids."""

from __future__ import annotations

import enum
import json
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


MIN_POINTS = 8


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples of a function on ``[0, domain_length]``.

    Periodic grids hold ``n`` samples at ``k L / n`` (the endpoint is implied
    by wraparound). Dirichlet grids hold ``n`` samples at ``k L / (n - 1)``,
    including both endpoints, which must be zero.
    """

    values: np.ndarray
    domain_length: float
    boundary: Boundary

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("GridFunction values must be one-dimensional")
        if vals.size < MIN_POINTS:
            raise ValueError(f"need at least {MIN_POINTS} samples, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("GridFunction values must be finite")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")
        boundary = Boundary(self.boundary)
        if boundary is Boundary.DIRICHLET and (vals[0] != 0.0 or vals[-1] != 0.0):
            raise ValueError("Dirichlet grid functions must vanish at both endpoints")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "domain_length", float(self.domain_length))
        object.__setattr__(self, "boundary", boundary)

    # -- construction -------------------------------------------------------
    @classmethod
    def periodic(cls, fn: Callable | float, n: int, length: float = 1.0) -> GridFunction:
        t = np.arange(n) * (length / n)
        return cls(_sample(fn, t), length, Boundary.PERIODIC)

    @classmethod
    def dirichlet(cls, fn: Callable | float, n: int, length: float = np.pi) -> GridFunction:
        """Sample ``fn`` on a closed grid; endpoint values are snapped to zero
        when they are below ``1e-12`` in magnitude and rejected otherwise."""
        t = np.linspace(0.0, length, n)
        vals = _sample(fn, t)
        for idx in (0, -1):
            if abs(vals[idx]) <= 1e-12:
                vals[idx] = 0.0
        return cls(vals, length, Boundary.DIRICHLET)

    def with_values(self, values) -> GridFunction:
        return GridFunction(values, self.domain_length, self.boundary)

    # -- grid geometry ------------------------------------------------------
    @property
    def n(self) -> int:
        return self.values.size

    @property
    def spacing(self) -> float:
        if self.boundary is Boundary.PERIODIC:
            return self.domain_length / self.n
        return self.domain_length / (self.n - 1)

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def interpolate(self, s) -> np.ndarray:
        """Piecewise-linear interpolation between nodes (periodic wrap when
        the grid is periodic)."""
        s = np.asarray(s, dtype=float)
        if self.boundary is Boundary.PERIODIC:
            return np.interp(s, self.t, self.values, period=self.domain_length)
        return np.interp(s, self.t, self.values)

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "boundary": self.boundary.value,
            "domain_length": self.domain_length,
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> GridFunction:
        unknown = set(data) - {"boundary", "domain_length", "values"}
        if unknown:
            raise ValueError(f"unknown GridFunction fields: {sorted(unknown)}")
        return cls(np.asarray(data["values"], dtype=float), data["domain_length"], Boundary(data["boundary"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> GridFunction:
        return cls.from_dict(json.loads(text))


def _sample(fn, t: np.ndarray) -> np.ndarray:
    if np.ndim(fn) > 0:
        vals = np.array(fn, dtype=float)
        if vals.shape != t.shape:
            raise ValueError(f"expected {t.size} samples, got shape {vals.shape}")
        return vals
    if callable(fn):
        vals = np.asarray(fn(t), dtype=float)
        return np.broadcast_to(vals, t.shape).copy()
    return np.full(t.shape, float(fn))


def quad_periodic(u: GridFunction, g: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """Trapezoid rule for ``int_0^L g(u(t)) dt`` on a periodic grid.

    For smooth periodic integrands the rule is spectrally accurate; it is
    exact for trigonometric polynomials of degree below ``n``.
    """
    if u.boundary is not Boundary.PERIODIC:
        raise ValueError("quad_periodic needs a periodic grid function")
    vals = u.values if g is None else np.asarray(g(u.values), dtype=float)
    return float(u.spacing * np.sum(vals))
