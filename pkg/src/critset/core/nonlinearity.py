"""Scalar nonlinearities ``f`` with their first derivatives."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.optimize import brentq

PRESETS = ("sin", "tanh")


@dataclass(frozen=True)
class Nonlinearity:
    """A smooth ``f: R -> R`` given by polynomial coefficients or a preset name.

    Polynomial coefficients are in ascending order, so ``x**3 - x`` is
    ``Nonlinearity.polynomial([0, -1, 0, 1])``.
    """

    kind: str
    coefficients: tuple[float, ...] = ()
    name: str = ""
    _poly: Polynomial | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "polynomial":
            coeffs = tuple(float(c) for c in self.coefficients) or (0.0,)
            object.__setattr__(self, "coefficients", coeffs)
            object.__setattr__(self, "_poly", Polynomial(coeffs))
        elif self.kind == "preset":
            if self.name not in PRESETS:
                raise ValueError(f"unknown preset nonlinearity {self.name!r}; choose from {PRESETS}")
        else:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")

    # -- constructors -------------------------------------------------------
    @classmethod
    def polynomial(cls, coefficients) -> Nonlinearity:
        return cls("polynomial", tuple(coefficients))

    @classmethod
    def preset(cls, name: str) -> Nonlinearity:
        return cls("preset", name=name)

    @classmethod
    def from_callable(cls, fn: Callable, interval: tuple[float, float] = (-5.0, 5.0), degree: int = 15) -> Nonlinearity:
        """Polynomial approximation of an arbitrary callable on ``interval``
        (Chebyshev least squares on 4 * degree points)."""
        lo, hi = interval
        x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(np.pi * (np.arange(4 * degree) + 0.5) / (4 * degree))
        cheb = Chebyshev.fit(x, np.asarray(fn(x), dtype=float), degree, domain=[lo, hi])
        return cls.polynomial(cheb.convert(kind=Polynomial, domain=[-1, 1], window=[-1, 1]).coef)

    @classmethod
    def parse(cls, spec: str) -> Nonlinearity:
        """Parse ``"sin"``, ``"tanh"`` or ``"poly:c0,c1,..."``."""
        spec = spec.strip()
        if spec in PRESETS:
            return cls.preset(spec)
        if spec.startswith("poly:"):
            return cls.polynomial([float(c) for c in spec[5:].split(",") if c.strip()])
        raise ValueError(f"cannot parse nonlinearity {spec!r}")

    def spec(self) -> str:
        if self.kind == "preset":
            return self.name
        return "poly:" + ",".join(repr(c) for c in self.coefficients)

    # -- evaluation ---------------------------------------------------------
    def derivative(self, order: int) -> Callable:
        if self.kind == "polynomial":
            return self._poly.deriv(order) if order else self._poly
        return _PRESET_DERIVS[self.name][order]

    def f(self, x):
        return self.derivative(0)(np.asarray(x, dtype=float))

    def df(self, x):
        return self.derivative(1)(np.asarray(x, dtype=float))

    def d2f(self, x):
        return self.derivative(2)(np.asarray(x, dtype=float))

    def d3f(self, x):
        return self.derivative(3)(np.asarray(x, dtype=float))

    __call__ = f

    # -- structure queries --------------------------------------------------
    def derivative_range(self) -> tuple[float, float] | None:
        """Closure of the image of ``f'`` over the whole line, when known exactly.

        Returns ``(inf, sup)`` with infinite entries allowed, or None when the
        range has to be sampled.
        """
        if self.kind == "preset":
            return {"sin": (-1.0, 1.0), "tanh": (0.0, 1.0)}[self.name]
        dp = self._poly.deriv(1).trim()
        coef = dp.coef
        deg = len(coef) - 1
        if deg == 0:
            return (float(coef[0]), float(coef[0]))
        lead = coef[-1]
        if deg % 2 == 1:
            return (-np.inf, np.inf)
        crit = _real_roots(dp.deriv(1))
        extreme = float(min(dp(crit))) if lead > 0 else float(max(dp(crit)))
        return (extreme, np.inf) if lead > 0 else (-np.inf, extreme)

    def solve_derivative(self, value: float, lo: float = -20.0, hi: float = 20.0) -> np.ndarray:
        """Real solutions of ``f'(x) = value`` in ``[lo, hi]``, sorted."""
        if self.kind == "polynomial":
            r = _real_roots(self._poly.deriv(1) - value)
            return np.sort(r[(r >= lo) & (r <= hi)])
        g = lambda x: self.df(x) - value
        xs = np.linspace(lo, hi, 20001)
        vals = g(xs)
        out = list(xs[vals == 0.0])
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            out.append(brentq(g, xs[i], xs[i + 1], xtol=1e-15))
        return np.sort(np.array(out, dtype=float))

    def value_preimage_bound(self, lo: float, hi: float, xmax: float = 20.0, samples: int = 8001) -> float:
        """Largest ``|x| <= xmax`` with ``lo <= f(x) <= hi`` (0 if none)."""
        xs = np.linspace(-xmax, xmax, samples)
        fx = self.f(xs)
        hit = (fx >= lo) & (fx <= hi)
        # include sign crossings of f - lo and f - hi between samples
        for level in (lo, hi):
            d = fx - level
            hit[:-1] |= np.sign(d[:-1]) * np.sign(d[1:]) < 0
            hit[1:] |= np.sign(d[:-1]) * np.sign(d[1:]) < 0
        return float(np.max(np.abs(xs[hit]))) if hit.any() else 0.0

    def is_generic(self) -> bool | None:
        """Check that ``f''`` has isolated roots none of which is a root of ``f'``.

        Polynomials are tested with the resultant of ``f'`` and ``f''``.
        Presets return None (the property is assumed, not checked).
        """
        if self.kind == "preset":
            return None
        d1 = self._poly.deriv(1).trim().coef
        d2 = self._poly.deriv(2).trim().coef
        if len(d2) == 1 and d2[0] == 0.0:
            return False
        if len(d2) == 1:
            return True
        res = resultant(d1, d2)
        scale = max(1.0, np.max(np.abs(d1))) ** (len(d2) - 1) * max(1.0, np.max(np.abs(d2))) ** (len(d1) - 1)
        return bool(abs(res) > 1e-10 * scale)


def resultant(p, q) -> float:
    """Resultant of two polynomials (ascending coefficients) via the Sylvester matrix."""
    p = np.trim_zeros(np.asarray(p, dtype=float), "b")[::-1]
    q = np.trim_zeros(np.asarray(q, dtype=float), "b")[::-1]
    m, n = len(p) - 1, len(q) - 1
    if m < 0 or n < 0:
        return 0.0
    size = m + n
    if size == 0:
        return 1.0
    S = np.zeros((size, size))
    for i in range(n):
        S[i, i : i + m + 1] = p
    for i in range(m):
        S[n + i, i : i + n + 1] = q
    return float(np.linalg.det(S))


def _real_roots(poly: Polynomial, tol: float = 1e-9) -> np.ndarray:
    poly = poly.trim()
    if len(poly.coef) <= 1:
        return np.zeros(0)
    r = poly.roots()
    return np.sort(r[np.abs(r.imag) <= tol * np.maximum(1.0, np.abs(r))].real)


def _sech2(x):
    return 1.0 / np.cosh(x) ** 2


_PRESET_DERIVS = {
    "sin": (np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
    "tanh": (
        np.tanh,
        _sech2,
        lambda x: -2.0 * np.tanh(x) * _sech2(x),
        lambda x: (4.0 * np.tanh(x) ** 2 - 2.0 * _sech2(x)) * _sech2(x),
    ),
}
