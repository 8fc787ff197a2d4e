"""Smooth maps of the plane with Jacobians."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np


class PlanarMap:
    """A smooth map ``R^2 -> R^2`` evaluated on arrays of points ``(..., 2)``.

    When no analytic Jacobian is supplied, central differences with step
    ``1e-6 * scale`` are used. ``scale`` is a typical length of the region of
    interest and sets finite-difference steps and classification thresholds.
    """

    def __init__(self, fn: Callable, jac: Callable | None = None, name: str = "custom", scale: float = 1.0):
        self._fn = fn
        self._jac = jac
        self.name = name
        self.scale = float(scale)

    def eval(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.asarray(self._fn(p), dtype=float)

    __call__ = eval

    def jacobian(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self._jac is not None:
            return np.asarray(self._jac(p), dtype=float)
        return self.fd_jacobian(p)

    def fd_jacobian(self, p, step: float | None = None) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        h = (step or 1e-6) * self.scale
        cols = []
        for e in (np.array([h, 0.0]), np.array([0.0, h])):
            cols.append((self.eval(p + e) - self.eval(p - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    def det(self, p) -> np.ndarray:
        J = self.jacobian(p)
        return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]

    def det_gradient(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        h = 1e-6 * self.scale
        gx = (self.det(p + [h, 0.0]) - self.det(p - [h, 0.0])) / (2 * h)
        gy = (self.det(p + [0.0, h]) - self.det(p - [0.0, h])) / (2 * h)
        return np.stack([gx, gy], axis=-1)

    def self_check(self, probes: int = 100, seed: int = 0, radius: float | None = None) -> float:
        """Largest relative deviation of the Jacobian from central differences
        at random probe points in a disk of ``radius`` (default ``scale``)."""
        rng = np.random.default_rng(seed)
        r = self.scale if radius is None else radius
        p = rng.uniform(-r, r, size=(probes, 2))
        J = self.jacobian(p)
        Jfd = self.fd_jacobian(p)
        norm = np.maximum(np.abs(J).reshape(probes, -1).max(axis=1), 1e-300)
        return float(np.max(np.abs(J - Jfd).reshape(probes, -1).max(axis=1) / norm))

    @classmethod
    def affine(cls, A, b=(0.0, 0.0), name: str = "affine") -> PlanarMap:
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        return cls(
            lambda p: p @ A.T + b,
            lambda p: np.broadcast_to(A, np.shape(p)[:-1] + (2, 2)).copy(),
            name=name,
        )


class ZZbarMap(PlanarMap):
    """``F(z) = sum c_jk z**j conj(z)**k`` with analytic derivatives.

    With ``a = dF/dz`` and ``b = dF/dzbar`` the real Jacobian is
    ``[[Re(a+b), -Im(a-b)], [Im(a+b), Re(a-b)]]`` and its determinant is
    ``|a|^2 - |b|^2``.
    """

    def __init__(self, terms: dict[tuple[int, int], complex], name: str = "zzbar", scale: float = 1.0):
        self.terms = {(int(j), int(k)): complex(c) for (j, k), c in terms.items() if c != 0}
        super().__init__(self._eval_points, self._jac_points, name=name, scale=scale)

    def _monomials(self, z, dj: int, dk: int):
        zb = np.conj(z)
        out = np.zeros_like(z)
        for (j, k), c in self.terms.items():
            if j < dj or k < dk:
                continue
            fac = c * _falling(j, dj) * _falling(k, dk)
            out = out + fac * z ** (j - dj) * zb ** (k - dk)
        return out

    @staticmethod
    def _z(p):
        p = np.asarray(p, dtype=float)
        return p[..., 0] + 1j * p[..., 1]

    def _eval_points(self, p):
        w = self._monomials(self._z(p), 0, 0)
        return np.stack([w.real, w.imag], axis=-1)

    def _jac_points(self, p):
        z = self._z(p)
        a = self._monomials(z, 1, 0)
        b = self._monomials(z, 0, 1)
        s, d = a + b, a - b
        return np.stack([np.stack([s.real, -d.imag], -1), np.stack([s.imag, d.real], -1)], -2)

    def det(self, p):
        z = self._z(p)
        a = self._monomials(z, 1, 0)
        b = self._monomials(z, 0, 1)
        return np.abs(a) ** 2 - np.abs(b) ** 2

    def det_gradient(self, p):
        z = self._z(p)
        a = self._monomials(z, 1, 0)
        b = self._monomials(z, 0, 1)
        a_z, a_zb = self._monomials(z, 2, 0), self._monomials(z, 1, 1)
        b_z, b_zb = a_zb, self._monomials(z, 0, 2)
        # d/dx = d/dz + d/dzbar, d/dy = i (d/dz - d/dzbar)
        a_x, a_y = a_z + a_zb, 1j * (a_z - a_zb)
        b_x, b_y = b_z + b_zb, 1j * (b_z - b_zb)
        gx = 2 * (np.conj(a) * a_x).real - 2 * (np.conj(b) * b_x).real
        gy = 2 * (np.conj(a) * a_y).real - 2 * (np.conj(b) * b_y).real
        return np.stack([gx, gy], axis=-1)

    def to_dict(self) -> dict:
        return {"terms": [[j, k, c.real, c.imag] for (j, k), c in sorted(self.terms.items())]}


def _falling(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


def zzbar_map(terms: dict, name: str = "zzbar", scale: float = 1.0) -> ZZbarMap:
    return ZZbarMap(terms, name=name, scale=scale)


def paper_map() -> ZZbarMap:
    """``z -> z**7 + 5 conj(z)**4 + z``."""
    return ZZbarMap({(7, 0): 1, (0, 4): 5, (1, 0): 1}, name="z7")


def fold_normal_form() -> PlanarMap:
    return PlanarMap(
        lambda p: np.stack([p[..., 0], p[..., 1] ** 2], -1),
        lambda p: _jac(np.ones_like(p[..., 0]), 0 * p[..., 0], 0 * p[..., 0], 2 * p[..., 1]),
        name="fold",
    )


def cusp_normal_form() -> PlanarMap:
    return PlanarMap(
        lambda p: np.stack([p[..., 0], p[..., 1] ** 3 + p[..., 0] * p[..., 1]], -1),
        lambda p: _jac(np.ones_like(p[..., 0]), 0 * p[..., 0], p[..., 1], 3 * p[..., 1] ** 2 + p[..., 0]),
        name="cusp",
    )


def fold_circle_map() -> PlanarMap:
    """``(x, y) -> (x^2 + y^2, x - y)``; its critical set is the line ``x = -y``."""
    return PlanarMap(
        lambda p: np.stack([p[..., 0] ** 2 + p[..., 1] ** 2, p[..., 0] - p[..., 1]], -1),
        lambda p: _jac(2 * p[..., 0], 2 * p[..., 1], np.ones_like(p[..., 0]), -np.ones_like(p[..., 0])),
        name="fold-circle",
    )


def _jac(a, b, c, d):
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


PRESETS: dict[str, Callable[[], PlanarMap]] = {
    "z7": paper_map,
    "identity": lambda: PlanarMap.affine(np.eye(2), name="identity"),
    "conj": lambda: zzbar_map({(0, 1): 1}, name="conj"),
    "square": lambda: zzbar_map({(2, 0): 1}, name="square"),
    "fold": fold_normal_form,
    "cusp": cusp_normal_form,
    "fold-circle": fold_circle_map,
}


def get_preset(name: str) -> PlanarMap:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown planar preset {name!r}; choose from {sorted(PRESETS)}") from None


def map_from_dict(data: dict) -> ZZbarMap:
    """Build a polynomial-in-(z, conj z) map from ``{"terms": [[j, k, re, im], ...]}``."""
    unknown = set(data) - {"terms", "name", "scale"}
    if unknown:
        raise ValueError(f"unknown map fields: {sorted(unknown)}")
    terms = {}
    for row in data["terms"]:
        j, k, re = int(row[0]), int(row[1]), float(row[2])
        im = float(row[3]) if len(row) > 3 else 0.0
        terms[(j, k)] = terms.get((j, k), 0) + complex(re, im)
    return ZZbarMap(terms, name=data.get("name", "zzbar"), scale=float(data.get("scale", 1.0)))
