"""Potential pairs of ``v''' - h1 v' - h0 v = 0`` and locally convex curves on the sphere.

Forward map: when every solution is ``2 pi``-periodic, the normalized first
row of the fundamental frame is a closed locally convex curve. Inverse map:
rescaling a locally convex curve by ``det(g, g', g'')**(-1/3)`` gives ``V``
with ``det(V, V', V'') = 1``, so ``V'''`` lies in the span of ``V`` and
``V'`` and the coefficients are the potentials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, logm

from .core.grid import Boundary, GridFunction
from .core.integrate import IntegratorConfig, integrate_linear_system, linear_coefficients
from .core.spectral import spectral_diff_array
from .errors import (
    DegenerateNormalizationError,
    InsufficientResolutionError,
    NonMembershipError,
    NotLocallyConvexError,
)

PERIOD = 2 * np.pi
MEMBER_TOL = 1e-6
LSQ_TOL = 1e-5
CONVEX_TOL = 1e-10


@dataclass(frozen=True)
class PotentialPair:
    h0: GridFunction
    h1: GridFunction

    def __post_init__(self):
        for h in (self.h0, self.h1):
            if h.boundary is not Boundary.PERIODIC or abs(h.domain_length - PERIOD) > 1e-12:
                raise ValueError("potentials must be periodic on [0, 2 pi]")
        if self.h0.n != self.h1.n:
            raise ValueError("h0 and h1 must share a grid")

    @classmethod
    def constant(cls, h0: float, h1: float, n: int = 1024) -> PotentialPair:
        return cls(GridFunction.periodic(h0, n, PERIOD), GridFunction.periodic(h1, n, PERIOD))

    @classmethod
    def from_arrays(cls, h0, h1) -> PotentialPair:
        return cls(GridFunction(np.asarray(h0, float), PERIOD, Boundary.PERIODIC),
                   GridFunction(np.asarray(h1, float), PERIOD, Boundary.PERIODIC))

    @property
    def n(self) -> int:
        return self.h0.n

    def distance(self, other: PotentialPair) -> float:
        return float(max(np.max(np.abs(self.h0.values - other.h0.values)),
                         np.max(np.abs(self.h1.values - other.h1.values))))

    def to_dict(self) -> dict:
        return {"h0": self.h0.to_dict(), "h1": self.h1.to_dict()}


@dataclass
class Frame:
    """Dense samples ``M(t)`` of the fundamental frame with ``M(0) = I``.

    Row ``j`` of ``M`` holds the ``j``-th derivatives of the three solutions.
    """

    t: np.ndarray
    M: np.ndarray

    @property
    def closure(self) -> np.ndarray:
        return self.M[-1]

    def closure_residual(self) -> float:
        return float(np.linalg.norm(self.closure - np.eye(3), 2))

    def on_grid(self, n: int) -> np.ndarray:
        """Frames at the ``n`` periodic grid nodes."""
        stride = (len(self.t) - 1) // n
        return self.M[: n * stride : stride]


@dataclass
class SphereCurve:
    """Unit vectors ``gamma(t_k)`` on a uniform periodic grid over ``[0, 2 pi]``."""

    samples: np.ndarray
    based: bool = False

    def __post_init__(self):
        g = np.asarray(self.samples, dtype=float)
        if g.ndim != 2 or g.shape[1] != 3 or g.shape[0] < 8:
            raise ValueError("samples must have shape (n, 3) with n >= 8")
        norms = np.linalg.norm(g, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise ValueError("sphere curve samples must be unit vectors")
        self.samples = g
        self._cache = {}

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n) * (PERIOD / self.n)

    def derivative(self, order: int) -> np.ndarray:
        if order not in self._cache:
            self._cache[order] = spectral_diff_array(self.samples, PERIOD, order, chop=True)
        return self._cache[order]

    def convexity(self) -> np.ndarray:
        """``det(gamma, gamma', gamma'')`` at every sample."""
        return np.linalg.det(np.stack([self.samples, self.derivative(1), self.derivative(2)], axis=-1))

    def is_locally_convex(self, tol: float = CONVEX_TOL) -> bool:
        scale = max(1.0, float(np.max(np.linalg.norm(self.derivative(1), axis=1))) ** 3)
        return bool(np.min(self.convexity()) > tol * scale)

    def check_based(self, tol: float = 1e-6) -> bool:
        """``gamma(0) = e1``, ``gamma'(0)`` a positive multiple of ``e2`` and
        ``det(gamma, gamma', gamma'')(0) = 1``."""
        g0, d0 = self.samples[0], self.derivative(1)[0]
        ok = np.allclose(g0, [1, 0, 0], atol=tol) and abs(d0[0]) < tol and abs(d0[2]) < tol and d0[1] > 0
        return bool(ok and abs(self.convexity()[0] - 1.0) < tol)

    def to_dict(self) -> dict:
        return {"samples": self.samples.tolist(), "based": self.based}

    @classmethod
    def from_dict(cls, data: dict) -> SphereCurve:
        unknown = set(data) - {"samples", "based"}
        if unknown:
            raise ValueError(f"unknown SphereCurve fields: {sorted(unknown)}")
        return cls(np.asarray(data["samples"], dtype=float), bool(data.get("based", False)))


def fundamental_frame_3(p: PotentialPair, cfg: IntegratorConfig | None = None) -> Frame:
    """Integrate the companion system of ``v''' = h1 v' + h0 v`` from ``M(0) = I``.

    The step count is rounded up to a multiple of the grid size so that grid
    nodes are integration nodes.
    """
    cfg = cfg or IntegratorConfig()
    n = p.n
    samples = np.zeros((n, 3, 3))
    samples[:, 0, 1] = 1.0
    samples[:, 1, 2] = 1.0
    samples[:, 2, 0] = p.h0.values
    samples[:, 2, 1] = p.h1.values
    A = linear_coefficients(p.h0.t, samples, period=PERIOD)
    steps = -(-max(cfg.step_count, n) // n) * n
    traj = integrate_linear_system(A, np.eye(3), (0.0, PERIOD), IntegratorConfig(steps, cfg.method, cfg.tolerance))
    return Frame(traj.t, traj.y)


def is_in_Cstar3(p: PotentialPair, tol: float = MEMBER_TOL, frame: Frame | None = None) -> tuple[bool, float]:
    """All solutions periodic, i.e. ``|| M(2 pi) - I || <= tol``."""
    frame = frame or fundamental_frame_3(p)
    r = frame.closure_residual()
    return r <= tol, r


def periodic_frames(frame: Frame, n: int) -> np.ndarray:
    """Grid frames times ``exp(-(t / 2 pi) log M(2 pi))``.

    For exact members ``M(2 pi) = I`` and nothing changes; for numerical
    members the factor removes the closure defect, leaving the frame
    exactly periodic. Third derivatives of the curve would otherwise amplify
    the seam jump by roughly ``n**3``.
    """
    L = np.real(logm(frame.closure))
    t = np.arange(n) * (PERIOD / n)
    corr = np.stack([expm(-(s / PERIOD) * L) for s in t])
    return frame.on_grid(n) @ corr


def curve_from_potentials(p: PotentialPair, tol: float = MEMBER_TOL, cfg: IntegratorConfig | None = None) -> SphereCurve:
    """Normalized first row of the frame.

    Raises
    ------
    NonMembershipError
        If the frame does not close within ``tol``.
    DegenerateNormalizationError
        If the first row vanishes at a sample.
    NotLocallyConvexError
        If the resulting curve fails the convexity certificate.
    """
    frame = fundamental_frame_3(p, cfg)
    ok, r = is_in_Cstar3(p, tol, frame)
    if not ok:
        raise NonMembershipError(f"frame closure residual {r:.3e} exceeds {tol:.0e}; not all solutions are periodic")
    rows = periodic_frames(frame, p.n)[:, 0, :]
    norms = np.linalg.norm(rows, axis=1)
    if np.min(norms) < 1e-12:
        raise DegenerateNormalizationError("the solutions have a common zero")
    curve = SphereCurve(rows / norms[:, None])
    if not curve.is_locally_convex():
        raise NotLocallyConvexError("forward curve fails the convexity certificate")
    curve.based = curve.check_based()
    return curve


def potentials_from_curve(c: SphereCurve, tol: float = LSQ_TOL) -> tuple[PotentialPair, float]:
    """Recover ``(h0, h1)`` with ``V''' = h0 V + h1 V'`` from a locally convex curve.

    Returns the pair and the largest pointwise least-squares residual
    relative to ``max |V'''|``.

    Raises
    ------
    NotLocallyConvexError
        If ``det(gamma, gamma', gamma'')`` is not positive everywhere.
    InsufficientResolutionError
        If the relative residual exceeds ``tol``.
    """
    if not c.is_locally_convex():
        raise NotLocallyConvexError(f"det(gamma, gamma', gamma'') reaches {np.min(c.convexity()):.3e}")
    r = c.convexity() ** (-1.0 / 3.0)
    V = r[:, None] * c.samples
    V1 = spectral_diff_array(V, PERIOD, 1, chop=True)
    V3 = spectral_diff_array(V, PERIOD, 3, chop=True)
    B = np.stack([V, V1], axis=-1)  # (n, 3, 2)
    BtB = np.einsum("nki,nkj->nij", B, B)
    Btb = np.einsum("nki,nk->ni", B, V3)
    coef = np.linalg.solve(BtB, Btb[..., None])[..., 0]
    resid = np.linalg.norm(V3 - np.einsum("nki,ni->nk", B, coef), axis=1)
    rel = float(np.max(resid) / max(np.max(np.linalg.norm(V3, axis=1)), 1e-300))
    if rel > tol:
        raise InsufficientResolutionError(f"least-squares residual {rel:.2e} exceeds {tol:.0e}; refine the grid")
    return PotentialPair.from_arrays(coef[:, 0], coef[:, 1]), rel


def frame_determinant(c: SphereCurve) -> np.ndarray:
    """``det(V, V', V'')`` after the ``r``-normalization (identically 1 in the continuum)."""
    r = c.convexity() ** (-1.0 / 3.0)
    V = r[:, None] * c.samples
    return np.linalg.det(np.stack([V, spectral_diff_array(V, PERIOD, 1, chop=True),
                                   spectral_diff_array(V, PERIOD, 2, chop=True)], axis=-1))


def roundtrip_residual(p: PotentialPair, cfg: IntegratorConfig | None = None) -> float:
    """Max-norm distance between ``p`` and the potentials of its curve."""
    q, _ = potentials_from_curve(curve_from_potentials(p, cfg=cfg))
    return p.distance(q)


# -- example curves and members ----------------------------------------------

def circle_curve(alpha: float, n: int = 1024) -> SphereCurve:
    """``(cos a, sin a cos t, sin a sin t)``; locally convex for ``0 < a < pi/2``."""
    return perturbed_circle(alpha, 0.0, n)


def perturbed_circle(alpha: float, eps: float, n: int = 1024) -> SphereCurve:
    """Colatitude ``alpha + eps cos t`` and longitude ``t + eps sin 2t``."""
    t = np.arange(n) * (PERIOD / n)
    a = alpha + eps * np.cos(t)
    phi = t + eps * np.sin(2 * t)
    return SphereCurve(np.column_stack([np.cos(a), np.sin(a) * np.cos(phi), np.sin(a) * np.sin(phi)]))


def project_to_cstar3(p: PotentialPair, iters: int = 20, tol: float = MEMBER_TOL) -> PotentialPair | None:
    """Gauss-Newton on ``M(2 pi) - I`` over constant shifts ``(h0 + a, h1 + b)``.

    Two parameters against eight independent closure conditions: this
    succeeds only when the defect happens to lie in their span. Returns None
    when no member is reached.
    """
    def resid(ab):
        q = PotentialPair(p.h0.with_values(p.h0.values + ab[0]), p.h1.with_values(p.h1.values + ab[1]))
        return (fundamental_frame_3(q).closure - np.eye(3)).ravel(), q

    ab = np.zeros(2)
    for _ in range(iters):
        r, q = resid(ab)
        if np.linalg.norm(r) <= tol:
            return q
        J = np.empty((9, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = 1e-7
            J[:, j] = (resid(ab + e)[0] - r) / 1e-7
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        if not np.all(np.isfinite(step)) or np.linalg.norm(step) < 1e-14:
            break
        ab = ab + step
    r, q = resid(ab)
    return q if np.linalg.norm(r) <= tol else None
