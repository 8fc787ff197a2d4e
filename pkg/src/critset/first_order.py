"""The periodic first-order operator ``F1(u) = u' + f(u)`` on ``[0, 1]``.

Its derivative ``v -> v' + f'(u) v`` is singular exactly when the mean of
``f'(u)`` vanishes; that mean is the critical functional ``phi1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core.grid import Boundary, GridFunction, quad_periodic
from .core.integrate import IntegratorConfig, integrate_linear_system, linear_coefficients
from .core.nonlinearity import Nonlinearity
from .core.roots import bracket_nearest, expanding_bracket
from .core.spectral import fourier_diff_matrix, resample_periodic, spectral_derivative
from .errors import CorrectionWindowError, NotProjectableError

PROJECT_TOL = 1e-12
HOMOTOPY_TOL = 1e-8
X_MAX = 20.0


@dataclass(frozen=True)
class FirstOrderProblem:
    f: Nonlinearity
    grid_size: int = 1024

    def __post_init__(self):
        if self.grid_size < 256:
            raise ValueError("grid_size must be at least 256")

    def grid(self, fn) -> GridFunction:
        """Sample ``fn`` (callable or constant) on the problem's periodic grid."""
        return GridFunction.periodic(fn, self.grid_size, 1.0)


def _check(u: GridFunction):
    if u.boundary is not Boundary.PERIODIC or u.domain_length != 1.0:
        raise ValueError("first-order operators act on periodic grid functions over [0, 1]")


def apply_F1(p: FirstOrderProblem, u: GridFunction) -> GridFunction:
    _check(u)
    return u.with_values(spectral_derivative(u, 1).values + p.f.f(u.values))


def phi1(p: FirstOrderProblem, u: GridFunction) -> float:
    """Mean of ``f'(u)`` over one period."""
    _check(u)
    return quad_periodic(u, p.f.df)


def phi12(p: FirstOrderProblem, u: GridFunction) -> float:
    """Mean of ``f''(u)`` over one period."""
    _check(u)
    return quad_periodic(u, p.f.d2f)


def is_in_sigma2(p: FirstOrderProblem, u: GridFunction, tol: float = 1e-8) -> bool:
    return abs(phi1(p, u)) <= tol and abs(phi12(p, u)) <= tol


def floquet_multiplier(p: FirstOrderProblem, u: GridFunction) -> float:
    """Period map of ``v' + f'(u) v = 0``: ``exp(-phi1(u))``."""
    return float(np.exp(-phi1(p, u)))


def linearization_multiplier(p: FirstOrderProblem, u: GridFunction, cfg: IntegratorConfig | None = None) -> float:
    """``v(1)`` for ``v' = -f'(u(t)) v, v(0) = 1`` integrated numerically with
    ``f'(u)`` interpolated linearly between nodes."""
    _check(u)
    h = p.f.df(u.values)
    A = linear_coefficients(u.t, -h[:, None, None], period=1.0)
    return float(integrate_linear_system(A, [1.0], (0.0, 1.0), cfg).final[0])


def linearization_eigenvalue(p: FirstOrderProblem, u: GridFunction, size: int = 257) -> float:
    """Real eigenvalue of the collocation matrix of ``v -> v' + f'(u) v``.

    ``f'(u)`` is resampled spectrally onto an odd grid of ``size`` points;
    the eigenvalue with the smallest imaginary part is returned.
    """
    _check(u)
    if size % 2 == 0:
        raise ValueError("size must be odd")
    h = resample_periodic(p.f.df(u.values), size)
    L = fourier_diff_matrix(size, 1.0) + np.diag(h)
    ev = np.linalg.eigvals(L)
    return float(ev[np.argmin(np.abs(ev.imag))].real)


def project_to_C1(p: FirstOrderProblem, u: GridFunction, span: float = 10.0) -> GridFunction:
    """Constant shift ``u + c`` with ``phi1(u + c) = 0``, ``c`` nearest zero.

    Raises
    ------
    NotProjectableError
        If ``c -> phi1(u + c)`` has no sign change on ``[-span, span]``.
    """
    _check(u)
    if abs(phi1(p, u)) <= PROJECT_TOL:
        return u
    vals = u.values
    fn = lambda c: float(np.mean(p.f.df(vals + c)))
    br = bracket_nearest(fn, -span, span)
    if br is None:
        raise NotProjectableError(f"phi1(u + c) does not change sign for c in [{-span}, {span}]")
    c = br[0] if br[0] == br[1] else brentq(fn, *br, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    for _ in range(3):
        d = float(np.mean(p.f.d2f(vals + c)))
        r = fn(c)
        if abs(r) <= 0.1 * PROJECT_TOL or d == 0.0:
            break
        c -= r / d
    out = u.with_values(vals + c)
    if abs(phi1(p, out)) > PROJECT_TOL:
        raise NotProjectableError(f"projection residual {abs(phi1(p, out)):.2e} above {PROJECT_TOL:.0e}")
    return out


# -- contraction homotopy --------------------------------------------------------

def interleaved_weight(t: np.ndarray, measure: float, intervals: int, ramp: float) -> np.ndarray:
    """Indicator of ``K`` evenly spaced intervals of total ``measure``,
    smoothed by a periodic box average of width ``ramp``.

    The set is ``union_k [k/K, k/K + measure/K)``; averaging gives linear
    transitions of width ``ramp`` at each interval end.
    """
    K = intervals

    def cum(x):
        # measure of the set inside [0, x], extended with period 1
        return np.floor(K * x) * measure / K + np.minimum(K * x - np.floor(K * x), measure) / K

    if ramp <= 0:
        return (np.mod(K * t, 1.0) < measure).astype(float)
    return np.clip((cum(t + 0.5 * ramp) - cum(t - 0.5 * ramp)) / ramp, 0.0, 1.0)


def window_bump(t: np.ndarray, measure: float, ramp: float, center: float = 0.5) -> np.ndarray:
    """Smoothed indicator of ``[center - measure/2, center + measure/2]``."""
    a, b = center - 0.5 * measure, center + 0.5 * measure
    if ramp <= 0:
        return ((t >= a) & (t < b)).astype(float)
    lo = np.clip((t - a) / ramp + 0.5, 0.0, 1.0)
    hi = np.clip((b - t) / ramp + 0.5, 0.0, 1.0)
    return np.minimum(lo, hi)


@dataclass
class HomotopyPath:
    """Slices ``h(s_i, .)`` of a path inside the critical set.

    ``corrections`` are the constants added on the correction window.
    """

    s: np.ndarray
    slices: list[GridFunction]
    phi1_residuals: np.ndarray
    corrections: np.ndarray
    config: dict = field(default_factory=dict)

    def max_adjacent_jump(self) -> np.ndarray:
        """Largest jump between neighbouring samples (with wraparound) per slice."""
        return np.array([np.max(np.abs(np.diff(np.append(u.values, u.values[0])))) for u in self.slices])

    def transition_allowance(self) -> float:
        """Bound on extra sample-to-sample jumps created by the construction:
        the blend ramps (``max|u0 - u1| / ramp_cells``) plus twice the largest
        correction amplitude."""
        return float(self.config["endpoint_gap"]) / self.config["ramp_cells"] + 2.0 * float(np.max(np.abs(self.corrections)))

    def is_continuous(self) -> bool:
        """Every slice jumps by at most the endpoints' jump plus the allowance."""
        ends = max(self.max_adjacent_jump()[0], self.max_adjacent_jump()[-1])
        return bool(np.all(self.max_adjacent_jump() <= ends + self.transition_allowance() + 1e-12))

    def slice_modulus(self) -> np.ndarray:
        """Sup-norm distance between consecutive slices."""
        return np.array([np.max(np.abs(a.values - b.values)) for a, b in zip(self.slices, self.slices[1:])])

    def to_dict(self) -> dict:
        return {
            "s": self.s.tolist(),
            "slices": [u.to_dict() for u in self.slices],
            "phi1_residuals": self.phi1_residuals.tolist(),
            "corrections": self.corrections.tolist(),
            "config": self.config,
        }


def contraction_homotopy(p: FirstOrderProblem, u0: GridFunction, u1: GridFunction, steps: int = 32,
                         intervals: int = 16, ramp_cells: int = 2, correction_measure: float = 1 / 32,
                         tol: float = HOMOTOPY_TOL) -> HomotopyPath:
    """Path from ``u0`` to ``u1`` through ``phi1 = 0``.

    Slice ``s`` equals ``u0`` on an interleaved set of measure ``1 - s`` and
    ``u1`` elsewhere (with linear ramps of ``ramp_cells`` grid cells), plus a
    correction ``c(s) * chi * f''(base) / max|chi * f''(base)|`` supported on a
    smoothed window ``chi`` of measure ``correction_measure`` centred at
    ``t = 1/2``. The profile makes ``phi1`` increase with ``c``, so the root
    nearest zero moves continuously in ``s`` and vanishes at both ends.

    Raises
    ------
    ValueError
        If an endpoint is not critical within ``tol``.
    CorrectionWindowError
        If no constant on the window restores ``phi1 = 0``.
    """
    _check(u0)
    _check(u1)
    if u0.n != u1.n:
        raise ValueError("endpoints must share a grid")
    for name, u in (("u0", u0), ("u1", u1)):
        r = phi1(p, u)
        if abs(r) > tol:
            raise ValueError(f"{name} is not critical (phi1 = {r:.3e}); project it first")
    t = u0.t
    ramp = ramp_cells * u0.spacing
    chi = window_bump(t, correction_measure, ramp)
    s_vals = np.linspace(0.0, 1.0, steps + 1)
    slices, res, cs = [], [], []
    for s in s_vals:
        if s == 0.0 or s == 1.0:
            u = u0 if s == 0.0 else u1
            slices.append(u)
            res.append(phi1(p, u))
            cs.append(0.0)
            continue
        w = interleaved_weight(t, 1.0 - s, intervals, ramp)
        base = w * u0.values + (1.0 - w) * u1.values
        # window-restricted gradient of phi1; a bare constant would force the
        # root to jump between branches since phi1(base) keeps one sign
        shape = chi * p.f.d2f(base)
        if np.max(np.abs(shape)) < 1e-8:
            shape = chi
        shape = shape / np.max(np.abs(shape))
        fn = lambda c: float(np.mean(p.f.df(base + c * shape)))
        f0 = fn(0.0)
        if abs(f0) <= 1e-3 * tol:
            c = 0.0
        else:
            br = expanding_bracket(fn, 1e-3, 1e3, f0)
            if br is None:
                raise CorrectionWindowError(
                    f"no correction constant restores phi1 at s = {s:.4f}; try correction_measure = {2 * correction_measure:.4g}"
                )
            c = brentq(fn, *br, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        u = u0.with_values(base + c * shape)
        r = phi1(p, u)
        if abs(r) > tol:
            raise CorrectionWindowError(f"residual {r:.2e} at s = {s:.4f} after correction")
        slices.append(u)
        res.append(r)
        cs.append(c)
    cfg = {"steps": steps, "intervals": intervals, "ramp_cells": ramp_cells, "correction_measure": correction_measure,
           "endpoint_gap": float(np.max(np.abs(u0.values - u1.values)))}
    return HomotopyPath(s_vals, slices, np.array(res), np.array(cs), cfg)


# -- periodic solutions by shooting -----------------------------------------------

@dataclass
class PeriodicSolutions:
    count: int
    solutions: list[GridFunction]
    initial_values: np.ndarray
    escaped: int = 0
    scan_points: int = 0

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "initial_values": self.initial_values.tolist(),
            "escaped": self.escaped,
            "scan_points": self.scan_points,
            "solutions": [u.to_dict() for u in self.solutions],
        }


def scan_window(p: FirstOrderProblem, g: GridFunction) -> float:
    lo, hi = float(np.min(g.values)), float(np.max(g.values))
    return 1.0 + max(abs(lo), abs(hi)) + p.f.value_preimage_bound(lo, hi, xmax=X_MAX)


def _shooter(p: FirstOrderProblem, g: GridFunction, escape: float):
    n = g.n
    g_ext = np.append(g.values, g.values[0])
    g_half = 0.5 * (g_ext[:-1] + g_ext[1:])
    h = 1.0 / n
    f = p.f.f

    def shoot(a, keep=False):
        # RK4 with one step per grid cell; g is linear between nodes
        y = np.array(a, dtype=float)
        out = [y] if keep else None
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n):
                k1 = g_ext[k] - f(y)
                k2 = g_half[k] - f(y + 0.5 * h * k1)
                k3 = g_half[k] - f(y + 0.5 * h * k2)
                k4 = g_ext[k + 1] - f(y + h * k3)
                y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                y = np.where(~np.isfinite(y) | (np.abs(y) > escape), np.nan, y)
                if keep:
                    out.append(y)
        return np.array(out) if keep else y

    return shoot


def _roots_on_scan(a: np.ndarray, P: np.ndarray) -> tuple[list[float], list[tuple[float, float]]]:
    exact = [float(x) for x, v in zip(a, P) if v == 0.0]
    sign = np.sign(P)
    ok = np.isfinite(P[:-1]) & np.isfinite(P[1:])
    idx = np.nonzero(ok & (sign[:-1] * sign[1:] < 0))[0]
    return exact, [(a[i], a[i + 1]) for i in idx]


def count_periodic_solutions(p: FirstOrderProblem, g: GridFunction, scan: int = 201, xtol: float = 1e-10,
                             max_scan: int = 6401) -> PeriodicSolutions:
    """Periodic solutions of ``u' = g - f(u)`` on ``[0, 1]`` by shooting.

    The return map ``a -> u(1; a) - a`` is scanned on ``[-R, R]`` with
    ``R = 1 + max|g| + max{|x| <= 20 : f(x) in [min g, max g]}``. Starts leaving
    ``|u| <= 10 R`` are escaped and not counted. The scan density doubles
    until the number of sign changes is stable; brackets are then narrowed
    to ``xtol`` by vectorized 16-section.
    """
    _check(g)
    R = scan_window(p, g)
    escape = 10.0 * max(R, 10.0)
    shoot = _shooter(p, g, escape)
    N = scan
    prev = None
    while True:
        a = np.linspace(-R, R, N)
        P = shoot(a) - a
        exact, brackets = _roots_on_scan(a, P)
        count = len(exact) + len(brackets)
        if prev is not None and count == prev:
            break
        if 2 * N - 1 > max_scan:
            break
        prev = count
        N = 2 * N - 1
    escaped = int(np.count_nonzero(~np.isfinite(P)))
    roots = list(exact)
    if brackets:
        lo = np.array([b[0] for b in brackets])
        hi = np.array([b[1] for b in brackets])
        s_lo = np.sign(shoot(lo) - lo)
        m = 16
        frac = np.linspace(0.0, 1.0, m + 1)[1:-1]
        while np.max(hi - lo) > xtol:
            pts = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
            sp = np.sign(shoot(pts.ravel()) - pts.ravel()).reshape(pts.shape)
            grid = np.concatenate([lo[:, None], pts, hi[:, None]], axis=1)
            signs = np.concatenate([sp, -s_lo[:, None]], axis=1)
            # first sub-cell whose right end leaves the sign at lo
            k = np.argmax(signs != s_lo[:, None], axis=1) + 1
            rows = np.arange(len(lo))
            exact = signs[rows, k - 1] == 0
            hi = grid[rows, k]
            lo = np.where(exact, hi, grid[rows, k - 1])
        roots.extend(0.5 * (lo + hi))
    roots = np.sort(np.array(roots, dtype=float))
    sols = []
    if len(roots):
        traj = shoot(roots, keep=True)
        sols = [g.with_values(traj[:-1, i]) for i in range(len(roots))]
    return PeriodicSolutions(len(roots), sols, roots, escaped, N)
