"""The Dirichlet operator ``F(u) = -u'' + f(u)`` on ``[0, pi]``.

Criticality is read off the Pruefer argument of the fundamental solution
``-v'' + f'(u) v = 0, v(0) = 0, v'(0) = 1``: ``u`` is critical exactly when
``v(pi) = 0``, i.e. when the lifted argument ``omega(pi)`` of ``(v', v)`` is a
multiple of ``pi``. We take ``omega(pi)`` itself as the critical functional.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core.grid import Boundary, GridFunction
from .core.integrate import IntegratorConfig, integrate_linear_system, linear_coefficients
from .core.lift import lift_argument
from .core.nonlinearity import Nonlinearity
from .core.roots import expanding_bracket
from .errors import (
    ComponentStructureError,
    CorrectionWindowError,
    InconclusiveScanWarning,
    ResolutionError,
)

CRITICAL_TOL = 1e-6
PATH_TOL = 1e-8
MAX_STEPS = 1 << 16
DELTA_FINAL = 0.05
TOL_BAND = 0.1


@dataclass
class PruferTrace:
    t_samples: np.ndarray
    v1: np.ndarray
    v1_prime: np.ndarray
    omega: np.ndarray
    omega_m: np.ndarray
    m: int = 1

    @property
    def omega_end(self) -> float:
        return float(self.omega[-1])

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "t": self.t_samples.tolist(),
            "v1": self.v1.tolist(),
            "v1_prime": self.v1_prime.tolist(),
            "omega": self.omega.tolist(),
            "omega_m": self.omega_m.tolist(),
        }


def _steps_for(n_intervals: int, base: int) -> int:
    # a multiple of the grid intervals keeps coefficient kinks on step nodes
    k = max(1, -(-base // n_intervals))
    return max(64, k * n_intervals)


def trace_potential(h: np.ndarray, t: np.ndarray, m: int = 1, cfg: IntegratorConfig | None = None) -> PruferTrace:
    """Pruefer trace for the potential ``h`` sampled at nodes ``t`` of ``[0, L]``."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    cfg = cfg or IntegratorConfig()
    steps = _steps_for(len(t) - 1, cfg.step_count)
    A_samples = np.zeros((len(t), 2, 2))
    A_samples[:, 0, 1] = 1.0
    A_samples[:, 1, 0] = h
    A = linear_coefficients(t, A_samples)
    while True:
        run = IntegratorConfig(steps, cfg.method, cfg.tolerance)
        traj = integrate_linear_system(A, [0.0, 1.0], (t[0], t[-1]), run)
        v, vp = traj.y[:, 0], traj.y[:, 1]
        try:
            omega = lift_argument(np.column_stack([vp, v]), 0.0)
            omega_m = lift_argument(np.column_stack([vp, m * v]), 0.0)
        except ResolutionError:
            if 2 * steps > MAX_STEPS:
                raise
            steps *= 2
            continue
        return PruferTrace(traj.t, v, vp, omega, omega_m, m)


def _check(u: GridFunction):
    if u.boundary is not Boundary.DIRICHLET:
        raise ValueError("the Dirichlet operator needs a Dirichlet grid function")


def shoot_fundamental(f: Nonlinearity, u: GridFunction, m: int = 1, cfg: IntegratorConfig | None = None) -> PruferTrace:
    """Integrate ``(v, v')' = (v', f'(u) v)`` from ``(0, 1)`` and lift the
    arguments of ``(v', v)`` and ``(v', m v)``."""
    _check(u)
    return trace_potential(f.df(u.values), u.t, m, cfg)


def phi2D(f: Nonlinearity, u: GridFunction, cfg: IntegratorConfig | None = None) -> float:
    """``omega(pi)``, the Pruefer argument at the right endpoint."""
    return shoot_fundamental(f, u, 1, cfg).omega_end


def _dist_pi(x: float) -> float:
    return float(abs(x - np.pi * np.round(x / np.pi)))


def is_critical_dirichlet(f: Nonlinearity, u: GridFunction, tol: float = CRITICAL_TOL,
                          trace: PruferTrace | None = None) -> tuple[bool, float]:
    """Whether ``omega(pi)`` lies within ``tol`` of ``pi Z``; also returns that distance."""
    trace = trace or shoot_fundamental(f, u)
    r = _dist_pi(trace.omega_end)
    return r <= tol, r


def interior_zeros(trace: PruferTrace, guard: int = 8) -> int:
    """Sign changes of ``v1`` on the open interval, skipping ``guard`` samples
    at each end where the boundary zeros sit."""
    v = trace.v1[guard:-guard]
    s = np.sign(v)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def component_index(f: Nonlinearity, u: GridFunction, trace: PruferTrace | None = None) -> int:
    """``m = round(omega(pi) / pi)`` cross-checked against the interior zeros of ``v1``.

    Raises
    ------
    ValueError
        If ``u`` is not critical.
    ResolutionError
        If the two counts disagree.
    """
    trace = trace or shoot_fundamental(f, u)
    ok, r = is_critical_dirichlet(f, u, trace=trace)
    if not ok:
        raise ValueError(f"u is not critical (distance of omega(pi) to pi Z is {r:.3e})")
    m = int(round(trace.omega_end / np.pi))
    z = interior_zeros(trace)
    if z + 1 != m:
        raise ResolutionError(f"omega(pi) gives index {m} but v1 has {z} interior zeros")
    return m


def component_nonempty(f: Nonlinearity, m: int, scan_range=(-20.0, 20.0), samples: int = 200001) -> bool:
    """Whether ``-m^2`` is interior to the image of ``f'``.

    Uses the exact range when ``f`` is a polynomial or a preset; otherwise
    samples ``f'`` on ``scan_range`` and warns when only one side is seen.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    target = -float(m) ** 2
    rng = f.derivative_range()
    if rng is not None:
        return bool(rng[0] < target < rng[1])
    vals = f.df(np.linspace(*scan_range, samples))
    below, above = bool(np.any(vals < target)), bool(np.any(vals > target))
    if below != above:
        warnings.warn(f"scan of f' over {tuple(scan_range)} sees only one side of {target}",
                      InconclusiveScanWarning, stacklevel=2)
    return below and above


def find_x_m(f: Nonlinearity, m: int, near: float = 0.0, window: float = 20.0) -> float:
    """Root of ``f'(x) = -m^2`` nearest ``near``.

    Raises
    ------
    ComponentStructureError
        If ``f'`` never takes the value ``-m^2`` on ``[-window, window]``.
    """
    roots = f.solve_derivative(-float(m) ** 2, -window, window)
    if len(roots) == 0:
        raise ComponentStructureError(f"f' never equals {-m * m}; the component C_{m} has no reference value")
    return float(roots[np.argmin(np.abs(roots - near))])


# -- restoring criticality --------------------------------------------------------

def correction_window(t: np.ndarray, window=(0.35, 0.65)) -> np.ndarray:
    """``sin^2`` bump supported on ``window`` (fractions of the interval)."""
    L = t[-1]
    a, b = window[0] * L, window[1] * L
    x = np.clip((t - a) / (b - a), 0.0, 1.0)
    return np.sin(np.pi * x) ** 2


def restore_criticality(f: Nonlinearity, u: GridFunction, m: int, window=(0.35, 0.65),
                        tol: float = PATH_TOL, cfg: IntegratorConfig | None = None) -> tuple[GridFunction, float]:
    """Add ``c * bump * f''(u)`` (normalized) so that ``omega(pi) = m pi``.

    The profile is the bump times ``f''(u)``, which keeps ``omega(pi)``
    monotone in ``c``; the constant ``c`` nearest zero is returned.

    Raises
    ------
    CorrectionWindowError
        If no ``c`` reaches ``m pi`` or the final residual exceeds ``tol``.
    """
    _check(u)
    bump = correction_window(u.t, window)
    shape = bump * f.d2f(u.values)
    if np.max(np.abs(shape)) < 1e-8:
        shape = bump
    shape = shape / np.max(np.abs(shape))
    target = m * np.pi

    def resid(c):
        return trace_potential(f.df(u.values + c * shape), u.t, 1, cfg).omega_end - target

    r0 = resid(0.0)
    if abs(r0) <= 0.1 * tol:
        return u, 0.0
    br = expanding_bracket(resid, 1e-3, 1e2, r0)
    if br is None:
        raise CorrectionWindowError(
            f"no correction on window {tuple(window)} reaches omega(pi) = {m} pi (residual at 0: {r0:.3e}); widen the window"
        )
    c = br[0] if br[0] == br[1] else brentq(resid, *br, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    out = u.with_values(u.values + c * shape)
    r = abs(resid(c))
    if r > tol:
        raise CorrectionWindowError(f"criticality residual {r:.2e} after correction on window {tuple(window)}")
    return out, float(c)


def reference_potential(f: Nonlinearity, m: int, n: int, near: float, layer: float = 0.1,
                        cfg: IntegratorConfig | None = None) -> GridFunction:
    """``x_m`` away from the ends with smooth boundary layers of width
    ``layer * pi`` down to zero, corrected back onto ``omega(pi) = m pi``.

    A constant ``x_m`` is critical with index ``m`` but violates the boundary
    condition unless ``x_m = 0``; the layers repair that at the cost of a
    small correction.
    """
    x_m = find_x_m(f, m, near)
    t = np.linspace(0.0, np.pi, n)
    d = layer * np.pi
    ramp = lambda x: np.sin(0.5 * np.pi * np.clip(x / d, 0.0, 1.0)) ** 2
    rho = np.minimum(ramp(t), ramp(np.pi - t))
    u = GridFunction.dirichlet(x_m * rho, n)
    u, _ = restore_criticality(f, u, m, cfg=cfg)
    return u


def perturbed_reference(f: Nonlinearity, m: int, n: int, amplitude: float = 0.2, mode: int = 3, near: float = 1.0,
                        cfg: IntegratorConfig | None = None) -> GridFunction:
    """Reference potential plus ``amplitude * sin(t)^2 cos(mode t)``, projected
    back onto ``omega(pi) = m pi``."""
    ref = reference_potential(f, m, n, near, cfg=cfg)
    bump = amplitude * np.sin(ref.t) ** 2 * np.cos(mode * ref.t)
    u, _ = restore_criticality(f, GridFunction.dirichlet(ref.values + bump, n), m, cfg=cfg)
    return u


# -- squeeze homotopy ------------------------------------------------------------

@dataclass
class DirichletPath:
    """Slices of a path inside ``omega(pi) = m pi``."""

    s: np.ndarray
    slices: list[GridFunction]
    residuals: np.ndarray
    indices: np.ndarray
    walls: np.ndarray
    stages: list[str]
    corrections: np.ndarray
    m: int
    x_m: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "x_m": self.x_m,
            "s": self.s.tolist(),
            "slices": [u.to_dict() for u in self.slices],
            "residuals": self.residuals.tolist(),
            "indices": self.indices.tolist(),
            "walls": self.walls.tolist(),
            "stages": self.stages,
            "corrections": self.corrections.tolist(),
            "config": self.config,
        }


def squeeze_profile(f: Nonlinearity, u: GridFunction, reference: GridFunction, m: int, wall: float,
                    tol_band: float = TOL_BAND, trace: PruferTrace | None = None) -> np.ndarray:
    """Replace ``u`` by the reference where ``omega_m`` leaves the walls
    ``m t +- wall``, with a linear transition over ``tol_band`` radians."""
    trace = trace or shoot_fundamental(f, u, m)
    dev = np.abs(np.interp(u.t, trace.t_samples, trace.omega_m) - m * u.t)
    lam = np.clip((dev - wall) / tol_band, 0.0, 1.0)
    return (1.0 - lam) * u.values + lam * reference.values


def squeeze_homotopy(f: Nonlinearity, u0: GridFunction, u1: GridFunction, m: int, steps: int = 16,
                     delta_final: float = DELTA_FINAL, tol_band: float = TOL_BAND,
                     cfg: IntegratorConfig | None = None) -> DirichletPath:
    """Path from ``u0`` to ``u1`` through the component with index ``m``.

    Three stages: the walls ``m t +- w(s)`` close in on the graph of
    ``omega_m`` for ``u0`` (``w`` linear from its largest deviation to
    ``delta_final``) while trespassing parts are taken to the reference
    potential; the two squeezed ends are joined linearly; the second squeeze
    is run backwards into ``u1``. Every interior slice is corrected so that
    ``omega(pi) = m pi`` within ``1e-8``.
    """
    _check(u0)
    _check(u1)
    if u0.n != u1.n:
        raise ValueError("endpoints must share a grid")
    for name, u in (("u0", u0), ("u1", u1)):
        tr = shoot_fundamental(f, u, m, cfg)
        if component_index(f, u, tr) != m:
            raise ValueError(f"{name} does not lie in the component with index {m}")
    x_m = find_x_m(f, m, float(np.mean(u0.values)))
    config = {"steps": steps, "delta_final": delta_final, "tol_band": tol_band}
    if np.array_equal(u0.values, u1.values):
        sl = [u0] * (steps + 1)
        r = is_critical_dirichlet(f, u0)[1]
        return DirichletPath(np.linspace(0, 1, steps + 1), sl, np.full(steps + 1, r), np.full(steps + 1, m),
                             np.zeros(steps + 1), ["constant"] * (steps + 1), np.zeros(steps + 1), m, x_m, config)
    ref = reference_potential(f, m, u0.n, float(np.mean(u0.values)), cfg=cfg)

    def squeeze(u):
        tr = shoot_fundamental(f, u, m, cfg)
        w0 = float(np.max(np.abs(tr.omega_m - m * tr.t_samples)))
        out = []
        for k in range(steps + 1):
            s = k / steps
            w = (1 - s) * w0 + s * delta_final
            out.append((w, squeeze_profile(f, u, ref, m, w, tol_band, tr)))
        return out

    def finish(vals):
        v = u0.with_values(vals)
        return restore_criticality(f, v, m, cfg=cfg)

    raw = []  # (stage, wall, values or exact GridFunction)
    a = squeeze(u0)
    b = squeeze(u1)
    for k, (w, vals) in enumerate(a):
        raw.append(("squeeze-u0", w, u0 if k == 0 else vals))
    end_a, end_b = a[-1][1], b[-1][1]
    for k in range(1, steps):
        r = k / steps
        raw.append(("bridge", delta_final, (1 - r) * end_a + r * end_b))
    for k, (w, vals) in reversed(list(enumerate(b))):
        raw.append(("squeeze-u1", w, u1 if k == 0 else vals))

    slices, res, idx, walls, stages, cs = [], [], [], [], [], []
    for stage, w, item in raw:
        if isinstance(item, GridFunction):
            u, c = item, 0.0
        else:
            u, c = finish(item)
        tr = shoot_fundamental(f, u, m, cfg)
        slices.append(u)
        res.append(abs(tr.omega_end - m * np.pi))
        idx.append(component_index(f, u, tr))
        walls.append(w)
        stages.append(stage)
        cs.append(c)
    s = np.linspace(0.0, 1.0, len(slices))
    return DirichletPath(s, slices, np.array(res), np.array(idx), np.array(walls), stages, np.array(cs), m, x_m, config)
