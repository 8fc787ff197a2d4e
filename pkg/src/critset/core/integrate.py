"""Fixed-step and adaptive integration of linear ODE systems ``y' = A(t) y``."""

from __future__ import annotations

import enum
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import RefinementFailure


class Method(str, enum.Enum):
    RK4 = "rk4"
    DORMAND_PRINCE = "dormand-prince"


@dataclass(frozen=True)
class IntegratorConfig:
    step_count: int = 4096
    method: Method = Method.RK4
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.step_count < 64:
            raise ValueError("step_count must be at least 64")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        object.__setattr__(self, "method", Method(self.method))

    def doubled(self) -> IntegratorConfig:
        return IntegratorConfig(2 * self.step_count, self.method, self.tolerance)


@dataclass(frozen=True)
class Trajectory:
    """Dense solution samples; ``y[k]`` is the state at ``t[k]``."""

    t: np.ndarray
    y: np.ndarray
    error_estimate: float

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]


def linear_coefficients(nodes: np.ndarray, samples: np.ndarray, period: float | None = None) -> Callable:
    """Matrix-valued coefficient interpolated linearly between nodes.

    ``samples`` has shape ``(len(nodes), ...)``; the returned callable maps an
    array of times of shape ``(m,)`` to shape ``(m, ...)``. With ``period`` set
    the node sequence wraps around.
    """
    nodes = np.asarray(nodes, dtype=float)
    samples = np.asarray(samples, dtype=float)
    if period is not None:
        nodes = np.append(nodes, nodes[0] + period)
        samples = np.concatenate([samples, samples[:1]], axis=0)
    flat = samples.reshape(samples.shape[0], -1)
    tail = samples.shape[1:]

    def coeff(t):
        t = np.asarray(t, dtype=float)
        if period is not None:
            t = nodes[0] + np.mod(t - nodes[0], period)
        idx = np.clip(np.searchsorted(nodes, t, side="right") - 1, 0, nodes.size - 2)
        w = ((t - nodes[idx]) / (nodes[idx + 1] - nodes[idx]))[:, None]
        out = (1.0 - w) * flat[idx] + w * flat[idx + 1]
        return out.reshape(t.shape + tail)

    return coeff


def _rk4(A: Callable, y0: np.ndarray, t0: float, t1: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for ``y' = A(t) y``.

    For a linear field one RK4 step is multiplication by a matrix polynomial
    ``M_k`` in the values of ``A`` at the step ends and midpoint. All ``M_k``
    are formed at once and their running products come from a log-depth
    prefix scan.
    """
    h = (t1 - t0) / steps
    t = t0 + h * np.arange(steps + 1)
    half = t0 + h * (np.arange(steps) + 0.5)
    A_nodes = np.asarray(A(t), dtype=float)
    A_half = np.asarray(A(half), dtype=float)
    eye = np.eye(A_nodes.shape[-1])
    A0, A1 = A_nodes[:-1], A_nodes[1:]
    K2 = A_half @ (eye + 0.5 * h * A0)
    K3 = A_half @ (eye + 0.5 * h * K2)
    K4 = A1 @ (eye + h * K3)
    P = eye + (h / 6.0) * (A0 + 2.0 * K2 + 2.0 * K3 + K4)
    shift = 1
    while shift < steps:
        P = np.concatenate([P[:shift], P[shift:] @ P[:-shift]], axis=0)
        shift *= 2
    y0 = y0.astype(float)
    tail = np.broadcast_shapes(P.shape[1:-2], y0.shape[:-2]) + y0.shape[-2:]
    ys = np.empty((steps + 1,) + tail)
    ys[0] = y0
    ys[1:] = P @ y0
    return t, ys


def integrate_linear_system(
    A: Callable,
    y0,
    t_span: tuple[float, float],
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Solve ``y' = A(t) y`` from ``y(t0) = y0``.

    ``A`` maps an array of times ``(m,)`` to matrices ``(m, ..., d, d)``; leading
    batch axes after the time axis are allowed and broadcast against ``y0`` of
    shape ``(..., d)`` or ``(..., d, k)`` (matrix initial data integrates all
    columns at once). Samples are returned at ``step_count + 1`` equally
    spaced times.

    RK4 runs a half-resolution companion solve for a Richardson error
    estimate; an estimate above ``cfg.tolerance`` (relative to the solution
    size) raises :class:`RefinementFailure`.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = map(float, t_span)
    y0 = np.asarray(y0, dtype=float)
    a0 = np.asarray(A(np.array([t0])))[0]
    vector = y0.ndim == a0.ndim - 1
    if vector:
        y0 = y0[..., None]

    if cfg.method is Method.RK4:
        t, ys = _rk4(A, y0, t0, t1, cfg.step_count)
        _, coarse = _rk4(A, y0, t0, t1, cfg.step_count // 2)
        err = float(np.max(np.abs(ys[-1] - coarse[-1]))) / 15.0
        scale = max(1.0, float(np.max(np.abs(ys[-1]))))
        if err > cfg.tolerance * scale:
            raise RefinementFailure(
                f"RK4 error estimate {err:.3e} exceeds tolerance {cfg.tolerance:.1e} at {cfg.step_count} steps"
            )
    else:
        t, ys, err = _dormand_prince(A, y0, t0, t1, cfg)
    if vector:
        ys = ys[..., 0]
    return Trajectory(t, ys, err)


def _dormand_prince(A, y0, t0, t1, cfg):
    shape = y0.shape

    def rhs(t, y):
        return (np.asarray(A(np.array([t])), dtype=float)[0] @ y.reshape(shape)).ravel()

    t_eval = np.linspace(t0, t1, cfg.step_count + 1)
    sol = solve_ivp(
        rhs,
        (t0, t1),
        y0.ravel(),
        method="RK45",
        t_eval=t_eval,
        rtol=cfg.tolerance,
        atol=cfg.tolerance * 1e-3,
        max_step=(t1 - t0) / 64,
    )
    if not sol.success:
        raise RefinementFailure(f"Dormand-Prince failed: {sol.message}")
    ys = sol.y.T.reshape((t_eval.size,) + shape)
    return t_eval, ys, float(cfg.tolerance)


def rk4_field(rhs: Callable, y0: np.ndarray, t0: float, t1: float, steps: int, escape: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for a vectorized nonlinear field ``y' = rhs(t, y)``.

    Components whose magnitude exceeds ``escape`` (or become non-finite) are
    frozen at NaN from that step on. Returns node times and all states.
    """
    h = (t1 - t0) / steps
    t = t0 + h * np.arange(steps + 1)
    y = np.array(y0, dtype=float)
    ys = np.empty((steps + 1,) + y.shape)
    ys[0] = y
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            tk = t[k]
            k1 = rhs(tk, y)
            k2 = rhs(tk + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(tk + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(tk + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if escape is not None:
                bad = ~np.isfinite(y) | (np.abs(y) > escape)
                y = np.where(bad, np.nan, y)
            ys[k + 1] = y
    return t, ys
