"""Monodromy of Hill's equation ``v'' = h v`` on ``[0, 2 pi]`` and the
classification of periodic potentials.

The fundamental matrix ``beta(t) = [[v1, v1'], [v2, v2']]`` (with
``beta(0) = I``) has unit determinant, and the continuous argument of its
first column ``(v1, v2)`` lifts ``beta(2 pi)`` to the universal cover of
``SL(2, R)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core.grid import Boundary, GridFunction
from .core.integrate import IntegratorConfig, integrate_linear_system, linear_coefficients
from .core.lift import lift_argument
from .core.nonlinearity import Nonlinearity
from .errors import InconsistencyError, ResolutionError

IDENTITY_TOL = 1e-6
TRACE_TOL = 1e-8
MAX_STEPS = 1 << 16
PERIOD = 2 * np.pi


class Kind(str, enum.Enum):
    NONCRITICAL = "Noncritical"
    REGULAR_CRITICAL = "RegularCritical"
    NONREGULAR = "Nonregular"


@dataclass
class MonodromyLift:
    matrix: np.ndarray
    angle: float
    t: np.ndarray | None = None
    beta: np.ndarray | None = None
    iwasawa_angle: float = 0.0

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "angle": self.angle, "trace": self.trace, "det": self.det}


@dataclass
class PeriodicClassification:
    kind: Kind
    index_n: int | None
    lift: MonodromyLift
    identity_distance: float
    thresholds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "index": self.index_n,
            "trace": self.lift.trace,
            "angle": self.lift.angle,
            "identity_distance": self.identity_distance,
            "matrix": self.lift.matrix.tolist(),
            "thresholds": self.thresholds,
        }


def iwasawa_rotation(B: np.ndarray) -> float:
    """Angle of ``K`` in ``B = K A N`` (rotation times positive diagonal times
    unipotent upper triangular), in ``(-pi, pi]``."""
    Q, R = np.linalg.qr(B)
    Q = Q * np.sign(np.diag(R))[None, :]
    return float(np.arctan2(Q[1, 0], Q[0, 0]))


def _wrap(x: float) -> float:
    return float((x + np.pi) % (2 * np.pi) - np.pi)


def monodromy(h: GridFunction, cfg: IntegratorConfig | None = None) -> MonodromyLift:
    """``beta(2 pi)`` for ``v'' = h v`` with its lifted rotation angle.

    Raises
    ------
    RefinementFailure
        If RK4 misses its error tolerance at the configured step count.
    ResolutionError
        If the lift stays unresolved up to ``2**16`` steps.
    InconsistencyError
        If the lifted angle disagrees with the Iwasawa rotation of the matrix.
    """
    if h.boundary is not Boundary.PERIODIC or abs(h.domain_length - PERIOD) > 1e-12:
        raise ValueError("monodromy needs a periodic potential on [0, 2 pi]")
    cfg = cfg or IntegratorConfig()
    samples = np.zeros((h.n, 2, 2))
    samples[:, 0, 1] = 1.0
    samples[:, 1, 0] = h.values
    A = linear_coefficients(h.t, samples, period=PERIOD)
    steps = max(cfg.step_count, h.n)
    steps = -(-steps // h.n) * h.n
    while True:
        traj = integrate_linear_system(A, np.eye(2), (0.0, PERIOD), IntegratorConfig(steps, cfg.method, cfg.tolerance))
        # columns of the state matrix are (v_i, v_i'); beta is its transpose
        beta = np.swapaxes(traj.y, -1, -2)
        try:
            theta = lift_argument(beta[:, :, 0], 0.0)
        except ResolutionError:
            if 2 * steps > MAX_STEPS:
                raise
            steps *= 2
            continue
        break
    M = beta[-1]
    iw = iwasawa_rotation(M)
    if abs(_wrap(theta[-1] - iw)) > 1e-6:
        raise InconsistencyError(f"lifted angle {theta[-1]:.6f} disagrees with the Iwasawa rotation {iw:.6f}")
    return MonodromyLift(M, float(theta[-1]), traj.t, beta, iw)


def classify_periodic(h: GridFunction, identity_tol: float = IDENTITY_TOL, trace_tol: float = TRACE_TOL,
                      cfg: IntegratorConfig | None = None) -> PeriodicClassification:
    """Nonregular when the monodromy is the identity, RegularCritical when its
    trace is 2 otherwise, else Noncritical.

    Raises
    ------
    InconsistencyError
        If the matrix is the identity but the angle is not near ``2 pi Z``.
    """
    lift = monodromy(h, cfg)
    dist = float(np.linalg.norm(lift.matrix - np.eye(2), 2))
    thresholds = {"identity_tol": identity_tol, "trace_tol": trace_tol}
    if dist <= identity_tol:
        n = int(round(lift.angle / (2 * np.pi)))
        if abs(lift.angle - 2 * np.pi * n) > 1e-3:
            raise InconsistencyError(f"monodromy is the identity but the angle {lift.angle:.6f} is not in 2 pi Z")
        return PeriodicClassification(Kind.NONREGULAR, n, lift, dist, thresholds)
    if abs(lift.trace - 2.0) <= trace_tol:
        return PeriodicClassification(Kind.REGULAR_CRITICAL, None, lift, dist, thresholds)
    return PeriodicClassification(Kind.NONCRITICAL, None, lift, dist, thresholds)


def criticality_of_u(f: Nonlinearity, u: GridFunction, **kwargs) -> PeriodicClassification:
    """Classify the linearization ``-v'' + f'(u) v`` at ``u``."""
    if u.boundary is not Boundary.PERIODIC:
        raise ValueError("u must be periodic")
    return classify_periodic(u.with_values(f.df(u.values)), **kwargs)
