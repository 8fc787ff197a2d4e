"""Continuous branch selection for planar arguments."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateVectorError, ResolutionError

MAX_STEP = np.pi / 2


def lift_argument(points, theta0: float = 0.0) -> np.ndarray:
    """Lift the polar angles of a sequence of planar vectors continuously.

    Parameters
    ----------
    points : array_like, shape (N, 2)
        Nonzero vectors ``(x, y)``.
    theta0 : float
        Required value at the first point; must be an argument of it.

    Returns
    -------
    ndarray, shape (N,)
        ``theta[k]`` is an argument of ``points[k]`` and consecutive values
        differ by less than ``pi / 2``.

    Raises
    ------
    DegenerateVectorError
        If a vector is zero.
    ResolutionError
        If two consecutive vectors subtend ``pi / 2`` or more; sample more
        densely.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (N, 2)")
    norms = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
        k = int(np.argmin(np.where(np.isfinite(norms), norms, 0.0)))
        raise DegenerateVectorError(f"zero or non-finite vector at index {k}")
    arg = np.arctan2(pts[:, 1], pts[:, 0])
    offset = theta0 - arg[0]
    turns = offset / (2.0 * np.pi)
    if abs(turns - round(turns)) > 1e-9:
        raise ValueError("theta0 is not an argument of the first point")

    x, y = pts[:-1], pts[1:]
    cross = x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0]
    dot = np.einsum("ij,ij->i", x, y)
    incr = np.arctan2(cross, dot)
    bad = np.nonzero(np.abs(incr) >= MAX_STEP)[0]
    if bad.size:
        k = int(bad[0])
        raise ResolutionError(f"angle jump {incr[k]:.3f} rad between samples {k} and {k + 1}")
    rough = theta0 + np.concatenate([[0.0], np.cumsum(incr)])
    # Snap each value to the exact pointwise argument on the tracked branch.
    branch = np.round((rough - arg) / (2.0 * np.pi))
    out = arg + 2.0 * np.pi * branch
    out[0] = theta0
    return out
