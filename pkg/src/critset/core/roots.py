"""Root finding: multistart Newton for planar maps and scalar bracketing."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from scipy.optimize import brentq

RESIDUAL_TOL = 1e-10
MAX_ITER = 60


def _pts(window):
    x0, x1, y0, y1 = map(float, window)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("window must be (xmin, xmax, ymin, ymax) with positive extent")
    return x0, x1, y0, y1


def window_diameter(window) -> float:
    x0, x1, y0, y1 = _pts(window)
    return float(np.hypot(x1 - x0, y1 - y0))


def newton_polish(fmap, z: np.ndarray, target: np.ndarray, iters: int = MAX_ITER, tol: float = RESIDUAL_TOL):
    """Vectorized Newton iteration for ``F(z) = target``.

    Returns the final iterates and a boolean mask of converged starts. Starts
    meeting a singular Jacobian are dropped (mask False).
    """
    z = np.array(z, dtype=float)
    alive = np.ones(len(z), dtype=bool)
    done = np.zeros(len(z), dtype=bool)
    tol_eff = tol * max(1.0, float(np.max(np.abs(target))))
    with np.errstate(all="ignore"):
        for _ in range(iters):
            act = alive & ~done
            if not act.any():
                break
            za = z[act]
            r = fmap.eval(za) - target
            res = np.hypot(r[:, 0], r[:, 1])
            J = fmap.jacobian(za)
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            scale = np.abs(J).reshape(len(za), -1).max(axis=1) ** 2
            sing = ~(np.abs(det) > 1e-14 * scale) | ~np.isfinite(det)
            dx = (J[:, 1, 1] * r[:, 0] - J[:, 0, 1] * r[:, 1]) / det
            dy = (-J[:, 1, 0] * r[:, 0] + J[:, 0, 0] * r[:, 1]) / det
            idx = np.nonzero(act)[0]
            conv = (res < tol_eff) & np.isfinite(res)
            done[idx[conv]] = True
            step = ~conv & ~sing
            z[idx[step], 0] -= dx[step]
            z[idx[step], 1] -= dy[step]
            alive[idx[sing & ~conv]] = False
            alive[idx[~np.all(np.isfinite(z[idx]), axis=1)]] = False
        act = alive & ~done
        if act.any():
            r = fmap.eval(z[act]) - target
            idx = np.nonzero(act)[0]
            done[idx[np.hypot(r[:, 0], r[:, 1]) < tol_eff]] = True
    return z, done & alive


def dedupe_points(points: np.ndarray, radius: float) -> np.ndarray:
    """Greedy clustering of points, independent of input order.

    Points are visited in lexicographic order; the cluster representative is
    the cluster mean. Output is sorted lexicographically.
    """
    if len(points) == 0:
        return np.zeros((0, 2))
    pts = np.asarray(points, dtype=float)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    unassigned = np.ones(len(pts), dtype=bool)
    reps = []
    for i in range(len(pts)):
        if not unassigned[i]:
            continue
        d = np.hypot(pts[:, 0] - pts[i, 0], pts[:, 1] - pts[i, 1])
        members = unassigned & (d <= radius)
        reps.append(pts[members].mean(axis=0))
        unassigned &= ~members
    reps = np.array(reps)
    return reps[np.lexsort((reps[:, 1], reps[:, 0]))]


def multistart_roots(fmap, window, grid: int = 64, dedup_radius: float | None = None, target=(0.0, 0.0)) -> np.ndarray:
    """All solutions of ``F(z) = target`` found from a grid of Newton starts.

    Parameters
    ----------
    fmap : PlanarMap
        Any object with vectorized ``eval`` and ``jacobian``.
    window : (xmin, xmax, ymin, ymax)
        Starts cover this rectangle; only roots inside it are returned.
    grid : int
        Starts per axis (at least 16).
    dedup_radius : float, optional
        Defaults to ``1e-6`` times the window diameter.

    Returns
    -------
    ndarray, shape (k, 2)
        Distinct roots sorted lexicographically, each with residual below
        ``1e-10`` (scaled by ``max(1, |target|)``).
    """
    if grid < 16:
        raise ValueError("grid must be at least 16")
    x0, x1, y0, y1 = _pts(window)
    target = np.asarray(target, dtype=float)
    radius = dedup_radius if dedup_radius is not None else 1e-6 * window_diameter(window)
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    starts = np.column_stack([X.ravel(), Y.ravel()])
    z, ok = newton_polish(fmap, starts, target)
    z = z[ok]
    inside = (z[:, 0] >= x0) & (z[:, 0] <= x1) & (z[:, 1] >= y0) & (z[:, 1] <= y1)
    roots = dedupe_points(z[inside], radius)
    if len(roots):
        # re-polish the representatives so the means sit on the zero set
        roots, ok = newton_polish(fmap, roots, target, iters=8)
        roots = roots[ok]
        roots = dedupe_points(roots, radius)
    return roots


def bracket_nearest(fn: Callable[[float], float], lo: float, hi: float, samples: int = 2001, center: float = 0.0):
    """Sign-change bracket of a scalar function nearest to ``center``.

    Scans ``samples`` equally spaced points of ``[lo, hi]`` and returns the
    bracketing pair whose midpoint is closest to ``center`` (ties go to the
    larger midpoint), or None. Exact zeros at scan points are returned as a
    degenerate bracket.
    """
    xs = np.linspace(lo, hi, samples)
    vals = np.array([fn(x) for x in xs])
    zero = np.nonzero(vals == 0.0)[0]
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    cands = [(xs[i], xs[i]) for i in zero] + [(xs[i], xs[i + 1]) for i in change]
    if not cands:
        return None
    cands.sort(key=lambda ab: (abs(0.5 * (ab[0] + ab[1]) - center), -0.5 * (ab[0] + ab[1])))
    return cands[0]


def expanding_bracket(fn: Callable[[float], float], step: float, limit: float, f0: float | None = None):
    """Smallest-magnitude sign-change bracket of ``fn`` around 0.

    Probes ``+-step * 2**j`` until ``|c| > limit``. Returns ``(a, b)`` with a
    sign change and ``min(|a|, |b|)`` as small as the probing allows, else None.
    """
    f0 = fn(0.0) if f0 is None else f0
    if f0 == 0.0:
        return (0.0, 0.0)
    prev = {1: (0.0, f0), -1: (0.0, f0)}
    c = step
    while c <= limit:
        for sgn in (1, -1):
            x = sgn * c
            fx = fn(x)
            px, pf = prev[sgn]
            if np.sign(fx) != np.sign(pf) and np.isfinite(fx):
                return (min(px, x), max(px, x))
            prev[sgn] = (x, fx)
        c *= 2.0
    return None


def solve_bracket(fn: Callable[[float], float], bracket, xtol: float = 1e-15) -> float:
    a, b = bracket
    if a == b:
        return float(a)
    return float(brentq(fn, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))
