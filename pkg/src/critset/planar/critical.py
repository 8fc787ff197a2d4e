"""Critical curves of planar maps: tracing, refinement and fold/cusp classification."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from skimage.measure import find_contours

from ..errors import DegeneratePointWarning, InconsistencyError, RankDeficiencyError, WindowTooSmallError
from .maps import PlanarMap

DET_TOL = 1e-8
GRAD_TOL = 1e-12
FOLD_TOL = 1e-4


class Tag(str, enum.Enum):
    FOLD = "fold"
    CUSP = "cusp"
    UNRESOLVED = "unresolved"


@dataclass
class CriticalCurve:
    """Polyline of critical points with per-vertex tags.

    Closed curves do not repeat their first vertex at the end.
    """

    vertices: np.ndarray
    tags: list[Tag]
    refined: bool = True
    closed: bool = True
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.vertices)

    @property
    def area(self) -> float:
        """Signed shoelace area (positive when counterclockwise)."""
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def cusp_indices(self) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.tags) if t is Tag.CUSP], dtype=int)

    def contains(self, point) -> bool:
        return bool(point_in_polygon(self.vertices, np.asarray(point, dtype=float)))

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "tags": [t.value for t in self.tags],
            "refined": self.refined,
            "closed": self.closed,
            "cusps": int(len(self.cusp_indices)),
        }


def point_in_polygon(poly: np.ndarray, p: np.ndarray) -> bool:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    crosses = (y > p[1]) != (yn > p[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x + (p[1] - y) * (xn - x) / (yn - y)
    return bool(np.sum(crosses & (p[0] < xint)) % 2)


# -- refinement and local frames ---------------------------------------------------

def refine_to_zero_set(fmap: PlanarMap, pts, iters: int = 30, tol: float = DET_TOL):
    """Newton steps on ``det DF`` along its gradient.

    Returns refined points and a mask of points whose gradient stayed above
    ``GRAD_TOL`` (False marks degenerate points).
    """
    p = np.array(pts, dtype=float)
    good = np.ones(len(p), dtype=bool)
    for _ in range(iters):
        d = fmap.det(p)
        if np.all(np.abs(d[good]) < 0.01 * tol):
            break
        g = fmap.det_gradient(p)
        g2 = np.einsum("ij,ij->i", g, g)
        flat = g2 <= GRAD_TOL**2
        good &= ~flat
        step = np.where(good, d / np.where(flat, 1.0, g2), 0.0)
        p = p - step[:, None] * g
    return p, good


def kernel_frames(fmap: PlanarMap, pts):
    """Unit kernel vectors ``v``, left annihilators ``eta`` of the image, and
    singular values (descending) of ``DF`` at each point."""
    U, S, Vt = np.linalg.svd(fmap.jacobian(np.asarray(pts, dtype=float)))
    return Vt[..., -1, :], U[..., :, -1], S


def aligned_kernels(fmap: PlanarMap, pts, closed: bool):
    """Kernel field made continuous by sign alignment with the previous vertex.

    Returns the field and, for closed curves, the sign relating the last
    vector to the first (-1 when the line field comes back reversed).
    """
    v, _, _ = kernel_frames(fmap, pts)
    v = v.copy()
    for i in range(1, len(v)):
        if v[i] @ v[i - 1] < 0:
            v[i] = -v[i]
    wrap = 1.0
    if closed and len(v) > 1:
        wrap = 1.0 if v[-1] @ v[0] >= 0 else -1.0
    return v, wrap


def _second_directional(fn, p, v, h):
    return (fn(p + h * v) - 2.0 * fn(p) + fn(p - h * v)) / h**2


def classify_critical_point(fmap: PlanarMap, p, tol: float = FOLD_TOL, scale: float | None = None) -> Tag:
    """Fold/cusp test at a critical point.

    ``scale`` is the reference magnitude for ``grad(det DF) . v``; it defaults
    to ``|grad(det DF)(p)|``. Fold when ``|grad det . v| > tol * scale``;
    otherwise Cusp when both the second derivative of ``det DF`` along the
    kernel and the cubic term ``eta . D^3F(v, v, v)`` are nonzero (relative
    to ``tol``); otherwise Unresolved.
    """
    p = np.asarray(p, dtype=float)
    J = fmap.jacobian(p)
    U, S, Vt = np.linalg.svd(J)
    if S[0] <= 1e-10:
        raise RankDeficiencyError(f"DF vanishes at {p.tolist()}")
    det = float(fmap.det(p))
    if abs(det) > DET_TOL * max(1.0, S[0]):
        raise ValueError(f"point {p.tolist()} is not critical (det DF = {det:.3e})")
    if S[1] > 1e-6 * S[0]:
        # det is small only relative to its scale; treat as not critical
        raise ValueError(f"smallest singular value {S[1]:.3e} is not negligible at {p.tolist()}")
    v, eta = Vt[-1], U[:, -1]
    g = fmap.det_gradient(p)
    gnorm = float(np.hypot(*g))
    if gnorm <= GRAD_TOL:
        return Tag.UNRESOLVED
    ref = gnorm if scale is None else scale
    if abs(g @ v) > tol * ref:
        return Tag.FOLD
    h = 1e-4 * fmap.scale
    d2 = float(_second_directional(fmap.det, p, v, h))
    cubic = float(eta @ _second_directional(lambda q: fmap.jacobian(q) @ v, p, v, h))
    if abs(d2) * fmap.scale > tol * gnorm and abs(cubic) * fmap.scale**2 > tol * S[0]:
        return Tag.CUSP
    return Tag.UNRESOLVED


def _fold_signal(fmap, pts, v):
    return np.einsum("ij,ij->i", fmap.det_gradient(pts), v)


def _locate_cusp(fmap, a, b, va, sa, iters: int = 60):
    """Bisect the segment ``[a, b]`` (projected onto the zero set) for the
    zero of ``grad det . v``, with ``v`` aligned to ``va``."""
    lo, hi = 0.0, 1.0
    q = a
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        q, _ = refine_to_zero_set(fmap, [(1 - mid) * a + mid * b])
        vq, _, _ = kernel_frames(fmap, q)
        vq = vq[0] if vq[0] @ va >= 0 else -vq[0]
        s = float(fmap.det_gradient(q[0]) @ vq)
        if np.sign(s) == np.sign(sa):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return q[0]


def tag_curve(fmap: PlanarMap, verts: np.ndarray, closed: bool = True, tol: float = FOLD_TOL, degenerate=None):
    """Tag vertices Fold/Unresolved and insert located cusp vertices.

    ``degenerate`` marks vertices that must stay Unresolved. Returns the new
    vertex array and tag list.
    """
    n = len(verts)
    degenerate = np.zeros(n, dtype=bool) if degenerate is None else np.asarray(degenerate, dtype=bool)
    v, wrap = aligned_kernels(fmap, verts, closed)
    s = _fold_signal(fmap, verts, v)
    scale = float(np.median(np.abs(s))) if n else 1.0
    tags = []
    for i in range(n):
        if degenerate[i]:
            tags.append(Tag.UNRESOLVED)
        elif abs(s[i]) > tol * scale:
            tags.append(Tag.FOLD)
        else:
            try:
                tags.append(classify_critical_point(fmap, verts[i], tol, scale))
            except ValueError:
                tags.append(Tag.UNRESOLVED)
    out_pts, out_tags = [], []
    pairs = n if closed else n - 1
    for i in range(n):
        out_pts.append(verts[i])
        out_tags.append(tags[i])
        if i >= pairs:
            continue
        j = (i + 1) % n
        sj = s[j] * (wrap if j == 0 else 1.0)
        if tags[i] is Tag.FOLD and tags[j] is Tag.FOLD and np.sign(s[i]) != np.sign(sj):
            q = _locate_cusp(fmap, verts[i], verts[j], v[i], s[i])
            try:
                tag = classify_critical_point(fmap, q, tol, scale)
            except ValueError:
                tag = Tag.UNRESOLVED
            out_pts.append(q)
            out_tags.append(Tag.CUSP if tag is Tag.CUSP else Tag.UNRESOLVED)
    return np.array(out_pts), out_tags


def _degenerate_points(fmap: PlanarMap, P: np.ndarray, D: np.ndarray) -> list[np.ndarray]:
    """Isolated zeros of ``det DF`` with no sign change around them, located by
    Newton on the gradient from strict local minima of ``|det DF|``."""
    A = np.abs(D)
    top = A.max()
    if top == 0.0:
        return []
    pad = np.pad(A, 1, mode="edge")
    neigh = np.stack([pad[1 + di : A.shape[0] + 1 + di, 1 + dj : A.shape[1] + 1 + dj]
                      for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)])
    sgn_pad = np.pad(np.sign(D), 1, mode="edge")
    same_sign = np.all(np.stack([sgn_pad[1 + di : D.shape[0] + 1 + di, 1 + dj : D.shape[1] + 1 + dj]
                                 for di in (-1, 0, 1) for dj in (-1, 0, 1)]) == np.sign(D), axis=0)
    cand = (A < neigh.min(axis=0)) & (A < 1e-3 * top) & same_sign
    found = []
    h = 1e-5 * fmap.scale
    for i, j in zip(*np.nonzero(cand)):
        q = P[i, j].copy()
        for _ in range(30):
            g = fmap.det_gradient(q)
            H = np.stack([(fmap.det_gradient(q + [h, 0]) - fmap.det_gradient(q - [h, 0])) / (2 * h),
                          (fmap.det_gradient(q + [0, h]) - fmap.det_gradient(q - [0, h])) / (2 * h)], axis=-1)
            try:
                dq = np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                break
            q = q - dq
            if np.hypot(*dq) < 1e-14 * max(1.0, np.hypot(*q)):
                break
        if abs(float(fmap.det(q))) < DET_TOL and np.hypot(*fmap.det_gradient(q)) <= 1e-6:
            if not any(np.hypot(*(q - r)) < 1e-6 for r in found):
                found.append(q)
    return found


def trace_critical_set(fmap: PlanarMap, window=(-2.0, 2.0, -2.0, 2.0), resolution: int = 512,
                       tol: float = FOLD_TOL) -> list[CriticalCurve]:
    """Closed critical curves of ``fmap`` inside ``window``.

    Marching squares on ``det DF = 0`` over a ``resolution x resolution``
    node grid, Newton refinement of every vertex, fold tagging, and cusp
    insertion between sign changes of ``grad det . v``. Curves come back
    sorted by enclosed area.

    Raises
    ------
    WindowTooSmallError
        If a contour reaches the window boundary.

    Warns
    -----
    DegeneratePointWarning
        For isolated zeros of ``det DF`` where its gradient vanishes; such
        points produce no curve.
    """
    x0, x1, y0, y1 = map(float, window)
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    P = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
    D = fmap.det(P)
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]
    curves = []
    for c in find_contours(D, 0.0):
        if len(c) < 4:
            continue
        if not np.allclose(c[0], c[-1]):
            raise WindowTooSmallError(f"critical contour reaches the boundary of window {tuple(window)}")
        pts = np.column_stack([x0 + c[:-1, 0] * dx, y0 + c[:-1, 1] * dy])
        pts, good = refine_to_zero_set(fmap, pts)
        if not good.all():
            for q in pts[~good]:
                warnings.warn(f"degenerate critical point near {q.tolist()}", DegeneratePointWarning, stacklevel=2)
        # refinement can merge neighbours; drop repeated vertices
        keep = np.hypot(*(pts - np.roll(pts, 1, axis=0)).T) > 1e-12 * max(dx, dy)
        pts, good = pts[keep], good[keep]
        verts, tags = tag_curve(fmap, pts, closed=True, tol=tol, degenerate=~good)
        curves.append(CriticalCurve(verts, tags, refined=True, closed=True,
                                    meta={"resolution": resolution, "window": list(map(float, window))}))
    for q in _degenerate_points(fmap, P, D):
        warnings.warn(f"degenerate critical point at {q.tolist()}", DegeneratePointWarning, stacklevel=2)
    curves.sort(key=lambda cc: abs(cc.area))
    return curves


def count_cusps(fmap: PlanarMap, curve: CriticalCurve) -> int:
    """Number of sign changes of ``grad(det DF) . v`` around the curve.

    Only Fold vertices contribute signals; the count must equal the number
    of Cusp tags, otherwise the curve is under-resolved.
    """
    v, wrap = aligned_kernels(fmap, curve.vertices, curve.closed)
    s = _fold_signal(fmap, curve.vertices, v)
    folds = [i for i, t in enumerate(curve.tags) if t is Tag.FOLD]
    if len(folds) < 2:
        changes = 0
    else:
        sig = s[folds]
        changes = int(np.sum(np.sign(sig[1:]) != np.sign(sig[:-1])))
        if curve.closed and np.sign(sig[-1]) != np.sign(sig[0] * wrap):
            changes += 1
    tagged = int(sum(t is Tag.CUSP for t in curve.tags))
    if changes != tagged:
        raise InconsistencyError(
            f"{changes} sign changes of the fold signal but {tagged} cusp tags; increase the resolution"
        )
    return changes
