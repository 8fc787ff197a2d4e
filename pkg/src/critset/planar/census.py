"""Images of critical curves, sense of folding, preimage counts and degree."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.lift import lift_argument
from ..core.roots import multistart_roots
from ..errors import (
    InconsistencyError,
    NearCriticalValueError,
    NotProperError,
    RadiusAdjustmentError,
    ResolutionError,
)
from .critical import CriticalCurve, Tag, kernel_frames, trace_critical_set
from .maps import PlanarMap

NEAR_TOL = 1e-4


@dataclass
class ImageCurve:
    points: np.ndarray
    tags: list[Tag]
    closed: bool = True

    def segments(self) -> np.ndarray:
        """Segments as an array of shape (k, 2, 2)."""
        p = self.points
        q = np.roll(p, -1, axis=0) if self.closed else p[1:]
        p = p if self.closed else p[:-1]
        return np.stack([p, q], axis=1)

    def fold_segments(self) -> np.ndarray:
        """Mask of segments whose two endpoints are fold images."""
        t = np.array([x is Tag.FOLD for x in self.tags])
        nxt = np.roll(t, -1) if self.closed else t[1:]
        return (t if self.closed else t[:-1]) & nxt

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "tags": [t.value for t in self.tags], "closed": self.closed}


@dataclass
class FoldArc:
    """Maximal run of fold vertices on one critical curve.

    ``direction`` is the unit folding direction at the arc's middle vertex,
    pointing to the side of the image with more preimages.
    """

    curve_index: int
    vertex_indices: np.ndarray
    image: np.ndarray
    anchor: np.ndarray
    direction: np.ndarray

    def to_dict(self) -> dict:
        return {
            "curve": self.curve_index,
            "vertices": [int(self.vertex_indices[0]), int(self.vertex_indices[-1])],
            "anchor": self.anchor.tolist(),
            "direction": self.direction.tolist(),
        }


@dataclass
class RegionCensus:
    """Preimage counts at targets plus the pairwise region relations used to
    check them.

    ``adjacency`` holds ``(i, j, crossings)`` for target pairs whose joining
    segment crosses the image curves at most once.
    """

    regions: list[tuple[np.ndarray, int]]
    fold_arcs: list[FoldArc]
    preimages: list[np.ndarray] = field(default_factory=list)
    adjacency: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def counts(self) -> list[int]:
        return [c for _, c in self.regions]

    def to_dict(self) -> dict:
        return {
            "regions": [{"target": p.tolist(), "count": int(c)} for p, c in self.regions],
            "preimages": [z.tolist() for z in self.preimages],
            "adjacency": [list(map(int, a)) for a in self.adjacency],
            "fold_arcs": [a.to_dict() for a in self.fold_arcs],
        }


def image_of_critical_set(fmap: PlanarMap, curves: list[CriticalCurve]) -> list[ImageCurve]:
    """Pointwise images of the curves, tags carried along."""
    return [ImageCurve(fmap.eval(c.vertices), list(c.tags), c.closed) for c in curves]


def folding_direction(fmap: PlanarMap, p) -> np.ndarray:
    """Unit normal to the fold image at ``F(p)`` on the side with two more
    preimages: ``sign(eta . D^2F(v, v)) eta`` with ``v`` the kernel and
    ``eta`` the annihilator of the image of ``DF(p)``."""
    p = np.asarray(p, dtype=float)
    v, eta, _ = kernel_frames(fmap, p[None])
    v, eta = v[0], eta[0]
    h = 1e-4 * fmap.scale
    d2 = (fmap.eval(p + h * v) - 2.0 * fmap.eval(p) + fmap.eval(p - h * v)) / h**2
    sgn = np.sign(eta @ d2)
    if sgn == 0:
        raise InconsistencyError(f"fold at {p.tolist()} has vanishing quadratic term")
    return sgn * eta


def fold_arcs(fmap: PlanarMap, curves: list[CriticalCurve]) -> list[FoldArc]:
    arcs = []
    for ci, c in enumerate(curves):
        is_fold = np.array([t is Tag.FOLD for t in c.tags])
        n = len(c)
        if not is_fold.any():
            continue
        # rotate so runs do not wrap around index 0
        start = int(np.argmin(is_fold)) if c.closed and not is_fold.all() else 0
        order = (np.arange(n) + start) % n
        run = []
        for i in list(order) + [None]:
            if i is not None and is_fold[i]:
                run.append(i)
                continue
            if len(run) >= 2:
                idx = np.array(run)
                mid = idx[len(idx) // 2]
                arcs.append(FoldArc(ci, idx, fmap.eval(c.vertices[idx]), fmap.eval(c.vertices[mid]),
                                    folding_direction(fmap, c.vertices[mid])))
            run = []
    return arcs


def _segment_crossings(a: np.ndarray, b: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Boolean mask of segments in ``segs`` (k, 2, 2) crossed by ``[a, b]``.

    Polyline vertices lying exactly on ``[a, b]`` count as being on the
    positive side, so a path through a vertex crosses exactly once.
    """
    p, q = segs[:, 0], segs[:, 1]

    def orient(u, v, w):
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])

    d1 = orient(a, b, p)
    d2 = orient(a, b, q)
    d3 = orient(p, q, a)
    d4 = orient(p, q, b)
    return ((d1 >= 0) != (d2 >= 0)) & (d3 * d4 < 0)


def _distance_to_segments(x: np.ndarray, segs: np.ndarray) -> float:
    p, q = segs[:, 0], segs[:, 1]
    d = q - p
    L2 = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", x - p, d) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    proj = p + t[:, None] * d
    return float(np.min(np.hypot(*(x - proj).T))) if len(segs) else np.inf


def self_intersections(curve: ImageCurve) -> int:
    """Number of proper crossings between non-adjacent segments of a polyline."""
    segs = curve.segments()
    k = len(segs)
    total = 0
    for i in range(k):
        others = np.arange(i + 2, k)
        if curve.closed and i == 0:
            others = others[others != k - 1]
        if len(others) == 0:
            continue
        q = segs[others]
        total += int(np.count_nonzero(_segment_crossings(segs[i, 0], segs[i, 1], q)))
    return total


def check_proper(fmap: PlanarMap, window, targets, samples: int = 4096) -> float:
    """Minimum of ``|F|`` on the window boundary; raises NotProperError if it does
    not exceed the largest target norm."""
    x0, x1, y0, y1 = map(float, window)
    s = np.linspace(0.0, 1.0, samples, endpoint=False)
    edges = np.concatenate([
        np.column_stack([x0 + (x1 - x0) * s, np.full_like(s, y0)]),
        np.column_stack([np.full_like(s, x1), y0 + (y1 - y0) * s]),
        np.column_stack([x1 - (x1 - x0) * s, np.full_like(s, y1)]),
        np.column_stack([np.full_like(s, x0), y1 - (y1 - y0) * s]),
    ])
    w = fmap.eval(edges)
    m = float(np.min(np.hypot(w[:, 0], w[:, 1])))
    tmax = float(np.max(np.hypot(*np.asarray(targets, dtype=float).T)))
    if m <= tmax:
        raise NotProperError(f"min |F| on the window boundary is {m:.4g}, not above max |target| = {tmax:.4g}")
    return m


def preimage_census(fmap: PlanarMap, targets, window, curves: list[CriticalCurve] | None = None,
                    grid: int = 128, resolution: int = 512, near_tol: float = NEAR_TOL) -> RegionCensus:
    """Count solutions of ``F(z) = w`` for each target ``w`` and cross-check.

    Targets whose joining segment misses the image of the critical set must
    have equal counts; targets separated by a single fold-image crossing must
    differ by two, with the larger count on the folding side.

    Raises
    ------
    NotProperError
        If ``|F|`` on the window boundary does not dominate the targets.
    NearCriticalValueError
        If a target lies within ``near_tol`` of an image curve.
    InconsistencyError
        If a count violates the region rules above.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    check_proper(fmap, window, targets)
    if curves is None:
        curves = trace_critical_set(fmap, window, resolution)
    images = image_of_critical_set(fmap, curves)
    segs = [im.segments() for im in images]
    fold_masks = [im.fold_segments() for im in images]
    all_segs = np.concatenate(segs) if segs else np.zeros((0, 2, 2))
    all_fold = np.concatenate(fold_masks) if segs else np.zeros(0, dtype=bool)
    owners = np.concatenate([np.full(len(s), i) for i, s in enumerate(segs)]) if segs else np.zeros(0, int)
    offsets = np.cumsum([0] + [len(s) for s in segs])
    for w in targets:
        d = _distance_to_segments(w, all_segs)
        if d < near_tol:
            raise NearCriticalValueError(f"target {w.tolist()} is {d:.2e} from the image of the critical set")

    pre = [multistart_roots(fmap, window, grid=grid, target=w) for w in targets]
    for w, z in zip(targets, pre):
        if len(z):
            r = np.hypot(*(fmap.eval(z) - w).T)
            if np.max(r) >= 1e-9 * max(1.0, float(np.hypot(*w))):
                raise InconsistencyError(f"preimage residual {np.max(r):.2e} at target {w.tolist()}")
    counts = [len(z) for z in pre]

    adjacency = []
    for i in range(len(targets)):
        for j in range(i + 1, len(targets)):
            hit = _segment_crossings(targets[i], targets[j], all_segs)
            k = int(np.count_nonzero(hit))
            if k > 1:
                continue
            adjacency.append((i, j, k))
            if k == 0 and counts[i] != counts[j]:
                raise InconsistencyError(
                    f"targets {i} and {j} share a region but have {counts[i]} and {counts[j]} preimages"
                )
            if k == 1:
                s = int(np.nonzero(hit)[0][0])
                if not all_fold[s]:
                    continue
                if abs(counts[i] - counts[j]) != 2:
                    raise InconsistencyError(
                        f"targets {i} and {j} across one fold arc have {counts[i]} and {counts[j]} preimages"
                    )
                c = owners[s]
                v = s - offsets[c]
                nd = folding_direction(fmap, curves[c].vertices[v])
                more = j if counts[j] > counts[i] else i
                less = i if more == j else j
                if nd @ (targets[more] - targets[less]) <= 0:
                    raise InconsistencyError(f"count increase between targets {i} and {j} opposes the folding direction")
    return RegionCensus([(w, c) for w, c in zip(targets, counts)], fold_arcs(fmap, curves), pre, adjacency)


def topological_degree(fmap: PlanarMap, radius: float, target=(0.0, 0.0), center=(0.0, 0.0),
                       samples: int = 4096, max_samples: int = 1 << 20) -> int:
    """Winding number of ``t -> F(center + radius e^{it}) - target``.

    Sampling doubles until consecutive image vectors subtend less than a
    quarter turn.

    Raises
    ------
    RadiusAdjustmentError
        If the image circle passes within ``1e-6`` of the target.
    """
    target = np.asarray(target, dtype=float)
    center = np.asarray(center, dtype=float)
    n = samples
    while True:
        t = np.linspace(0.0, 2 * np.pi, n + 1)
        w = fmap.eval(center + radius * np.column_stack([np.cos(t), np.sin(t)])) - target
        dist = float(np.min(np.hypot(w[:, 0], w[:, 1])))
        if dist < 1e-6:
            raise RadiusAdjustmentError(f"image of the circle of radius {radius} passes {dist:.2e} from the target")
        try:
            theta = lift_argument(w, float(np.arctan2(w[0, 1], w[0, 0])))
        except ResolutionError:
            if 2 * n > max_samples:
                raise
            n *= 2
            continue
        return int(round((theta[-1] - theta[0]) / (2 * np.pi)))
