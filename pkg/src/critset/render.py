"""Dependency-free SVG rendering built from hand-written path elements."""

from __future__ import annotations

import json
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 640
HEIGHT = 480
MARGIN = 40
PALETTE = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#16a085")


class Canvas:
    """Maps data coordinates onto a fixed SVG viewport."""

    def __init__(self, xlim, ylim, width: int = WIDTH, height: int = HEIGHT, equal: bool = False,
                 title: str = "", metadata: dict | None = None):
        x0, x1 = map(float, xlim)
        y0, y1 = map(float, ylim)
        if x1 <= x0:
            x0, x1 = x0 - 1.0, x0 + 1.0
        if y1 <= y0:
            y0, y1 = y0 - 1.0, y0 + 1.0
        self.sx = (width - 2 * MARGIN) / (x1 - x0)
        self.sy = (height - 2 * MARGIN) / (y1 - y0)
        if equal:
            self.sx = self.sy = min(self.sx, self.sy)
        self.x0, self.y0, self.y1 = x0, y0, y1
        self.width, self.height = width, height
        self.title = title
        self.metadata = metadata or {}
        self.items: list[str] = []

    def _xy(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x = MARGIN + (pts[:, 0] - self.x0) * self.sx
        y = self.height - MARGIN - (pts[:, 1] - self.y0) * self.sy
        return np.column_stack([x, y])

    def polyline(self, pts, closed: bool = False, color: str = PALETTE[0], width: float = 1.2, dash: str | None = None):
        q = self._xy(pts)
        if len(q) == 0:
            return
        d = "M" + " L".join(f"{x:.2f},{y:.2f}" for x, y in q) + (" Z" if closed else "")
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def markers(self, pts, color: str = PALETTE[1], radius: float = 3.5):
        for x, y in self._xy(pts):
            self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius}" fill="{color}"/>')

    def text(self, x: float, y: float, label: str, size: int = 12):
        self.items.append(f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" font-family="sans-serif">'
                          f"{escape(label)}</text>")

    def to_svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        meta = f"<metadata>{escape(json.dumps(self.metadata, sort_keys=True))}</metadata>"
        frame = (f'<rect x="{MARGIN}" y="{MARGIN}" width="{self.width - 2 * MARGIN}" '
                 f'height="{self.height - 2 * MARGIN}" fill="none" stroke="#999" stroke-width="0.5"/>')
        body = [head, meta, '<rect width="100%" height="100%" fill="white"/>', frame]
        if self.title:
            body.append(f'<text x="{MARGIN}" y="{MARGIN - 12}" font-size="14" font-family="sans-serif">'
                        f"{escape(self.title)}</text>")
        return "\n".join(body + self.items + ["</svg>"]) + "\n"


def _limits(arrays, pad: float = 0.05):
    pts = np.concatenate([np.asarray(a, dtype=float).reshape(-1, 2) for a in arrays]) if arrays else np.zeros((1, 2))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    return (lo[0] - pad * span[0], hi[0] + pad * span[0]), (lo[1] - pad * span[1], hi[1] + pad * span[1])


def render_curves(polylines, cusps=(), closed=None, title: str = "", metadata: dict | None = None) -> str:
    """Planar polylines with cusp markers, equal axes."""
    polylines = [np.asarray(p, dtype=float) for p in polylines]
    closed = closed if closed is not None else [True] * len(polylines)
    xlim, ylim = _limits(polylines)
    cv = Canvas(xlim, ylim, equal=True, title=title, metadata=metadata)
    for i, (p, c) in enumerate(zip(polylines, closed)):
        cv.polyline(p, closed=c, color=PALETTE[i % len(PALETTE)])
    if len(cusps):
        cv.markers(np.asarray(cusps, dtype=float).reshape(-1, 2))
    return cv.to_svg()


def render_waterfall(t, slices, s=None, title: str = "", metadata: dict | None = None) -> str:
    """Homotopy slices stacked vertically, each offset by its parameter value."""
    t = np.asarray(t, dtype=float)
    slices = [np.asarray(u, dtype=float) for u in slices]
    k = len(slices)
    s = np.linspace(0.0, 1.0, k) if s is None else np.asarray(s, dtype=float)
    amp = max(float(np.ptp(np.concatenate(slices))) if k else 1.0, 1e-12)
    step = 0.5 * amp
    lines = [np.column_stack([t, u + step * (k - 1) * si]) for u, si in zip(slices, s)]
    xlim, ylim = _limits(lines)
    cv = Canvas(xlim, ylim, title=title, metadata=metadata)
    for i, ln in enumerate(lines):
        cv.polyline(ln, color=PALETTE[0] if 0 < i < k - 1 else PALETTE[1], width=0.8)
    return cv.to_svg()


def render_prufer(t, omega_m, m: int, wall: float | None = None, title: str = "", metadata: dict | None = None) -> str:
    """Graph of the m-argument against the line ``m t``, with walls ``m t +- wall``."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(omega_m, dtype=float)
    graph = np.column_stack([t, w])
    ref = np.column_stack([t, m * t])
    extra = [graph, ref]
    if wall is not None:
        extra += [ref + [0.0, wall], ref - [0.0, wall]]
    xlim, ylim = _limits(extra)
    cv = Canvas(xlim, ylim, title=title, metadata=metadata)
    for k in range(int(np.floor(ylim[0] / np.pi)), int(np.ceil(ylim[1] / np.pi)) + 1):
        cv.polyline([[xlim[0], k * np.pi], [xlim[1], k * np.pi]], color="#bbbbbb", width=0.5, dash="4 3")
    cv.polyline(ref, color="#777777", width=0.8)
    if wall is not None:
        cv.polyline(ref + [0.0, wall], color=PALETTE[2], dash="6 3")
        cv.polyline(ref - [0.0, wall], color=PALETTE[2], dash="6 3")
    cv.polyline(graph, color=PALETTE[0], width=1.6)
    return cv.to_svg()


def render_sphere(samples, title: str = "", metadata: dict | None = None) -> str:
    """Orthographic projection of a sphere curve onto the plane normal to its mean direction."""
    g = np.asarray(samples, dtype=float)
    axis = g.mean(axis=0)
    axis = axis / np.linalg.norm(axis) if np.linalg.norm(axis) > 1e-9 else np.array([1.0, 0.0, 0.0])
    # orthonormal basis (e1, e2) of the viewing plane
    helper = np.eye(3)[int(np.argmin(np.abs(axis)))]
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    front = g @ axis >= 0
    xy = np.column_stack([g @ e1, g @ e2])
    cv = Canvas((-1.1, 1.1), (-1.1, 1.1), equal=True, title=title, metadata=metadata)
    s = np.linspace(0.0, 2 * np.pi, 257)
    cv.polyline(np.column_stack([np.cos(s), np.sin(s)]), closed=True, color="#999999", width=0.6)
    # split into front and back runs so hidden parts are dashed
    start = 0
    for i in range(1, len(g) + 1):
        if i == len(g) or front[i] != front[start]:
            run = xy[start:i + 1] if i < len(g) else np.vstack([xy[start:], xy[:1]])
            cv.polyline(run, color=PALETTE[0], dash=None if front[start] else "4 3")
            start = i
    return cv.to_svg()
