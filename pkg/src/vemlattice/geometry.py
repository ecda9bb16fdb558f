"""Planar polygon utilities: shoelace geometry, containment, half-plane clipping."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InvalidRingError, MalformedElementError


def signed_area(ring: np.ndarray) -> float:
    """Shoelace signed area; positive for counter-clockwise rings."""
    x, y = ring[:, 0], ring[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def polygon_geometry(rings: Sequence[np.ndarray]) -> tuple[float, np.ndarray, float]:
    """Area, centroid and diameter of a polygon given as boundary rings.

    The first ring is the outer boundary (counter-clockwise); any further
    rings are holes (clockwise), so their signed areas subtract.

    Returns
    -------
    area : float
    centroid : ndarray, shape (2,)
    diameter : float
        Largest distance between any two vertices of any ring.
    """
    area = 0.0
    moment = np.zeros(2)
    for ring in rings:
        ring = np.asarray(ring, dtype=float)
        if ring.ndim != 2 or ring.shape[0] < 3:
            raise InvalidRingError(f"ring needs at least 3 vertices, got {len(ring)}")
        x, y = ring[:, 0], ring[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area += 0.5 * cross.sum()
        moment[0] += np.sum((x + xn) * cross) / 6.0
        moment[1] += np.sum((y + yn) * cross) / 6.0
    if not area > 0.0:
        raise MalformedElementError(f"non-positive element area {area:g}")
    pts = np.concatenate([np.asarray(r, dtype=float) for r in rings])
    diff = pts[:, None, :] - pts[None, :, :]
    diameter = float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))
    return float(area), moment / area, diameter


def points_in_polygon(points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Crossing-number containment test for many points against one ring."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ring = np.asarray(ring, dtype=float)
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = ring[:, 0][None, :], ring[:, 1][None, :]
    x1, y1 = np.roll(ring[:, 0], -1)[None, :], np.roll(ring[:, 1], -1)[None, :]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (x < xcross)
    return np.count_nonzero(hits, axis=1) % 2 == 1


def segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to segment ab."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ab = np.asarray(b, float) - np.asarray(a, float)
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)


def ring_distance(points: np.ndarray, ring: np.ndarray, closed: bool = True) -> np.ndarray:
    """Distance from points to a polyline (closed ring by default)."""
    ring = np.asarray(ring, dtype=float)
    nseg = len(ring) if closed else len(ring) - 1
    dist = np.full(len(np.atleast_2d(points)), np.inf)
    for k in range(nseg):
        dist = np.minimum(dist, segment_distance(points, ring[k], ring[(k + 1) % len(ring)]))
    return dist


def clip_halfplane(verts: list, labels: list, normal: np.ndarray, offset: float,
                   label: int, tol: float) -> tuple[list, list]:
    """Clip a convex labelled polygon by ``normal . x <= offset``.

    ``labels[k]`` tags the edge running from ``verts[k]`` to ``verts[k+1]``.
    Edges created along the clipping line receive ``label``.
    """
    n = len(verts)
    if n == 0:
        return verts, labels
    # snap near-line vertices onto the line so intersections never extrapolate
    dist = [float(normal @ v) - offset for v in verts]
    dist = [0.0 if abs(d) <= tol else d for d in dist]
    if max(dist) <= 0.0:
        return verts, labels
    out_v, out_l = [], []
    for k in range(n):
        p, q = verts[k], verts[(k + 1) % n]
        dp, dq = dist[k], dist[(k + 1) % n]
        if dp <= 0.0:
            if dq <= 0.0:
                out_v.append(p)
                out_l.append(labels[k])
            elif dp == 0.0:
                out_v.append(p)
                out_l.append(label)
            else:
                out_v.append(p)
                out_l.append(labels[k])
                out_v.append(p + (dp / (dp - dq)) * (q - p))
                out_l.append(label)
        elif dq < 0.0:
            out_v.append(p + (dp / (dp - dq)) * (q - p))
            out_l.append(labels[k])
    return out_v, out_l


def drop_short_edges(verts: list, labels: list, tol: float) -> tuple[list, list]:
    """Remove edges shorter than ``tol`` (keeping the following edge's label)."""
    changed = True
    while changed and len(verts) > 2:
        changed = False
        n = len(verts)
        for k in range(n):
            if np.linalg.norm(verts[(k + 1) % n] - verts[k]) < tol:
                del verts[k], labels[k]
                changed = True
                break
    return verts, labels
