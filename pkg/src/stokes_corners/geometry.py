"""Polygonal boundaries, arc-length frames and the local wedge model."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GeometryError(ValueError):
    """Invalid polygon or parameter outside the boundary."""


@dataclass(frozen=True)
class FramePoint:
    position: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    arc_param: float = 0.0


def outward_normal(tangent) -> np.ndarray:
    """Rotate a counterclockwise tangent by -90 degrees."""
    t = np.asarray(tangent, dtype=float)
    return np.array([t[1], -t[0]])


def signed_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class Polygon:
    """Simple counterclockwise polygon.

    ``thetas[k]`` is the interior angle at vertex ``k`` divided by pi.  Edge
    ``k`` runs from vertex ``k`` to vertex ``k+1``.
    """

    def __init__(self, vertices, name: str = "polygon"):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("need at least three 2-D vertices")
        if np.allclose(v[0], v[-1]) and len(v) > 3:
            v = v[:-1]
        area = signed_area(v)
        if area < 0:
            raise GeometryError(
                "vertices are clockwise; list them counterclockwise "
                "(reverse the vertex order)"
            )
        if area == 0:
            raise GeometryError("degenerate polygon with zero area")
        d = np.roll(v, -1, axis=0) - v
        lengths = np.hypot(d[:, 0], d[:, 1])
        if np.any(lengths <= 0):
            raise GeometryError("repeated vertex")
        self.name = name
        self.vertices = v
        self.edge_lengths = lengths
        self.tangents = d / lengths[:, None]
        self.normals = np.stack([self.tangents[:, 1], -self.tangents[:, 0]], axis=1)
        tin = np.roll(self.tangents, 1, axis=0)
        turn = np.arctan2(
            tin[:, 0] * self.tangents[:, 1] - tin[:, 1] * self.tangents[:, 0],
            np.sum(tin * self.tangents, axis=1),
        )
        self.turning_angles = turn
        self.thetas = 1.0 - turn / math.pi
        if np.any(self.thetas <= 0) or np.any(self.thetas >= 2):
            raise GeometryError("corner angles must lie strictly in (0, 2 pi)")
        if abs(np.sum(turn) - 2 * math.pi) > 1e-9:
            raise GeometryError("polygon is not simple")
        self.edge_starts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
        self.total_length = float(np.sum(lengths))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @classmethod
    def from_dict(cls, data: dict, name: str | None = None) -> "Polygon":
        if not isinstance(data, dict) or "vertices" not in data:
            raise GeometryError('geometry must be a JSON object with a "vertices" list')
        unknown = set(data) - {"vertices", "name"}
        if unknown:
            raise GeometryError(f"unknown geometry keys: {sorted(unknown)}")
        return cls(data["vertices"], name=name or data.get("name", "polygon"))

    @classmethod
    def from_json(cls, path) -> "Polygon":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise GeometryError(f"cannot read geometry file {path}: {exc}") from exc
        return cls.from_dict(data, name=data.get("name", path.stem))

    def to_dict(self) -> dict:
        return {"name": self.name, "vertices": self.vertices.tolist()}

    def centroid(self) -> np.ndarray:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        cr = x * np.roll(y, -1) - np.roll(x, -1) * y
        a = 0.5 * np.sum(cr)
        cx = np.sum((x + np.roll(x, -1)) * cr) / (6 * a)
        cy = np.sum((y + np.roll(y, -1)) * cr) / (6 * a)
        return np.array([cx, cy])

    def circumradius(self) -> float:
        """Largest centroid-to-vertex distance."""
        return float(np.max(np.linalg.norm(self.vertices - self.centroid(), axis=1)))

    def inradius(self) -> float:
        """Smallest centroid-to-edge distance."""
        return float(np.min(self.distance_to_boundary(self.centroid()[None, :])))

    def distance_to_boundary(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        best = np.full(len(p), np.inf)
        for k in range(self.n_vertices):
            a = self.vertices[k]
            rel = p - a
            s = np.clip(rel @ self.tangents[k], 0.0, self.edge_lengths[k])
            foot = a + s[:, None] * self.tangents[k]
            best = np.minimum(best, np.linalg.norm(p - foot, axis=1))
        return best

    def contains(self, points) -> np.ndarray:
        """Even-odd rule; points on the boundary count as outside."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = p[:, 0], p[:, 1]
        inside = np.zeros(len(p), dtype=bool)
        v = self.vertices
        for k in range(self.n_vertices):
            (x1, y1), (x2, y2) = v[k], v[(k + 1) % self.n_vertices]
            cond = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= cond & (x < xc)
        return inside & (self.distance_to_boundary(p) > 0)

    def edge_of(self, s: float) -> int:
        return int(np.searchsorted(self.edge_starts, s, side="right") - 1)

    def point_at(self, s) -> np.ndarray:
        """Positions for arc parameters (vectorised, no corner checks)."""
        s = np.asarray(s, dtype=float)
        k = np.clip(np.searchsorted(self.edge_starts, s, side="right") - 1, 0, self.n_vertices - 1)
        return self.vertices[k] + (s - self.edge_starts[k])[..., None] * self.tangents[k]

    def rotated(self, angle: float) -> "Polygon":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return Polygon(self.vertices @ rot.T, name=self.name)


def parameterize(polygon: Polygon, s: float, side: str | None = None) -> FramePoint:
    """Frame at arc length ``s``; at a vertex ``side`` must be '+' or '-'."""
    L = polygon.total_length
    if not 0.0 <= s <= L:
        raise GeometryError(f"arc parameter {s} outside [0, {L}]")
    s_mod = 0.0 if s == L else s
    at_corner = np.isclose(s_mod, polygon.edge_starts, rtol=0, atol=1e-14 * L)
    if np.any(at_corner):
        k = int(np.argmax(at_corner))
        if side not in ("+", "-"):
            raise GeometryError(f"s={s} is a corner; pass side='+' or side='-'")
        edge = k if side == "+" else (k - 1) % polygon.n_vertices
        pos = polygon.vertices[k].copy()
    else:
        edge = polygon.edge_of(s_mod)
        pos = polygon.vertices[edge] + (s_mod - polygon.edge_starts[edge]) * polygon.tangents[edge]
    return FramePoint(
        position=pos,
        tangent=polygon.tangents[edge].copy(),
        normal=polygon.normals[edge].copy(),
        arc_param=float(s),
    )


@dataclass(frozen=True)
class Wedge:
    """Two straight arms meeting at the origin with interior angle pi*theta."""

    theta: float
    arm_length: float = 1.0

    def __post_init__(self):
        if not 0 < self.theta < 2:
            raise GeometryError("theta must lie in (0, 2)")
        if self.arm_length <= 0:
            raise GeometryError("arm_length must be positive")


def wedge_param(w: Wedge, t: float) -> np.ndarray:
    """-t (cos pi theta, sin pi theta) for t < 0 and (t, 0) for t > 0."""
    if abs(t) > w.arm_length:
        raise GeometryError("t outside the wedge arms")
    if t > 0:
        return np.array([t, 0.0])
    if t < 0:
        a = math.pi * w.theta
        return -t * np.array([math.cos(a), math.sin(a)])
    return np.zeros(2)


def wedge_frame(w: Wedge, t: float) -> FramePoint:
    if t == 0:
        raise GeometryError("the corner point has no frame")
    if t > 0:
        tau = np.array([1.0, 0.0])
    else:
        a = math.pi * w.theta
        tau = -np.array([math.cos(a), math.sin(a)])
    return FramePoint(wedge_param(w, t), tau, outward_normal(tau), float(t))


def rotation_matrix(fp: FramePoint) -> np.ndarray:
    """Rows are the tangent and the normal."""
    return np.array([fp.tangent, fp.normal], dtype=float)


def regular_polygon(n: int, side: float = 1.0, name: str | None = None) -> Polygon:
    r = side / (2 * math.sin(math.pi / n))
    ang = -math.pi / 2 - math.pi / n + 2 * math.pi * np.arange(n) / n
    v = r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    v -= v[0]
    return Polygon(v, name=name or f"regular_{n}")


def unit_square() -> Polygon:
    return Polygon([[0, 0], [1, 0], [1, 1], [0, 1]], name="square")


def equilateral_triangle() -> Polygon:
    return Polygon([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]], name="equilateral")


def right_triangle() -> Polygon:
    """Isosceles right triangle with unit legs."""
    return Polygon([[0, 0], [1, 0], [0, 1]], name="right_triangle")
