"""Boundary meshes: Gauss-Legendre panels away from corners and
interpolatory corner panels built for the singular density basis."""

from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .corner_analysis import Parity
from .exponent_solver import exponent_families
from .geometry import Polygon
from .kernels import k_block


class CornerRankError(ValueError):
    """Fewer corner nodes requested than the basis rank."""


def gauss_legendre(k: int):
    """Nodes and weights of the k-point rule on [-1, 1]."""
    if not 1 <= k <= 64:
        raise ValueError("k must lie in 1..64")
    return np.polynomial.legendre.leggauss(k)


# --------------------------------------------------------------------------
# corner basis and nodes
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=16)
def dyadic_grid(levels: int = 40, k: int = 16, tail: bool = True):
    """Composite GL grid on (0, 1] refined dyadically toward 0.

    With ``tail`` the last interval [0, 2**-levels] is included as well.
    """
    x, w = gauss_legendre(k)
    us, ws = [], []
    for lev in range(levels):
        a, b = 2.0 ** -(lev + 1), 2.0**-lev
        us.append(a + (b - a) * (x + 1) / 2)
        ws.append((b - a) / 2 * w)
    if tail:
        b = 2.0**-levels
        us.append(b * (x + 1) / 2)
        ws.append(b / 2 * w)
    u = np.concatenate(us[::-1])
    wt = np.concatenate(ws[::-1])
    return u, wt


def corner_exponents(theta: float, N: int, re_cap: float = 40.0) -> list[complex]:
    """Distinct exponents of both parities (conjugates merged), plus 0 and 1."""
    zs: list[complex] = [0j, 1 + 0j]
    if abs(theta - 1) < 1e-12:
        zs += [complex(n) for n in range(2, N + 1)]
        return zs
    for parity in Parity:
        for f in exponent_families(float(theta), N, parity).values():
            z = complex(f.z)
            if z.real > re_cap:
                continue
            if any(abs(z - s) < 1e-10 or abs(z.conjugate() - s) < 1e-10 for s in zs):
                continue
            zs.append(z)
    return zs


def basis_matrix(u, exponents) -> np.ndarray:
    """Real profiles Re/Im u^z sampled at u, one column per real function."""
    u = np.asarray(u, dtype=float)
    lu = np.log(u)
    cols = []
    for z in exponents:
        v = np.exp(z * lu)
        cols.append(v.real)
        if abs(z.imag) > 0:
            cols.append(v.imag)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class CornerRule:
    """Interpolatory node set on the unit arm (0, 1]."""

    theta: float
    N: int
    nodes: np.ndarray  # u-values, ascending
    weights: np.ndarray  # int_0^1 of the interpolating functions
    grid: np.ndarray  # quadrature grid, deeper than the sampling grid
    grid_weights: np.ndarray
    interp: np.ndarray  # (n_grid, n_nodes): grid values from node values
    exponents: tuple
    rank: int
    scales: np.ndarray  # max of each basis function on the sampling grid
    levels: int  # dyadic depth of the quadrature grid
    _cols: np.ndarray = field(repr=False, default=None)
    _lu: tuple = field(repr=False, default=None)

    def interp_at(self, u) -> np.ndarray:
        """Interpolation matrix (len(u), n_nodes) at arbitrary u in (0, 1]."""
        G = basis_matrix(np.atleast_1d(u), self.exponents)[:, self._cols] / self.scales[self._cols]
        return scipy.linalg.lu_solve(self._lu, G.T, trans=1).T

    def intervals(self) -> list[tuple[float, float]]:
        """Dyadic intervals underlying the quadrature grid, ascending."""
        edges = [0.0] + [2.0**-lev for lev in range(self.levels, -1, -1)]
        return list(zip(edges[:-1], edges[1:]))

    def interpolation_error(self) -> float:
        """Max error of interpolating each basis function on the quadrature
        grid, relative to that function's sampled maximum."""
        F = basis_matrix(self.grid, self.exponents) / self.scales
        Fn = basis_matrix(self.nodes, self.exponents) / self.scales
        return float(np.max(np.abs(self.interp @ Fn - F)))


def _quad_levels(zs, floor_levels: int, digits: float = 17.0) -> int:
    # tail of u^z below 2**-L, relative to its size at the smallest node
    a = min(z.real for z in zs) + 1.0
    extra = digits * math.log2(10) / max(a, 0.1)
    return int(min(floor_levels + math.ceil(extra), 600))


@functools.lru_cache(maxsize=64)
def corner_nodes(theta: float, N: int, k: int | None = None, levels: int = 40,
                 points_per_level: int = 16, tol: float = 1e-14,
                 node_floor: int = 30) -> CornerRule:
    """Interpolation nodes on (0, 1] for the corner basis at angle pi*theta.

    The basis, sampled on a dyadic grid of ``levels`` levels and scaled to
    unit max norm, is orthogonalised by column-pivoted QR; its numerical rank
    r at ``tol`` fixes the number of nodes.  Nodes are chosen among sample
    points with u >= 2**-node_floor by a pivoted QR of the orthonormal factor.
    Sampling is unweighted so that the tiny intervals near the corner carry
    as much weight as the rest of the arm.

    Integrals use a deeper grid on which the interpolant is continued through
    the r pivot functions, so that targets close to the vertex see a
    resolved integrand.
    """
    u, _ = dyadic_grid(levels, points_per_level, tail=False)
    zs = corner_exponents(theta, N)
    F = basis_matrix(u, zs)
    scales = np.max(np.abs(F), axis=0)
    F = F / scales
    Q, R, cpiv = scipy.linalg.qr(F, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > tol * d[0]))
    if k is not None and k < rank:
        raise CornerRankError(f"{k} corner nodes requested but the basis has rank {rank}")
    r = rank if k is None else k
    if r > rank:
        raise CornerRankError(f"{k} corner nodes requested but the basis has rank {rank}")
    cand = np.nonzero(u >= 2.0**-node_floor)[0]
    U = Q[cand, :r]
    _, _, piv = scipy.linalg.qr(U.T, mode="economic", pivoting=True)
    sel = np.sort(cand[piv[:r]])
    cols = cpiv[:r]
    lu = scipy.linalg.lu_factor(F[np.ix_(sel, cols)])
    depth = _quad_levels(zs, node_floor)
    ug, wg = dyadic_grid(depth, points_per_level, tail=True)
    Gq = basis_matrix(ug, zs)[:, cols] / scales[cols]
    P = scipy.linalg.lu_solve(lu, Gq.T, trans=1).T
    weights = wg @ P
    return CornerRule(float(theta), N, u[sel], weights, ug, wg, P, tuple(zs), rank, scales,
                      depth, cols, lu)


# --------------------------------------------------------------------------
# panels and meshes
# --------------------------------------------------------------------------

class PanelKind(enum.Enum):
    SMOOTH = "smooth"
    CORNER_ARM = "corner_arm"


@dataclass
class Panel:
    kind: PanelKind
    edge: int
    s_a: float  # arc parameter of the panel ends (global)
    s_b: float
    nodes: np.ndarray  # arc positions (global)
    weights: np.ndarray
    node_index: np.ndarray  # indices into the mesh node arrays
    corner_id: int | None = None
    side: str | None = None  # '+' arm leaves the corner, '-' arm enters it
    rule: CornerRule | None = None

    @property
    def length(self) -> float:
        return self.s_b - self.s_a


@dataclass
class Mesh:
    polygon: Polygon
    panels: list
    points: np.ndarray
    tangents: np.ndarray
    weights: np.ndarray
    arc: np.ndarray
    edge: np.ndarray
    panel_of: np.ndarray
    order: int
    N: int
    corner_lengths: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @property
    def normals(self) -> np.ndarray:
        return np.stack([self.tangents[:, 1], -self.tangents[:, 0]], axis=1)

    def total_length(self) -> float:
        return float(sum(p.length for p in self.panels))

    def arm_geometry(self, panel: Panel, u, local: bool = False):
        """Positions and tangents of arm points at unit parameters u.

        With ``local`` the positions are relative to the corner vertex.
        """
        poly = self.polygon
        c = panel.length
        k = panel.corner_id
        if panel.side == "+":
            tau = poly.tangents[k]
            pts = (c * np.asarray(u))[:, None] * tau[None, :]
        else:
            tau = poly.tangents[(k - 1) % poly.n_vertices]
            pts = -(c * np.asarray(u))[:, None] * tau[None, :]
        if not local:
            pts = poly.vertices[k][None, :] + pts
        return pts, np.broadcast_to(tau, pts.shape).copy()

    def points_relative_to(self, corner: int, idx) -> np.ndarray:
        """Node positions minus vertex ``corner``.

        Nodes on that corner's own arms use their exact offsets, which keeps
        distances to the vertex accurate far below the rounding of global
        coordinates.
        """
        idx = np.asarray(idx)
        out = self.points[idx] - self.polygon.vertices[corner][None, :]
        for p in self.panels:
            if p.kind is PanelKind.CORNER_ARM and p.corner_id == corner:
                u = p.rule.nodes[::-1] if p.side == "-" else p.rule.nodes
                loc, _ = self.arm_geometry(p, u, local=True)
                pos = np.searchsorted(p.node_index, idx)
                hit = (pos < len(p.node_index)) & (p.node_index[np.minimum(pos, len(p.node_index) - 1)] == idx)
                out[hit] = loc[pos[hit]]
        return out

    def evaluation_rule(self):
        """Quadrature for smooth integrands against the density.

        Returns (points, tangents, weights, E) where E maps node densities
        (one scalar component) to values at the rule points.
        """
        pts, tans, wts, rows = [], [], [], []
        n = self.n_nodes
        for p in self.panels:
            if p.kind is PanelKind.SMOOTH:
                pts.append(self.points[p.node_index])
                tans.append(self.tangents[p.node_index])
                wts.append(p.weights)
                E = np.zeros((len(p.node_index), n))
                E[np.arange(len(p.node_index)), p.node_index] = 1.0
            else:
                g, gt = self.arm_geometry(p, p.rule.grid)
                pts.append(g)
                tans.append(gt)
                wts.append(p.length * p.rule.grid_weights)
                E = np.zeros((len(g), n))
                E[:, p.node_index] = arm_interp(p)
            rows.append(E)
        return (np.concatenate(pts), np.concatenate(tans), np.concatenate(wts), np.vstack(rows))

    def panel_ends(self, panel: Panel):
        """Endpoints of a panel in global coordinates."""
        poly = self.polygon
        e = panel.edge
        off = np.array([panel.s_a, panel.s_b]) - poly.edge_starts[e]
        ends = poly.vertices[e][None, :] + off[:, None] * poly.tangents[e][None, :]
        return ends[0], ends[1]

    def near_boundary(self, target, factor: float = 1.0) -> bool:
        d = float(self.polygon.distance_to_boundary(np.asarray(target)[None, :])[0])
        smooth = [p.length for p in self.panels if p.kind is PanelKind.SMOOTH]
        return d < factor * (max(smooth) if smooth else self.corner_lengths.max()) / 4

    def to_dict(self) -> dict:
        return {
            "polygon": self.polygon.to_dict(),
            "order": self.order,
            "corner_terms": self.N,
            "corner_lengths": self.corner_lengths.tolist(),
            "n_nodes": self.n_nodes,
            "panels": [
                {
                    "kind": p.kind.value,
                    "edge": p.edge,
                    "interval": [p.s_a, p.s_b],
                    "nodes": p.nodes.tolist(),
                    "weights": p.weights.tolist(),
                    "corner_id": p.corner_id,
                    "side": p.side,
                }
                for p in self.panels
            ],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _graded_breaks(a: float, b: float, c_left: float, c_right: float, h_max: float, ratio: float):
    """Breakpoints on [a, b]: panels grow geometrically away from both ends."""
    left, right = [a], [b]
    size = c_left
    while left[-1] + size < (a + b) / 2 and size < h_max:
        left.append(left[-1] + size)
        size = min(size * ratio, h_max)
    size = c_right
    while right[-1] - size > (a + b) / 2 and size < h_max:
        right.append(right[-1] - size)
        size = min(size * ratio, h_max)
    lo, hi = left[-1], right[-1]
    m = max(1, math.ceil((hi - lo) / h_max - 1e-9))
    mid = list(np.linspace(lo, hi, m + 1))
    brk = left[:-1] + mid + right[-2::-1]
    # merge slivers produced by the two gradings meeting
    out = [brk[0]]
    for x in brk[1:]:
        if x - out[-1] < 0.25 * min(c_left, c_right):
            out[-1] = x if x == brk[-1] else out[-1]
            continue
        out.append(x)
    if out[-1] != b:
        out[-1] = b
    return out


def build_mesh(polygon: Polygon, order: int = 16, N: int = 8, corner_fraction: float = 0.5,
               h_max: float | None = None, ratio: float = 2.0, corner_lengths=None) -> Mesh:
    """Panels for a polygon.

    Each corner gets two arm panels of equal length ``corner_fraction`` times
    the shorter adjacent edge.  Smooth panels of ``order`` GL nodes grow by
    ``ratio`` away from the arms up to ``h_max``.
    """
    nv = polygon.n_vertices
    L = polygon.edge_lengths
    if corner_lengths is None:
        corner_lengths = np.array(
            [corner_fraction * min(L[k], L[(k - 1) % nv]) for k in range(nv)]
        )
    corner_lengths = np.asarray(corner_lengths, dtype=float)
    if np.any(corner_lengths <= 0) or np.any(
        corner_lengths + np.roll(corner_lengths, -1) > L + 1e-12
    ):
        raise ValueError("corner arms must be positive and fit on their edges")
    if h_max is None:
        h_max = float(np.min(L)) / 4
    xg, wg = gauss_legendre(order)
    rules = [corner_nodes(float(polygon.thetas[k]), N) for k in range(nv)]

    panels: list[Panel] = []
    pts, tans, wts, arcs, edges, owner = [], [], [], [], [], []

    def add(kind, edge, sa, sb, s_nodes, w_nodes, corner=None, side=None, rule=None):
        start = sum(len(a) for a in arcs)
        idx = np.arange(start, start + len(s_nodes))
        s0 = polygon.edge_starts[edge]
        local = np.asarray(s_nodes) - s0
        pts.append(polygon.vertices[edge] + local[:, None] * polygon.tangents[edge])
        tans.append(np.tile(polygon.tangents[edge], (len(s_nodes), 1)))
        wts.append(np.asarray(w_nodes))
        arcs.append(np.asarray(s_nodes))
        edges.append(np.full(len(s_nodes), edge))
        owner.append(np.full(len(s_nodes), len(panels)))
        panels.append(Panel(kind, edge, sa, sb, np.asarray(s_nodes), np.asarray(w_nodes), idx,
                            corner, side, rule))

    for e in range(nv):
        s0 = polygon.edge_starts[e]
        c0, c1 = corner_lengths[e], corner_lengths[(e + 1) % nv]
        r0, r1 = rules[e], rules[(e + 1) % nv]
        # arm leaving corner e
        add(PanelKind.CORNER_ARM, e, s0, s0 + c0, s0 + c0 * r0.nodes, c0 * r0.weights,
            e, "+", r0)
        brk = _graded_breaks(s0 + c0, s0 + L[e] - c1, c0, c1, h_max, ratio) if L[e] - c0 - c1 > 1e-12 else []
        for a, b in zip(brk[:-1], brk[1:]):
            add(PanelKind.SMOOTH, e, a, b, a + (b - a) * (xg + 1) / 2, (b - a) / 2 * wg)
        # arm entering corner e+1, nodes ordered along the edge
        k1 = (e + 1) % nv
        send = s0 + L[e]
        add(PanelKind.CORNER_ARM, e, send - c1, send, (send - c1 * r1.nodes)[::-1],
            (c1 * r1.weights)[::-1], k1, "-", r1)
    mesh = Mesh(
        polygon=polygon,
        panels=panels,
        points=np.concatenate(pts),
        tangents=np.concatenate(tans),
        weights=np.concatenate(wts),
        arc=np.concatenate(arcs),
        edge=np.concatenate(edges),
        panel_of=np.concatenate(owner),
        order=order,
        N=N,
        corner_lengths=corner_lengths,
    )
    return mesh


def arm_interp(panel: Panel) -> np.ndarray:
    """Interpolation matrix from the panel's node values (in mesh order)."""
    P = panel.rule.interp
    return P[:, ::-1] if panel.side == "-" else P


def corner_quadrature(mesh: Mesh, targets, target_tangents, panel: Panel,
                      local: bool = False) -> np.ndarray:
    """Weights W[i, a, m, b] with sum_m W[i,:,m,:] mu_m = int_arm K(x_i, y) mu(y) dS.

    ``local`` means the targets are given relative to the arm's vertex.
    """
    rule = panel.rule
    g, gt = mesh.arm_geometry(panel, rule.grid, local=local)
    Kg = k_block(targets, target_tangents, g, gt)  # (nt, ng, 2, 2)
    Kg = Kg * (panel.length * rule.grid_weights)[None, :, None, None]
    P = arm_interp(panel)
    return np.einsum("igab,gm->iamb", Kg, P)
