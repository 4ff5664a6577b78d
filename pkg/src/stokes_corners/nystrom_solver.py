"""Dense Nystrom discretisation of -mu/2 + K mu = h and interior evaluation."""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .discretization import Mesh, PanelKind, arm_interp, corner_quadrature, gauss_legendre
from .kernels import NearBoundaryWarning, dlp_block, k_block


class SingularSystemError(np.linalg.LinAlgError):
    pass


class CompatibilityWarning(UserWarning):
    """Boundary data carries net flux through the boundary."""


@dataclass
class DenseSystem:
    mesh: Mesh
    matrix: np.ndarray  # 2n x 2n, rank-one term included when enabled
    rank_one: bool
    flags: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    _lu: tuple | None = None
    _raw: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.mesh.n_nodes

    def raw_matrix(self) -> np.ndarray:
        """Operator without the rank-one term."""
        if not self.rank_one:
            return self.matrix
        if self._raw is None:
            self._raw = self.matrix - _rank_one_term(self.mesh)
        return self._raw

    def condition(self, raw: bool = False) -> float:
        s = np.linalg.svd(self.raw_matrix() if raw else self.matrix, compute_uv=False)
        return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")

    def lu(self):
        if self._lu is None:
            self._lu = scipy.linalg.lu_factor(self.matrix, check_finite=True)
        return self._lu


def _rank_one_term(mesh: Mesh) -> np.ndarray:
    n = mesh.n_nodes
    R = np.zeros((2 * n, 2 * n))
    R[1::2, 1::2] = np.broadcast_to(mesh.weights, (n, n))
    return R


# --------------------------------------------------------------------------
# near-field product integration on smooth panels
# --------------------------------------------------------------------------

def _legendre_interp(nodes_ref, x_ref):
    V = np.polynomial.legendre.legvander(nodes_ref, len(nodes_ref) - 1)
    W = np.polynomial.legendre.legvander(x_ref, len(nodes_ref) - 1)
    return np.linalg.solve(V.T, W.T).T  # (len(x), len(nodes))


def _panel_product_weights(x, tx, a, b, tangent, origin, order, tol=1e-15, max_depth=30):
    """int_panel K(x, y(s)) l_m(s) ds for the Lagrange basis l_m of the panel.

    Adaptive bisection with a 16-point rule compared against its two halves.
    Returns shape (2, order, 2).
    """
    xr, _ = gauss_legendre(order)
    g, gw = gauss_legendre(16)

    def rule(lo, hi):
        s = lo + (hi - lo) * (g + 1) / 2
        w = (hi - lo) / 2 * gw
        y = origin[None, :] + s[:, None] * tangent[None, :]
        K = k_block(x[None, :], tx[None, :], y, np.tile(tangent, (len(s), 1)))[0]
        L = _legendre_interp(xr, 2 * (s - a) / (b - a) - 1)
        return np.einsum("gab,g,gm->amb", K, w, L)

    total = np.zeros((2, order, 2))
    stack = [(a, b, rule(a, b), 0)]
    scale = 0.0
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = (lo + hi) / 2
        left, right = rule(lo, mid), rule(mid, hi)
        halves = left + right
        scale = max(scale, np.abs(halves).max())
        if np.abs(halves - whole).max() <= tol * max(scale, 1.0) or depth >= max_depth:
            total += halves
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return total


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------

def assemble(mesh: Mesh, rank_one: bool = True, near_factor: float = 1.0) -> DenseSystem:
    """Nystrom matrix of -I/2 + K in (tau, nu) components, node-interleaved."""
    t0 = time.perf_counter()
    n = mesh.n_nodes
    X, TX = mesh.points, mesh.tangents
    A = np.zeros((n, 2, n, 2))
    flags: list = []
    poly = mesh.polygon
    for p in mesh.panels:
        idx = p.node_index
        others = np.nonzero(mesh.edge != p.edge)[0]  # same-edge blocks vanish
        if len(others) == 0:
            continue
        if p.kind is PanelKind.CORNER_ARM:
            Xl = mesh.points_relative_to(p.corner_id, others)
            W = corner_quadrature(mesh, Xl, TX[others], p, local=True)
            A[np.ix_(others, [0, 1], idx, [0, 1])] += W
            continue
        Y, TY = X[idx], TX[idx]
        K = k_block(X[others], TX[others], Y, TY) * p.weights[None, :, None, None]
        A[np.ix_(others, [0, 1], idx, [0, 1])] += K.transpose(0, 2, 1, 3)
        # near targets on other edges: product integration
        tau = poly.tangents[p.edge]
        origin = poly.vertices[p.edge] - poly.edge_starts[p.edge] * tau
        centre = origin + 0.5 * (p.s_a + p.s_b) * tau
        d = np.linalg.norm(X[others] - centre[None, :], axis=1)
        near = others[d < (0.5 + near_factor) * p.length]
        for i in near:
            Wn = _panel_product_weights(X[i], TX[i], p.s_a, p.s_b, tau, origin, len(idx))
            A[i][:, idx, :] = Wn
    A = A.reshape(2 * n, 2 * n)
    A -= 0.5 * np.eye(2 * n)
    if rank_one:
        A += _rank_one_term(mesh)
    sysm = DenseSystem(mesh, A, rank_one, flags)
    sysm.timings["assemble"] = time.perf_counter() - t0
    return sysm


def boundary_data(mesh: Mesh, field_fn) -> np.ndarray:
    """(h_tau, h_nu) at the nodes for a Cartesian velocity field, interleaved."""
    u = np.asarray(field_fn(mesh.points), dtype=float)
    ht = np.sum(u * mesh.tangents, axis=1)
    hn = np.sum(u * mesh.normals, axis=1)
    return np.stack([ht, hn], axis=1).reshape(-1)


def net_flux(mesh: Mesh, h) -> float:
    h = np.asarray(h, dtype=float).reshape(-1, 2)
    return float(mesh.weights @ h[:, 1])


def solve(system: DenseSystem, h, compat_tol: float = 1e-8) -> np.ndarray:
    """Density (mu_tau, mu_nu) per node, shape (n, 2)."""
    t0 = time.perf_counter()
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.shape != (2 * system.n,):
        raise ValueError("boundary data has the wrong length")
    flux = net_flux(system.mesh, h)
    if abs(flux) > compat_tol * max(1.0, np.abs(h).max()):
        warnings.warn(f"boundary data has net flux {flux:.2e}", CompatibilityWarning, stacklevel=2)
    if not np.any(h):
        return np.zeros((system.n, 2))
    try:
        mu = scipy.linalg.lu_solve(system.lu(), h)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularSystemError(str(exc)) from exc
    res = np.linalg.norm(system.matrix @ mu - h) / np.linalg.norm(h)
    if not np.isfinite(res) or res > 1e-12:
        raise SingularSystemError(
            f"dense solve residual {res:.2e}; condition estimate {system.condition():.2e}"
        )
    system.timings["solve"] = time.perf_counter() - t0
    system.timings["residual"] = float(res)
    return mu.reshape(-1, 2)


def _segment_distance(x, a, b) -> float:
    d = b - a
    L2 = float(d @ d)
    tt = 0.0 if L2 == 0 else min(max(float((x - a) @ d) / L2, 0.0), 1.0)
    return float(np.linalg.norm(x - (a + tt * d)))


def _panel_maps(mesh: Mesh, p):
    """Position map, interpolation map and starting intervals in a local parameter."""
    if p.kind is PanelKind.SMOOTH:
        poly = mesh.polygon
        tau = poly.tangents[p.edge]
        origin = poly.vertices[p.edge] - poly.edge_starts[p.edge] * tau
        xr, _ = gauss_legendre(len(p.node_index))

        def pos(u):
            pts = origin[None, :] + (p.s_a + (p.s_b - p.s_a) * (u[:, None] + 1) / 2) * tau[None, :]
            return pts, np.tile(tau, (len(u), 1))

        return pos, (lambda u: _legendre_interp(xr, u)), [(-1.0, 1.0)], p.length / 2
    rule = p.rule

    def interp(u):
        P = rule.interp_at(u)
        return P[:, ::-1] if p.side == "-" else P

    return (lambda u: mesh.arm_geometry(p, u)), interp, rule.intervals(), p.length


def _refined_rule(pos, intervals, x, k: int = 16, max_depth: int = 30):
    """GL points in local parameter, bisecting intervals closer to x than their length."""
    g, gw = gauss_legendre(k)
    us, ws = [], []
    stack = [(lo, hi, 0) for lo, hi in intervals]
    while stack:
        lo, hi, depth = stack.pop()
        ends, _ = pos(np.array([lo, hi]))
        if depth < max_depth and _segment_distance(x, ends[0], ends[1]) < np.linalg.norm(ends[1] - ends[0]):
            mid = 0.5 * (lo + hi)
            stack += [(lo, mid, depth + 1), (mid, hi, depth + 1)]
            continue
        us.append(lo + (hi - lo) * (g + 1) / 2)
        ws.append((hi - lo) / 2 * gw)
    return np.concatenate(us), np.concatenate(ws)


def interior_velocity(mesh: Mesh, mu, targets, warn: bool = True) -> np.ndarray:
    """Double-layer velocity at interior points, shape (len(targets), 2).

    Targets closer to a panel than its length get a panel rule refined by
    bisection (depth <= 30); such targets are also flagged with a warning.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    mu = np.asarray(mu, dtype=float).reshape(-1, 2)
    if warn:
        for x in targets:
            if mesh.near_boundary(x):
                warnings.warn("target is close to the boundary", NearBoundaryWarning, stacklevel=2)
                break
    u = np.zeros((len(targets), 2))
    for p in mesh.panels:
        idx = p.node_index
        if p.kind is PanelKind.SMOOTH:
            pts, tans, w, dens = mesh.points[idx], mesh.tangents[idx], p.weights, mu[idx]
        else:
            pts, tans = mesh.arm_geometry(p, p.rule.grid)
            w = p.length * p.rule.grid_weights
            dens = arm_interp(p) @ mu[idx]
        D = dlp_block(targets, pts, tans)
        u += np.einsum("ijga,g,ga->ij", D, w, dens)
        a, b = mesh.panel_ends(p)
        near = [i for i, x in enumerate(targets) if _segment_distance(x, a, b) < p.length]
        if not near:
            continue
        pos, interp, intervals, jac = _panel_maps(mesh, p)
        for i in near:
            uu, ww = _refined_rule(pos, intervals, targets[i])
            rp, rt = pos(uu)
            Dn = dlp_block(targets[i : i + 1], rp, rt)[0]
            fine = np.einsum("jga,g,ga->j", Dn, jac * ww, interp(uu) @ mu[idx])
            u[i] += fine - np.einsum("jga,g,ga->j", D[i], w, dens)
    return u


def report(system: DenseSystem, extra: dict | None = None) -> dict:
    out = {
        "n": system.n,
        "unknowns": 2 * system.n,
        "order": system.mesh.order,
        "corner_terms": system.mesh.N,
        "condition": system.condition(),
        "condition_raw": system.condition(raw=True),
        "rank_one": system.rank_one,
        "flags": list(system.flags),
        "timings": dict(system.timings),
    }
    if extra:
        out.update(extra)
    return out


def write_report(rep: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(rep, fh, indent=2, sort_keys=True)
