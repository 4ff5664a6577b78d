"""Exact Stokes fields for testing the solver, the error metric E and the
standard experiments (rigid motions, exterior point forces)."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .discretization import build_mesh
from .geometry import GeometryError, Polygon
from .kernels import SingularityError
from .nystrom_solver import assemble, boundary_data, interior_velocity, net_flux, solve


@dataclass(frozen=True)
class StokesletSource:
    location: np.ndarray
    strength: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "location", np.asarray(self.location, dtype=float).reshape(2))
        object.__setattr__(self, "strength", np.asarray(self.strength, dtype=float).reshape(2))

    def check_exterior(self, polygon: Polygon) -> None:
        if polygon.contains(self.location[None, :])[0] or polygon.distance_to_boundary(
            self.location[None, :]
        )[0] == 0:
            raise GeometryError(f"source at {self.location.tolist()} is not outside the domain")

    def to_dict(self) -> dict:
        return {"location": self.location.tolist(), "strength": self.strength.tolist()}


def stokeslet_field(sources, points) -> np.ndarray:
    """Velocity of a sum of point forces, shape (len(points), 2)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    u = np.zeros_like(p)
    for src in sources:
        r = p - src.location[None, :]
        r2 = np.sum(r * r, axis=1)
        if np.any(r2 == 0):
            raise SingularityError("evaluation point coincides with a source")
        rf = r @ src.strength
        u += (-0.5 * np.log(r2)[:, None] * src.strength[None, :] + r * (rf / r2)[:, None]) / (
            4 * math.pi
        )
    return u


def error_E(computed, exact) -> float:
    """Relative l2 error over a set of target velocities."""
    c = np.asarray(computed, dtype=float).reshape(-1, 2)
    e = np.asarray(exact, dtype=float).reshape(-1, 2)
    if c.shape != e.shape:
        raise ValueError("computed and exact fields have different lengths")
    den = float(np.sum(e * e))
    if den == 0.0:
        raise ZeroDivisionError("exact field vanishes at every target")
    return math.sqrt(float(np.sum((c - e) ** 2)) / den)


def default_sources(polygon: Polygon, count: int = 5, seed: int = 0) -> list[StokesletSource]:
    """Point forces on a circle of 1.5 circumradii around the centroid."""
    rng = np.random.default_rng(seed)
    c = polygon.centroid()
    R = 1.5 * polygon.circumradius()
    ang = 2 * math.pi * (np.arange(count) + rng.uniform(0, 1, count)) / count
    out = []
    for a in ang:
        src = StokesletSource(c + R * np.array([math.cos(a), math.sin(a)]), rng.normal(size=2))
        src.check_exterior(polygon)
        out.append(src)
    return out


def default_targets(polygon: Polygon, count: int = 5) -> np.ndarray:
    """Evenly spaced points on a ring of 0.3 inradii around the centroid."""
    c = polygon.centroid()
    r = 0.3 * polygon.inradius()
    ang = 2 * math.pi * np.arange(count) / count
    return c[None, :] + r * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def _rigid_field(polygon: Polygon, kind: str):
    if kind == "translation":
        v = np.array([0.3, -0.7])
        return lambda p: np.tile(v, (len(np.atleast_2d(p)), 1))
    if kind == "rotation":
        c = polygon.centroid()
        return lambda p: np.stack([-(np.atleast_2d(p)[:, 1] - c[1]), np.atleast_2d(p)[:, 0] - c[0]], axis=1)
    raise ValueError("kind must be 'translation' or 'rotation'")


@dataclass
class RunResult:
    geometry: str
    n: int
    E: float
    kappa: float
    flux: float
    timings: dict
    details: dict

    def row(self) -> dict:
        return {"geometry": self.geometry, "n": self.n, "E": self.E, "kappa": self.kappa}

    def to_dict(self) -> dict:
        d = self.row()
        d.update({"flux": self.flux, "timings": self.timings})
        d.update(self.details)
        return d


def run_problem(polygon: Polygon, field_fn, targets=None, *, order: int = 16, N: int = 8,
                corner_fraction: float = 0.5, condition: bool = True) -> RunResult:
    """Solve the interior problem with data from ``field_fn`` and compare at targets."""
    t0 = time.perf_counter()
    targets = default_targets(polygon) if targets is None else np.atleast_2d(targets)
    mesh = build_mesh(polygon, order=order, N=N, corner_fraction=corner_fraction)
    t1 = time.perf_counter()
    system = assemble(mesh)
    h = boundary_data(mesh, field_fn)
    mu = solve(system, h)
    u = interior_velocity(mesh, mu, targets)
    E = error_E(u, field_fn(targets))
    kappa = system.condition() if condition else float("nan")
    timings = dict(system.timings)
    timings["mesh"] = t1 - t0
    timings["total"] = time.perf_counter() - t0
    return RunResult(polygon.name, mesh.n_nodes, E, kappa, net_flux(mesh, h), timings,
                     {"order": order, "corner_terms": N, "corner_fraction": corner_fraction,
                      "residual": timings.get("residual")})


def rigid_motion_check(polygon: Polygon, kind: str, **kw) -> float:
    """E for a rigid translation or rotation of the fluid."""
    return run_problem(polygon, _rigid_field(polygon, kind), condition=False, **kw).E


def stokeslet_experiment(polygon: Polygon, sources=None, targets=None, seed: int = 0,
                         **kw) -> RunResult:
    """Exterior point forces generate the data; E at interior targets."""
    sources = default_sources(polygon, seed=seed) if sources is None else list(sources)
    for s in sources:
        s.check_exterior(polygon)
    res = run_problem(polygon, lambda p: stokeslet_field(sources, p), targets, **kw)
    res.details["sources"] = [s.to_dict() for s in sources]
    return res


def load_sources(path) -> tuple[list[StokesletSource], np.ndarray | None]:
    """Read ``{"sources": [{"location", "strength"}...], "targets": [...]}``."""
    try:
        data = json.loads(open(path).read())
    except (OSError, json.JSONDecodeError) as exc:
        raise GeometryError(f"cannot read sources file {path}: {exc}") from exc
    unknown = set(data) - {"sources", "targets"}
    if unknown:
        raise GeometryError(f"unknown sources keys: {sorted(unknown)}")
    try:
        srcs = [StokesletSource(s["location"], s["strength"]) for s in data["sources"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GeometryError(f"malformed sources file: {exc}") from exc
    targets = np.asarray(data["targets"], dtype=float) if "targets" in data else None
    return srcs, targets
