"""Closed model manifolds: metric degrees of freedom and discrete substrate.

Four families are supported:

* ``einstein_sphere`` -- the round n-sphere described by a single scale
  ``s > 0`` (metric ``s * g_unit``); everything about it is closed form.
* ``conformal_torus`` -- metrics ``e^{2u} g0`` on the flat unit 2-torus,
  with ``u`` sampled on a uniform periodic N x N grid (5-point stiffness,
  lumped mass ``h^2``).
* ``conformal_sphere`` -- metrics ``e^{2u} g0`` on the unit 2-sphere, with
  ``u`` on an icosphere mesh (cotangent stiffness, barycentric lumped mass,
  base curvature from angle defects).
* ``su2`` -- left-invariant metrics on SU(2) diagonalised in a Milnor
  frame, described by a positive triple ``(a, b, c)``; closed form, no mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, UnsupportedFamilyError


class FamilyKind(str, Enum):
    EINSTEIN_SPHERE = "einstein_sphere"
    CONFORMAL_TORUS = "conformal_torus"
    CONFORMAL_SPHERE = "conformal_sphere"
    SU2 = "su2"


CONFORMAL_KINDS = (FamilyKind.CONFORMAL_TORUS, FamilyKind.CONFORMAL_SPHERE)
PRESETS = ("zero", "constant", "cos_x", "cos_xy", "random_band")


@dataclass(frozen=True)
class FamilySpec:
    """Which manifold to build and its initial data.

    ``resolution`` is the grid size N for the torus and the subdivision
    level for the icosphere; it is ignored by the closed-form families.
    ``preset``/``amplitude``/``seed`` select the initial conformal exponent
    field; ``s0`` and ``su2_abc`` are the closed-form initial data.
    """

    kind: FamilyKind
    n: int
    resolution: int | None = None
    preset: str = "zero"
    amplitude: float = 0.0
    seed: int = 0
    s0: float = 1.0
    su2_abc: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        errors = []
        if self.kind is FamilyKind.EINSTEIN_SPHERE:
            if self.n < 2:
                errors.append(f"einstein_sphere requires n >= 2, got {self.n}")
            if self.s0 <= 0:
                errors.append(f"s0 must be positive, got {self.s0}")
        elif self.kind is FamilyKind.SU2:
            if self.n != 3:
                errors.append(f"su2 requires n = 3, got {self.n}")
            if any(v <= 0 for v in self.su2_abc):
                errors.append(f"su2 triple must be positive, got {self.su2_abc}")
        elif self.kind in CONFORMAL_KINDS:
            if self.n != 2:
                errors.append(f"{self.kind.value} requires n = 2, got {self.n}")
            if self.resolution is None:
                errors.append(f"{self.kind.value} requires a resolution")
            elif self.kind is FamilyKind.CONFORMAL_TORUS and self.resolution < 8:
                errors.append(f"grid resolution must be >= 8, got {self.resolution}")
            elif self.kind is FamilyKind.CONFORMAL_SPHERE and self.resolution < 2:
                errors.append(f"subdivision must be >= 2, got {self.resolution}")
            if self.preset not in PRESETS:
                errors.append(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        if errors:
            raise ConfigurationError(errors)


@dataclass(frozen=True)
class MetricState:
    """A metric's degrees of freedom at flow time ``t``.

    ``dof`` holds the scale ``[s]`` (einstein_sphere), the conformal
    exponent per vertex (conformal families), or the Milnor triple
    ``[a, b, c]`` (su2). The array is frozen after construction.
    """

    family: FamilySpec
    dof: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        dof = np.asarray(self.dof, dtype=float)
        object.__setattr__(self, "dof", dof)
        dof.setflags(write=False)
        kind = self.family.kind
        if kind is FamilyKind.EINSTEIN_SPHERE:
            if dof.shape != (1,):
                raise ConfigurationError(f"einstein_sphere dof must have shape (1,), got {dof.shape}")
            if dof[0] <= 0:
                raise ConfigurationError(f"scale must be positive, got {dof[0]}")
        elif kind is FamilyKind.SU2:
            if dof.shape != (3,):
                raise ConfigurationError(f"su2 dof must have shape (3,), got {dof.shape}")
            if np.any(dof <= 0):
                raise ConfigurationError(f"su2 triple must be positive, got {tuple(dof)}")
        else:
            nv = geometry_for(self.family).num_vertices
            if dof.shape != (nv,):
                raise ConfigurationError(f"conformal dof must have shape ({nv},), got {dof.shape}")
            if not np.all(np.isfinite(dof)):
                raise ConfigurationError("conformal exponent field must be finite")

    @property
    def scale(self) -> float:
        return float(self.dof[0])

    @property
    def abc(self) -> tuple[float, float, float]:
        return float(self.dof[0]), float(self.dof[1]), float(self.dof[2])

    @property
    def u(self) -> np.ndarray:
        return self.dof

    def with_dof(self, dof: np.ndarray, t: float) -> "MetricState":
        return replace(self, dof=dof, t=t)


@dataclass(frozen=True)
class BaseGeometry:
    """Discretisation data of a base manifold (metric-independent).

    ``stiffness`` is the symmetric PSD matrix with the constants in its
    kernel whose quadratic form approximates the Dirichlet energy;
    ``mass`` the lumped vertex weights summing to the base volume;
    ``base_curvature`` the scalar curvature of the base metric per vertex.
    ``gersh`` caches ``2 * max(diag(stiffness) / mass)``, a Gershgorin
    bound on the largest eigenvalue of ``mass^{-1} stiffness``.
    """

    kind: str  # "torus_grid" | "icosphere"
    coords: np.ndarray
    stiffness: sp.csr_matrix
    mass: np.ndarray
    base_curvature: np.ndarray
    gersh: float
    grid_n: int | None = None
    faces: np.ndarray | None = None

    @property
    def num_vertices(self) -> int:
        return self.mass.shape[0]


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@lru_cache(maxsize=None)
def torus_geometry(n: int) -> BaseGeometry:
    """Uniform periodic n x n grid on [0,1)^2 with 5-point stiffness."""
    h = 1.0 / n
    idx = np.arange(n)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx, (idx + 1) % n, (idx - 1) % n])
    vals = np.concatenate([2.0 * np.ones(n), -np.ones(n), -np.ones(n)])
    lap1 = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    stiff = (sp.kron(sp.eye(n), lap1) + sp.kron(lap1, sp.eye(n))).tocsr()
    mass = np.full(n * n, h * h)
    ix, iy = np.meshgrid(idx, idx, indexing="ij")
    coords = np.column_stack([(ix * h).ravel(), (iy * h).ravel()])
    base_r = np.zeros(n * n)
    gersh = 2.0 * float(np.max(stiff.diagonal() / mass))
    _freeze(coords, mass, base_r)
    return BaseGeometry("torus_grid", coords, stiff, mass, base_r, gersh, grid_n=n)


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
         (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
         (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)], dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
         (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
         (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
         (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)], dtype=int)
    return verts, faces


def _subdivide(verts: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    verts = [tuple(v) for v in verts]
    cache: dict[tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        if key not in cache:
            p = np.asarray(verts[a]) + np.asarray(verts[b])
            p /= np.linalg.norm(p)
            cache[key] = len(verts)
            verts.append(tuple(p))
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.asarray(verts, dtype=float), np.asarray(out, dtype=int)


@lru_cache(maxsize=None)
def icosphere_geometry(level: int) -> BaseGeometry:
    """Icosphere at the given subdivision level with cotangent stiffness.

    Lumped mass is barycentric (a third of each incident face area); the
    base curvature per vertex is ``2 * angle_defect / mass``.
    """
    verts, faces = _icosahedron()
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    nv = len(verts)
    p = verts[faces]
    areas = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    mass = np.zeros(nv)
    angle_sum = np.zeros(nv)
    rows, cols, vals = [], [], []
    for corner in range(3):
        i = faces[:, corner]
        j = faces[:, (corner + 1) % 3]
        k = faces[:, (corner + 2) % 3]
        e1 = verts[j] - verts[i]
        e2 = verts[k] - verts[i]
        dots = (e1 * e2).sum(axis=1)
        crosses = np.linalg.norm(np.cross(e1, e2), axis=1)
        w = 0.5 * dots / crosses  # half-cotangent of the angle at corner i
        rows += [j, k, j, k]
        cols += [k, j, j, k]
        vals += [-w, -w, w, w]
        np.add.at(mass, i, areas / 3.0)
        np.add.at(angle_sum, i, np.arctan2(crosses, dots))
    stiff = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nv, nv)).tocsr()
    stiff = 0.5 * (stiff + stiff.T)  # force bit-level symmetry
    base_r = 2.0 * (2.0 * np.pi - angle_sum) / mass
    gersh = 2.0 * float(np.max(stiff.diagonal() / mass))
    _freeze(verts, mass, base_r, faces, areas)
    return BaseGeometry("icosphere", verts, stiff, mass, base_r, gersh, faces=faces)


def geometry_for(spec: FamilySpec) -> BaseGeometry:
    if spec.kind is FamilyKind.CONFORMAL_TORUS:
        return torus_geometry(spec.resolution)
    if spec.kind is FamilyKind.CONFORMAL_SPHERE:
        return icosphere_geometry(spec.resolution)
    raise UnsupportedFamilyError(f"family {spec.kind.value} carries no mesh")


def _preset_field(spec: FamilySpec, geom: BaseGeometry) -> np.ndarray:
    amp = spec.amplitude
    if spec.preset == "zero":
        return np.zeros(geom.num_vertices)
    if spec.preset == "constant":
        return np.full(geom.num_vertices, amp)
    if geom.kind == "torus_grid":
        x = geom.coords[:, 0]
        y = geom.coords[:, 1]
        if spec.preset == "cos_x":
            return amp * np.cos(2 * np.pi * x)
        if spec.preset == "cos_xy":
            return amp * np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y)
        rng = np.random.default_rng(spec.seed)
        u = np.zeros(geom.num_vertices)
        for kx in range(-2, 3):
            for ky in range(-2, 3):
                if kx == 0 and ky == 0:
                    continue
                phase = 2 * np.pi * (kx * x + ky * y)
                u += rng.standard_normal() * np.cos(phase) + rng.standard_normal() * np.sin(phase)
        peak = np.max(np.abs(u))
        return amp * u / peak if peak > 0 else u
    # icosphere: smooth low-degree ambient polynomials stand in for the
    # banded Fourier modes of the torus presets
    x, y, z = geom.coords.T
    if spec.preset == "cos_x":
        return amp * x  # cosine of the geodesic angle from the x-pole
    if spec.preset == "cos_xy":
        return amp * 2.0 * x * y  # peak amplitude amp, like the grid preset
    rng = np.random.default_rng(spec.seed)
    basis = [x, y, z, x * y, y * z, z * x, x * x - y * y, 2 * z * z - x * x - y * y]
    u = sum(rng.standard_normal() * b for b in basis)
    peak = np.max(np.abs(u))
    return amp * u / peak if peak > 0 else u


def init_state(spec: FamilySpec) -> MetricState:
    """Build the t = 0 state for a family spec (deterministic given seed)."""
    if spec.kind is FamilyKind.EINSTEIN_SPHERE:
        return MetricState(spec, np.array([spec.s0]))
    if spec.kind is FamilyKind.SU2:
        return MetricState(spec, np.asarray(spec.su2_abc, dtype=float))
    geom = geometry_for(spec)
    return MetricState(spec, _preset_field(spec, geom))


def unit_sphere_volume(n: int) -> float:
    """Volume of the unit round n-sphere."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def volume(state: MetricState) -> float:
    """Total Riemannian volume of the state's metric."""
    kind = state.family.kind
    if kind is FamilyKind.EINSTEIN_SPHERE:
        n = state.family.n
        return unit_sphere_volume(n) * state.scale ** (n / 2.0)
    if kind is FamilyKind.SU2:
        a, b, c = state.abc
        return 2.0 * math.pi ** 2 * math.sqrt(a * b * c)
    geom = geometry_for(state.family)
    return float(np.sum(geom.mass * np.exp(2.0 * state.u)))


def integrate_scalar(state: MetricState, field) -> float:
    """Integrate a per-vertex (or constant) field against the metric volume.

    Linear in the field; a constant field integrates to the volume.
    """
    kind = state.family.kind
    if kind in CONFORMAL_KINDS:
        geom = geometry_for(state.family)
        values = np.asarray(field, dtype=float)
        if values.ndim == 0:
            values = np.full(geom.num_vertices, float(values))
        if values.shape != (geom.num_vertices,):
            raise ValueError(
                f"field has shape {values.shape}, expected ({geom.num_vertices},)")
        return float(np.sum(values * geom.mass * np.exp(2.0 * state.u)))
    values = np.asarray(field, dtype=float)
    if values.size != 1:
        raise ValueError(
            f"{kind.value} supports only spatially constant fields, got shape {values.shape}")
    return float(values.reshape(())) * volume(state)
