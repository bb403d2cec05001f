"""Periodic triangulations and P1 finite-element matrices for -Delta - q.

Edge lengths are intrinsic (measured with the induced metric), so the
cotangent weights and lumped masses depend only on the first fundamental
form of the immersion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError, MeshError
from .geometry import AMBIENT_SPHERE, PRODUCT_M, PointGeometry, point_geometry
from .surfaces import AnalyticSurface, LatticeDomain, SphereDomain

LAPLACE = "laplace"
JACOBI_SPHERE = "jacobi_sphere"
JACOBI_PRODUCT = "jacobi_product"
OPERATOR_KINDS = (LAPLACE, JACOBI_SPHERE, JACOBI_PRODUCT)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True, eq=False)
class PeriodicMesh:
    """Triangulated fundamental domain with periodic vertex identification.

    ``edge_lengths[f, k]`` is the intrinsic length of the edge of triangle
    ``f`` opposite its corner ``k``. ``product_geometry`` is set only for
    surfaces inside S^1(r) x S^2(s).
    """

    surface: AnalyticSurface
    resolution: tuple[int, int]
    params: np.ndarray
    charts: np.ndarray
    triangles: np.ndarray
    edge_lengths: np.ndarray
    areas: np.ndarray
    geometry: PointGeometry
    product_geometry: PointGeometry | None = None

    @property
    def n_vertices(self) -> int:
        return len(self.params)

    @property
    def positions(self) -> np.ndarray:
        return self.geometry.x

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + len(self.triangles)


def _metric_length(surface: AnalyticSurface, start: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Length of the image of the segment start + s*delta, s in [0, 1] (3-point Gauss)."""
    total = np.zeros(len(start))
    for s, w in zip(_GL_NODES, _GL_WEIGHTS):
        p = start + s * delta
        xu = surface.partial(p[:, 0], p[:, 1], 1, 0)
        xv = surface.partial(p[:, 0], p[:, 1], 0, 1)
        speed = delta[:, :1] * xu + delta[:, 1:] * xv
        total += w * np.linalg.norm(speed, axis=-1)
    return total


def _lattice_mesh(surface: AnalyticSurface, res):
    n1, n2 = res
    b1, b2 = surface.domain.basis
    i, j = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    i, j = i.ravel(), j.ravel()
    params = np.outer(i / n1, b1) + np.outer(j / n2, b2)

    def idx(a, b):
        return (a % n1) * n2 + (b % n2)

    A, B, C, D = idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)
    # cell split along the B-C diagonal; equilateral cells become equilateral triangles
    triangles = np.concatenate([np.stack([A, B, C], 1), np.stack([B, D, C], 1)])

    du, dv, dd = b1 / n1, b2 / n2, b2 / n2 - b1 / n1
    p = params
    len_u = _metric_length(surface, p, np.broadcast_to(du, p.shape))
    len_v = _metric_length(surface, p, np.broadcast_to(dv, p.shape))
    len_d = _metric_length(surface, p + du, np.broadcast_to(dd, p.shape))
    # tri (A, B, C): opposite A is BC (diagonal), B is AC (v-edge), C is AB (u-edge)
    first = np.stack([len_d, len_v, len_u], 1)
    # tri (B, D, C): opposite B is DC (u-edge at (i, j+1)), D is BC, C is BD (v-edge at (i+1, j))
    second = np.stack([len_u[idx(i, j + 1)], len_d, len_v[idx(i + 1, j)]], 1)
    lengths = np.concatenate([first, second])
    charts = np.zeros(len(params), dtype=int)
    return params, charts, triangles, lengths


def _sphere_mesh(surface: AnalyticSurface, res):
    n_lon, n_lat = res
    lon = 2 * math.pi * np.arange(n_lon) / n_lon
    lat = -math.pi / 2 + math.pi * np.arange(1, n_lat) / n_lat
    LON, LAT = np.meshgrid(lon, lat, indexing="ij")  # ring-major per longitude
    ring = np.stack([LON.T.ravel(), LAT.T.ravel()], 1)  # index = k * n_lon + m
    # poles as regular points of chart 1 (ambient axes cycled)
    poles = np.array([[-math.pi / 2, 0.0], [math.pi / 2, 0.0]])
    params = np.concatenate([ring, poles])
    charts = np.concatenate([np.zeros(len(ring), int), [1, 1]])
    south, north = len(ring), len(ring) + 1

    def vid(k, m):
        return k * n_lon + m % n_lon

    tris = []
    m = np.arange(n_lon)
    for k in range(n_lat - 2):
        a, b, c, d = vid(k, m), vid(k, m + 1), vid(k + 1, m), vid(k + 1, m + 1)
        tris += [np.stack([a, b, c], 1), np.stack([b, d, c], 1)]
    tris.append(np.stack([np.full(n_lon, south), vid(0, m + 1), vid(0, m)], 1))
    top = n_lat - 2
    tris.append(np.stack([vid(top, m), vid(top, m + 1), np.full(n_lon, north)], 1))
    triangles = np.concatenate(tris)

    x = np.empty((len(params), surface.ambient_dim))
    for c in (0, 1):
        sel = charts == c
        x[sel] = surface.position(params[sel, 0], params[sel, 1], c)
    # totally geodesic great sphere: intrinsic distance is the great-circle arc
    t = triangles
    chord = np.stack(
        [np.linalg.norm(x[t[:, (k + 1) % 3]] - x[t[:, (k + 2) % 3]], axis=-1) for k in range(3)], 1
    )
    lengths = 2 * np.arcsin(np.clip(chord / 2, 0, 1))
    return params, charts, triangles, lengths


def triangle_areas(lengths: np.ndarray) -> np.ndarray:
    """Heron's formula in Kahan's cancellation-free ordering."""
    s = np.sort(lengths, axis=1)[:, ::-1]
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.clip(prod, 0, None)) * np.sign(prod)


def triangulate(surface: AnalyticSurface, res=None) -> PeriodicMesh:
    """Grid triangulation of the surface's fundamental domain.

    Raises ``GeometryError`` if any vertex is a non-immersive point and
    ``MeshError`` if a triangle is degenerate in the induced metric.
    """
    res = tuple(int(n) for n in (res or surface.domain.resolution))
    if len(res) != 2 or min(res) < 3:
        raise MeshError(f"resolution must be two integers >= 3, got {res}")
    if isinstance(surface.domain, LatticeDomain):
        params, charts, triangles, lengths = _lattice_mesh(surface, res)
    elif isinstance(surface.domain, SphereDomain):
        params, charts, triangles, lengths = _sphere_mesh(surface, res)
    else:
        raise MeshError(f"cannot triangulate domain {surface.domain!r}")

    areas = triangle_areas(lengths)
    if np.any(~(areas > 0)):
        f = int(np.flatnonzero(~(areas > 0))[0])
        raise MeshError(f"degenerate triangle {triangles[f].tolist()} (metric area {areas[f]!r})")

    geometry = point_geometry(surface, params[:, 0], params[:, 1], AMBIENT_SPHERE, charts)
    product = None
    if surface.is_product:
        product = point_geometry(surface, params[:, 0], params[:, 1], PRODUCT_M, charts)
    return PeriodicMesh(
        surface=surface,
        resolution=res,
        params=params,
        charts=charts,
        triangles=triangles.astype(np.int64),
        edge_lengths=lengths,
        areas=areas,
        geometry=geometry,
        product_geometry=product,
    )


def cotangents(mesh: PeriodicMesh) -> np.ndarray:
    """cot of the angle at each triangle corner, from edge lengths."""
    L2 = mesh.edge_lengths**2
    out = np.empty_like(L2)
    for k in range(3):
        out[:, k] = (L2[:, (k + 1) % 3] + L2[:, (k + 2) % 3] - L2[:, k]) / (4 * mesh.areas)
    return out


def assemble_stiffness(mesh: PeriodicMesh) -> sp.csr_matrix:
    """Cotangent stiffness matrix S with u^T S u = integral of |grad u|^2 for P1 u."""
    if np.any(mesh.areas <= 0):
        raise MeshError("degenerate triangle in stiffness assembly")
    cot = cotangents(mesh)
    t = mesh.triangles
    n = mesh.n_vertices
    rows = np.concatenate([t[:, (k + 1) % 3] for k in range(3)])
    cols = np.concatenate([t[:, (k + 2) % 3] for k in range(3)])
    w = 0.5 * np.concatenate([cot[:, k] for k in range(3)])
    W = sp.coo_matrix((-w, (rows, cols)), shape=(n, n)).tocsr()
    off = (W + W.T).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    S = (off + sp.diags(diag)).tocsr()
    S.sort_indices()
    return S


def lumped_mass(mesh: PeriodicMesh) -> np.ndarray:
    """Diagonal of the barycentric lumped mass matrix."""
    return np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas / 3.0, 3), minlength=mesh.n_vertices)


def trapezoid_weights(mesh: PeriodicMesh) -> np.ndarray:
    """Periodic trapezoid weights sqrt(det g)(v_i) * cell area on a lattice mesh.

    Spectrally accurate for smooth periodic integrands, unlike the lumped mass.
    """
    if not isinstance(mesh.surface.domain, LatticeDomain):
        raise MeshError("trapezoid weights need a lattice fundamental domain")
    cell = abs(np.linalg.det(np.asarray(mesh.surface.domain.basis, float))) / (mesh.resolution[0] * mesh.resolution[1])
    return mesh.geometry.area_density * cell


def assemble_mass(mesh: PeriodicMesh) -> sp.dia_matrix:
    return sp.diags(lumped_mass(mesh))


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Generalized eigenproblem (S - Q) u = lambda M u for -Delta - q."""

    stiffness: sp.csr_matrix
    mass: sp.dia_matrix
    potential: sp.dia_matrix
    kind: str
    q: np.ndarray

    @property
    def matrix(self) -> sp.csr_matrix:
        return (self.stiffness - self.potential).tocsr()


def vertex_potential(mesh: PeriodicMesh, kind: str) -> np.ndarray:
    if kind == LAPLACE:
        return np.zeros(mesh.n_vertices)
    if kind == JACOBI_SPHERE:
        return mesh.geometry.potential
    if kind == JACOBI_PRODUCT:
        if mesh.product_geometry is None:
            raise GeometryError(f"jacobi_product needs a surface in S^1(r) x S^2(s), got {mesh.surface.name}")
        return mesh.product_geometry.potential
    raise ValueError(f"unknown operator kind {kind!r}; choose from {OPERATOR_KINDS}")


def assemble_operator(mesh: PeriodicMesh, kind: str) -> DiscreteOperator:
    q = vertex_potential(mesh, kind)
    m = lumped_mass(mesh)
    return DiscreteOperator(
        stiffness=assemble_stiffness(mesh),
        mass=sp.diags(m),
        potential=sp.diags(q * m),
        kind=kind,
        q=q,
    )


def dirichlet_energy(mesh: PeriodicMesh, values, stiffness=None) -> float:
    """Sum over columns of u^T S u."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != mesh.n_vertices:
        raise ValueError(f"expected {mesh.n_vertices} rows, got {values.shape[0]}")
    S = assemble_stiffness(mesh) if stiffness is None else stiffness
    if values.ndim == 1:
        values = values[:, None]
    return float(np.einsum("ij,ij->", values, S @ values))


def laplacian_residual(mesh: PeriodicMesh, stiffness=None) -> float:
    """M-weighted L2 norm of Delta_h x + 2x - 2H, Delta_h = -M^{-1} S."""
    S = assemble_stiffness(mesh) if stiffness is None else stiffness
    m = lumped_mass(mesh)
    x = mesh.positions
    r = -(S @ x) / m[:, None] + 2 * x - 2 * mesh.geometry.mean_curv
    return float(np.sqrt(np.sum(m[:, None] * r**2)))


def export_off(mesh: PeriodicMesh, path) -> None:
    """Write vertex positions (ambient coordinates) and triangles as ASCII OFF."""
    x = mesh.positions
    with open(path, "w") as fh:
        dim = x.shape[1]
        fh.write({3: "OFF\n", 4: "4OFF\n"}.get(dim, f"nOFF\n{dim}\n"))
        fh.write(f"{len(x)} {len(mesh.triangles)} {len(mesh.edges())}\n")
        for row in x:
            fh.write(" ".join(f"{c:.17g}" for c in row) + "\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
