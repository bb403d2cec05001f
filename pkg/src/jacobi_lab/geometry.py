"""Pointwise extrinsic geometry of catalog surfaces.

Second fundamental forms are obtained by projecting the ambient second
partials off the tangent plane and the position vector (sphere frame), and
additionally off the unit normal of S^1(r) x S^2(s) in S^4 (product frame).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .surfaces import AnalyticSurface

AMBIENT_SPHERE = "ambient_sphere"
PRODUCT_M = "product_M"


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


@dataclass(frozen=True, eq=False)
class PointGeometry:
    """Geometry at a batch of parameter points (leading axes are the batch).

    ``sff`` stacks sigma_11, sigma_12, sigma_22 along axis -2. ``normal`` and
    ``ric`` are filled only in the product frame.
    """

    x: np.ndarray
    tangent: np.ndarray
    metric: np.ndarray
    area_density: np.ndarray
    sff: np.ndarray
    mean_curv: np.ndarray
    sff_norm_sq: np.ndarray
    gauss_curv: np.ndarray
    potential: np.ndarray
    frame: str = AMBIENT_SPHERE
    normal: np.ndarray | None = None
    ric: np.ndarray | None = None

    def __len__(self):
        return len(self.x)

    def sff_matrix(self) -> np.ndarray:
        """sigma_ij as a (..., 2, 2, D) array."""
        s11, s12, s22 = self.sff[..., 0, :], self.sff[..., 1, :], self.sff[..., 2, :]
        return np.stack([np.stack([s11, s12], -2), np.stack([s12, s22], -2)], -3)


def _remove(vectors: np.ndarray, unit: np.ndarray) -> np.ndarray:
    return vectors - _dot(vectors, unit[..., None, :])[..., None] * unit[..., None, :]


def _forms(x, tangent, metric, second, extra_normal=None):
    ginv = np.linalg.inv(metric)
    # tangential part of each second partial: sum_kl <w, x_k> g^{kl} x_l
    coeff = np.einsum("...ik,...jk->...ij", second, tangent)  # (..., 3, 2)
    tang = np.einsum("...ij,...jl,...lk->...ik", coeff, ginv, tangent)
    sff = second - tang
    sff = _remove(sff, x)
    if extra_normal is not None:
        sff = _remove(sff, extra_normal)
    s11, s12, s22 = sff[..., 0, :], sff[..., 1, :], sff[..., 2, :]
    S = np.stack([np.stack([s11, s12], -2), np.stack([s12, s22], -2)], -3)
    mean = 0.5 * np.einsum("...ij,...ijk->...k", ginv, S)
    norm_sq = np.einsum("...ik,...jl,...ijd,...kld->...", ginv, ginv, S, S)
    return sff, mean, norm_sq


@dataclass(frozen=True)
class ProductGeometry:
    """M = S^1(r) x S^2(s) in S^4, s = sqrt(1 - r^2); coordinates R^2 x R^3."""

    r: float

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise GeometryError(f"product radius must lie in (0, 1), got {self.r}")

    @property
    def s(self) -> float:
        return math.sqrt(1 - self.r**2)

    @property
    def kappa1(self) -> float:
        return -self.s / self.r

    @property
    def kappa2(self) -> float:
        return self.r / self.s

    @property
    def scalar_curvature(self) -> float:
        """R_M = 2 / (1 - r^2)."""
        return 2.0 / (1.0 - self.r**2)

    def nu(self, x) -> np.ndarray:
        """Unit normal of M in S^4 at x = (a, b): (-(s/r) a, (r/s) b)."""
        x = np.asarray(x, dtype=float)
        out = x.copy()
        out[..., :2] *= -self.s / self.r
        out[..., 2:] *= self.r / self.s
        return out

    def e1(self, x) -> np.ndarray:
        """Unit tangent of the S^1(r) factor at x."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out[..., 0] = -x[..., 1] / self.r
        out[..., 1] = x[..., 0] / self.r
        return out

    def on_manifold(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(np.abs(np.linalg.norm(x[..., :2], axis=-1) - self.r) <= tol)
            and np.all(np.abs(np.linalg.norm(x[..., 2:], axis=-1) - self.s) <= tol)
        )

    def tangent_basis(self, x) -> np.ndarray:
        """Orthonormal basis (e1, e2, e3) of T_x M; e2, e3 span the S^2 directions."""
        x = np.asarray(x, dtype=float)
        b = x[2:] / self.s
        # complete b to an orthonormal basis of R^3
        _, _, vt = np.linalg.svd(b[None, :])
        e2 = np.concatenate([[0.0, 0.0], vt[1]])
        e3 = np.concatenate([[0.0, 0.0], vt[2]])
        return np.stack([self.e1(x), e2, e3])


def _check_tangent(geom: ProductGeometry, x, X, tol):
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != 5 or not geom.on_manifold(x, tol=1e-9):
        raise GeometryError("base point is not on S^1(r) x S^2(s) in R^5")
    scale = max(1.0, float(np.linalg.norm(X)))
    if abs(_dot(X, x)) > tol * scale or abs(_dot(X, geom.nu(x))) > tol * scale:
        raise GeometryError("vector is not tangent to M")
    return x, X


def product_shape_operator(geom: ProductGeometry, x, X, tol: float = 1e-9) -> np.ndarray:
    """Weingarten operator of M in S^4 applied to X in T_x M."""
    x, X = _check_tangent(geom, x, X, tol)
    e1 = geom.e1(x)
    along = _dot(X, e1)
    return geom.kappa1 * along * e1 + geom.kappa2 * (X - along * e1)


def rho_squared_sigma(geom: ProductGeometry, x, X1, X2, tol: float = 1e-9) -> float:
    """|rho|^2 restricted to the plane span(X1, X2) of T_x M.

    Uses |A X1|^2 + |A X2|^2 - sum_i |(A X_i)^perp|^2, perp taken inside T_x M.
    """
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    gram = np.array([[_dot(X1, X1), _dot(X1, X2)], [_dot(X2, X1), _dot(X2, X2)]])
    if np.abs(gram - np.eye(2)).max() > tol:
        raise GeometryError("tangent plane vectors must be orthonormal")
    AX1 = product_shape_operator(geom, x, X1, tol)
    AX2 = product_shape_operator(geom, x, X2, tol)
    N = _normal_in_M(geom, np.asarray(x, float), X1, X2)
    return float(_dot(AX1, AX1) + _dot(AX2, AX2) - _dot(AX1, N) ** 2 - _dot(AX2, N) ** 2)


def _normal_in_M(geom: ProductGeometry, x, X1, X2) -> np.ndarray:
    """Unit vector of T_x M orthogonal to X1 and X2 (batched)."""
    frame = np.stack([x, geom.nu(x), X1, X2], axis=-2)  # (..., 4, 5)
    q, _ = np.linalg.qr(np.swapaxes(frame, -1, -2), mode="complete")
    return q[..., :, 4]


def ric_product(geom: ProductGeometry, N, tol: float = 1e-9) -> np.ndarray:
    """Ric_M(N, N) = |N_{S^2}|^2 / s^2 for a unit tangent vector N of M."""
    N = np.asarray(N, dtype=float)
    norm = np.linalg.norm(N, axis=-1)
    if np.any(np.abs(norm - 1.0) > tol):
        raise GeometryError("Ric_M(N, N) expects a unit vector")
    return _dot(N[..., 2:], N[..., 2:]) / geom.s**2


def point_geometry(surface: AnalyticSurface, u, v, frame: str = AMBIENT_SPHERE, chart=0) -> PointGeometry:
    """Fundamental forms, curvatures and Jacobi potential at parameters (u, v).

    ``chart`` may be an integer array matching ``u`` (sphere meshes).
    """
    if frame not in (AMBIENT_SPHERE, PRODUCT_M):
        raise ValueError(f"unknown frame {frame!r}")
    if frame == PRODUCT_M and not surface.is_product:
        raise GeometryError(f"{surface.name} does not live in S^1(r) x S^2(s)")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    chart_arr = np.broadcast_to(np.asarray(chart), u.shape)
    parts = [np.empty(u.shape + (surface.ambient_dim,)) for _ in range(6)]
    for c in np.unique(chart_arr):
        sel = chart_arr == c
        for buf, val in zip(parts, surface.derivatives(u[sel], v[sel], int(c))):
            buf[sel] = val
    x, xu, xv, xuu, xuv, xvv = parts

    tangent = np.stack([xu, xv], axis=-2)
    metric = np.einsum("...ik,...jk->...ij", tangent, tangent)
    det = metric[..., 0, 0] * metric[..., 1, 1] - metric[..., 0, 1] ** 2
    trace = metric[..., 0, 0] + metric[..., 1, 1]
    bad = ~(det > 1e-14 * trace * trace)
    if np.any(bad):
        k = int(np.flatnonzero(bad.ravel())[0])
        raise GeometryError(
            f"non-immersive parameter point (u, v) = ({u.ravel()[k]!r}, {v.ravel()[k]!r}) on {surface.name}"
        )
    second = np.stack([xuu, xuv, xvv], axis=-2)

    sff, mean, norm_sq = _forms(x, tangent, metric, second)
    gauss = 0.5 * (2.0 + 4.0 * _dot(mean, mean) - norm_sq)
    common = dict(x=x, tangent=tangent, metric=metric, area_density=np.sqrt(det), gauss_curv=gauss)
    if frame == AMBIENT_SPHERE:
        return PointGeometry(sff=sff, mean_curv=mean, sff_norm_sq=norm_sq, potential=norm_sq + 2.0, **common)

    geom = ProductGeometry(surface.product_radius)
    nu = geom.nu(x)
    sff_m, mean_m, norm_sq_m = _forms(x, tangent, metric, second, extra_normal=nu)
    # orthonormalize the tangent frame before completing it inside T M
    e_u = xu / np.linalg.norm(xu, axis=-1, keepdims=True)
    w = xv - _dot(xv, e_u)[..., None] * e_u
    e_v = w / np.linalg.norm(w, axis=-1, keepdims=True)
    N = _normal_in_M(geom, x, e_u, e_v)
    ric = ric_product(geom, N, tol=1e-8)
    return PointGeometry(
        sff=sff_m,
        mean_curv=mean_m,
        sff_norm_sq=norm_sq_m,
        potential=norm_sq_m + ric,
        frame=PRODUCT_M,
        normal=N,
        ric=ric,
        **common,
    )


def rho_norm_sq(geometry_sphere: PointGeometry, r: float) -> np.ndarray:
    """|rho|^2_Sigma from the sphere-frame form: nu-components of tau, contracted."""
    geom = ProductGeometry(r)
    nu = geom.nu(geometry_sphere.x)
    g = np.linalg.inv(geometry_sphere.metric)
    rho = np.einsum("...ijk,...k->...ij", geometry_sphere.sff_matrix(), nu)
    return np.einsum("...ik,...jl,...ij,...kl->...", g, g, rho, rho)
