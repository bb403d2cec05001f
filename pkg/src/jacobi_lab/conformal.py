"""Conformal maps F_y of S^n, conformal-image area, Willmore energy, balancing.

All surface integrals are vertex-lumped: sum_i f(v_i) M_ii.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .mesh import PeriodicMesh, lumped_mass


def _check_ball(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if not np.dot(y, y) < 1.0:
        raise ValueError(f"y must lie in the open unit ball, |y| = {np.linalg.norm(y)!r}")
    return y


@dataclass(frozen=True)
class ConformalState:
    """A point y of the open ball with z = 2y / (1 + |y|^2)."""

    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", _check_ball(self.y))

    @property
    def z(self) -> np.ndarray:
        return 2.0 * self.y / (1.0 + self.y @ self.y)

    def f(self, x) -> np.ndarray:
        return 1.0 + np.asarray(x) @ self.z

    def rho(self, x) -> np.ndarray:
        """Conformal factor (1 - |y|^2) / |x + y|^2."""
        d = np.asarray(x) + self.y
        return (1.0 - self.y @ self.y) / np.einsum("...k,...k->...", d, d)


def conformal_map(state: ConformalState | np.ndarray, x) -> np.ndarray:
    """F_y(x) = rho_y(x) (x + y) + y, for unit x (any leading batch shape)."""
    if not isinstance(state, ConformalState):
        state = ConformalState(state)
    x = np.asarray(x, dtype=float)
    return state.rho(x)[..., None] * (x + state.y) + state.y


def conformal_area(mesh: PeriodicMesh, y, mass=None) -> float:
    """Area of F_y(Sigma): sum_i rho_y(x_i)^2 M_ii."""
    state = ConformalState(y)
    m = lumped_mass(mesh) if mass is None else mass
    return float(np.sum(state.rho(mesh.positions) ** 2 * m))


def willmore_energy(mesh: PeriodicMesh, mass=None) -> float:
    """sum_i (1 + |H(v_i)|^2) M_ii with H the mean curvature in the ambient sphere."""
    m = lumped_mass(mesh) if mass is None else mass
    H = mesh.geometry.mean_curv
    return float(np.sum((1.0 + np.einsum("ik,ik->i", H, H)) * m))


def normal_component(mesh: PeriodicMesh, vertex, v) -> np.ndarray:
    """Part of v orthogonal to x and to the tangent plane at ``vertex``.

    ``vertex`` may be an index array; ``v`` broadcasts against it.
    """
    geo = mesh.geometry
    x = geo.x[vertex]
    T = geo.tangent[vertex]
    g = geo.metric[vertex]
    v = np.broadcast_to(np.asarray(v, dtype=float), x.shape)
    out = v - np.einsum("...k,...k->...", v, x)[..., None] * x
    c = np.einsum("...ik,...k->...i", T, out)
    coef = np.linalg.solve(g, c[..., None])[..., 0]
    return out - np.einsum("...i,...ik->...k", coef, T)


def equality_residuals(mesh: PeriodicMesh, y) -> tuple[float, float]:
    """max_i |H + z^N / f| and max_i |H + y^N / f| over the vertices."""
    state = ConformalState(y)
    idx = np.arange(mesh.n_vertices)
    f = state.f(mesh.positions)[:, None]
    H = mesh.geometry.mean_curv
    out = []
    for w in (state.z, state.y):
        wn = normal_component(mesh, idx, w)
        out.append(float(np.max(np.linalg.norm(H + wn / f, axis=-1))))
    return out[0], out[1]


def equality_diagnostic(mesh: PeriodicMesh, y) -> float:
    """Deviation from the equality configuration of the area bound (z-form)."""
    return equality_residuals(mesh, y)[0]


def center_of_mass(mesh: PeriodicMesh, weights, y, mass=None) -> np.ndarray:
    """Normalized weighted center of mass of F_y o x."""
    m = lumped_mass(mesh) if mass is None else mass
    wm = np.asarray(weights, dtype=float) * m
    return wm @ conformal_map(ConformalState(y), mesh.positions) / wm.sum()


@dataclass(frozen=True, eq=False)
class BalanceResult:
    y: np.ndarray
    residual: float
    iterations: int


def balance(
    mesh: PeriodicMesh,
    weights,
    tol: float = 1e-8,
    max_iter: int = 100,
    fd_step: float = 1e-6,
    radius_cap: float = 0.999,
    mass=None,
) -> BalanceResult:
    """Find y in the ball with sum_i w_i M_ii F_y(x_i) = 0.

    Damped Newton on the normalized center of mass with a forward-difference
    Jacobian. Iterates are clipped to |y| <= ``radius_cap``; repeated clipping
    means the measure is too concentrated and raises ``ConvergenceError``.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (mesh.n_vertices,) or np.any(~(w > 0)):
        raise ValueError("weights must be a strictly positive vector, one entry per vertex")
    m = lumped_mass(mesh) if mass is None else mass

    def G(y):
        return center_of_mass(mesh, w, y, m)

    def clip(y, cap):
        r = np.linalg.norm(y)
        return (y * (cap / r), True) if r > cap else (y, False)

    y, _ = clip(-G(np.zeros(mesh.positions.shape[1])), 0.5)
    g = G(y)
    clipped_in_a_row = 0
    dim = len(y)
    for it in range(1, max_iter + 1):
        if np.linalg.norm(g) <= tol:
            return BalanceResult(y=y, residual=float(np.linalg.norm(g)), iterations=it - 1)
        J = np.empty((dim, dim))
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = fd_step
            J[:, k] = (G(y + e) - g) / fd_step
        step = np.linalg.lstsq(J, -g, rcond=None)[0]
        t = 1.0
        while True:
            trial, was_clipped = clip(y + t * step, radius_cap)
            g_trial = G(trial)
            if np.linalg.norm(g_trial) < np.linalg.norm(g) or t < 1e-6:
                break
            t *= 0.5
        clipped_in_a_row = clipped_in_a_row + 1 if was_clipped else 0
        if clipped_in_a_row >= 5:
            raise ConvergenceError("balancing point runs into the ball boundary", [float(np.linalg.norm(g))])
        y, g = trial, g_trial
    if np.linalg.norm(g) <= tol:
        return BalanceResult(y=y, residual=float(np.linalg.norm(g)), iterations=max_iter)
    raise ConvergenceError(f"balancing did not converge in {max_iter} iterations", [float(np.linalg.norm(g))])


def grid_search_balance(mesh: PeriodicMesh, weights, points_per_axis: int = 41, chunk: int = 4096, mass=None):
    """Brute-force minimizer of |center of mass| over a cubic grid clipped to the ball.

    Independent of ``balance``; returns (y, |G(y)|, grid spacing).
    """
    m = lumped_mass(mesh) if mass is None else mass
    wm = np.asarray(weights, dtype=float) * m
    total = wm.sum()
    X = mesh.positions
    dim = X.shape[1]
    axis = np.linspace(-1.0, 1.0, points_per_axis)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    Y = np.stack([g.ravel() for g in grids], 1)
    Y = Y[np.einsum("ij,ij->i", Y, Y) < 1.0]
    best, best_val = None, np.inf
    for start in range(0, len(Y), chunk):
        Yc = Y[start : start + chunk]
        yy = np.einsum("ij,ij->i", Yc, Yc)
        denom = 1.0 + 2.0 * Yc @ X.T + yy[:, None]
        rho = (1.0 - yy)[:, None] / denom
        com = (rho * wm) @ X + Yc * (rho @ wm)[:, None] + Yc * total
        val = np.linalg.norm(com, axis=1) / total
        k = int(np.argmin(val))
        if val[k] < best_val:
            best, best_val = Yc[k], float(val[k])
    return best, best_val, float(axis[1] - axis[0])
