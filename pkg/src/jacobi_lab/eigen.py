"""Smallest eigenpairs of A u = lambda M u with A symmetric and M diagonal positive.

Shift-invert Lanczos (ARPACK via scipy) with the shift placed strictly below a
Gershgorin lower bound of the pencil, so A - shift*M is positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .errors import ConvergenceError

DEFAULT_SEED = 20240617


@dataclass(frozen=True, eq=False)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int  # applications of (A - shift M)^{-1}
    shift: float
    seed: int

    @property
    def lambda2(self) -> float:
        """Second eigenvalue, counted with multiplicity."""
        return float(self.eigenvalues[1])


def _mass_diagonal(M) -> np.ndarray:
    if sp.issparse(M):
        off = M - sp.diags(M.diagonal())
        if off.count_nonzero():
            raise ValueError("mass matrix must be diagonal")
        m = M.diagonal()
    else:
        M = np.asarray(M, dtype=float)
        m = M if M.ndim == 1 else np.diag(M)
    m = np.asarray(m, dtype=float)
    if np.any(~(m > 0)):
        raise ValueError("mass matrix must be positive definite (all diagonal entries > 0)")
    return m


def gershgorin_lower_bound(A, m: np.ndarray) -> float:
    """Lower bound on the spectrum of the pencil (A, diag(m))."""
    A = sp.csr_matrix(A)
    d = A.diagonal()
    radius = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min((d - radius) / m))


def residual_norms(A, m: np.ndarray, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    Mu = m[:, None] * vectors
    R = A @ vectors - Mu * values[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(Mu, axis=0)


def smallest_eigenpairs(A, M, k: int = 6, tol: float = 1e-9, seed: int = DEFAULT_SEED) -> EigenResult:
    """The k algebraically smallest eigenpairs, sorted, counted with multiplicity.

    Eigenvectors are M-orthonormal. Raises ``ConvergenceError`` if the
    relative residual ||Au - lambda Mu|| / ||Mu|| of any pair exceeds ``tol``.
    """
    m = _mass_diagonal(M)
    A = sp.csr_matrix(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or len(m) != n:
        raise ValueError("A and M must be square and of equal size")
    if not 1 <= k <= n // 2:
        raise ValueError(f"need 1 <= k <= {n // 2}, got k={k}")
    if abs(A - A.T).max() > 1e-12 * max(1.0, abs(A).max()):
        raise ValueError("A must be symmetric")

    lower = gershgorin_lower_bound(A, m)
    shift = lower - 0.1 * max(1.0, abs(lower))
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    Msp = sp.diags(m).tocsc()
    lu = sla.splu((A - shift * Msp).tocsc())
    calls = [0]

    def solve(b):
        calls[0] += 1
        return lu.solve(np.asarray(b, dtype=float))

    opinv = sla.LinearOperator((n, n), matvec=solve, dtype=float)
    ncv = min(n, max(2 * k + 1, 20))
    budget = 10 * k
    try:
        values, vectors = sla.eigsh(
            A, k=k, M=Msp, sigma=shift, which="LM", v0=v0, ncv=ncv, maxiter=budget, tol=0.0, OPinv=opinv
        )
    except sla.ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        res = residual_norms(A, m, vals, vecs) if len(vals) else np.array([np.inf])
        raise ConvergenceError(f"shift-invert Lanczos did not converge in {budget} restarts", res) from None
    iterations = calls[0]

    # Rayleigh-Ritz on the returned subspace: exact M-orthonormality, sorted values
    ritz_a = vectors.T @ (A @ vectors)
    ritz_m = vectors.T @ (m[:, None] * vectors)
    ritz_a = 0.5 * (ritz_a + ritz_a.T)
    ritz_m = 0.5 * (ritz_m + ritz_m.T)
    values, coeffs = la.eigh(ritz_a, ritz_m)
    vectors = vectors @ coeffs
    for j in range(k):
        # deterministic sign: largest-magnitude entry positive
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] *= -1
    residuals = residual_norms(A, m, values, vectors)
    if np.any(residuals > tol):
        raise ConvergenceError(
            f"eigenpair residuals {residuals.max():.3e} exceed tolerance {tol:.1e}", residuals
        )
    return EigenResult(
        eigenvalues=values,
        eigenvectors=vectors,
        residuals=residuals,
        iterations=iterations,
        shift=shift,
        seed=seed,
    )


def first_eigenfunction(A, M, tol: float = 1e-9, seed: int = DEFAULT_SEED, sign_tol: float = 1e-8) -> np.ndarray:
    """Ground state of (A, M), signed positive.

    A ground state that changes sign beyond ``sign_tol`` (relative to its
    largest entry) indicates a discretization fault and raises ``ValueError``.
    """
    phi = smallest_eigenpairs(A, M, k=1, tol=tol, seed=seed).eigenvectors[:, 0]
    if phi.sum() < 0:
        phi = -phi
    if phi.min() < -sign_tol * np.abs(phi).max():
        raise ValueError(f"ground state changes sign (min entry {phi.min():.3e})")
    return phi
