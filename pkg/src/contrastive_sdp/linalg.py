"""Symmetric-matrix primitives.

Eigendecomposition plus Euclidean projections onto the two feasible sets
used by the relaxed solver: PSD matrices inside a trace ball and PSD
matrices inside an entrywise l1 ball. All functions treat matrices as
immutable and return fresh arrays; symmetry is preserved bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NumericalFailure

EIG_TOL = 1e-10
DYKSTRA_MAX_ITER = 2000
DYKSTRA_TOL = 1e-8


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Average m with its transpose; the result is bit-exact symmetric."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def check_symmetric(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"{name}: expected a square matrix, got shape {m.shape}")
    if not np.array_equal(m, m.T):
        raise InvalidInput(f"{name}: matrix is not symmetric")
    return m


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues sorted descending.

    Column i of ``eigenvectors`` pairs with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eigen(m, eig_tol: float = EIG_TOL) -> EigenDecomposition:
    """Spectral decomposition of a dense symmetric matrix.

    Wraps the LAPACK symmetric eigensolver and verifies the output:
    the reconstruction residual ||V diag(lam) V^T - M||_F must stay below
    eig_tol * max(1, ||M||_F) and the orthonormality residual
    ||V^T V - I||_F below eig_tol, else NumericalFailure is raised.
    """
    m = check_symmetric(m)
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix entries must be finite")
    try:
        lam, vec = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition did not converge: {exc}") from exc
    lam = lam[::-1].copy()
    vec = np.ascontiguousarray(vec[:, ::-1])
    scale = max(1.0, float(np.linalg.norm(m)))
    recon = float(np.linalg.norm((vec * lam) @ vec.T - m))
    ortho = float(np.linalg.norm(vec.T @ vec - np.eye(m.shape[0])))
    if recon > eig_tol * scale or ortho > eig_tol:
        raise NumericalFailure(
            f"eigendecomposition residuals too large (recon={recon:.3e}, ortho={ortho:.3e})",
            residual=max(recon, ortho),
        )
    return EigenDecomposition(eigenvalues=lam, eigenvectors=vec)


def project_capped_simplex(v, tau: float) -> np.ndarray:
    """Euclidean projection of v onto {w : w_i >= 0, sum_i w_i <= tau}.

    Clamps negatives first; if the clamped vector already fits inside the
    budget it is the projection. Otherwise the sum constraint is active
    and the unique KKT multiplier theta > 0 with
    sum_i max(0, v_i - theta) = tau is found by sort-based water-filling.
    """
    v = np.asarray(v, dtype=float).ravel()
    if tau < 0:
        raise InvalidInput("tau must be nonnegative")
    clipped = np.maximum(v, 0.0)
    if clipped.sum() <= tau:
        return clipped
    if tau == 0.0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    thetas = (np.cumsum(u) - tau) / np.arange(1, v.size + 1)
    rho = np.nonzero(u > thetas)[0][-1]
    return np.maximum(v - thetas[rho], 0.0)


def project_l1_ball(v, r: float) -> np.ndarray:
    """Euclidean projection of v onto the l1 ball of radius r.

    Soft threshold: out_i = sign(v_i) * max(0, |v_i| - theta) with theta
    chosen so the output's l1 norm equals min(r, ||v||_1).
    """
    v = np.asarray(v, dtype=float).ravel()
    if r < 0:
        raise InvalidInput("radius must be nonnegative")
    if np.abs(v).sum() <= r:
        return v.copy()
    mags = project_capped_simplex(np.abs(v), r)
    return np.sign(v) * mags


def project_psd(m) -> np.ndarray:
    """Projection onto the PSD cone: clamp negative eigenvalues to zero."""
    eig = sym_eigen(m)
    lam = np.maximum(eig.eigenvalues, 0.0)
    return symmetrize((eig.eigenvectors * lam) @ eig.eigenvectors.T)


def project_psd_trace_ball(m, tau: float) -> np.ndarray:
    """Projection onto {G PSD, tr(G) <= tau}.

    Reduces to projecting the eigenvalue vector onto the capped simplex and
    reassembling in the same eigenbasis.
    """
    m = check_symmetric(m)
    if tau < 0:
        raise InvalidInput("tau must be nonnegative")
    eig = sym_eigen(m)
    lam = project_capped_simplex(eig.eigenvalues, tau)
    return symmetrize((eig.eigenvectors * lam) @ eig.eigenvectors.T)


def project_psd_l1(
    m,
    r: float,
    dykstra_max_iter: int = DYKSTRA_MAX_ITER,
    dykstra_tol: float = DYKSTRA_TOL,
) -> np.ndarray:
    """Projection onto {G PSD, sum_ij |G_ij| <= r} by Dykstra's algorithm.

    Alternates the PSD eigenvalue clamp with the entrywise soft threshold,
    carrying Dykstra correction terms so the limit is the projection onto
    the intersection (both sets are closed convex). The soft threshold acts
    entrywise, so symmetric iterates stay symmetric. Stops once neither
    half-step moves the iterate by more than dykstra_tol in Frobenius norm;
    the returned matrix lies exactly inside the l1 ball and is PSD up to
    dykstra_tol.
    """
    m = check_symmetric(m)
    if r < 0:
        raise InvalidInput("radius must be nonnegative")
    if r == 0:
        return np.zeros_like(m)
    x = m.copy()
    p = np.zeros_like(m)
    q = np.zeros_like(m)
    change = math.inf
    for _ in range(dykstra_max_iter):
        x_prev = x
        y = project_psd(x + p)
        p = x + p - y
        x = project_l1_ball((y + q).ravel(), r).reshape(m.shape)
        q = y + q - x
        change = max(
            float(np.linalg.norm(x - x_prev)), float(np.linalg.norm(y - x))
        )
        if change <= dykstra_tol:
            return x
    raise NumericalFailure(
        f"Dykstra projection did not converge within {dykstra_max_iter} iterations",
        residual=change,
    )


def inner(a, b) -> float:
    """Matrix inner product tr(A^T B) = sum_ij A_ij B_ij."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInput(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.tensordot(a, b, axes=2))


def fro_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=float)))


def linf_norm(m) -> float:
    """Largest entry magnitude."""
    return float(np.max(np.abs(np.asarray(m, dtype=float))))


def spectral_norm(m) -> float:
    """Largest eigenvalue magnitude of a symmetric matrix."""
    m = check_symmetric(m)
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix entries must be finite")
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))
