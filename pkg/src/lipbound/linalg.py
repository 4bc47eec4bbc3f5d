"""Dense symmetric linear-algebra kernels.

Everything here operates on row-major float64 numpy arrays at desk scale;
there is no sparse path.  All functions are pure, so values are safe to
share across threads.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf

from .errors import (
    DimensionMismatch,
    NonPositiveScaling,
    NotConverged,
    NotPositiveDefinite,
)

# Relative symmetry tolerance for inputs declared symmetric.
SYMMETRY_RTOL = 1e-10

# Power-iteration defaults: relative tolerance on the Rayleigh quotient and
# the iteration cap.
POWER_TOL = 1e-10
POWER_MAX_ITER = 10000

# Extra iterations allowed after the Rayleigh quotient has stabilized, to
# drive the eigenvector residual down as well.  Bounded so that clustered
# spectra (where the residual plateaus) cannot stall the iteration.
_POLISH_ITERS = 100


def _require_square(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")


def _require_symmetric(S: np.ndarray) -> None:
    if S.size == 0:
        return
    scale = float(np.max(np.abs(S)))
    if float(np.max(np.abs(S - S.T))) > SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")


def cholesky(S: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor L with L @ L.T == S.

    Raises NotPositiveDefinite if any pivot is non-positive, which is how
    the recursion signals that a multiplier choice violated strict
    feasibility.
    """
    S = np.ascontiguousarray(S, dtype=np.float64)
    _require_square(S)
    _require_symmetric(S)
    if S.shape[0] == 0:
        return S.copy()
    c, info = dpotrf(S, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(
            f"leading minor of order {info} is not positive definite"
        )
    if info < 0:  # pragma: no cover - LAPACK argument error
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return c


def gamma_matrix(W: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Propagated quadratic form W M^{-1} W.T given the Cholesky factor of M.

    Computed as X.T @ X with L @ X = W.T, so M is never inverted explicitly
    and the result is PSD by construction.  Symmetrized before returning
    because downstream row-sum and power-iteration logic assumes exact
    symmetry.
    """
    W = np.asarray(W, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    if W.ndim != 2 or L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionMismatch("W must be 2-D and L square")
    if W.shape[1] != L.shape[0]:
        raise DimensionMismatch(
            f"W has {W.shape[1]} columns but the factor has dimension {L.shape[0]}"
        )
    X = solve_triangular(L, W.T, lower=True)
    G = X.T @ X
    return 0.5 * (G + G.T)


def _power_run(
    matvec: Callable[[np.ndarray], np.ndarray],
    v0: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[float, float, bool]:
    v = v0 / np.linalg.norm(v0)
    sigma = 0.0
    residual = math.inf
    polish = -1
    for _ in range(max_iter):
        w = matvec(v)
        sigma_new = float(v @ w)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0, 0.0, True
        residual = float(np.linalg.norm(w - sigma_new * v))
        if polish < 0 and abs(sigma_new - sigma) <= tol * abs(sigma_new):
            polish = _POLISH_ITERS
        if polish >= 0 and (residual <= tol * (1.0 + abs(sigma_new)) or polish == 0):
            return sigma_new, residual, True
        if polish > 0:
            polish -= 1
        sigma = sigma_new
        v = w / norm_w
    return sigma, residual, False


def power_iteration_matvec(
    matvec: Callable[[np.ndarray], np.ndarray],
    n: int,
    trace: float = 1.0,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> tuple[float, float]:
    """Dominant eigenvalue of a symmetric PSD operator given only a matvec.

    Starts from the normalized all-ones vector; if that lands in the kernel
    (estimate 0 with nonzero trace) restarts once from normalized
    (1, 2, ..., n).  Returns (sigma, residual) where residual is
    ``norm(A v - sigma v)`` at the final unit vector.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n == 0:
        return 0.0, 0.0
    sigma, residual, ok = _power_run(matvec, np.ones(n), tol, max_iter)
    if sigma == 0.0 and trace != 0.0:
        sigma, residual, ok = _power_run(
            matvec, np.arange(1.0, n + 1.0), tol, max_iter
        )
    if not ok:
        raise NotConverged(sigma, residual)
    return sigma, residual


def power_iteration(
    A: np.ndarray,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> tuple[float, float]:
    """Dominant eigenvalue of a symmetric PSD matrix by power iteration."""
    A = np.asarray(A, dtype=np.float64)
    _require_square(A)
    _require_symmetric(A)
    n = A.shape[0]
    if n == 0:
        return 0.0, 0.0
    return power_iteration_matvec(
        lambda v: A @ v, n, trace=float(np.trace(A)), tol=tol, max_iter=max_iter
    )


def spectral_norm(
    W: np.ndarray,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> float:
    """Largest singular value of a (possibly rectangular) matrix.

    Power iteration on the smaller of the two Gram matrices.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise DimensionMismatch("expected a 2-D matrix")
    G = W @ W.T if W.shape[0] <= W.shape[1] else W.T @ W
    G = 0.5 * (G + G.T)
    sigma, _ = power_iteration(G, tol=tol, max_iter=max_iter)
    return math.sqrt(max(sigma, 0.0))


def row_abs_sums(G: np.ndarray) -> np.ndarray:
    """Per-row sums of absolute values (Gershgorin radii plus diagonal)."""
    G = np.asarray(G, dtype=np.float64)
    _require_square(G)
    return np.abs(G).sum(axis=1)


def scaled_row_sums(G: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row absolute sums of Q^{-1} |G| Q for a positive diagonal scaling q."""
    G = np.asarray(G, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    _require_square(G)
    if q.ndim != 1 or q.shape[0] != G.shape[0]:
        raise DimensionMismatch("scaling vector length must match the matrix")
    if np.any(q <= 0.0) or not np.all(np.isfinite(q)):
        raise NonPositiveScaling("scaling entries must be strictly positive")
    # summed with the same kernel as row_abs_sums so unit scaling matches
    # it bit-exactly
    return (np.abs(G) * q[None, :]).sum(axis=1) / q


def default_shift(S: np.ndarray) -> float:
    """Default PSD-check shift: 1e-8 * (1 + max |diag S|)."""
    d = np.abs(np.diag(S))
    return 1e-8 * (1.0 + (float(d.max()) if d.size else 0.0))


def shifted_cholesky_report(S: np.ndarray, shift: float) -> tuple[bool, float]:
    """Attempt Cholesky of S + shift*I; report verdict and a pivot estimate.

    On success the estimate is the smallest squared factor diagonal minus
    the shift.  On failure it is the (cheap, deterministic) Gershgorin
    lower bound on the smallest eigenvalue of S.
    """
    S = np.asarray(S, dtype=np.float64)
    _require_square(S)
    if shift < 0:
        raise ValueError("shift must be non-negative")
    n = S.shape[0]
    if n == 0:
        return True, 0.0
    A = S + shift * np.eye(n)
    c, info = dpotrf(np.ascontiguousarray(A), lower=1, clean=1)
    if info == 0:
        d = np.diag(c)
        return True, float(d.min()) ** 2 - shift
    diag = np.diag(S)
    off = row_abs_sums(S) - np.abs(diag)
    return False, float(np.min(diag - off))


def psd_check(S: np.ndarray, shift: float | None = None) -> bool:
    """True iff S + shift*I admits a Cholesky factorization."""
    S = np.asarray(S, dtype=np.float64)
    if shift is None:
        shift = default_shift(S)
    ok, _ = shifted_cholesky_report(S, shift)
    return ok


def spectral_upper_bound(G: np.ndarray) -> float:
    """Rigorous upper bound on sigma_max of a symmetric matrix.

    Uses max row-absolute-sum, which dominates the spectral radius; this is
    the certified-mode replacement for power iteration (which approaches
    sigma_max from below).
    """
    G = np.asarray(G, dtype=np.float64)
    _require_square(G)
    _require_symmetric(G)
    if G.size == 0:
        return 0.0
    return float(np.max(row_abs_sums(G)))
