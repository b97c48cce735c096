"""Dense real linear-algebra kernel with explicit tolerance contracts.

Everything downstream (stability tests, feasibility certificates, solver
verification) goes through this module so the accuracy assumptions live in
one place:

* ``EIG_TOL``       -- absolute tolerance on eigenvalue/root residuals,
* ``SYM_TOL``       -- admissible asymmetry, scaled by the matrix norm,
* ``SINGULAR_TOL``  -- singularity threshold for linear solves, scaled by
  the matrix norm,
* ``LIN_RESIDUAL_TOL`` -- residual bound for ``solve_linear``.

All functions are pure and operate on real ``float64`` arrays; matrices
with NaN or infinite entries are rejected at the door.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, ConvergenceError, DimensionError, SingularMatrixError

EIG_TOL = 1e-8
SYM_TOL = 1e-10
SINGULAR_TOL = 1e-12
LIN_RESIDUAL_TOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains NaN or infinite entries")
    return arr


def as_square(a, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def eigenvalues(m) -> np.ndarray:
    """All eigenvalues of a square matrix, with multiplicity, unordered."""
    arr = as_square(m)
    if arr.shape[0] == 0:
        return np.empty(0, dtype=complex)
    try:
        return np.linalg.eigvals(arr)
    except np.linalg.LinAlgError as exc:  # QR iteration stalled
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc


def spectral_radius(m) -> float:
    """max |lambda| over the eigenvalues of a nonempty square matrix."""
    arr = as_square(m)
    if arr.shape[0] == 0:
        raise DimensionError("spectral radius of an empty matrix is undefined")
    return float(np.max(np.abs(eigenvalues(arr))))


def sym_eig_extremes(m, tol: float | None = None) -> tuple[float, float]:
    """(smallest, largest) eigenvalue of a symmetric matrix.

    The input is symmetrized as ``(m + m.T) / 2`` first; asymmetry beyond
    ``tol`` (default ``SYM_TOL * ||m||_F``) is a contract violation.
    """
    arr = as_square(m)
    if arr.shape[0] == 0:
        raise DimensionError("empty matrix has no eigenvalues")
    if tol is None:
        tol = SYM_TOL * np.linalg.norm(arr)
    skew = np.linalg.norm(arr - arr.T)
    if skew > tol:
        raise ContractError(f"matrix asymmetry {skew:.3e} exceeds tolerance {tol:.3e}")
    w = np.linalg.eigvalsh((arr + arr.T) / 2.0)
    return float(w[0]), float(w[-1])


def rank(m, tol: float = 1e-9) -> int:
    """Numerical rank: singular values above ``tol`` times the largest one."""
    if tol < 0:
        raise ContractError("rank tolerance must be nonnegative")
    arr = as_matrix(m)
    if arr.size == 0:
        return 0
    s = np.linalg.svd(arr, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def poly_trim(coeffs) -> np.ndarray:
    """Strip leading (highest-degree) zero coefficients; keeps >= 1 entry."""
    arr = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if arr.ndim != 1:
        raise DimensionError("polynomial coefficients must be 1-D")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ContractError("polynomial coefficients contain NaN or infinity")
    nz = np.nonzero(arr)[0]
    if nz.size == 0:
        return np.zeros(1)
    return arr[nz[0]:]


def poly_roots(coeffs) -> np.ndarray:
    """Roots of a polynomial (coefficients highest degree first).

    Computed as the eigenvalues of the companion matrix; degree must be
    at least one after trimming leading zeros.
    """
    p = poly_trim(coeffs)
    if p.size < 2:
        raise ContractError("poly_roots needs degree >= 1")
    return np.roots(p)


def solve_linear(a, b, tol: float | None = None) -> np.ndarray:
    """Solve ``a @ x = b`` for square ``a``.

    Raises :class:`SingularMatrixError` when the smallest singular value of
    ``a`` falls below ``tol`` (default ``SINGULAR_TOL * ||a||_2``).
    """
    aa = as_square(a, "a")
    bb = np.asarray(b, dtype=float)
    if bb.shape[0] != aa.shape[0]:
        raise DimensionError(f"rhs has {bb.shape[0]} rows, expected {aa.shape[0]}")
    if aa.shape[0] == 0:
        return bb.copy()
    s = np.linalg.svd(aa, compute_uv=False)
    if tol is None:
        tol = SINGULAR_TOL * s[0]
    if s[-1] <= tol:
        raise SingularMatrixError(
            f"matrix is singular to tolerance (smallest sv {s[-1]:.3e}, threshold {tol:.3e})"
        )
    return np.linalg.solve(aa, bb)
