"""Dense kernels used on tall-skinny blocks and small projected matrices.

All routines wrap LAPACK through numpy and normalize conventions (sign of
the R diagonal, ascending eigenvalue order) so callers can rely on them.
"""

from typing import NamedTuple

import numpy as np

from .errors import RankDeficientError

EPS = np.finfo(np.float64).eps


class SymEig(NamedTuple):
    """Eigendecomposition of a symmetric matrix.

    values are ascending; vectors[:, i] is the unit eigenvector for values[i].
    """

    values: np.ndarray
    vectors: np.ndarray


def thin_qr(s):
    """Thin (economy) Householder QR with a nonnegative R diagonal.

    Parameters
    ----------
    s : ndarray, shape (n, m) with n >= m

    Returns
    -------
    (q, r) : ndarrays of shape (n, m) and (m, m)
        ``q`` has orthonormal columns, ``r`` is upper triangular with
        ``r[i, i] >= 0``, and ``q @ r`` reconstructs ``s``.

    Raises
    ------
    RankDeficientError
        If any |r[i, i]| <= max(n, m) * eps * max_j |r[j, j]|, i.e. the
        columns of ``s`` are numerically dependent.  The exception carries
        the count of diagonal entries above that threshold as ``rank``.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] < s.shape[1]:
        raise ValueError(f"expected a tall matrix, got shape {s.shape}")
    q, r = np.linalg.qr(s, mode="reduced")
    diag = np.abs(np.diag(r))
    tol = max(s.shape) * EPS * (diag.max() if diag.size else 0.0)
    if np.any(diag <= tol):
        rank = int(np.count_nonzero(diag > tol))
        raise RankDeficientError(
            f"columns are numerically dependent (rank {rank} of {s.shape[1]})", rank
        )
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return q * signs, r * signs[:, None]


def dense_sym_eig(b):
    """Full eigendecomposition of a small symmetric matrix.

    The input must satisfy ||b - b.T||_F <= 1e-12 * max(1, ||b||_F); it is
    explicitly symmetrized before the solve so roundoff asymmetry cannot
    leak into the result.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {b.shape}")
    asym = np.linalg.norm(b - b.T)
    if asym > 1e-12 * max(1.0, np.linalg.norm(b)):
        raise ValueError(f"matrix is not symmetric: ||B - B^T|| = {asym:.3e}")
    values, vectors = np.linalg.eigh(0.5 * (b + b.T))
    return SymEig(values, vectors)


def condition_number(s):
    """2-norm condition number sigma_max / sigma_min; +inf if sigma_min == 0."""
    sv = np.linalg.svd(np.asarray(s, dtype=np.float64), compute_uv=False)
    if sv.size == 0 or sv[-1] == 0.0:
        return np.inf
    return float(sv[0] / sv[-1])


def numerical_rank(s, tol_factor=10.0):
    """Number of singular values above tol_factor * sigma_max * eps."""
    sv = np.linalg.svd(np.asarray(s, dtype=np.float64), compute_uv=False)
    if sv.size == 0:
        return 0
    return int(np.count_nonzero(sv > tol_factor * sv[0] * EPS))


def orthonormal_range(s, tol_factor=10.0):
    """Orthonormal basis of the numerical range of ``s`` via SVD.

    Fallback used when ``thin_qr`` reports dependent columns: keeps the
    left singular vectors whose singular values exceed
    tol_factor * sigma_max * eps (at least one column is always kept).

    Returns
    -------
    (u, rank) : ndarray of shape (n, rank) and the retained rank.
    """
    u, sv, _ = np.linalg.svd(np.asarray(s, dtype=np.float64), full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        raise ValueError("cannot orthonormalize an all-zero block")
    rank = max(1, int(np.count_nonzero(sv > tol_factor * sv[0] * EPS)))
    return u[:, :rank], rank
