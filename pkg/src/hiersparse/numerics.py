"""Dense linear-algebra primitives shared by every other module.

All routines work in float64 and reject non-finite input.
"""

import numpy as np
import scipy.linalg

from .errors import EmptyNullspaceError, NonFiniteError, ShapeError, ZeroVectorError

# singular values below RANK_RTOL * sigma_max count as zero
RANK_RTOL = 1e-10


def as_vector(x, name="x"):
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return v


def as_matrix(A, name="A"):
    M = np.asarray(A, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[1] < 1:
        raise ShapeError(f"{name} must be non-empty, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return M


def least_squares_with_rank(A, x):
    """Solve ``min_w ||x - A w||_2`` and report the numerical rank of ``A``.

    Uses QR with column pivoting; if the pivoted R reveals rank deficiency the
    solve is redone through the SVD so the minimum-norm minimizer is returned.
    """
    A = as_matrix(A)
    x = as_vector(x)
    d, m = A.shape
    if x.shape[0] != d:
        raise ShapeError(f"A has {d} rows but x has length {x.shape[0]}")

    if m <= d:
        Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True, check_finite=False)
        diag = np.abs(np.diag(R))
        if diag[0] > 0 and diag[-1] > RANK_RTOL * diag[0]:
            w = np.empty(m)
            w[piv] = scipy.linalg.solve_triangular(R, Q.T @ x, check_finite=False)
            return w, m

    w, _, rank, _ = np.linalg.lstsq(A, x, rcond=RANK_RTOL)
    return w, int(rank)


def solve_least_squares(A, x):
    """Return the (minimum-norm) least-squares solution of ``A w ~= x``."""
    return least_squares_with_rank(A, x)[0]


def numerical_rank(A):
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def orthonormal_nullspace_basis(A):
    """Orthonormal basis ``U`` of the complement of ``range(A)``.

    ``A`` is ``d x m``; the result is ``d x (d - rank A)`` with ``A.T @ U = 0``
    and ``U.T @ U = I``. Built from the trailing left singular vectors.
    """
    A = as_matrix(A)
    d = A.shape[0]
    U, s, _ = np.linalg.svd(A, full_matrices=True)
    rank = 0 if s[0] == 0 else int(np.sum(s > RANK_RTOL * s[0]))
    if rank >= d:
        raise EmptyNullspaceError(f"matrix of shape {A.shape} has full row rank {d}; nullspace is empty")
    return U[:, rank:].copy()


def _unit_pair(u, v):
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape != v.shape:
        raise ShapeError(f"vector lengths differ: {u.shape[0]} vs {v.shape[0]}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVectorError("cosine/angle undefined for a zero vector")
    return u, v, nu, nv


def cosine_similarity(u, v):
    u, v, nu, nv = _unit_pair(u, v)
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def angle_between(u, v):
    """Angle in radians, in ``[0, pi]``."""
    return float(np.arccos(cosine_similarity(u, v)))


def row_cosines(M, v):
    """Cosine of every row of ``M`` with ``v`` (vectorised, zero rows give 0)."""
    M = np.asarray(M, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nv = np.linalg.norm(v)
    norms = np.linalg.norm(M, axis=1) * nv
    out = np.zeros(M.shape[0])
    ok = norms > 0
    out[ok] = (M[ok] @ v) / norms[ok]
    return np.clip(out, -1.0, 1.0)
