"""Matrix primitives shared by the estimator: top-K SVD, row normalization, Gram."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, RankDeficiencyError

DENSE_LIMIT = 5000
RANK_TOL = 1e-12
SIGN_TOL = 1e-12


@dataclass(frozen=True)
class SpectralDecomposition:
    """Compact rank-K SVD ``M ~ U diag(s) V^T``.

    ``s`` holds the diagonal of Lambda (positive, non-increasing).
    """

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    @property
    def K(self):
        return self.s.shape[0]

    @property
    def Lambda(self):
        return np.diag(self.s)

    def reconstruct(self):
        return (self.U * self.s) @ self.V.T


def as_dense(M):
    if sp.issparse(M):
        return np.asarray(M.toarray(), dtype=float)
    return np.asarray(M, dtype=float)


def _canonical_signs(U, V):
    # flip each pair so the first non-negligible entry of the left vector is > 0
    U = U.copy()
    V = V.copy()
    for k in range(U.shape[1]):
        col = U[:, k]
        nz = np.flatnonzero(np.abs(col) > SIGN_TOL)
        if nz.size and col[nz[0]] < 0:
            U[:, k] = -col
            V[:, k] = -V[:, k]
    return U, V


def _block_power_svd(M, K, seed=0, tol=1e-10, max_iter=500):
    n, m = M.shape
    p = min(K + 10, min(n, m))
    rng = np.random.Generator(np.random.PCG64(seed))
    Q, _ = np.linalg.qr(M @ rng.standard_normal((m, p)))
    prev = None
    for _ in range(max_iter):
        Z, _ = np.linalg.qr(M.T @ Q)
        Q, _ = np.linalg.qr(M @ Z)
        s = np.linalg.svd(Q.T @ M, compute_uv=False)[:K]
        if prev is not None and np.max(np.abs(s - prev)) <= tol * max(s[0], 1.0):
            break
        prev = s
    Ub, s, Vt = np.linalg.svd(Q.T @ M, full_matrices=False)
    return Q @ Ub[:, :K], s[:K], Vt[:K].T


def truncated_svd(M, K, tol=1e-10, seed=0):
    """Top-``K`` singular triplets of ``M`` with canonical signs.

    Matrices whose smaller side is at most 5000 go through LAPACK's dense
    SVD and are truncated; larger ones use seeded block power iteration.
    Sparse input is accepted.

    Raises
    ------
    DimensionError
        If ``K`` is outside ``[1, min(M.shape)]``.
    RankDeficiencyError
        If one of the leading ``K`` singular values is below 1e-12.
    """
    K = int(K)
    n, m = M.shape
    if not 1 <= K <= min(n, m):
        raise DimensionError(f"K={K} must lie in [1, {min(n, m)}] for a {n}x{m} matrix")
    if min(n, m) <= DENSE_LIMIT:
        A = as_dense(M)
        if not np.all(np.isfinite(A)):
            raise DimensionError("matrix has non-finite entries")
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        U, s, V = U[:, :K], s[:K], Vt[:K].T
    else:
        A = M.tocsr().astype(float) if sp.issparse(M) else np.asarray(M, dtype=float)
        U, s, V = _block_power_svd(A, K, seed=seed, tol=tol)
    small = np.flatnonzero(s < RANK_TOL)
    if small.size:
        i = int(small[0])
        raise RankDeficiencyError(
            f"singular value {i + 1} of {K} is {s[i]:.3e} < {RANK_TOL:g}", index=i)
    U, V = _canonical_signs(U, V)
    return SpectralDecomposition(U=U, s=s.copy(), V=V)


def row_normalize(X, tol=0.0):
    """Scale each row to unit Euclidean norm.

    Returns ``(X_normalized, degenerate)`` where ``degenerate`` lists the
    indices of rows with norm ``<= tol``; those rows are set to zero.
    """
    X = np.asarray(X, dtype=float)
    # pre-scale by the largest entry so tiny rows do not underflow when squared
    peak = np.abs(X).max(axis=1) if X.shape[1] else np.zeros(X.shape[0])
    safe_peak = np.where(peak > 0, peak, 1.0)
    Xs = X / safe_peak[:, None]
    norms = np.linalg.norm(Xs, axis=1) * peak
    bad = (norms <= tol) | (peak == 0)
    rel = np.linalg.norm(Xs, axis=1)
    out = Xs / np.where(bad, 1.0, rel)[:, None]
    out[bad] = 0.0
    return out, np.flatnonzero(bad).tolist()


def gram_rows(X):
    """``X X^T``, symmetrized so the result is exactly symmetric."""
    X = np.asarray(X, dtype=float)
    G = X @ X.T
    return 0.5 * (G + G.T)
