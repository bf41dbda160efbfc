"""Mixed-membership estimation for directed networks (DiMSC).

Rows of the left singular vectors, once normalized, sit in a cone whose
corners are pure row nodes; rows of the right singular vectors sit in a
simplex whose vertices are pure column nodes. Corners are found with
:func:`~dimsc.corners.svm_cone` and :func:`~dimsc.corners.successive_projection`,
and every node's weights are read off by solving against the corners.
"""

import logging
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corners import successive_projection, svm_cone
from .errors import DegenerateNetworkError, DiMSCError, IllConditionedCornersError
from .linalg import gram_rows, row_normalize, truncated_svd

log = logging.getLogger(__name__)

MAX_CORNER_COND = 1e8
LOG_FLOOR = 1e-300
ZERO_ROW_TOL = 1e-10


@dataclass
class MembershipEstimate:
    Pi_r_hat: np.ndarray
    Pi_c_hat: np.ndarray
    I_r_hat: tuple
    I_c_hat: tuple
    theta_r_hat: np.ndarray
    Z_r_raw: np.ndarray
    Z_c_raw: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def K(self):
        return self.Pi_r_hat.shape[1]


@contextmanager
def _stage(name):
    try:
        yield
    except DiMSCError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def memberships_from_barycentric(Z):
    """Clip negatives to zero and scale rows to sum to one.

    Rows that are entirely zero after clipping become uniform. Returns
    ``(Pi, n_clipped_entries, fallback_rows)``.
    """
    Z = np.asarray(Z, dtype=float)
    n_clipped = int(np.count_nonzero(Z < 0))
    Zc = np.maximum(Z, 0.0)
    sums = Zc.sum(axis=1)
    fallback = np.flatnonzero(sums <= 0.0)
    Pi = np.empty_like(Zc)
    ok = sums > 0.0
    Pi[ok] = Zc[ok] / sums[ok, None]
    if fallback.size:
        log.info("%d all-zero membership rows replaced by the uniform PMF", fallback.size)
        Pi[fallback] = 1.0 / Zc.shape[1]
    return Pi, n_clipped, fallback.tolist()


def _check_cond(B, what):
    cond = float(np.linalg.cond(B))
    if not np.isfinite(cond) or cond > MAX_CORNER_COND:
        raise IllConditionedCornersError(
            f"{what} corner matrix has condition number {cond:.3e} > {MAX_CORNER_COND:g}", cond=cond)
    return cond


def corner_scales(U_star, s, V, I_r, I_c):
    """Diagonal of ``U_star[I_r] diag(s) V[I_c]^T``, clamped at zero."""
    J = np.einsum("kj,j,kj->k", U_star[list(I_r)], s, V[list(I_c)])
    return np.maximum(J, 0.0), int(np.count_nonzero(J < 0))


def pair_corners(U_star, s, V, I_r, I_c):
    """Reorder ``I_c`` so that column corner k shares a community with row corner k.

    The block ``U_star[I_r] diag(s) V[I_c]^T`` equals ``D P`` up to a column
    permutation, with D positive diagonal. The pairing maximizing the
    product of its diagonal is the one putting P's unit diagonal there
    whenever that is P's max-product permutation (e.g. P assortative).
    """
    M = (U_star[list(I_r)] * s) @ V[list(I_c)].T
    cost = -np.log(np.maximum(M, LOG_FLOOR))
    rows, cols = linear_sum_assignment(cost)
    order = cols[np.argsort(rows)]
    return tuple(int(I_c[j]) for j in order)


def recover_row_memberships(U, s, V, U_star, I_r_hat, I_c_hat):
    """Row weights from ``Z_r = U U_star[I_r]^{-1} diag(J)``.

    ``s`` is the vector of singular values. Returns
    ``(Pi_r_hat, Z_r_raw, theta_r_hat, info)``; ``theta_r_hat[i]`` is the
    l1 norm of the clipped ``Z_r`` row, which equals the degree parameter
    when the decomposition is exact.
    """
    I_r = list(I_r_hat)
    B = U_star[I_r]
    cond = _check_cond(B, "row")
    J, n_neg = corner_scales(U_star, s, V, I_r, I_c_hat)
    if n_neg:
        log.info("%d negative corner scales clamped to 0", n_neg)
    Y = np.linalg.solve(B.T, U.T).T
    Z = Y * J[None, :]
    Pi, n_clip, fallback = memberships_from_barycentric(Z)
    theta = np.maximum(Z, 0.0).sum(axis=1)
    info = {"cond_r": cond, "clipped_r": n_clip, "fallback_r": fallback, "negative_J": n_neg}
    return Pi, Z, theta, info


def recover_col_memberships(V, I_c_hat):
    """Column weights from ``Z_c = V V[I_c]^{-1}``; returns ``(Pi_c_hat, Z_c_raw, info)``."""
    B = V[list(I_c_hat)]
    cond = _check_cond(B, "column")
    Z = np.linalg.solve(B.T, V.T).T
    Pi, n_clip, fallback = memberships_from_barycentric(Z)
    return Pi, Z, {"cond_c": cond, "clipped_c": n_clip, "fallback_c": fallback}


def _normalized_rows(U):
    # rows of an isolated node come out of the SVD as rounding noise, not exact zeros
    scale = float(np.abs(U).max()) if U.size else 0.0
    U_star, degenerate = row_normalize(U, tol=ZERO_ROW_TOL * scale)
    if degenerate:
        raise DegenerateNetworkError(
            f"{len(degenerate)} rows have zero singular-vector norm (first {degenerate[:5]}); "
            "remove isolated row nodes first")
    return U_star


def _fit_decomposition(dec, K, seed):
    U, s, V = dec.U, dec.s, dec.V
    with _stage("normalize"):
        U_star = _normalized_rows(U)
    with _stage("simplex"):
        I_c = successive_projection(V, K)
    with _stage("cone"):
        I_r = svm_cone(U_star, K, seed=seed)
        I_c = pair_corners(U_star, s, V, I_r, I_c)
    with _stage("rows"):
        Pi_r, Z_r, theta, info_r = recover_row_memberships(U, s, V, U_star, I_r, I_c)
    with _stage("columns"):
        Pi_c, Z_c, info_c = recover_col_memberships(V, I_c)
    diag = {"singular_values": s.tolist(), **info_r, **info_c}
    return MembershipEstimate(Pi_r, Pi_c, tuple(I_r), tuple(I_c), theta, Z_r, Z_c, diag)


def _fit_decomposition_projector(dec, K, seed):
    # same estimator expressed through U U^T and V V^T
    U, s, V = dec.U, dec.s, dec.V
    with _stage("normalize"):
        U_star = _normalized_rows(U)
        U2 = gram_rows(U)
        V2 = gram_rows(V)
        U_star2 = _normalized_rows(U2)
    with _stage("simplex"):
        I_c = successive_projection(V2, K)
    with _stage("cone"):
        I_r = svm_cone(U_star2, K, seed=seed)
        I_c = pair_corners(U_star, s, V, I_r, I_c)
    with _stage("rows"):
        C = U_star2[list(I_r)]
        G = C @ C.T
        cond_r = _check_cond(G, "row") ** 0.5
        J, n_neg = corner_scales(U_star, s, V, I_r, I_c)
        Y = np.linalg.solve(G, (U2 @ C.T).T).T
        Z_r = Y * J[None, :]
        Pi_r, clip_r, fb_r = memberships_from_barycentric(Z_r)
        theta = np.maximum(Z_r, 0.0).sum(axis=1)
    with _stage("columns"):
        D = V2[list(I_c)]
        H = D @ D.T
        cond_c = _check_cond(H, "column") ** 0.5
        Z_c = np.linalg.solve(H, (V2 @ D.T).T).T
        Pi_c, clip_c, fb_c = memberships_from_barycentric(Z_c)
    diag = {"singular_values": s.tolist(), "cond_r": cond_r, "clipped_r": clip_r, "fallback_r": fb_r,
            "negative_J": n_neg, "cond_c": cond_c, "clipped_c": clip_c, "fallback_c": fb_c}
    return MembershipEstimate(Pi_r, Pi_c, tuple(I_r), tuple(I_c), theta, Z_r, Z_c, diag)


def _decompose(M, K):
    with _stage("svd"):
        return truncated_svd(M, K)


def fit_ideal(Omega, K, seed=0):
    """Run the estimator on the population matrix itself (noise-free case)."""
    return _fit_decomposition(_decompose(Omega, K), K, seed)


def fit_dimsc(A, K, seed=0):
    """Estimate row and column memberships from a 0/1 adjacency matrix.

    ``A`` may be dense or scipy-sparse; rows index edge senders. To put the
    degree heterogeneity on the receiving side, pass ``A.T``.
    """
    return _fit_decomposition(_decompose(A, K), K, seed)


def fit_dimsc_equivalence(A, K, seed=0):
    """Projector formulation of :func:`fit_dimsc`; returns the same estimate."""
    return _fit_decomposition_projector(_decompose(A, K), K, seed)


def recover_theta_corners(U, s, V, I_r, I_c):
    """``diag(U[I_r] diag(s) V[I_c]^T)``: the degree parameters of the corner rows.

    Exact only when P has a unit diagonal.
    """
    d = np.einsum("kj,j,kj->k", U[list(I_r)], s, V[list(I_c)])
    if np.any(d < 0):
        warnings.warn("negative corner degree: identifiability conditions look violated")
    return d


def identify_parameters(Omega, K, seed=0):
    """Recover ``(theta_r, Pi_r, Pi_c, P)`` from a noise-free ``Omega``.

    Community labels come out permuted: ``P_hat`` rows follow the order of
    ``Pi_r_hat`` columns and ``P_hat`` columns follow ``Pi_c_hat`` columns.
    """
    dec = _decompose(Omega, K)
    est = _fit_decomposition(dec, K, seed)
    theta_corner = recover_theta_corners(dec.U, dec.s, dec.V, est.I_r_hat, est.I_c_hat)
    block = (dec.U[list(est.I_r_hat)] * dec.s) @ dec.V[list(est.I_c_hat)].T
    P_hat = block / theta_corner[:, None]
    return est.theta_r_hat, est.Pi_r_hat, est.Pi_c_hat, P_hat
