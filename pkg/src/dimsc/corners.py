"""Corner hunting on point clouds.

Two geometries are handled: a simplex (rows are convex combinations of
K corner rows), attacked with successive projection, and a cone (unit rows
that are nonnegative combinations of K corner rows, renormalized),
attacked with a one-class SVM followed by K-means on the rows closest to
the separating hyperplane.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConeConditionError,
    ConeHuntingError,
    CornerDeficiencyError,
    DegenerateConeError,
    DimensionError,
    InsufficientPointsError,
)
from .model import make_rng

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12
TIE_TOL = 1e-12
UNIT_TOL = 1e-8
HYPERPLANE_TOL = 1e-8
CENTER_SEPARATION = 1e-6
GAMMA_STEPS = 21


@dataclass(frozen=True)
class ConeSolution:
    """Hyperplane ``{x : x.w = b}`` supporting the rows from below."""

    w: np.ndarray
    b: float
    support: tuple = ()
    weights: tuple = ()
    gap: float = 0.0


def _lowest_argmax(values, rel_tol=TIE_TOL):
    top = values.max()
    return int(np.flatnonzero(values >= top - rel_tol * abs(top))[0])


def successive_projection(X, K):
    """Greedy simplex-vertex selection on the rows of ``X``.

    Picks the row of largest residual norm, projects every row onto the
    orthogonal complement of that row's residual, and repeats ``K`` times.
    Near-ties (relative 1e-12) go to the lowest index.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    K = int(K)
    if not 1 <= K <= min(n, d):
        raise DimensionError(f"K={K} must lie in [1, {min(n, d)}]")
    R = X.copy()
    picks = []
    for _ in range(K):
        norms = np.linalg.norm(R, axis=1)
        if norms.max() < RESIDUAL_TOL:
            raise CornerDeficiencyError(
                f"residual collapsed after {len(picks)} of {K} picks", picks=picks)
        i = _lowest_argmax(norms)
        picks.append(i)
        u = R[i].copy()
        R -= np.outer(R @ u, u) / (u @ u)
    return tuple(picks)


def _affine_minimizer(Xs):
    # min ||a @ Xs|| s.t. sum(a) = 1, parametrized around the first point
    if Xs.shape[0] == 1:
        return np.ones(1)
    D = (Xs[1:] - Xs[0]).T
    beta = np.linalg.lstsq(D, -Xs[0], rcond=None)[0]
    return np.concatenate(([1.0 - beta.sum()], beta))


def min_norm_point(X, gap_tol=1e-12, max_iter=None, eps=1e-15):
    """Minimum-norm point of the convex hull of the rows of ``X`` (Wolfe).

    Returns ``(x, support, weights, gap)`` with ``x = weights @ X[support]``
    and ``gap = ||x||^2 - min_i X[i].x`` (zero at the optimum).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    max_iter = max_iter or 10 * n
    S = [int(np.argmin(np.einsum("ij,ij->i", X, X)))]
    lam = np.ones(1)
    x = X[S[0]].copy()
    gap = np.inf
    for _ in range(max_iter):
        dots = X @ x
        j = int(np.argmin(dots))
        xx = x @ x
        gap = xx - dots[j]
        if gap <= gap_tol * max(np.sqrt(xx), eps) or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_minimizer(X[S])
            if np.all(alpha > eps):
                lam = alpha
                break
            neg = alpha <= eps
            step = np.min(lam[neg] / (lam[neg] - alpha[neg]))
            lam = lam + step * (alpha - lam)
            keep = lam > eps
            if keep.all():
                # numerical stall: drop the smallest weight to make progress
                keep[np.argmin(lam)] = False
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ X[S]
    else:
        log.warning("min-norm point hit the iteration cap (%d); gap %.3e", max_iter, gap)
    return x, tuple(S), tuple(float(v) for v in lam), float(max(gap, 0.0))


def one_class_svm(S):
    """Solve ``max b  s.t.  S[i].w >= b, ||w|| <= 1`` for unit-norm rows.

    The optimum is ``w = x/||x||, b = ||x||`` with ``x`` the minimum-norm
    point of the convex hull of the rows.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] < 1:
        raise DimensionError("need at least one row")
    norms = np.linalg.norm(S, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
        raise DimensionError(f"rows must have unit norm; first offending row {bad[0]}")
    x, support, weights, gap = min_norm_point(S)
    b = float(np.linalg.norm(x))
    if b < 1e-10:
        raise DegenerateConeError(f"convex hull of the rows contains the origin (b={b:.3e})")
    return ConeSolution(w=x / b, b=b, support=support, weights=weights, gap=gap / b)


def ideal_cone_solution(S_C):
    """Closed-form one-class SVM solution when the corners ``S_C`` are known."""
    S_C = np.atleast_2d(np.asarray(S_C, dtype=float))
    G = S_C @ S_C.T
    try:
        v = np.linalg.solve(G, np.ones(G.shape[0]))
    except np.linalg.LinAlgError:
        raise ConeConditionError("corner rows are linearly dependent")
    if np.any(v <= 0):
        raise ConeConditionError(
            f"(S_C S_C^T)^-1 1 has non-positive components at {np.flatnonzero(v <= 0).tolist()}",
            negative=np.flatnonzero(v <= 0).tolist())
    total = v.sum()
    b = 1.0 / np.sqrt(total)
    w = S_C.T @ v / total / b
    return ConeSolution(w=w, b=float(b))


def _sq_dists(X, C):
    # direct differences: the expanded form loses ties to cancellation
    D = X[:, None, :] - C[None, :, :]
    return np.einsum("ijk,ijk->ij", D, D)


def _farthest_point_init(X, K, first):
    centers = [first]
    d = _sq_dists(X, X[[first]])[:, 0]
    for _ in range(1, K):
        nxt = int(np.argmax(d))
        centers.append(nxt)
        d = np.minimum(d, _sq_dists(X, X[[nxt]])[:, 0])
    return X[centers].copy()


def _lloyd(X, C, max_iter):
    labels = None
    for _ in range(max_iter):
        new = np.argmin(_sq_dists(X, C), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(C.shape[0]):
            members = labels == k
            if members.any():
                C[k] = X[members].mean(axis=0)
    cost = float(np.sum((X - C[labels]) ** 2))
    return labels, C, cost


def kmeans(points, K, seed=0, n_init=10, max_iter=100):
    """Lloyd's K-means with seeded farthest-point starts; best of ``n_init``.

    Restart ``r`` starts from a point drawn by a generator seeded with
    ``(seed, r)``; the winner is the lowest ``(cost, r)``.
    """
    X = np.asarray(points, dtype=float)
    m = X.shape[0]
    K = int(K)
    if m < K:
        raise InsufficientPointsError(f"{m} points cannot form {K} clusters")
    best = None
    for r in range(n_init):
        first = int(make_rng([int(seed), r]).integers(m))
        labels, C, cost = _lloyd(X, _farthest_point_init(X, K, first), max_iter)
        if best is None or cost < best[2]:
            best = (labels, C, cost)
    return best[0], best[1]


def _distinct_clusters(labels, centers, K):
    if np.unique(labels).size < K:
        return False
    d = np.sqrt(_sq_dists(centers, centers))
    return bool(np.all(d[np.triu_indices(K, 1)] >= CENTER_SEPARATION))


def gamma_schedule(b):
    return [b * (2.0 ** t - 1.0) / 100.0 for t in range(GAMMA_STEPS)]


def svm_cone(S_hat, K, seed=0, solution=None):
    """Pick ``K`` near-corner rows of a unit-row matrix.

    The hyperplane comes from :func:`one_class_svm`; rows within ``gamma``
    of it are clustered with K-means, for ``gamma`` growing geometrically
    from 0 until K well-separated clusters appear. Each cluster contributes
    the member nearest its center. Returns sorted row indices.
    """
    S_hat = np.asarray(S_hat, dtype=float)
    n = S_hat.shape[0]
    K = int(K)
    if n < K:
        raise InsufficientPointsError(f"{n} rows cannot supply {K} corners")
    sol = solution if solution is not None else one_class_svm(S_hat)
    margins = S_hat @ sol.w - sol.b
    for gamma in gamma_schedule(sol.b):
        cand = np.flatnonzero(margins <= gamma + HYPERPLANE_TOL)
        if cand.size < K:
            continue
        pts = S_hat[cand]
        labels, centers = kmeans(pts, K, seed=seed)
        if not _distinct_clusters(labels, centers, K):
            continue
        reps = []
        for k in range(K):
            members = np.flatnonzero(labels == k)
            d = np.sqrt(_sq_dists(pts[members], centers[[k]])[:, 0])
            reps.append(int(cand[members[np.flatnonzero(d <= d.min() + TIE_TOL)[0]]]))
        log.debug("svm_cone: gamma=%.3g, %d candidates", gamma, cand.size)
        return tuple(sorted(reps))
    counts, edges = np.histogram(margins, bins=10)
    hist = ", ".join(f"[{lo:.3g},{hi:.3g}):{c}" for lo, hi, c in zip(edges[:-1], edges[1:], counts))
    raise ConeHuntingError(
        f"no gamma up to {gamma_schedule(sol.b)[-1]:.3g} gave {K} distinct clusters; margins {hist}",
        margins=margins)
