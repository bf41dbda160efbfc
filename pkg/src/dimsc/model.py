"""The directed degree-corrected mixed membership model.

Edge probabilities are ``Omega = diag(theta_r) Pi_r P Pi_c^T``; only row
nodes carry a degree parameter.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateNetworkError, DimensionError, DomainError, ProbabilityOverflowError

log = logging.getLogger(__name__)

PMF_TOL = 1e-12
PURE_TOL = 1e-12
RANK_TOL = 1e-10
PROB_TOL = 1e-12


def make_rng(seed):
    """The one generator used for every random draw: numpy's PCG64."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ModelParams:
    P: np.ndarray
    Pi_r: np.ndarray
    Pi_c: np.ndarray
    theta_r: np.ndarray

    def __post_init__(self):
        for name in ("P", "Pi_r", "Pi_c", "theta_r"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def n_r(self):
        return self.Pi_r.shape[0]

    @property
    def n_c(self):
        return self.Pi_c.shape[0]

    @property
    def K(self):
        return self.P.shape[0]

    def to_dict(self):
        return {
            "K": int(self.K),
            "n_r": int(self.n_r),
            "n_c": int(self.n_c),
            "P": self.P.tolist(),
            "Pi_r": self.Pi_r.tolist(),
            "Pi_c": self.Pi_c.tolist(),
            "theta_r": self.theta_r.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        params = cls(P=d["P"], Pi_r=d["Pi_r"], Pi_c=d["Pi_c"], theta_r=d["theta_r"])
        for key, actual in (("K", params.K), ("n_r", params.n_r), ("n_c", params.n_c)):
            if key in d and int(d[key]) != actual:
                raise DimensionError(f"declared {key}={d[key]} but arrays give {actual}")
        return params


@dataclass(frozen=True)
class PureNodeIndex:
    I_r: tuple
    I_c: tuple


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    pure: PureNodeIndex = None

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        if self.ok:
            return f"pass\nI_r={list(self.pure.I_r)}\nI_c={list(self.pure.I_c)}"
        return "fail\n" + "\n".join(self.violations)


def _short(idx, limit=10):
    idx = list(map(int, idx))
    if len(idx) > limit:
        return f"{idx[:limit]}... ({len(idx)} total)"
    return str(idx)


def _pure_index(Pi):
    out = []
    for k in range(Pi.shape[1]):
        hits = np.flatnonzero(Pi[:, k] >= 1.0 - PURE_TOL)
        out.append(int(hits[0]) if hits.size else None)
    return out


def validate(params):
    """Check every model invariant; never raises on bad parameters."""
    rep = ValidationReport()
    P, Pi_r, Pi_c, theta = params.P, params.Pi_r, params.Pi_c, params.theta_r
    K = P.shape[0] if P.ndim == 2 else 0
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        rep.violations.append(f"P must be square, got shape {P.shape}")
        return rep
    shapes_ok = True
    for name, Pi in (("Pi_r", Pi_r), ("Pi_c", Pi_c)):
        if Pi.ndim != 2 or Pi.shape[1] != K:
            rep.violations.append(f"{name} must have {K} columns, got shape {Pi.shape}")
            shapes_ok = False
    if theta.ndim != 1 or theta.shape[0] != Pi_r.shape[0]:
        rep.violations.append(f"theta_r must have length {Pi_r.shape[0]}, got shape {theta.shape}")
        shapes_ok = False
    if not shapes_ok:
        return rep
    if not all(np.all(np.isfinite(a)) for a in (P, Pi_r, Pi_c, theta)):
        rep.violations.append("non-finite entries")
        return rep

    for name, Pi in (("Pi_r", Pi_r), ("Pi_c", Pi_c)):
        bad = np.flatnonzero((Pi < 0).any(axis=1) | (np.abs(Pi.sum(axis=1) - 1.0) > PMF_TOL))
        if bad.size:
            rep.violations.append(f"{name} rows are not PMFs at {_short(bad)}")

    if (P < 0).any():
        rep.violations.append(f"P has negative entries at {_short(np.flatnonzero((P < 0).ravel()))}")
    off = np.flatnonzero(np.abs(np.diag(P) - 1.0) > PMF_TOL)
    for k in off:
        rep.violations.append(f"(I1) unit diagonal violated at k={k}")
    sK = np.linalg.svd(P, compute_uv=False)[-1]
    if sK <= RANK_TOL:
        rep.violations.append(f"(I1) rank(P) < K: sigma_K(P) = {sK:.3e}")

    I_r, I_c = _pure_index(Pi_r), _pure_index(Pi_c)
    for side, idx in (("row", I_r), ("column", I_c)):
        missing = [k for k, i in enumerate(idx) if i is None]
        if missing:
            rep.violations.append(f"(I2) no pure {side} node for communities {missing}")

    bad = np.flatnonzero(theta <= 0)
    if bad.size:
        rep.violations.append(f"theta_r not positive at {_short(bad)}")
    else:
        Omega = theta[:, None] * (Pi_r @ P @ Pi_c.T)
        if Omega.size and Omega.max() > 1.0 + PROB_TOL:
            i, j = np.unravel_index(np.argmax(Omega), Omega.shape)
            rep.violations.append(
                f"max edge probability {Omega[i, j]:.6g} > 1 at (i,j)=({i},{j})")

    if not rep.violations:
        rep.pure = PureNodeIndex(I_r=tuple(I_r), I_c=tuple(I_c))
    return rep


def population_matrix(params):
    """Expected adjacency ``Omega``; raises if an entry exceeds 1."""
    Omega = params.theta_r[:, None] * (params.Pi_r @ params.P @ params.Pi_c.T)
    if Omega.size and Omega.max() > 1.0 + PROB_TOL:
        i, j = np.unravel_index(np.argmax(Omega), Omega.shape)
        raise ProbabilityOverflowError(
            f"Omega({i},{j}) = {Omega[i, j]:.6g} exceeds 1; rescale theta_r", position=(int(i), int(j)))
    return np.minimum(Omega, 1.0)


def sample_adjacency(Omega, seed):
    """Independent Bernoulli(Omega[i, j]) draws as a sparse 0/1 CSR matrix."""
    Omega = np.asarray(Omega, dtype=float)
    if Omega.size and (not np.all(np.isfinite(Omega)) or Omega.min() < 0 or Omega.max() > 1):
        raise DomainError("edge probabilities must lie in [0, 1]")
    draws = make_rng(seed).random(Omega.shape)
    return sp.csr_matrix((draws < Omega).astype(np.int8))


@dataclass
class PrunedNetwork:
    A: sp.csr_matrix
    Pi_r: np.ndarray
    Pi_c: np.ndarray
    rows_kept: np.ndarray   # new index -> old index
    cols_kept: np.ndarray
    row_map: np.ndarray     # old index -> new index, -1 if removed
    col_map: np.ndarray


def prune_isolated(A, Pi_r=None, Pi_c=None):
    """Drop rows and columns without edges, filtering memberships alike."""
    A = sp.csr_matrix(A)
    rows = np.flatnonzero(np.asarray(A.sum(axis=1)).ravel() > 0)
    cols = np.flatnonzero(np.asarray(A.sum(axis=0)).ravel() > 0)
    if rows.size == 0 or cols.size == 0:
        raise DegenerateNetworkError("network has no edges left after pruning")
    row_map = np.full(A.shape[0], -1, dtype=int)
    row_map[rows] = np.arange(rows.size)
    col_map = np.full(A.shape[1], -1, dtype=int)
    col_map[cols] = np.arange(cols.size)
    return PrunedNetwork(
        A=A[rows][:, cols],
        Pi_r=None if Pi_r is None else np.asarray(Pi_r)[rows],
        Pi_c=None if Pi_c is None else np.asarray(Pi_c)[cols],
        rows_kept=rows,
        cols_kept=cols,
        row_map=row_map,
        col_map=col_map,
    )


def scale_theta_for_pmax(params):
    """Divide theta_r by max(P) so that max(Omega) <= theta_max."""
    pmax = float(params.P.max())
    if pmax <= 0:
        raise DomainError("P_max must be positive")
    if pmax == 1.0:
        return params
    out = replace(params, theta_r=params.theta_r / pmax)
    Omega_max = float(np.max(out.theta_r[:, None] * (out.Pi_r @ out.P @ out.Pi_c.T)))
    if Omega_max > 1.0 + PROB_TOL:
        log.warning("max edge probability still %.6g after rescaling", Omega_max)
    return out


def random_valid_params(seed, K=None, n_r=None, n_c=None, pure_per_community=None):
    """Draw a random instance satisfying (I1), (I2) and max(Omega) <= 1.

    Used as a generator of test configurations. Mixed memberships are
    Dirichlet(1, ..., 1); off-diagonal P entries are uniform on [0, 1).
    """
    rng = make_rng(seed)
    K = int(K if K is not None else rng.integers(2, 6))
    n_r = int(n_r if n_r is not None else rng.integers(40, 200))
    n_c = int(n_c if n_c is not None else rng.integers(40, 200))
    while True:
        P = rng.random((K, K))
        np.fill_diagonal(P, 1.0)
        if np.linalg.svd(P, compute_uv=False)[-1] > 0.05:
            break

    def memberships(n):
        n_pure = pure_per_community or max(1, int(rng.integers(1, max(2, n // (3 * K)))))
        Pi = rng.dirichlet(np.ones(K), size=n)
        order = rng.permutation(n)[: n_pure * K]
        Pi[order] = np.repeat(np.eye(K), n_pure, axis=0)
        return Pi

    Pi_r = memberships(n_r)
    Pi_c = memberships(n_c)
    theta = rng.uniform(0.1, 1.0, size=n_r)
    params = scale_theta_for_pmax(ModelParams(P=P, Pi_r=Pi_r, Pi_c=Pi_c, theta_r=theta))
    return params


def row_norm_bounds(params):
    """Bounds on the row norms of the singular vectors of ``Omega``.

    Returns ``(u_lo, u_hi, v_lo, v_hi)`` with
    ``u_lo <= ||U(i,:)|| <= u_hi`` and ``v_lo <= ||V(j,:)|| <= v_hi`` for
    every row of the compact SVD of a valid ``Omega``.
    """
    K = params.K
    t_min, t_max = float(params.theta_r.min()), float(params.theta_r.max())
    ev_r = np.linalg.eigvalsh(params.Pi_r.T @ params.Pi_r)
    ev_c = np.linalg.eigvalsh(params.Pi_c.T @ params.Pi_c)
    u_lo = t_min / (t_max * np.sqrt(K * ev_r[-1]))
    u_hi = t_max / (t_min * np.sqrt(ev_r[0]))
    v_lo = 1.0 / np.sqrt(K * ev_c[-1])
    v_hi = 1.0 / np.sqrt(ev_c[0])
    return float(u_lo), float(u_hi), float(v_lo), float(v_hi)
