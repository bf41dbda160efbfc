"""Error measures between estimated and true membership matrices."""

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionError

EXHAUSTIVE_MAX_K = 8
ROW_BLOCK = 1000


@dataclass
class ErrorReport:
    row_mhamm: float
    col_mhamm: float
    best_perm_r: tuple
    best_perm_c: tuple
    subspace_dev_u: float = float("nan")
    subspace_dev_v: float = float("nan")

    def as_text(self):
        return "\n".join([
            f"row_mhamm: {self.row_mhamm:.12g}",
            f"col_mhamm: {self.col_mhamm:.12g}",
            f"best_perm_r: {list(self.best_perm_r)}",
            f"best_perm_c: {list(self.best_perm_c)}",
            f"subspace_dev_u: {self.subspace_dev_u:.12g}",
            f"subspace_dev_v: {self.subspace_dev_v:.12g}",
        ])


def column_costs(Pi_hat, Pi):
    """``C[a, b] = || Pi_hat[:, a] - Pi[:, b] ||_1``."""
    Pi_hat = np.asarray(Pi_hat, dtype=float)
    Pi = np.asarray(Pi, dtype=float)
    if Pi_hat.shape != Pi.shape:
        raise DimensionError(f"shape mismatch: {Pi_hat.shape} vs {Pi.shape}")
    return np.abs(Pi_hat[:, :, None] - Pi[:, None, :]).sum(axis=0)


def _perm_cost(C, perm):
    total = 0.0
    for b, a in enumerate(perm):
        total += C[a, b]
    return total


def _exhaustive(C):
    K = C.shape[0]
    perms = np.array(list(permutations(range(K))), dtype=int)
    costs = np.zeros(len(perms))
    for b in range(K):
        costs += C[perms[:, b], b]
    i = int(np.argmin(costs))  # first minimum == lexicographically smallest
    return tuple(int(a) for a in perms[i]), float(costs[i])


def _assignment(C):
    rows, cols = linear_sum_assignment(C)
    perm = [0] * C.shape[0]
    for a, b in zip(rows, cols):
        perm[b] = int(a)
    return tuple(perm), _perm_cost(C, perm)


def mixed_hamming(Pi_hat, Pi, method="auto"):
    """Permutation-minimized entrywise l1 distance divided by the node count.

    Returns ``(value, perm)`` where ``Pi_hat[:, perm]`` is the best
    alignment with ``Pi``. ``method`` is ``"auto"``, ``"exhaustive"``
    (all K! permutations) or ``"assignment"`` (Hungarian algorithm on the
    per-column costs, used automatically above K=8).
    """
    C = column_costs(Pi_hat, Pi)
    n = Pi.shape[0]
    if method == "auto":
        method = "exhaustive" if C.shape[0] <= EXHAUSTIVE_MAX_K else "assignment"
    if method == "exhaustive":
        perm, total = _exhaustive(C)
    elif method == "assignment":
        perm, total = _assignment(C)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (total / n if n else 0.0), perm


def align_permutation(Pi_hat, Pi):
    return mixed_hamming(Pi_hat, Pi)[1]


def subspace_deviation(U_hat, U, block=ROW_BLOCK):
    """``max_i || (U_hat U_hat^T - U U^T)[i, :] ||_2`` computed in row blocks."""
    U_hat = np.asarray(U_hat, dtype=float)
    U = np.asarray(U, dtype=float)
    if U_hat.shape != U.shape:
        raise DimensionError(f"shape mismatch: {U_hat.shape} vs {U.shape}")
    worst = 0.0
    for start in range(0, U.shape[0], block):
        sl = slice(start, start + block)
        D = U_hat[sl] @ U_hat.T - U[sl] @ U.T
        worst = max(worst, float(np.linalg.norm(D, axis=1).max()))
    return worst


def error_report(estimate, Pi_r, Pi_c, U=None, V=None, U_ref=None, V_ref=None):
    r, pr = mixed_hamming(estimate.Pi_r_hat, Pi_r)
    c, pc = mixed_hamming(estimate.Pi_c_hat, Pi_c)
    rep = ErrorReport(row_mhamm=r, col_mhamm=c, best_perm_r=pr, best_perm_c=pc)
    if U is not None and U_ref is not None:
        rep.subspace_dev_u = subspace_deviation(U, U_ref)
    if V is not None and V_ref is not None:
        rep.subspace_dev_v = subspace_deviation(V, V_ref)
    return rep
