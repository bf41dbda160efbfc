"""Simulation study: parameter grids, seeded repetitions, aggregation.

Each grid point builds one parameter set, then repeats: sample A, drop
isolated nodes, fit, score. Seeds are derived from ``base_seed`` with a
SplitMix64 mix so results do not depend on execution order.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DiMSCError
from .estimator import fit_dimsc
from .metrics import mixed_hamming
from .model import (
    ModelParams,
    make_rng,
    population_matrix,
    prune_isolated,
    sample_adjacency,
    scale_theta_for_pmax,
)

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
THETA_STREAM = 1 << 32

DEFAULT_P = np.array([[1.0, 0.1, 0.3],
                      [0.2, 1.0, 0.4],
                      [0.5, 0.2, 1.0]])
MIXED_MEMBERSHIPS = np.array([[0.4, 0.4, 0.2],
                              [0.4, 0.2, 0.4],
                              [0.2, 0.4, 0.4],
                              [1 / 3, 1 / 3, 1 / 3]])
DEFAULTS = {"n_r": 500, "n_c": 600, "n0": 80, "z": 5.0, "rho": 1.0}

# experiment id -> (knob name, default grid)
EXPERIMENTS = {
    "pure_fraction": ("n0", [20, 40, 60, 80, 100, 120, 140, 160]),
    "degree_heterogeneity": ("z", [1, 2, 3, 4, 5, 6, 7, 8]),
    "connectivity": ("beta", [round(1 + 0.3 * i, 10) for i in range(11)]),
    "sparsity": ("rho", [round(0.2 + 0.1 * i, 10) for i in range(9)]),
}


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def repetition_seed(base_seed, knob_index, rep):
    """``base_seed XOR splitmix64(splitmix64(knob_index) XOR rep)``."""
    return (int(base_seed) & MASK64) ^ splitmix64(splitmix64(int(knob_index) & MASK64) ^ (int(rep) & MASK64))


def theta_seed(base_seed):
    # shared across grid points, so every knob value sees the same uniforms
    return repetition_seed(base_seed, THETA_STREAM, 0)


def sample_theta(z, rho, n_r, seed):
    """Degree parameters ``rho / u`` with ``u ~ U(1, z)`` i.i.d."""
    if z < 1:
        raise ConfigError(f"z must be >= 1, got {z}")
    if rho <= 0:
        raise ConfigError(f"rho must be positive, got {rho}")
    u = 1.0 + (z - 1.0) * make_rng(seed).random(n_r)
    return rho / u


def mixed_layout(n, n0, K=3, strict=True):
    """Membership matrix with ``n0`` pure nodes per community first, then
    four equal blocks of the mixed memberships in a fixed order."""
    n_mixed = n - K * n0
    if n_mixed < 0:
        raise ConfigError(f"{K}*n0={K * n0} exceeds n={n}")
    if strict and n_mixed % 4:
        raise ConfigError(f"(n - 3*n0) = {n_mixed} is not divisible by 4")
    sizes = [n_mixed // 4 + (1 if b < n_mixed % 4 else 0) for b in range(4)]
    blocks = [np.repeat(np.eye(K), n0, axis=0)]
    blocks += [np.tile(MIXED_MEMBERSHIPS[b], (sizes[b], 1)) for b in range(4)]
    return np.vstack(blocks)


def connectivity_P(beta, K=3):
    return (2.0 - beta) * np.eye(K) + (beta - 1.0) * np.ones((K, K))


def make_study_params(experiment_id, knob_value, seed=0, strict=True, **overrides):
    """Parameters of one grid point of the simulation study.

    ``overrides`` may replace ``n_r``, ``n_c``, ``n0``, ``z`` or ``rho``;
    the knob itself always wins. ``seed`` drives the degree parameters.
    With ``strict=False`` the mixed blocks may differ in size by one.
    """
    if experiment_id not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment_id!r}; choose from {sorted(EXPERIMENTS)}")
    unknown = set(overrides) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown override keys {sorted(unknown)}")
    knob = EXPERIMENTS[experiment_id][0]
    cfg = {**DEFAULTS, **overrides}
    P = DEFAULT_P
    if knob == "beta":
        P = connectivity_P(float(knob_value))
    else:
        cfg[knob] = knob_value
    n0 = cfg["n0"]
    if float(n0) != int(n0):
        raise ConfigError(f"n0 must be an integer, got {n0}")
    n0 = int(n0)
    Pi_r = mixed_layout(int(cfg["n_r"]), n0, strict=strict)
    Pi_c = mixed_layout(int(cfg["n_c"]), n0, strict=strict)
    theta = sample_theta(float(cfg["z"]), float(cfg["rho"]), Pi_r.shape[0], seed)
    params = ModelParams(P=P, Pi_r=Pi_r, Pi_c=Pi_c, theta_r=theta)
    if knob == "beta":
        params = scale_theta_for_pmax(params)
    return params


def demo_params(seed=0):
    """600 row / 400 column nodes, 120 pure per community, random mixing."""
    rng = make_rng(seed)
    P = np.array([[1.0, 0.4, 0.3], [0.2, 1.0, 0.1], [0.1, 0.4, 1.0]])

    def layout(n):
        n_mixed = n - 360
        a = rng.random(n_mixed) / 2
        b = rng.random(n_mixed) / 2
        mixed = np.column_stack([a, b, 1.0 - a - b])
        return np.vstack([np.repeat(np.eye(3), 120, axis=0), mixed])

    Pi_r = layout(600)
    Pi_c = layout(400)
    theta = rng.random(600)
    return ModelParams(P=P, Pi_r=Pi_r, Pi_c=Pi_c, theta_r=theta)


@dataclass
class ExperimentConfig:
    experiment_id: str
    knob_values: list = None
    repetitions: int = 10
    base_seed: int = 0
    overrides: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment_id!r}; choose from {sorted(EXPERIMENTS)}")
        knob, grid = EXPERIMENTS[self.experiment_id]
        if self.knob_values is None:
            self.knob_values = list(grid)
        if not self.knob_values:
            raise ConfigError("knob_values must be non-empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        for v in self.knob_values:
            if knob == "n0" and (v < 0 or float(v) != int(v)):
                raise ConfigError(f"n0 must be a non-negative integer, got {v}")
            if knob == "z" and v < 1:
                raise ConfigError(f"z must be >= 1, got {v}")
            if knob == "rho" and not 0 < v <= 1:
                raise ConfigError(f"rho must lie in (0, 1], got {v}")
            if knob == "beta":
                if v < 1:
                    raise ConfigError(f"beta must be >= 1, got {v}")
                if abs(v - 2) < 0.05:
                    log.warning("beta=%g is within 0.05 of 2: P is nearly singular", v)

    @property
    def knob_name(self):
        return EXPERIMENTS[self.experiment_id][0]


@dataclass
class RepetitionRecord:
    knob_index: int
    knob: float
    rep: int
    seed: int
    row_mhamm: float = float("nan")
    col_mhamm: float = float("nan")
    n_r_kept: int = 0
    n_c_kept: int = 0
    error: str = None


@dataclass
class KnobSummary:
    knob: float
    mean_row_mhamm: float
    se_row: float
    mean_col_mhamm: float
    se_col: float
    reps_ok: int
    reps_failed: int
    mean_nrA: float
    mean_ncA: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summaries: list
    records: list


def simulate_once(params, Omega, seed, K=None, knob_index=0, knob=0.0, rep=0):
    """Sample, prune isolated nodes, fit and score one repetition."""
    rec = RepetitionRecord(knob_index=knob_index, knob=knob, rep=rep, seed=seed)
    K = K or params.K
    try:
        A = sample_adjacency(Omega, seed)
        net = prune_isolated(A, params.Pi_r, params.Pi_c)
        rec.n_r_kept, rec.n_c_kept = net.A.shape
        est = fit_dimsc(net.A, K, seed=seed)
        rec.row_mhamm = mixed_hamming(est.Pi_r_hat, net.Pi_r)[0]
        rec.col_mhamm = mixed_hamming(est.Pi_c_hat, net.Pi_c)[0]
    except DiMSCError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        log.info("knob %s rep %d failed: %s", knob, rep, rec.error)
    return rec


def _task(args):
    params, Omega, seed, ki, knob, rep = args
    return simulate_once(params, Omega, seed, knob_index=ki, knob=knob, rep=rep)


def summarize(knob, records):
    ok = [r for r in records if r.error is None]
    n = len(ok)

    def mean_se(vals):
        if not vals:
            return float("nan"), float("nan")
        vals = np.asarray(vals, dtype=float)
        se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        return float(vals.mean()), se

    mr, sr = mean_se([r.row_mhamm for r in ok])
    mc, sc = mean_se([r.col_mhamm for r in ok])
    return KnobSummary(
        knob=knob, mean_row_mhamm=mr, se_row=sr, mean_col_mhamm=mc, se_col=sc,
        reps_ok=n, reps_failed=len(records) - n,
        mean_nrA=float(np.mean([r.n_r_kept for r in ok])) if ok else float("nan"),
        mean_ncA=float(np.mean([r.n_c_kept for r in ok])) if ok else float("nan"),
    )


def run_experiment(config):
    """Run every grid point of ``config`` and aggregate per knob value."""
    tasks = []
    for ki, knob in enumerate(config.knob_values):
        params = make_study_params(config.experiment_id, knob, seed=theta_seed(config.base_seed),
                                   **config.overrides)
        Omega = population_matrix(params)
        for rep in range(config.repetitions):
            tasks.append((params, Omega, repetition_seed(config.base_seed, ki, rep), ki, knob, rep))
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_task, tasks))
    else:
        records = [_task(t) for t in tasks]
    records.sort(key=lambda r: (r.knob_index, r.rep))
    summaries = [summarize(knob, [r for r in records if r.knob_index == ki])
                 for ki, knob in enumerate(config.knob_values)]
    return ExperimentResult(config=config, summaries=summaries, records=records)
