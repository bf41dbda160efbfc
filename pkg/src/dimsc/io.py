"""File formats: edge lists, membership CSVs, diagnostics, configs, result tables.

Every file is written to a temporary sibling first and renamed into place.
Floats are written with 12 significant digits.
"""

import csv
import io
import os
import tempfile

import numpy as np
import scipy.sparse as sp
import yaml

from .errors import ConfigError, DimensionError, ParseError
from .experiments import EXPERIMENTS, ExperimentConfig, make_study_params
from .model import ModelParams

FLOAT_FMT = "{:.12g}"
EXPERIMENT_COLUMNS = ["knob", "mean_row_mhamm", "se_row", "mean_col_mhamm", "se_col",
                      "reps_ok", "reps_failed", "mean_nrA", "mean_ncA"]


def fmt(x):
    return FLOAT_FMT.format(float(x))


def atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# edge lists

def write_edge_list(A, path):
    A = sp.coo_matrix(A)
    A.sum_duplicates()
    A.eliminate_zeros()
    order = np.lexsort((A.col, A.row))
    lines = [f"#dims {A.shape[0]} {A.shape[1]}"]
    lines += [f"{i}\t{j}" for i, j in zip(A.row[order], A.col[order])]
    atomic_write(path, "\n".join(lines) + "\n")


def read_edge_list(path):
    """Parse an edge list into a CSR 0/1 matrix of the declared dimensions."""
    dims = None
    rows, cols = [], []
    seen = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#dims"):
                if dims is not None:
                    raise ParseError(f"line {lineno}: repeated #dims header", line=lineno)
                parts = line.split()
                try:
                    if len(parts) != 3:
                        raise ValueError
                    dims = (int(parts[1]), int(parts[2]))
                except ValueError:
                    raise ParseError(f"line {lineno}: expected '#dims n_r n_c', got {line!r}", line=lineno)
                if dims[0] < 0 or dims[1] < 0:
                    raise ParseError(f"line {lineno}: negative dimensions", line=lineno)
                continue
            if line.startswith("#"):
                continue
            if dims is None:
                raise ParseError(f"line {lineno}: edge before '#dims' header", line=lineno)
            parts = line.split("\t")
            try:
                if len(parts) != 2:
                    raise ValueError
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"line {lineno}: expected 'i<TAB>j', got {line!r}", line=lineno)
            if not (0 <= i < dims[0] and 0 <= j < dims[1]):
                raise DimensionError(f"line {lineno}: edge ({i},{j}) outside dims {dims}")
            if (i, j) in seen:
                raise ParseError(
                    f"line {lineno}: duplicate edge ({i},{j}), first seen on line {seen[(i, j)]}", line=lineno)
            seen[(i, j)] = lineno
            rows.append(i)
            cols.append(j)
    if dims is None:
        raise ParseError("missing '#dims n_r n_c' header", line=0)
    data = np.ones(len(rows), dtype=np.int8)
    return sp.csr_matrix((data, (np.array(rows, dtype=int), np.array(cols, dtype=int))), shape=dims)


# membership tables

def membership_csv_text(Pi, K=None):
    Pi = np.asarray(Pi, dtype=float)
    K = Pi.shape[1] if Pi.ndim == 2 else K
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node"] + [f"k{k + 1}" for k in range(K)])
    for i, row in enumerate(Pi.reshape(-1, K)):
        w.writerow([i] + [fmt(x) for x in row])
    return buf.getvalue()


def write_membership_csv(Pi, path):
    atomic_write(path, membership_csv_text(Pi))


def read_membership_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", line=1)
        if not header or header[0] != "node" or header[1:] != [f"k{k + 1}" for k in range(len(header) - 1)]:
            raise ParseError(f"{path}: header must be 'node,k1,...,kK'", line=1)
        K = len(header) - 1
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                if len(rec) != K + 1 or int(rec[0]) != len(rows):
                    raise ValueError
                rows.append([float(x) for x in rec[1:]])
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: malformed membership row", line=lineno)
    return np.array(rows, dtype=float).reshape(len(rows), K)


def diagnostics_text(estimate):
    d = estimate.diagnostics
    th = np.asarray(estimate.theta_r_hat, dtype=float)
    lines = [
        f"K: {estimate.K}",
        f"I_r: {list(map(int, estimate.I_r_hat))}",
        f"I_c: {list(map(int, estimate.I_c_hat))}",
    ]
    if th.size:
        lines += [f"theta_r_hat_min: {fmt(th.min())}",
                  f"theta_r_hat_median: {fmt(np.median(th))}",
                  f"theta_r_hat_max: {fmt(th.max())}"]
    if "singular_values" in d:
        lines.append("singular_values: [" + ", ".join(fmt(x) for x in d["singular_values"]) + "]")
    for key in ("cond_r", "cond_c"):
        if key in d:
            lines.append(f"{key}: {fmt(d[key])}")
    for key in ("clipped_r", "clipped_c", "negative_J"):
        if key in d:
            lines.append(f"{key}: {int(d[key])}")
    for key in ("fallback_r", "fallback_c"):
        if key in d:
            lines.append(f"{key}: {list(map(int, d[key]))}")
    return "\n".join(lines) + "\n"


def write_memberships(estimate, directory):
    """Write pi_r.csv, pi_c.csv, theta_r.csv and diagnostics.txt into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    write_membership_csv(estimate.Pi_r_hat, os.path.join(directory, "pi_r.csv"))
    write_membership_csv(estimate.Pi_c_hat, os.path.join(directory, "pi_c.csv"))
    theta = "node,theta_r\n" + "".join(f"{i},{fmt(t)}\n" for i, t in enumerate(estimate.theta_r_hat))
    atomic_write(os.path.join(directory, "theta_r.csv"), theta)
    atomic_write(os.path.join(directory, "diagnostics.txt"), diagnostics_text(estimate))


# experiment tables

def experiment_csv_text(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EXPERIMENT_COLUMNS)
    for s in result.summaries:
        w.writerow([fmt(s.knob), fmt(s.mean_row_mhamm), fmt(s.se_row), fmt(s.mean_col_mhamm), fmt(s.se_col),
                    s.reps_ok, s.reps_failed, fmt(s.mean_nrA), fmt(s.mean_ncA)])
    return buf.getvalue()


def write_experiment_csv(result, path):
    atomic_write(path, experiment_csv_text(result))


def read_experiment_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EXPERIMENT_COLUMNS:
            raise ParseError(f"{path}: unexpected header {reader.fieldnames}", line=1)
        out = []
        for rec in reader:
            out.append({k: (int(v) if k.startswith("reps_") else float(v)) for k, v in rec.items()})
    return out


# configs

TOP_KEYS = {"seed", "model", "experiment", "output"}
MODEL_KEYS = {"K", "n_r", "n_c", "P", "Pi_r", "Pi_c", "theta_r"}
GENERATOR_KEYS = {"generator", "experiment", "knob", "theta_seed", "overrides"}
EXPERIMENT_KEYS = {"id", "knob_values", "repetitions", "base_seed", "overrides", "workers"}


def _reject_unknown(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(section).__name__}")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}; allowed {sorted(allowed)}")


def load_config(path):
    """Load a YAML run config and reject unknown keys at every level."""
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", -1) + 1
        raise ParseError(f"{path}: invalid YAML: {exc}", line=line)
    if cfg is None:
        cfg = {}
    _reject_unknown(cfg, TOP_KEYS, "config")
    if "model" in cfg:
        model = cfg["model"]
        allowed = GENERATOR_KEYS if isinstance(model, dict) and "generator" in model else MODEL_KEYS
        _reject_unknown(model, allowed, "model")
    if "experiment" in cfg:
        _reject_unknown(cfg["experiment"], EXPERIMENT_KEYS, "experiment")
    return cfg


def params_from_config(cfg):
    if "model" not in cfg:
        raise ConfigError("config has no 'model' section")
    model = cfg["model"]
    if "generator" in model:
        if model["generator"] != "simulation_study":
            raise ConfigError(f"unknown generator {model['generator']!r}; only 'simulation_study' is supported")
        for key in ("experiment", "knob"):
            if key not in model:
                raise ConfigError(f"model: generator needs '{key}'")
        return make_study_params(model["experiment"], model["knob"], seed=int(model.get("theta_seed", 0)),
                                 **(model.get("overrides") or {}))
    missing = {"P", "Pi_r", "Pi_c", "theta_r"} - set(model)
    if missing:
        raise ConfigError(f"model: missing keys {sorted(missing)}")
    try:
        return ModelParams.from_dict(model)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model: {exc}")


def params_to_config(params, seed=None):
    cfg = {"model": params.to_dict()}
    if seed is not None:
        cfg["seed"] = int(seed)
    return cfg


def write_params_config(params, path, seed=None):
    # repr-exact floats so the round trip is lossless
    atomic_write(path, yaml.safe_dump(params_to_config(params, seed), sort_keys=False))


def experiment_from_config(cfg):
    if "experiment" not in cfg:
        raise ConfigError("config has no 'experiment' section")
    e = cfg["experiment"]
    if "id" not in e:
        raise ConfigError("experiment: missing 'id'")
    if e["id"] not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown id {e['id']!r}; choose from {sorted(EXPERIMENTS)}")
    return ExperimentConfig(
        experiment_id=e["id"],
        knob_values=e.get("knob_values"),
        repetitions=int(e.get("repetitions", 10)),
        base_seed=int(e.get("base_seed", cfg.get("seed", 0))),
        overrides=dict(e.get("overrides") or {}),
        workers=int(e.get("workers", 1)),
    )
