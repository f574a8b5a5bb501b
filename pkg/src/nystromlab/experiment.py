"""Monte-Carlo experiment harness: config, trials, summaries, emission.

An experiment fixes one PSD matrix (loaded from a file or planted by the
generators), then repeatedly samples columns, builds the extension, and
records the measured error next to the deterministic and probabilistic
bounds.  Each trial is keyed by ``(master_seed, trial_index)``, so any
record can be reproduced in isolation and the emitted artifact is byte
identical across runs and thread counts.

Determinism note: per-trial wall time is measured and kept on the record,
but the emitted ``wall_ms`` column defaults to the ``NA`` token because a
measured duration would break byte-identical reruns; pass
``timings=True`` (CLI ``--timings``) to opt into volatile output.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    chernoff_tail,
    coherence,
    deterministic_bound,
    full_rank_tolerance,
    min_eig_gram,
    probabilistic_bound,
    required_samples,
)
from .generators import (
    CoherencePlan,
    SpectrumSpec,
    flat_orthonormal,
    parse_plan,
    parse_spectrum,
    planted_instance,
    random_orthonormal,
    _planted_basis,
)
from .matcore import (
    SpectralPartition,
    SymMatrix,
    clamp_psd_eigenvalues,
    partition,
    sym_eig,
)
from .nystrom import nystrom_extend
from .sampling import RngSeed, sample_uniform

# Stream ids at or above this are reserved for instance generation; trial
# streams are the trial indices, far below.
INSTANCE_STREAM = 2**63

CSV_HEADER = (
    "trial,seed,l,k,epsilon,delta,spectral_error,det_bound,prob_bound,"
    "min_eig_gram,pinv_norm_sq,rank_w,omega1_full_rank,error_le_bound,wall_ms"
)

NA = "NA"


class MatrixFileError(ValueError):
    """A matrix file failed to parse or validate.

    ``kind`` is one of ``header``, ``count``, ``value``, ``asymmetry``;
    ``line`` is the 1-based offending line where applicable.
    """

    def __init__(self, message: str, line: int | None, kind: str):
        self.line = line
        self.kind = kind
        super().__init__(message)


class ConfigError(ValueError):
    """An experiment configuration failed validation; names the field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config error in {field!r}: {message}")


def load_matrix(path) -> SymMatrix:
    """Read the plain-text matrix format.

    Line 1 is the integer dimension n; lines 2..n+1 each carry n
    whitespace-separated reals (row-major).  Trailing blank lines are
    tolerated; everything else raises :class:`MatrixFileError` with the
    offending line number.
    """
    lines = Path(path).read_text().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MatrixFileError("empty file: expected a dimension header", 1, "header")
    head = lines[0].strip()
    try:
        n = int(head)
    except ValueError:
        raise MatrixFileError(
            f"line 1: expected an integer dimension, got {head!r}", 1, "header"
        ) from None
    if n < 1:
        raise MatrixFileError(f"line 1: dimension must be >= 1, got {n}", 1, "header")
    if len(lines) - 1 != n:
        raise MatrixFileError(
            f"expected {n} data lines after the header, found {len(lines) - 1}",
            len(lines),
            "count",
        )
    rows = np.empty((n, n))
    for i in range(n):
        lineno = i + 2
        toks = lines[i + 1].split()
        if len(toks) != n:
            raise MatrixFileError(
                f"line {lineno}: expected {n} values, found {len(toks)}",
                lineno,
                "count",
            )
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            raise MatrixFileError(
                f"line {lineno}: unparseable numeric value", lineno, "value"
            ) from None
        if not all(math.isfinite(v) for v in vals):
            raise MatrixFileError(
                f"line {lineno}: non-finite value", lineno, "value"
            )
        rows[i] = vals
    try:
        return SymMatrix(rows)
    except ValueError as exc:
        raise MatrixFileError(str(exc), None, "asymmetry") from exc


def save_matrix(a: SymMatrix, path) -> None:
    """Write a matrix in the same plain-text format, round-trip exact.

    Entries are rendered with shortest round-trip decimal formatting, so a
    write-then-read cycle reproduces every entry bit for bit.
    """
    out = [str(a.n)]
    for row in a.entries:
        out.append(" ".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(out) + "\n")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a `trials` run needs; validated before any work starts."""

    k: int
    trials: int
    master_seed: int
    n: int | None = None
    epsilon: float = 0.5
    delta: float = 0.05
    l: int | None = None  # None means auto: min(required_samples, n)
    matrix_path: str | None = None
    gen: SpectrumSpec | None = None
    coherence: CoherencePlan | None = None
    lambda1: float = 1.0
    out: str | None = None
    fmt: str = "csv"
    jobs: int = 1
    timings: bool = False

    def validate(self) -> None:
        if (self.matrix_path is None) == (self.gen is None):
            raise ConfigError(
                "matrix", "exactly one matrix source is required: a file path or a generator spec"
            )
        if self.gen is not None:
            if self.coherence is None:
                raise ConfigError("coherence", "a generator spec needs a coherence plan")
            if self.n is None:
                raise ConfigError("n", "a generator spec needs an explicit dimension")
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError("k", f"must be a positive integer, got {self.k!r}")
        if self.n is not None:
            if not isinstance(self.n, int) or self.n < 2:
                raise ConfigError("n", f"must be an integer >= 2, got {self.n!r}")
            if self.k > self.n - 1:
                raise ConfigError("k", f"must be <= n-1 = {self.n - 1}, got {self.k}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials", f"must be a positive integer, got {self.trials!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon", f"must lie in (0, 1), got {self.epsilon!r}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta", f"must lie in (0, 1), got {self.delta!r}")
        if self.l is not None and (not isinstance(self.l, int) or self.l < 1):
            raise ConfigError("l", f"must be a positive integer or auto, got {self.l!r}")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ConfigError("seed", f"must be an integer in [0, 2^64), got {self.master_seed!r}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format", f"must be 'csv' or 'json', got {self.fmt!r}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("jobs", f"must be a positive integer, got {self.jobs!r}")


_CONFIG_KEYS = {
    "n", "k", "l", "epsilon", "delta", "trials", "seed", "matrix", "gen",
    "coherence", "lambda1", "out", "format", "jobs", "timings",
}


def config_from_mapping(d: dict) -> ExperimentConfig:
    """Build a config from a plain mapping (the JSON config-file schema)."""
    unknown = set(d) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown config key")
    for key in ("k", "trials", "seed"):
        if key not in d:
            raise ConfigError(key, "required key is missing")
    n = d.get("n")
    k = d["k"]
    l = d.get("l")
    if l == "auto":
        l = None
    gen = None
    plan = None
    if "gen" in d:
        if n is None:
            raise ConfigError("n", "a generator spec needs an explicit dimension")
        try:
            gen = parse_spectrum(str(d["gen"]), int(n), int(k), float(d.get("lambda1", 1.0)))
        except ValueError as exc:
            raise ConfigError("gen", str(exc)) from exc
    if "coherence" in d:
        try:
            plan = parse_plan(str(d["coherence"]))
        except ValueError as exc:
            raise ConfigError("coherence", str(exc)) from exc
    cfg = ExperimentConfig(
        k=int(k),
        trials=int(d["trials"]),
        master_seed=int(d["seed"]),
        n=int(n) if n is not None else None,
        epsilon=float(d.get("epsilon", 0.5)),
        delta=float(d.get("delta", 0.05)),
        l=int(l) if l is not None else None,
        matrix_path=d.get("matrix"),
        gen=gen,
        coherence=plan,
        lambda1=float(d.get("lambda1", 1.0)),
        out=d.get("out"),
        fmt=str(d.get("format", "csv")),
        jobs=int(d.get("jobs", 1)),
        timings=bool(d.get("timings", False)),
    )
    cfg.validate()
    return cfg


def config_from_file(path) -> ExperimentConfig:
    """Load a JSON config file; parse errors carry the line number."""
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<config file>", f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(d, dict):
        raise ConfigError("<config file>", "top-level value must be an object")
    return config_from_mapping(d)


@dataclass(frozen=True)
class TrialRecord:
    """One sampled trial: measurements, bounds, and success flags."""

    trial: int
    seed: int
    indices_digest: str
    spectral_error: float
    det_bound: float | None
    prob_bound: float
    min_eig_gram: float
    pinv_norm_sq: float | None
    rank_w: int
    omega1_full_rank: bool
    error_le_bound: bool
    wall_ms: float


@dataclass(frozen=True)
class ExperimentSetup:
    """Resolved per-run quantities shared by every trial."""

    a: SymMatrix
    part: SpectralPartition
    n: int
    k: int
    l: int
    l_required: int
    tau: float
    lambda1: float
    lambda_k1: float
    prob_bound: float
    tail: float


def prepare(config: ExperimentConfig) -> ExperimentSetup:
    """Load or plant the matrix and resolve tau, l, and the bounds."""
    config.validate()
    if config.matrix_path is not None:
        a = load_matrix(config.matrix_path)
        n = a.n
        if config.n is not None and config.n != n:
            raise ConfigError("n", f"config says n={config.n} but the file has n={n}")
        if config.k > n - 1:
            raise ConfigError("k", f"must be <= n-1 = {n - 1}, got {config.k}")
        ed = sym_eig(a)
        clamp_psd_eigenvalues(ed.eigenvalues)  # raises NotPSDError if violated
        part = partition(ed, config.k)
        tau = coherence(part.u1)
        lam = ed.eigenvalues
    else:
        seed = RngSeed(config.master_seed, INSTANCE_STREAM)
        a, part, tau = planted_instance(config.gen, config.coherence, seed)
        n = a.n
        lam = np.concatenate([part.sigma1, part.sigma2])
    lambda1 = float(lam[0])
    lambda_k1 = float(max(lam[config.k], 0.0))
    l_required = required_samples(config.k, tau, config.delta, config.epsilon)
    l = config.l if config.l is not None else min(l_required, n)
    if not 1 <= l <= n:
        raise ConfigError("l", f"must lie in [1, n={n}], got {l}")
    return ExperimentSetup(
        a=a,
        part=part,
        n=n,
        k=config.k,
        l=l,
        l_required=l_required,
        tau=tau,
        lambda1=lambda1,
        lambda_k1=lambda_k1,
        prob_bound=probabilistic_bound(lambda_k1, n, l, config.epsilon),
        tail=chernoff_tail(config.k, tau, l, config.epsilon),
    )


def run_trial(setup: ExperimentSetup, master_seed: int, t: int) -> TrialRecord:
    """Run one trial; fully determined by (master_seed, t)."""
    t0 = time.perf_counter()
    s = sample_uniform(setup.n, setup.l, RngSeed(master_seed, t))
    res = nystrom_extend(setup.a, s)
    gram_min = min_eig_gram(setup.part.u1, s)
    full_rank = gram_min > full_rank_tolerance(setup.n)
    if full_rank:
        det = deterministic_bound(setup.part, s)
        pnsq = 1.0 / gram_min
    else:
        det = None
        pnsq = None
    digest = hashlib.sha256(",".join(map(str, s.indices)).encode()).hexdigest()[:16]
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return TrialRecord(
        trial=t,
        seed=t,
        indices_digest=digest,
        spectral_error=res.spectral_error,
        det_bound=det,
        prob_bound=setup.prob_bound,
        min_eig_gram=gram_min,
        pinv_norm_sq=pnsq,
        rank_w=res.rank_w,
        omega1_full_rank=full_rank,
        error_le_bound=res.spectral_error <= setup.prob_bound,
        wall_ms=wall_ms,
    )


def run_experiment(config: ExperimentConfig) -> tuple[list[TrialRecord], dict]:
    """Run all trials and summarize.

    Trials are independent; with ``jobs > 1`` they run on a thread pool,
    and because each is keyed by its own (master_seed, index) stream the
    records - and hence the emitted artifact - do not depend on the
    schedule.
    """
    setup = prepare(config)
    indices = range(config.trials)
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(lambda t: run_trial(setup, config.master_seed, t), indices))
    else:
        records = [run_trial(setup, config.master_seed, t) for t in indices]
    errors = np.array([r.spectral_error for r in records])
    failures = sum(1 for r in records if not r.error_le_bound)
    deficient = sum(1 for r in records if not r.omega1_full_rank)
    q = np.quantile(errors, [0.0, 0.25, 0.5, 0.75, 1.0])
    summary = {
        "n": setup.n,
        "k": setup.k,
        "l": setup.l,
        "l_required": setup.l_required,
        "epsilon": config.epsilon,
        "delta": config.delta,
        "trials": config.trials,
        "master_seed": config.master_seed,
        "tau": setup.tau,
        "lambda1": setup.lambda1,
        "lambda_k1": setup.lambda_k1,
        "prob_bound": setup.prob_bound,
        "chernoff_tail": setup.tail,
        "failures": failures,
        "failure_rate": failures / config.trials,
        "rank_deficient": deficient,
        "rank_deficiency_rate": deficient / config.trials,
        "error_min": float(q[0]),
        "error_q25": float(q[1]),
        "error_median": float(q[2]),
        "error_q75": float(q[3]),
        "error_max": float(q[4]),
    }
    return records, summary


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_or_na(x: float | None) -> str:
    return NA if x is None else _fmt(x)


def emit_results(
    records: list[TrialRecord],
    summary: dict,
    fmt: str = "csv",
    path=None,
    timings: bool = False,
) -> str:
    """Serialize records to CSV (fixed header) or JSON (same field names).

    Numbers use shortest round-trip decimal formatting; inapplicable
    values (det_bound / pinv_norm_sq on rank-deficient trials, wall_ms
    unless ``timings``) are the ``NA`` token in CSV and null in JSON.
    Returns the serialized text; also writes it when ``path`` is given.
    """
    if fmt == "csv":
        lines = [CSV_HEADER]
        for r in records:
            lines.append(",".join([
                str(r.trial),
                str(r.seed),
                str(summary["l"]),
                str(summary["k"]),
                _fmt(summary["epsilon"]),
                _fmt(summary["delta"]),
                _fmt(r.spectral_error),
                _fmt_or_na(r.det_bound),
                _fmt(r.prob_bound),
                _fmt(r.min_eig_gram),
                _fmt_or_na(r.pinv_norm_sq),
                str(r.rank_w),
                "true" if r.omega1_full_rank else "false",
                "true" if r.error_le_bound else "false",
                _fmt(r.wall_ms) if timings else NA,
            ]))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        doc = {
            "summary": summary,
            "records": [
                {
                    "trial": r.trial,
                    "seed": r.seed,
                    "l": summary["l"],
                    "k": summary["k"],
                    "epsilon": summary["epsilon"],
                    "delta": summary["delta"],
                    "spectral_error": r.spectral_error,
                    "det_bound": r.det_bound,
                    "prob_bound": r.prob_bound,
                    "min_eig_gram": r.min_eig_gram,
                    "pinv_norm_sq": r.pinv_norm_sq,
                    "rank_w": r.rank_w,
                    "omega1_full_rank": r.omega1_full_rank,
                    "error_le_bound": r.error_le_bound,
                    "wall_ms": r.wall_ms if timings else None,
                }
                for r in records
            ],
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        raise ConfigError("format", f"must be 'csv' or 'json', got {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# Chernoff tail sweep
# ---------------------------------------------------------------------------

# Auto-chosen l targets this tail value (geometric midpoint of the
# informative window [0.01, 0.5]).
_TAIL_TARGET = math.sqrt(0.01 * 0.5)


def _plan_label(plan: CoherencePlan) -> str:
    if plan.target == "spiked":
        return f"spiked:{plan.m}"
    return plan.target


def _auto_l(n: int, k: int, tau: float, epsilon: float) -> int:
    """Pick l so the theoretical tail sits inside [0.01, 0.5] if it can.

    For highly coherent bases the tail exceeds 0.5 at every l <= n; there
    l falls back to ceil(0.6 n), which keeps the sampled fraction high
    without saturating at full sampling.
    """
    denom = (1.0 - epsilon) ** 2
    l_reach_half = 2.0 * k * tau * math.log(k / 0.5) / denom
    if l_reach_half <= n:
        l_target = 2.0 * k * tau * math.log(k / _TAIL_TARGET) / denom
        return max(1, min(math.ceil(l_target), n))
    return max(1, math.ceil(0.6 * n))


def chernoff_sweep(
    n: int,
    ks: list[int],
    plans: list[CoherencePlan],
    epsilons: list[float],
    trials: int,
    master_seed: int,
    ls: list[int] | None = None,
    jobs: int = 1,
) -> list[dict]:
    """Empirically validate the Gram-eigenvalue tail bound over a grid.

    For each (k, plan, epsilon) grid point, builds the planted dominant
    basis, samples ``trials`` times, counts how often
    ``min_eig_gram <= epsilon * l / n``, and compares the frequency
    against ``chernoff_tail`` at the basis' measured coherence.
    """
    grid = [(k, plan, eps) for k in ks for plan in plans for eps in epsilons]
    if ls is not None and len(ls) not in (1, len(grid)):
        raise ConfigError("l", f"need 1 or {len(grid)} values, got {len(ls)}")
    rows = []
    for p, (k, plan, eps) in enumerate(grid):
        if plan.target == "flat":
            u1 = flat_orthonormal(n, k)
        elif plan.target == "low":
            u1 = random_orthonormal(n, k, RngSeed(master_seed, INSTANCE_STREAM + p))
        else:
            u1 = _planted_basis(n, plan, k, RngSeed(master_seed, INSTANCE_STREAM + p))[:, :k]
        tau = coherence(u1)
        if ls is None:
            l = _auto_l(n, k, tau, eps)
        else:
            l = ls[0] if len(ls) == 1 else ls[p]
        if not 1 <= l <= n:
            raise ConfigError("l", f"must lie in [1, n={n}], got {l}")
        threshold = eps * l / n
        base = p * trials

        def one(t: int) -> bool:
            s = sample_uniform(n, l, RngSeed(master_seed, base + t))
            return min_eig_gram(u1, s) <= threshold

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                hits = sum(pool.map(one, range(trials)))
        else:
            hits = sum(one(t) for t in range(trials))
        tail = chernoff_tail(k, tau, l, eps)
        p_cap = min(tail, 1.0)
        sigma = math.sqrt(p_cap * (1.0 - p_cap) / trials)
        empirical = hits / trials
        rows.append({
            "k": k,
            "plan": _plan_label(plan),
            "tau": tau,
            "epsilon": eps,
            "l": l,
            "trials": trials,
            "threshold": threshold,
            "failures": hits,
            "empirical_rate": empirical,
            "chernoff_tail": tail,
            "binom_sigma": sigma,
            "dominated": empirical <= tail + 3.0 * sigma,
        })
    return rows


def emit_table(rows: list[dict], fmt: str = "csv", path=None) -> str:
    """Serialize a list of uniform dicts (the chernoff sweep output)."""
    if not rows:
        raise ValueError("no rows to emit")
    cols = list(rows[0])
    if fmt == "csv":
        lines = [",".join(cols)]
        for row in rows:
            cells = []
            for c in cols:
                v = row[c]
                if isinstance(v, bool):
                    cells.append("true" if v else "false")
                elif isinstance(v, float):
                    cells.append(_fmt(v))
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        text = json.dumps({"rows": rows}, indent=2) + "\n"
    else:
        raise ConfigError("format", f"must be 'csv' or 'json', got {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text
