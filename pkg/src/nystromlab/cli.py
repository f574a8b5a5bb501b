"""Command-line front end.

Subcommands
-----------
approx     one extension from explicit columns or a seeded uniform sample
trials     Monte-Carlo sampling experiment, CSV/JSON records + summary
bounds     evaluate the sample-size rule and bound values for parameters
chernoff   empirical validation sweep of the Gram-eigenvalue tail bound

Exit codes: 0 success; 2 configuration error (bad flags or parameters);
3 input-data error (missing or malformed matrix file); 4 numerical error
(input not PSD, eigensolver failure).
"""

from __future__ import annotations

import argparse
import json
import sys

from .analysis import GapViolatedError, bound_report
from .experiment import (
    ConfigError,
    MatrixFileError,
    chernoff_sweep,
    config_from_file,
    config_from_mapping,
    emit_results,
    emit_table,
    load_matrix,
    run_experiment,
)
from .generators import parse_plan
from .matcore import NonConvergenceError, NotPSDError, clamp_psd_eigenvalues, sym_eig
from .nystrom import nystrom_extend
from .sampling import ColumnSample, RngSeed, sample_uniform


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    # emit_* already wrote the file when out was given


def _cmd_approx(args) -> int:
    a = load_matrix(args.matrix)
    ed = sym_eig(a)
    clamp_psd_eigenvalues(ed.eigenvalues)
    lambda1 = float(ed.eigenvalues[0])
    if args.indices is not None:
        idx = tuple(int(tok) for tok in args.indices.split(",") if tok.strip())
        sample = ColumnSample(n=a.n, indices=idx)
    else:
        if args.l is None:
            raise ConfigError("l", "give either --l or --indices")
        sample = sample_uniform(a.n, args.l, RngSeed(args.seed, 0))
    res = nystrom_extend(a, sample)
    doc = {
        "n": a.n,
        "l": sample.l,
        "indices": list(sample.indices),
        "spectral_error": res.spectral_error,
        "relative_error": res.spectral_error / lambda1 if lambda1 > 0 else 0.0,
        "rank_w": res.rank_w,
        "psd_violation": res.psd_violation,
        "lambda1": lambda1,
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out is not None:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


_INLINE_FLAGS = (
    "n", "k", "l", "auto_l", "epsilon", "delta", "trials", "seed",
    "gen", "coherence", "lambda1", "matrix",
)


def _cmd_trials(args) -> int:
    if args.config is not None:
        given = [f for f in _INLINE_FLAGS if getattr(args, f) not in (None, False)]
        if given:
            raise ConfigError(given[0].replace("_", "-"),
                              "inline flag conflicts with --config")
        cfg = config_from_file(args.config)
        overrides = {}
        if args.out is not None:
            overrides["out"] = args.out
        if args.format is not None:
            overrides["fmt"] = args.format
        if args.jobs is not None:
            overrides["jobs"] = args.jobs
        if args.timings:
            overrides["timings"] = True
        if overrides:
            from dataclasses import replace
            cfg = replace(cfg, **overrides)
            cfg.validate()
    else:
        if args.l is not None and args.auto_l:
            raise ConfigError("l", "--l conflicts with --auto-l")
        mapping = {
            "k": args.k,
            "trials": args.trials,
            "seed": args.seed,
        }
        if args.n is not None:
            mapping["n"] = args.n
        if args.l is not None:
            mapping["l"] = args.l
        if args.epsilon is not None:
            mapping["epsilon"] = args.epsilon
        if args.delta is not None:
            mapping["delta"] = args.delta
        if args.gen is not None:
            mapping["gen"] = args.gen
        if args.coherence is not None:
            mapping["coherence"] = args.coherence
        if args.lambda1 is not None:
            mapping["lambda1"] = args.lambda1
        if args.matrix is not None:
            mapping["matrix"] = args.matrix
        if args.out is not None:
            mapping["out"] = args.out
        if args.format is not None:
            mapping["format"] = args.format
        if args.jobs is not None:
            mapping["jobs"] = args.jobs
        if args.timings:
            mapping["timings"] = True
        for key in ("k", "trials", "seed"):
            if mapping.get(key) is None:
                raise ConfigError(key, "required flag is missing")
        cfg = config_from_mapping(mapping)
    records, summary = run_experiment(cfg)
    text = emit_results(records, summary, cfg.fmt, path=cfg.out, timings=cfg.timings)
    summary_text = json.dumps(summary) + "\n"
    if cfg.out is not None:
        sys.stdout.write(summary_text)
    else:
        sys.stdout.write(text)
        sys.stderr.write(summary_text)
    return 0


def _cmd_bounds(args) -> int:
    report = bound_report(
        n=args.n,
        k=args.k,
        tau=args.tau,
        epsilon=args.epsilon,
        delta=args.delta,
        l=args.l,
        lambda_k1=args.lambda_k1,
    )
    l_eff = args.l if args.l is not None else min(report.l_required, args.n)
    lines = [
        f"n={args.n}",
        f"k={report.k}",
        f"tau={report.tau!r}",
        f"epsilon={report.epsilon!r}",
        f"delta={report.delta!r}",
        f"lambda_k1={args.lambda_k1!r}",
        f"l_required={report.l_required}",
        f"l={l_eff}",
        f"prob_bound={report.prob_bound!r}",
        f"chernoff_tail={report.chernoff_tail!r}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _cmd_chernoff(args) -> int:
    plans = [parse_plan(p) for p in args.coherence]
    rows = chernoff_sweep(
        n=args.n,
        ks=args.k,
        plans=plans,
        epsilons=args.epsilon,
        trials=args.trials,
        master_seed=args.seed,
        ls=args.l if args.l else None,
        jobs=args.jobs,
    )
    text = emit_table(rows, args.format, path=args.out)
    _write_or_print(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nystromlab",
        description="Column-sampled Nystrom extension of PSD matrices "
                    "with coherence-based error bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx", help="one extension from a matrix file")
    p.add_argument("--matrix", required=True, help="matrix file (n header + n rows)")
    p.add_argument("--l", type=int, default=None, help="number of columns to sample")
    p.add_argument("--indices", default=None,
                   help="explicit comma-separated column indices (overrides --l)")
    p.add_argument("--seed", type=int, default=0, help="master seed for the sample")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=_cmd_approx)

    p = sub.add_parser("trials", help="Monte-Carlo sampling experiment")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--l", type=int, default=None, help="fixed sample size")
    p.add_argument("--auto-l", dest="auto_l", action="store_true",
                   help="derive l from the sample-size rule (the default)")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--gen", default=None,
                   help="spectrum: exact-rank-k | exp:RATE | pow:EXP | custom:v1,...")
    p.add_argument("--coherence", default=None, help="plan: flat | low | spiked:M")
    p.add_argument("--lambda1", type=float, default=None, help="spectrum scale")
    p.add_argument("--matrix", default=None, help="matrix file instead of --gen")
    p.add_argument("--out", default=None, help="artifact path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--jobs", type=int, default=None, help="trial thread count")
    p.add_argument("--timings", action="store_true",
                   help="emit measured wall_ms (breaks byte-identical reruns)")
    p.set_defaults(func=_cmd_trials)

    p = sub.add_parser("bounds", help="evaluate the bound formulas")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--l", type=int, default=None,
                   help="evaluate at this l (default: min(l_required, n))")
    p.add_argument("--lambda-k1", dest="lambda_k1", type=float, default=1.0,
                   help="tail eigenvalue scale for the probabilistic bound")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("chernoff", help="tail-validation sweep for min_eig_gram")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, action="append", required=True,
                   help="repeatable: dominant dimension")
    p.add_argument("--coherence", action="append", required=True,
                   help="repeatable: flat | low | spiked:M")
    p.add_argument("--epsilon", type=float, action="append", required=True,
                   help="repeatable: Gram-eigenvalue slack")
    p.add_argument("--l", type=int, action="append", default=None,
                   help="repeatable: sample sizes (default: auto per point)")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=None, help="artifact path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_chernoff)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except MatrixFileError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except (NotPSDError, NonConvergenceError, GapViolatedError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 4
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
