"""Command-line interface.

Subcommands: generate, sample, fit, experiment, genes, diag.  Exit codes:
0 success, 1 invalid input or configuration, 2 runtime/numeric failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import VALIDATION_ERRORS, KspinError
from .experiment import ExperimentConfig, run_experiment, write_results_csv
from .genes import GenePipelineConfig, run_gene_pipeline
from .hypergen import SIGN_MODES, HypergraphSpec, tensor_from_spec
from .learner import (
    BicGrid,
    FixedLambda,
    LearnConfig,
    TheoremLambda,
    recover_tensor,
    theorem_lambda,
)
from .objectives import NodeObjective, empirical_gram, restricted_eigen_diag
from .optimizer import SolverConfig
from .sampling import (
    ENUM_LIMIT,
    GibbsConfig,
    read_samples_csv,
    sample_exact,
    sample_gibbs,
    write_samples_csv,
)
from .tensor import graph_stats, neighborhood_vector, read_tensor_csv, write_tensor_csv


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so errors map to exit code 1."""

    def error(self, message):
        raise ValueError(message)


def _add_lambda_args(sub):
    sub.add_argument("--lambda-rule", choices=("bic", "theorem", "fixed"), default="bic")
    sub.add_argument("--lam", type=float, help="penalty for --lambda-rule fixed")
    sub.add_argument("--eps", type=float, default=0.05, help="tail parameter of the penalty base")
    sub.add_argument("--beta-hat", type=float, default=1.0,
                     help="coupling bound for the theorem rule (screening only)")
    sub.add_argument("--d-hat", type=int, default=1,
                     help="degree bound for the theorem rule (screening only)")
    sub.add_argument("--grid-num", type=int, default=20, help="BIC grid size")
    sub.add_argument("--c-min", type=float, default=2.0 ** -6)
    sub.add_argument("--c-max", type=float, default=2.0 ** 4)
    sub.add_argument("--lambdas", type=str,
                     help="explicit comma-separated BIC grid, overriding the multiplier grid")


def _build_rule(args):
    if args.lambda_rule == "fixed":
        if args.lam is None:
            raise ValueError("--lambda-rule fixed requires --lam")
        return FixedLambda(args.lam)
    if args.lambda_rule == "theorem":
        return TheoremLambda(eps=args.eps, beta=args.beta_hat, d=args.d_hat)
    lambdas = None
    if args.lambdas:
        lambdas = tuple(float(v) for v in args.lambdas.split(","))
    return BicGrid(lambdas=lambdas, eps=args.eps, num=args.grid_num,
                   c_min=args.c_min, c_max=args.c_max)


def _add_solver_args(sub):
    sub.add_argument("--max-iter", type=int, default=5000)
    sub.add_argument("--tol-kkt", type=float, default=1e-6)
    sub.add_argument("--tol-objective", type=float, default=1e-9)


def _build_solver(args) -> SolverConfig:
    return SolverConfig(
        max_iterations=args.max_iter,
        tol_kkt=args.tol_kkt,
        tol_rel_objective=args.tol_objective,
    )


def cmd_generate(args) -> int:
    spec = HypergraphSpec(args.p, args.k, args.d, args.beta, args.sign_mode, args.seed)
    J = tensor_from_spec(spec)
    write_tensor_csv(args.out, J)
    stats = graph_stats(J)
    print(
        f"wrote {args.out}: p={J.p} k={J.k} edges={len(J.entries)} "
        f"beta_max={stats.beta_max:g} d_max={stats.d_max} "
        f"degrees={stats.degrees.tolist()}"
    )
    return 0


def cmd_sample(args) -> int:
    J = read_tensor_csv(args.tensor)
    if args.sampler == "exact":
        X = sample_exact(J, args.n, seed=args.seed)
    else:
        cfg = GibbsConfig(burn_in_sweeps=args.burn_in, thin_sweeps=args.thin, seed=args.seed)
        X = sample_gibbs(J, args.n, cfg)
    write_samples_csv(args.out, X, seed=args.seed)
    print(f"wrote {args.out}: n={X.shape[0]} p={X.shape[1]} sampler={args.sampler}")
    return 0


def cmd_fit(args) -> int:
    X = read_samples_csv(args.samples)
    truth = read_tensor_csv(args.truth) if args.truth else None
    cfg = LearnConfig(
        method=args.method,
        lambda_rule=_build_rule(args),
        support_threshold=args.tau,
        solver=_build_solver(args),
        combine=args.combine,
        bic_scale=args.bic_scale,
    )
    report = recover_tensor(X, args.k, cfg, truth=truth)
    if args.out:
        report.write_json(args.out)
        print(f"wrote {args.out}: {len(report.support)} hyperedges above tau={report.tau:g}")
    else:
        json.dump(report.to_dict(), sys.stdout, indent=2, sort_keys=True)
        print()
    if args.out_tensor:
        write_tensor_csv(args.out_tensor, report.estimate)
        print(f"wrote {args.out_tensor}")
    if report.metrics is not None:
        m = report.metrics
        print(
            f"max_abs_error={m.max_abs_error:.6g} "
            f"mean_node_l2={float(np.mean(m.node_l2)):.6g} "
            f"support_exact={m.support_exact}"
        )
    return 0


def cmd_experiment(args) -> int:
    raw: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            raw = json.load(f)
    # explicit flags win over the config file
    overrides = {
        "p": args.p, "k": args.k, "d": args.d, "sign_mode": args.sign_mode,
        "output_path": args.out, "jobs": args.jobs,
    }
    if args.methods:
        overrides["methods"] = args.methods.split(",")
    if args.n_grid:
        overrides["n_grid"] = [int(v) for v in args.n_grid.split(",")]
    if args.beta_grid:
        overrides["beta_grid"] = [float(v) for v in args.beta_grid.split(",")]
    if args.seeds:
        overrides["seeds"] = [int(v) for v in args.seeds.split(",")]
    raw.update({key: val for key, val in overrides.items() if val is not None})
    cfg = ExperimentConfig.from_dict(raw)

    def progress(cell, row):
        status = row["error"] or f"err={row['max_abs_error']}"
        print(f"cell beta={cell[0]:g} n={cell[1]} {cell[2]} seed={cell[3]}: {status}",
              file=sys.stderr)

    rows = run_experiment(cfg, progress=progress if not args.quiet else None)
    write_results_csv(cfg.output_path, rows)
    print(f"wrote {cfg.output_path}: {len(rows)} rows")
    if not args.no_figures:
        from .figures import render_experiment_figures

        for path in render_experiment_figures(rows, cfg.output_path):
            print(f"wrote {path}")
    failures = [row for row in rows if row["error"]]
    if failures:
        print(f"{len(failures)} cells failed; see the error column", file=sys.stderr)
    return 0


def cmd_genes(args) -> int:
    cfg = GenePipelineConfig(
        k=args.k,
        method=args.method,
        top_m=args.top_m,
        class_column=args.class_column,
        lambda_rule=_build_rule(args),
        solver=_build_solver(args),
    )
    summary = run_gene_pipeline(args.data, args.out_dir, cfg)
    for label in sorted(summary):
        info = summary[label]
        print(f"cohort {label}: {info['n_samples']} samples")
        for path in info["files"]:
            print(f"  wrote {path}")
        if info["hyperedges"]:
            edge, w = info["hyperedges"][0]
            print(f"  top hyperedge {edge} weight {w:.6g}")
    return 0


def cmd_diag(args) -> int:
    X = read_samples_csv(args.samples)
    n, p = X.shape
    truth = read_tensor_csv(args.truth) if args.truth else None
    methods = ("rise", "rple") if args.method == "both" else (args.method,)

    lam = {}
    if truth is not None:
        stats = graph_stats(truth)
        lam["rple"] = theorem_lambda("rple", p, args.k, n, args.eps)
        lam["rise"] = theorem_lambda("rise", p, args.k, n, args.eps,
                                     beta=stats.beta_max, d=stats.d_max)

    rows = []
    for r in range(1, p + 1):
        alpha = restricted_eigen_diag(empirical_gram(X, r, args.k))
        row = {"node": r, "alpha_hat": alpha}
        if truth is not None:
            jr = neighborhood_vector(truth, r)
            for method in methods:
                ev = NodeObjective(X, r, args.k, method)(jr)
                row[f"grad_inf_{method}"] = float(np.abs(ev.gradient).max())
                row[f"lambda_{method}"] = lam[method]
        rows.append(row)

    cols = list(rows[0])
    print("  ".join(f"{c:>16}" for c in cols))
    for row in rows:
        print("  ".join(
            f"{row[c]:>16}" if isinstance(row[c], int) else f"{row[c]:>16.6g}" for c in cols
        ))
    if truth is not None:
        for method in methods:
            worst = max(row[f"grad_inf_{method}"] for row in rows)
            ok = 2.0 * worst <= lam[method]
            print(f"{method}: max grad-at-truth inf-norm {worst:.6g} vs lambda {lam[method]:.6g}"
                  f" (2*norm <= lambda: {ok})")
    if args.out:
        import csv as _csv

        with open(args.out, "w", encoding="utf-8", newline="") as f:
            writer = _csv.DictWriter(f, fieldnames=cols, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="kspin", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random regular hypergraph tensor")
    g.add_argument("--p", type=int, default=16)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--d", type=int, default=3)
    g.add_argument("--beta", type=float, default=1.0, help="per-hyperedge coupling intensity")
    g.add_argument("--sign-mode", choices=SIGN_MODES, default="all-positive")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sample", help="draw samples from a tensor file")
    s.add_argument("--tensor", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--sampler", choices=("exact", "gibbs"), default="exact",
                   help=f"exact needs p <= {ENUM_LIMIT}")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=1000)
    s.add_argument("--thin", type=int, default=10)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    f = sub.add_parser("fit", help="recover a tensor from samples")
    f.add_argument("--samples", required=True)
    f.add_argument("--k", type=int, default=3)
    f.add_argument("--method", choices=("rise", "rple"), default="rise")
    f.add_argument("--tau", type=float, help="support threshold; defaults per evaluation mode")
    f.add_argument("--combine", choices=("mean", "min", "max"), default="mean")
    f.add_argument("--bic-scale", choices=("n", "raw"), default="n")
    f.add_argument("--truth", help="tensor CSV to score the recovery against")
    f.add_argument("--out", help="report JSON path (default: stdout)")
    f.add_argument("--out-tensor", help="also export the estimate in tensor CSV format")
    _add_lambda_args(f)
    _add_solver_args(f)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("experiment", help="run a (beta, n, method, seed) sweep")
    e.add_argument("--config", help="JSON config; explicit flags win")
    e.add_argument("--p", type=int)
    e.add_argument("--k", type=int)
    e.add_argument("--d", type=int)
    e.add_argument("--sign-mode", choices=SIGN_MODES)
    e.add_argument("--methods", help="comma-separated subset of rise,rple")
    e.add_argument("--n-grid", help="comma-separated sample sizes")
    e.add_argument("--beta-grid", help="comma-separated coupling intensities")
    e.add_argument("--seeds", help="comma-separated seeds")
    e.add_argument("--out", help="results CSV path")
    e.add_argument("--jobs", type=int, help="worker processes")
    e.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    e.add_argument("--quiet", action="store_true")
    e.set_defaults(func=cmd_experiment)

    n = sub.add_parser("genes", help="binarized expression-data pipeline")
    n.add_argument("--data", required=True, help="CSV with one header row of column names")
    n.add_argument("--out-dir", required=True)
    n.add_argument("--k", type=int, default=3)
    n.add_argument("--method", choices=("rise", "rple"), default="rise")
    n.add_argument("--top-m", type=int, default=20)
    n.add_argument("--class-column", help="column whose values split the rows into cohorts")
    _add_lambda_args(n)
    _add_solver_args(n)
    n.set_defaults(func=cmd_genes)

    d = sub.add_parser("diag", help="per-node Gram eigenvalue and gradient diagnostics")
    d.add_argument("--samples", required=True)
    d.add_argument("--k", type=int, default=3)
    d.add_argument("--truth", help="tensor CSV enabling gradient-at-truth checks")
    d.add_argument("--method", choices=("rise", "rple", "both"), default="both")
    d.add_argument("--eps", type=float, default=0.05)
    d.add_argument("--out", help="write the table as CSV")
    d.set_defaults(func=cmd_diag)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (KspinError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
