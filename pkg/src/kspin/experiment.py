"""Simulation sweep harness: error versus sample size and coupling strength.

Each cell (beta, n, method, seed) generates a fresh d-regular k-uniform
model (the hypergraph depends only on the seed, so methods and sample sizes
see the same graph), samples it exactly, fits with the configured penalty
rule, and appends one row of recovery metrics.  Rows are written in sorted
cell order regardless of completion order, so output files are
reproducible byte-for-byte.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .hypergen import SIGN_MODES, HypergraphSpec, tensor_from_spec
from .learner import BicGrid, FixedLambda, LearnConfig, TheoremLambda, recover_tensor
from .optimizer import SolverConfig
from .sampling import sample_exact

__all__ = ["ExperimentConfig", "RESULT_COLUMNS", "run_cell", "run_experiment", "write_results_csv"]

RESULT_COLUMNS = (
    "beta",
    "n",
    "method",
    "seed",
    "max_abs_error",
    "mean_node_l2",
    "support_exact",
    "lambda_selected",
    "wall_time_s",
    "error",
)


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 16
    k: int = 3
    d: int = 3
    sign_mode: str = "all-positive"
    methods: tuple[str, ...] = ("rise", "rple")
    n_grid: tuple[int, ...] = (1000, 10000, 100000)
    beta_grid: tuple[float, ...] = (1.0, 1.5, 2.0, 2.5)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    lambda_rule: FixedLambda | TheoremLambda | BicGrid = field(default_factory=BicGrid)
    solver: SolverConfig = field(default_factory=SolverConfig)
    combine: str = "mean"
    bic_scale: str = "n"
    output_path: str = "results.csv"
    jobs: int = 1

    def __post_init__(self):
        if not self.methods or not self.n_grid or not self.beta_grid or not self.seeds:
            raise ValueError("methods, n_grid, beta_grid, and seeds must be non-empty")
        for m in self.methods:
            if m not in ("rise", "rple"):
                raise ValueError(f"unknown method {m!r}")
        if self.sign_mode not in SIGN_MODES:
            raise ValueError(f"sign_mode must be one of {SIGN_MODES}")
        if any(n < 1 for n in self.n_grid) or any(b <= 0 for b in self.beta_grid):
            raise ValueError("sample sizes must be >= 1 and betas > 0")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        # fail fast on infeasible hypergraph specs
        HypergraphSpec(self.p, self.k, self.d, min(self.beta_grid), self.sign_mode, 0)

    @staticmethod
    def from_json(path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        return ExperimentConfig.from_dict(raw)

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        kwargs: dict = {}
        for key in ("p", "k", "d", "jobs"):
            if key in raw:
                kwargs[key] = int(raw[key])
        if "sign_mode" in raw:
            kwargs["sign_mode"] = str(raw["sign_mode"])
        if "methods" in raw:
            kwargs["methods"] = tuple(str(m) for m in raw["methods"])
        if "n_grid" in raw:
            kwargs["n_grid"] = tuple(int(n) for n in raw["n_grid"])
        if "beta_grid" in raw:
            kwargs["beta_grid"] = tuple(float(b) for b in raw["beta_grid"])
        if "seeds" in raw:
            kwargs["seeds"] = tuple(int(s) for s in raw["seeds"])
        if "output_path" in raw:
            kwargs["output_path"] = str(raw["output_path"])
        if "combine" in raw:
            kwargs["combine"] = str(raw["combine"])
        if "bic_scale" in raw:
            kwargs["bic_scale"] = str(raw["bic_scale"])
        if "lambda_rule" in raw:
            kwargs["lambda_rule"] = _rule_from_dict(raw["lambda_rule"])
        if "solver" in raw:
            kwargs["solver"] = SolverConfig(**raw["solver"])
        return ExperimentConfig(**kwargs)

    def cells(self) -> list[tuple[float, int, str, int]]:
        return sorted(
            (beta, n, method, seed)
            for beta in self.beta_grid
            for n in self.n_grid
            for method in self.methods
            for seed in self.seeds
        )


def _rule_from_dict(raw: dict):
    kind = raw.get("type", "bic")
    if kind == "fixed":
        return FixedLambda(float(raw["value"]))
    if kind == "theorem":
        return TheoremLambda(
            eps=float(raw.get("eps", 0.05)),
            beta=float(raw.get("beta", 1.0)),
            d=int(raw.get("d", 1)),
        )
    if kind == "bic":
        lambdas = raw.get("lambdas")
        return BicGrid(
            lambdas=tuple(float(v) for v in lambdas) if lambdas else None,
            eps=float(raw.get("eps", 0.05)),
            num=int(raw.get("num", 20)),
            c_min=float(raw.get("c_min", 2.0 ** -6)),
            c_max=float(raw.get("c_max", 2.0 ** 4)),
        )
    raise ValueError(f"unknown lambda rule type {kind!r}")


def _sample_seed(seed: int, beta: float, n: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((seed, n, int(round(beta * 1_000_000))), spawn_key=(2,))


def run_cell(cfg: ExperimentConfig, beta: float, n: int, method: str, seed: int) -> dict:
    """One (beta, n, method, seed) cell; failures land in the error column."""
    row = {c: "" for c in RESULT_COLUMNS}
    row.update(beta=beta, n=n, method=method, seed=seed)
    try:
        spec = HypergraphSpec(cfg.p, cfg.k, cfg.d, beta, cfg.sign_mode, seed)
        truth = tensor_from_spec(spec)
        rng_seed = _sample_seed(seed, beta, n)
        X = sample_exact(truth, n, seed=rng_seed)
        learn = LearnConfig(
            method=method,
            lambda_rule=cfg.lambda_rule,
            solver=cfg.solver,
            combine=cfg.combine,
            bic_scale=cfg.bic_scale,
        )
        t0 = time.perf_counter()
        report = recover_tensor(X, cfg.k, learn, truth=truth)
        wall = time.perf_counter() - t0
        assert report.metrics is not None
        row.update(
            max_abs_error=f"{report.metrics.max_abs_error:.10g}",
            mean_node_l2=f"{float(np.mean(report.metrics.node_l2)):.10g}",
            support_exact=int(report.metrics.support_exact),
            lambda_selected=f"{float(np.median(report.per_node_lambda)):.10g}",
            wall_time_s=f"{wall:.3f}",
        )
    except Exception as exc:  # recorded per-row; the sweep keeps going
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _run_cell_star(args):
    return run_cell(*args)


def run_experiment(cfg: ExperimentConfig, progress=None) -> list[dict]:
    """Run every cell and return rows in sorted cell order."""
    cells = cfg.cells()
    tasks = [(cfg, *cell) for cell in cells]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_run_cell_star, tasks))
    else:
        rows = []
        for task in tasks:
            rows.append(_run_cell_star(task))
            if progress is not None:
                progress(task[1:], rows[-1])
    return rows


def write_results_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_results_csv(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return list(csv.DictReader(f))
