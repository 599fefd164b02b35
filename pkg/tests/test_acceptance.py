"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The sweeps reuse the
experiment harness with two worker processes; every tolerance and budget is
stated inline.
"""

import math
import time

import numpy as np
import pytest

from kspin import (
    GibbsConfig,
    InteractionTensor,
    NodeObjective,
    graph_stats,
    logcosh,
    minimize_l1,
    sample_exact,
    sample_gibbs,
    theorem_lambda,
)
from kspin.experiment import ExperimentConfig, run_experiment
from kspin.genes import binarize_columns, load_expression_csv
from kspin.sampling import conditional_prob, exact_probabilities
from kspin.tensor import neighborhood_vector
from conftest import random_sparse_tensor
from oracles import all_states, cd_solve, loss_value, monomial_design, state_index


def _report(num: int, ok: bool, elapsed: float, detail: str) -> None:
    print(f"\ncriterion {num:2d}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s) {detail}")


def _mean_errors(rows, method, field, values):
    out = []
    for v in values:
        errs = [
            float(r["max_abs_error"])
            for r in rows
            if r["method"] == method and float(r[field]) == float(v) and not r["error"]
        ]
        assert len(errs) > 0
        out.append(float(np.mean(errs)))
    return out


class TestCriterion1Gradients:
    def test_finite_difference_match(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(101)
        worst = 0.0
        for _ in range(20):
            X = (rng.integers(0, 2, size=(50, 8)) * 2 - 1).astype(np.int8)
            r = int(rng.integers(1, 9))
            for method in ("rple", "rise"):
                obj = NodeObjective(X, r, 3, method)
                jr = np.zeros(obj.dim)
                hot = rng.choice(obj.dim, size=6, replace=False)
                jr[hot] = rng.normal(0, 0.4, 6)
                grad = obj(jr).gradient
                h = 1e-5
                fd = np.empty(obj.dim)
                for i in range(obj.dim):
                    e = np.zeros(obj.dim)
                    e[i] = h
                    fd[i] = (obj(jr + e, False).value - obj(jr - e, False).value) / (2 * h)
                rel = float(np.abs(fd - grad).max() / np.abs(grad).max())
                worst = max(worst, rel)
        elapsed = time.perf_counter() - t0
        ok = worst < 1e-6 and elapsed < 10.0
        _report(1, ok, elapsed, f"worst FD relative error {worst:.2e} (< 1e-6)")
        assert worst < 1e-6
        assert elapsed < 10.0


class TestCriterion2Sampler:
    def test_sampler_fidelity(self):
        t0 = time.perf_counter()
        # random model with coupling magnitudes <= 1 (drawn in [0.15, 0.3])
        J = random_sparse_tensor(4, 3, 3, 0.3, seed=202)
        probs = exact_probabilities(J)

        X = sample_exact(J, 1_000_000, seed=7)
        idx = ((X > 0).astype(np.int64) * (1 << np.arange(4))).sum(axis=1)
        tv_exact = 0.5 * float(
            np.abs(np.bincount(idx, minlength=16) / len(X) - probs).sum()
        )

        G = sample_gibbs(J, 100_000, GibbsConfig(seed=8))
        gidx = ((G > 0).astype(np.int64) * (1 << np.arange(4))).sum(axis=1)
        tv_gibbs = 0.5 * float(
            np.abs(np.bincount(gidx, minlength=16) / len(G) - probs).sum()
        )

        # one full sweep assembled from the single-site conditionals
        dist = probs.copy()
        states = all_states(4)
        for r in range(1, 5):
            P = np.zeros((16, 16))
            for i, x in enumerate(states):
                xp, xm = x.copy(), x.copy()
                xp[r - 1], xm[r - 1] = 1, -1
                q = conditional_prob(J, x, r)
                P[i, state_index(xp)] += q
                P[i, state_index(xm)] += 1 - q
            dist = dist @ P
        stationarity = float(np.abs(dist - probs).max())

        elapsed = time.perf_counter() - t0
        ok = tv_exact < 0.01 and tv_gibbs < 0.02 and stationarity < 1e-12 and elapsed < 60
        _report(
            2, ok, elapsed,
            f"TV exact {tv_exact:.4f} (<0.01), TV gibbs {tv_gibbs:.4f} (<0.02), "
            f"sweep stationarity {stationarity:.1e} (<1e-12)",
        )
        assert tv_exact < 0.01
        assert tv_gibbs < 0.02
        assert stationarity < 1e-12
        assert elapsed < 60


class TestCriterion3Inequalities:
    def test_technical_inequalities(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(303)
        x = rng.uniform(-20, 20, 10_000)
        a = rng.uniform(-20, 20, 10_000)
        lhs = logcosh(x + a) - logcosh(x) - a * np.tanh(x)
        rhs = (1.0 - np.tanh(x) ** 2) * a * a / (2.0 + 2.0 * np.abs(a))
        slack1 = float((lhs - rhs).min())

        z = rng.uniform(-30, 30, 10_000)
        slack2 = float((np.exp(-z) - 1.0 + z - z * z / (2.0 + np.abs(z))).min())

        elapsed = time.perf_counter() - t0
        ok = slack1 >= -1e-12 and slack2 >= -1e-12 and elapsed < 1.0
        _report(
            3, ok, elapsed,
            f"log-cosh slack {slack1:.1e}, exponential slack {slack2:.1e} (>= -1e-12)",
        )
        assert slack1 >= -1e-12
        assert slack2 >= -1e-12
        assert elapsed < 1.0


class TestCriterion4Solver:
    def test_matches_coordinate_descent(self):
        t0 = time.perf_counter()
        worst = 0.0
        for seed in range(5):
            J = random_sparse_tensor(5, 3, 3, 0.25, seed=400 + seed)
            X = sample_exact(J, 200, seed=500 + seed)
            D, _ = monomial_design(X, 2, 3)
            y = X[:, 1].astype(float)
            for method in ("rple", "rise"):
                obj = NodeObjective(X, 2, 3, method)
                for lam in (0.01, 0.1, 1.0):
                    fr = minimize_l1(obj, obj.dim, lam)
                    f_pkg = loss_value(fr.coeffs, D, y, 3, method) + lam * np.abs(fr.coeffs).sum()
                    _, f_cd = cd_solve(D, y, 3, method, lam)
                    worst = max(worst, abs(f_pkg - f_cd))
        elapsed = time.perf_counter() - t0
        ok = worst < 1e-6 and elapsed < 30
        _report(4, ok, elapsed, f"worst objective gap vs CD oracle {worst:.2e} (< 1e-6)")
        assert worst < 1e-6
        assert elapsed < 30


class TestCriterion5Recovery:
    def test_reference_regime_support_and_error(self):
        t0 = time.perf_counter()
        cfg = ExperimentConfig(
            p=16, k=3, d=3, n_grid=(100_000,), beta_grid=(1.0,),
            seeds=tuple(range(5)), methods=("rise", "rple"), jobs=2,
        )
        rows = run_experiment(cfg)
        details = []
        ok = True
        for method in ("rise", "rple"):
            mine = [r for r in rows if r["method"] == method]
            assert not any(r["error"] for r in mine)
            exact = sum(int(r["support_exact"]) for r in mine)
            err = max(float(r["max_abs_error"]) for r in mine)
            details.append(f"{method}: exact {exact}/5, worst err {err:.4f}")
            ok = ok and exact >= 4 and err < 0.15
        elapsed = time.perf_counter() - t0
        ok = ok and elapsed < 600
        _report(5, ok, elapsed, "; ".join(details) + " (need >=4/5 and err < 0.15)")
        for method in ("rise", "rple"):
            mine = [r for r in rows if r["method"] == method]
            assert sum(int(r["support_exact"]) for r in mine) >= 4
            assert max(float(r["max_abs_error"]) for r in mine) < 0.15
        assert elapsed < 600


class TestCriterion6Rate:
    def test_error_decay_slope(self):
        t0 = time.perf_counter()
        ns = (1_000, 10_000, 100_000)
        cfg = ExperimentConfig(
            p=16, k=3, d=3, n_grid=ns, beta_grid=(1.0,),
            seeds=tuple(range(10)), methods=("rise", "rple"), jobs=2,
        )
        rows = run_experiment(cfg)
        slopes = {}
        l2_decreasing = {}
        for method in ("rise", "rple"):
            means = _mean_errors(rows, method, "n", ns)
            slopes[method] = float(np.polyfit(np.log(ns), np.log(means), 1)[0])
            l2 = []
            for n in ns:
                vals = [
                    float(r["mean_node_l2"]) for r in rows
                    if r["method"] == method and int(float(r["n"])) == n and not r["error"]
                ]
                l2.append(float(np.mean(vals)))
            l2_decreasing[method] = l2[0] > l2[1] > l2[2]
        elapsed = time.perf_counter() - t0
        ok = all(-0.7 <= s <= -0.3 for s in slopes.values()) and elapsed < 1200
        detail = ", ".join(f"{m} slope {s:.3f}" for m, s in slopes.items())
        _report(6, ok, elapsed, detail + " (need within [-0.7, -0.3])")
        for method, slope in slopes.items():
            assert -0.7 <= slope <= -0.3, f"{method} slope {slope}"
            assert l2_decreasing[method], f"{method} mean node-L2 not decreasing in n"
        assert elapsed < 1200


class TestCriterion7BetaMonotonicity:
    def test_error_grows_with_coupling(self):
        t0 = time.perf_counter()
        betas = (1.0, 1.5, 2.0, 2.5)
        cfg = ExperimentConfig(
            p=16, k=3, d=3, n_grid=(10_000,), beta_grid=betas,
            seeds=tuple(range(10)), methods=("rise", "rple"), jobs=2,
        )
        rows = run_experiment(cfg)
        seqs = {m: _mean_errors(rows, m, "beta", betas) for m in ("rise", "rple")}
        increasing = {
            m: all(seq[i] < seq[i + 1] for i in range(len(seq) - 1))
            for m, seq in seqs.items()
        }
        elapsed = time.perf_counter() - t0
        ok = all(increasing.values()) and elapsed < 1200
        detail = "; ".join(
            f"{m}: " + " ".join(f"{v:.4f}" for v in seq) + f" increasing={increasing[m]}"
            for m, seq in seqs.items()
        )
        _report(7, ok, elapsed, detail)
        assert elapsed < 1200
        for m, seq in seqs.items():
            assert all(
                seq[i] < seq[i + 1] for i in range(len(seq) - 1)
            ), f"{m} mean errors not strictly increasing across beta: {seq}"


class TestCriterion8LambdaArithmetic:
    def test_closed_forms(self):
        t0 = time.perf_counter()
        val = theorem_lambda("rple", 16, 3, 100_000, 0.05)
        ok = abs(val - 0.3226) <= 5e-4

        quarter = theorem_lambda("rple", 16, 3, 400_000, 0.05)
        ok = ok and val == pytest.approx(2 * quarter, rel=1e-12)

        a = theorem_lambda("rise", 12, 3, 2_000, 0.05, beta=0.25, d=2)
        b = theorem_lambda("rise", 12, 3, 2_000, 0.05, beta=0.75, d=2)
        ratio_ok = b / a == pytest.approx(math.exp(6 * 0.5 * 2), rel=1e-10)
        half_ok = theorem_lambda("rise", 12, 3, 2_000, 0.05, beta=0.0, d=5) == pytest.approx(
            theorem_lambda("rple", 12, 3, 2_000, 0.05) / 2, rel=1e-12
        )
        elapsed = time.perf_counter() - t0
        ok = ok and ratio_ok and half_ok
        _report(8, ok, elapsed, f"reference value {val:.6f} (0.3226 +/- 5e-4), scalings exact")
        assert abs(val - 0.3226) <= 5e-4
        assert ratio_ok and half_ok


class TestCriterion9ScreeningMoment:
    def test_gradient_at_truth_below_envelope(self):
        t0 = time.perf_counter()
        J = random_sparse_tensor(6, 3, 3, 0.12, seed=900)
        stats = graph_stats(J)
        lam = theorem_lambda(
            "rise", 6, 3, 100_000, 0.05, beta=stats.beta_max, d=stats.d_max
        )
        truths = [neighborhood_vector(J, r) for r in range(1, 7)]
        hits = 0
        from kspin.objectives import compress_samples

        for seed in range(100):
            X = sample_exact(J, 100_000, seed=seed)
            compressed = compress_samples(X)
            ok = True
            for r in range(1, 7):
                ev = NodeObjective(X, r, 3, "rise", compressed=compressed)(truths[r - 1])
                if float(np.abs(ev.gradient).max()) >= lam:
                    ok = False
                    break
            hits += int(ok)
        elapsed = time.perf_counter() - t0
        ok = hits >= 95
        _report(9, ok, elapsed, f"{hits}/100 trials below the envelope penalty (need >= 95)")
        assert hits >= 95


class TestCriterion10GenePipeline:
    def test_binarization_ranking_determinism(self, tmp_path):
        import pathlib

        import kspin as _k
        from kspin.cli import main

        t0 = time.perf_counter()
        data = pathlib.Path(_k.__file__).parent / "data" / "synthetic_genes.csv"

        # strict-above-mean spot check on raw cells
        names, rows, _ = load_expression_csv(str(data))
        X = binarize_columns(names, rows)
        cols = np.array([[float(c) for c in row] for row in rows])
        for j in (0, 4, 9):
            mean = cols[:, j].mean()
            for i in (0, 57, 311):
                assert X[i, j] == (1 if cols[i, j] > mean else -1)

        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            assert main(["genes", "--data", str(data), "--out-dir", str(out),
                         "--top-m", "6"]) == 0
        top = (out1 / "all_hyperedges.csv").read_text().splitlines()[1]
        ranks_first = top.startswith("1,2,5,9,")
        identical = all(
            (out1 / name).read_bytes() == (out2 / name).read_bytes()
            for name in ("all_hyperedges.csv", "all_node_frequency.csv", "node_mapping.csv")
        )
        elapsed = time.perf_counter() - t0
        ok = ranks_first and identical and elapsed < 60
        _report(
            10, ok, elapsed,
            f"planted triangle first={ranks_first}, byte-identical reruns={identical}",
        )
        assert ranks_first
        assert identical
        assert elapsed < 60
