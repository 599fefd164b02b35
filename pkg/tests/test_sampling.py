import math

import numpy as np
import pytest

from kspin import (
    CapabilityError,
    GibbsConfig,
    InteractionTensor,
    ParseError,
    conditional_prob,
    partition_function,
    pmf,
    read_samples_csv,
    sample_exact,
    sample_gibbs,
    write_samples_csv,
)
from kspin.sampling import exact_probabilities
from conftest import random_sparse_tensor
from oracles import all_states, enumerated_pmf, state_index


def tv_distance(a, b):
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def empirical_pmf(X):
    p = X.shape[1]
    idx = ((X > 0).astype(np.int64) * (1 << np.arange(p))).sum(axis=1)
    return np.bincount(idx, minlength=2 ** p) / X.shape[0]


class TestPartitionFunction:
    def test_uniform(self):
        assert partition_function(InteractionTensor(3, 2)) == pytest.approx(math.log(8))

    def test_hand_enumeration(self):
        J = InteractionTensor(2, 2, {(1, 2): 0.5})
        assert partition_function(J) == pytest.approx(math.log(2 * math.e + 2 / math.e))

    def test_normalization(self):
        J = random_sparse_tensor(4, 3, 3, 0.5, seed=5)
        probs = exact_probabilities(J)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        logz = partition_function(J)
        from kspin import hamiltonian

        total = sum(math.exp(hamiltonian(J, x) - logz) for x in all_states(4))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_enumeration_guard(self):
        with pytest.raises(CapabilityError):
            partition_function(InteractionTensor(26, 2))


class TestPmf:
    def test_uniform(self):
        J = InteractionTensor(3, 3)
        assert pmf(J, [1, -1, 1]) == pytest.approx(1 / 8)

    def test_pair_value_from_enumeration(self):
        J = InteractionTensor(2, 2, {(1, 2): 0.5})
        oracle = enumerated_pmf(J)
        val = pmf(J, [1, 1])
        assert val == pytest.approx(oracle[state_index([1, 1])], rel=1e-12)
        # e / (2e + 2/e): the pair-model probability with both spins up
        assert val == pytest.approx(math.e / (2 * math.e + 2 / math.e), rel=1e-12)

    def test_parity(self):
        Je = random_sparse_tensor(5, 2, 4, 0.5, seed=1)
        rng = np.random.default_rng(0)
        x = rng.integers(0, 2, size=5) * 2 - 1
        assert pmf(Je, x) == pytest.approx(pmf(Je, -x), rel=1e-12)
        Jo = random_sparse_tensor(5, 3, 4, 0.5, seed=2)
        Jneg = InteractionTensor(5, 3, {e: -w for e, w in Jo.entries.items()})
        assert pmf(Jo, x) == pytest.approx(pmf(Jneg, -x), rel=1e-12)


class TestConditional:
    def test_uniform(self):
        assert conditional_prob(InteractionTensor(4, 3), [1, -1, 1, -1], 2) == 0.5

    def test_pair_example(self):
        J = InteractionTensor(2, 2, {(1, 2): 0.5})
        expect = math.e / (math.e + 1 / math.e)
        assert conditional_prob(J, [1, 1], 1) == pytest.approx(expect, rel=1e-9)
        assert conditional_prob(J, [-1, 1], 1) == pytest.approx(expect, rel=1e-9)

    def test_against_joint_ratio(self):
        for seed in (3, 4):
            J = random_sparse_tensor(6, 3, 4, 0.5, seed=seed)
            oracle = enumerated_pmf(J)
            rng = np.random.default_rng(seed)
            x = rng.integers(0, 2, size=6) * 2 - 1
            for r in (1, 3, 6):
                xp, xm = x.copy(), x.copy()
                xp[r - 1], xm[r - 1] = 1, -1
                expect = oracle[state_index(xp)] / (
                    oracle[state_index(xp)] + oracle[state_index(xm)]
                )
                assert conditional_prob(J, x, r) == pytest.approx(expect, rel=1e-10)

    def test_complement(self):
        J = random_sparse_tensor(5, 3, 3, 0.7, seed=8)
        x = np.array([1, -1, -1, 1, 1])
        for r in range(1, 6):
            xm = x.copy()
            xm[r - 1] = -1
            p_plus = conditional_prob(J, x, r)
            # P(X_r = -1 | rest) realized by negating the couplings at r
            Jneg = InteractionTensor(
                5, 3, {e: (-w if r in e else w) for e, w in J.entries.items()}
            )
            assert p_plus + conditional_prob(Jneg, x, r) == pytest.approx(1.0, abs=1e-12)


class TestSampleExact:
    def test_deterministic(self):
        J = random_sparse_tensor(4, 3, 2, 0.5, seed=0)
        X1 = sample_exact(J, 100, seed=42)
        X2 = sample_exact(J, 100, seed=42)
        assert np.array_equal(X1, X2)
        assert not np.array_equal(X1, sample_exact(J, 100, seed=43))

    def test_uniform_frequencies(self):
        X = sample_exact(InteractionTensor(3, 2), 200_000, seed=1)
        emp = empirical_pmf(X)
        sigma = math.sqrt((1 / 8) * (7 / 8) / 200_000)
        assert np.all(np.abs(emp - 1 / 8) < 3.5 * sigma)

    def test_tv_against_enumeration(self):
        J = random_sparse_tensor(4, 3, 3, 0.4, seed=6)
        X = sample_exact(J, 200_000, seed=3)
        assert tv_distance(empirical_pmf(X), enumerated_pmf(J)) < 0.015


class TestSampleGibbs:
    def test_zero_coupling_mean(self):
        X = sample_gibbs(InteractionTensor(5, 3), 20_000, GibbsConfig(seed=2))
        assert np.all(np.abs(X.mean(axis=0)) < 4 / math.sqrt(20_000))

    def test_deterministic_and_chain_split(self):
        J = random_sparse_tensor(4, 3, 3, 0.4, seed=1)
        cfg = GibbsConfig(burn_in_sweeps=50, thin_sweeps=3, seed=11)
        A = sample_gibbs(J, 200, cfg)
        B = sample_gibbs(J, 200, cfg)
        assert np.array_equal(A, B)
        C = sample_gibbs(J, 200, cfg, chain_id=1)
        assert not np.array_equal(A, C)

    def test_tv_against_enumeration(self):
        J = random_sparse_tensor(4, 3, 3, 0.4, seed=9)
        X = sample_gibbs(J, 50_000, GibbsConfig(seed=5))
        assert tv_distance(empirical_pmf(X), enumerated_pmf(J)) < 0.02

    def test_row_count_contract(self):
        J = random_sparse_tensor(5, 3, 3, 0.3, seed=4)
        X = sample_gibbs(J, 100, GibbsConfig(burn_in_sweeps=10, thin_sweeps=10, seed=0))
        assert X.shape == (100, 5)

    def test_sweep_kernel_preserves_exact_distribution(self):
        # assemble the sweep transition matrix from conditionals and check pi P = pi
        J = random_sparse_tensor(4, 3, 3, 0.6, seed=12)
        states = all_states(4)
        pi = enumerated_pmf(J)
        dist = pi.copy()
        for r in range(1, 5):
            P = np.zeros((16, 16))
            for i, x in enumerate(states):
                xp, xm = x.copy(), x.copy()
                xp[r - 1], xm[r - 1] = 1, -1
                q = conditional_prob(J, x, r)
                P[i, state_index(xp)] += q
                P[i, state_index(xm)] += 1 - q
            dist = dist @ P
        assert np.abs(dist - pi).max() < 1e-12

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GibbsConfig(burn_in_sweeps=-1)
        with pytest.raises(ValueError):
            GibbsConfig(thin_sweeps=0)

    def test_python_kernel_matches_compiled(self):
        # the jit-compiled sweep kernel and its pure-Python source consume
        # the uniform stream identically
        from kspin import _gibbs

        py_kernel = getattr(_gibbs.run_sweeps, "py_func", None)
        if py_kernel is None:
            pytest.skip("numba not active; the fallback is already in use")
        J = random_sparse_tensor(4, 3, 3, 0.4, seed=3)
        edge_nodes, edge_w = J.edge_array()
        ptr, idx = _gibbs.incidence(edge_nodes, 4)
        rng = np.random.default_rng(0)
        u = rng.random((40, 4))
        xa = np.array([1, -1, 1, 1], dtype=np.int8)
        xb = xa.copy()
        out_a = np.empty((8, 4), dtype=np.int8)
        out_b = np.empty((8, 4), dtype=np.int8)
        _gibbs.run_sweeps(xa, edge_nodes, edge_w, ptr, idx, 6.0, u, out_a, 5)
        py_kernel(xb, edge_nodes, edge_w, ptr, idx, 6.0, u, out_b, 5)
        assert np.array_equal(out_a, out_b)
        assert np.array_equal(xa, xb)


class TestSamplesCsv:
    def test_round_trip(self, tmp_path):
        J = random_sparse_tensor(5, 3, 3, 0.4, seed=2)
        X = sample_exact(J, 50, seed=7)
        path = str(tmp_path / "s.csv")
        write_samples_csv(path, X, seed=7)
        with open(path) as f:
            assert f.readline() == "# p=5 n=50 seed=7\n"
        assert np.array_equal(read_samples_csv(path), X)

    def test_malformed_row_is_line_numbered(self, tmp_path):
        path = str(tmp_path / "bad.csv")
        with open(path, "w") as f:
            f.write("# p=3 n=2\n1,-1,1\n1,0,1\n")
        with pytest.raises(ParseError) as err:
            read_samples_csv(path)
        assert err.value.line == 3

    def test_ragged_row(self, tmp_path):
        path = str(tmp_path / "ragged.csv")
        with open(path, "w") as f:
            f.write("1,-1,1\n1,-1\n")
        with pytest.raises(ParseError) as err:
            read_samples_csv(path)
        assert err.value.line == 2
