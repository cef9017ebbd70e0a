import itertools
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from boht import bms
from boht.density_evolution import (
    DeConfig,
    OffspringSpec,
    Trajectory,
    Verdict,
    bp_exact,
    de_step,
    decide_reconstruction,
    exact_de,
    pattern_weights,
    run_de,
    sample_patterns,
    tree_mc_estimate,
)
from boht.errors import DomainError, ResourceError
from boht.kernels import HyperedgeKernel, b_r_lambda, sign_patterns


def one_step_oracle(kernel, t):
    """C_chi2 after one BP step from exact leaves with ``t`` hyperedges, by enumeration."""
    n = kernel.r - 1
    ys = [tuple(y) for y in sign_patterns(n)]
    total = 0.0
    for obs in itertools.product(ys, repeat=t):
        lp = np.prod([kernel.prob(np.array(y), 1) for y in obs])
        lm = np.prod([kernel.prob(np.array(y), -1) for y in obs])
        if lp + lm > 0:
            total += (lp + lm) / 2 * ((lp - lm) / (lp + lm)) ** 2
    return total


def fixed_cfg(lam=0.5, d=2, r=3, **kw):
    return DeConfig(r=r, offspring=OffspringSpec("fixed", d), lam=lam, **kw)


class TestOffspring:
    def test_fixed(self):
        ts, p = OffspringSpec("fixed", 3).truncated_pmf()
        np.testing.assert_array_equal(ts, [3])
        np.testing.assert_array_equal(p, [1.0])

    def test_poisson_tail(self):
        ts, p = OffspringSpec("poisson", 2.0).truncated_pmf()
        assert p.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.all(p >= 0)
        assert ts[-1] < 25
        assert np.dot(ts, p) == pytest.approx(2.0, abs=1e-8)

    def test_poisson_zero(self):
        ts, p = OffspringSpec("poisson", 0.0).truncated_pmf()
        np.testing.assert_array_equal(ts, [0])

    def test_invalid(self):
        with pytest.raises(DomainError):
            OffspringSpec("geometric", 2)
        with pytest.raises(DomainError):
            OffspringSpec("fixed", 2.5)
        with pytest.raises(DomainError):
            OffspringSpec("poisson", -1)


class TestConfig:
    def test_ks_ratio(self):
        assert fixed_cfg(lam=0.5, d=2).ks_ratio == pytest.approx(1.0)

    def test_validation(self):
        off = OffspringSpec("fixed", 2)
        with pytest.raises(DomainError):
            DeConfig(r=3, offspring=off)
        with pytest.raises(DomainError):
            DeConfig(r=3, offspring=off, lam=0.5, kernel=b_r_lambda(3, 0.5))
        with pytest.raises(DomainError):
            DeConfig(r=3, offspring=off, lam=0.5, pop_size=10)
        with pytest.raises(DomainError):
            DeConfig(r=3, offspring=off, lam=0.5, mode="exact_quantized", bins=16)
        with pytest.raises(DomainError):
            DeConfig(r=4, offspring=off, kernel=b_r_lambda(3, 0.5))
        with pytest.raises(DomainError):
            DeConfig(r=3, offspring=off, lam=1.5)

    def test_floors(self):
        cfg = fixed_cfg(pop_size=10**6)
        assert cfg.noise_floor == pytest.approx(5e-3)
        ex = fixed_cfg(mode="exact_quantized")
        assert ex.noise_floor == 1e-9 and ex.plateau_width == 1e-6


class TestDeStep:
    def test_all_zero_invariant(self):
        cfg = fixed_cfg(lam=0.7, pop_size=5000)
        out = de_step(np.zeros(5000), cfg)
        np.testing.assert_array_equal(out, 0.0)

    def test_lambda_one_identity(self):
        cfg = fixed_cfg(lam=1.0, pop_size=5000)
        out = de_step(np.ones(5000), cfg)
        np.testing.assert_array_equal(np.abs(out), 1.0)

    def test_lambda_zero_kills(self):
        cfg = fixed_cfg(lam=0.0, pop_size=5000)
        np.testing.assert_array_equal(de_step(np.ones(5000), cfg), 0.0)

    def test_one_step_matches_exact(self):
        n = 10**5
        cfg = fixed_cfg(lam=0.5, d=2, pop_size=n, seed=3)
        mc = np.mean(de_step(np.ones(n), cfg) ** 2)
        ex = exact_de(fixed_cfg(lam=0.5, d=2, mode="exact_quantized", max_iters=1))
        assert abs(mc - ex.chi2[1]) < 5 / math.sqrt(n)

    def test_general_kernel_one_step(self):
        n = 10**5
        K = HyperedgeKernel(3, np.array([0.64, 0.16, 0.16, 0.04]))
        cfg = DeConfig(r=3, offspring=OffspringSpec("fixed", 2), kernel=K, pop_size=n, seed=4)
        mc = np.mean(de_step(np.ones(n), cfg) ** 2)
        assert abs(mc - one_step_oracle(K, 2)) < 5 / math.sqrt(n)

    def test_tilts_are_rooted_at_plus(self):
        # conditioned on root +, E[theta_signed] = E[theta^2]
        n = 10**5
        cfg = fixed_cfg(lam=0.5, d=3, pop_size=n, seed=5)
        out = de_step(np.ones(n), cfg)
        assert abs(out.mean() - np.mean(out**2)) < 5 / math.sqrt(n)

    def test_empty(self):
        with pytest.raises(DomainError):
            de_step(np.zeros(0), fixed_cfg(pop_size=1000))

    def test_deterministic(self):
        cfg = fixed_cfg(pop_size=2000, seed=9)
        np.testing.assert_array_equal(de_step(np.ones(2000), cfg, 2), de_step(np.ones(2000), cfg, 2))
        assert not np.array_equal(de_step(np.ones(2000), cfg, 2), de_step(np.ones(2000), cfg, 3))


class TestPatternSampler:
    def test_multinomial_bounds(self):
        # standing test: empirical pattern frequencies against exact Bayes weights
        rng = np.random.default_rng(2024)
        draws = 10**6
        worst = 0.0
        for i in range(1000):
            r = int(rng.integers(3, 7))
            lam = rng.random()
            th = rng.random(r - 1)
            K = b_r_lambda(r, lam)
            counts = sample_patterns(K, th, draws, seed=i)
            p = pattern_weights(K, th)
            assert counts.sum() == draws
            sd = np.sqrt(draws * p * (1 - p))
            z = np.abs(counts - draws * p) / np.where(sd > 0, sd, 1.0)
            worst = max(worst, z.max())
        assert worst <= 4.0, f"max |z| = {worst:.2f}"

    def test_general_kernel(self):
        rng = np.random.default_rng(7)
        draws = 10**6
        for i in range(50):
            r = int(rng.integers(3, 6))
            K = HyperedgeKernel(r, rng.dirichlet(np.ones(2 ** (r - 1))))
            th = rng.random(r - 1)
            counts = sample_patterns(K, th, draws, seed=i)
            p = pattern_weights(K, th)
            sd = np.sqrt(draws * p * (1 - p))
            assert np.all(np.abs(counts - draws * p) <= 4 * sd + 1e-9)

    def test_wrong_length(self):
        with pytest.raises(DomainError):
            sample_patterns(b_r_lambda(4, 0.5), [0.1, 0.2], 10)


class TestDecide:
    def traj(self, values):
        t = Trajectory()
        for k, v in enumerate(values):
            t.append(k, v, 0.0, 0.0, 1)
        return t

    def test_non_reconstruction(self):
        cfg = fixed_cfg(pop_size=10**4)
        assert decide_reconstruction(self.traj([1.0] + [0.0] * 12), cfg) == Verdict.NON_RECONSTRUCTION

    def test_reconstruction(self):
        cfg = fixed_cfg(pop_size=10**4)
        v = decide_reconstruction(self.traj([1.0] + [0.5] * 12), cfg)
        assert v == Verdict.RECONSTRUCTION

    def test_drifting_is_inconclusive(self):
        cfg = fixed_cfg(pop_size=10**4)
        vals = list(np.linspace(0.5, 0.3, 12))
        assert decide_reconstruction(self.traj(vals), cfg) == Verdict.INCONCLUSIVE

    def test_needs_two_rows(self):
        with pytest.raises(DomainError):
            decide_reconstruction(self.traj([1.0]), fixed_cfg())


class TestRunDe:
    def test_lambda_zero(self):
        tr = run_de(fixed_cfg(lam=0.0, pop_size=1000, max_iters=1))
        assert tr.chi2 == [1.0, 0.0]
        assert tr.verdict == Verdict.NON_RECONSTRUCTION

    def test_lambda_one(self):
        tr = run_de(fixed_cfg(lam=1.0, pop_size=1000, max_iters=3))
        np.testing.assert_array_equal(tr.chi2, 1.0)
        assert tr.verdict == Verdict.RECONSTRUCTION
        assert math.isinf(tr.skl[-1])

    def test_above_ks_reconstructs(self):
        tr = run_de(fixed_cfg(lam=0.65, d=2, pop_size=2 * 10**5, max_iters=60))
        assert tr.verdict == Verdict.RECONSTRUCTION

    def test_below_ks_dies(self):
        cfg = DeConfig(
            r=3, offspring=OffspringSpec("poisson", 2), lam=0.45, pop_size=2 * 10**5, max_iters=100
        )
        assert run_de(cfg).verdict == Verdict.NON_RECONSTRUCTION

    def test_skl_finite_below_one(self):
        tr = run_de(fixed_cfg(lam=0.6, pop_size=5000, max_iters=5))
        assert all(np.isfinite(tr.skl[1:]))
        assert all(0 <= c <= math.log(2) + 1e-12 for c in tr.capacity)

    def test_monotone_degradation(self):
        tr = run_de(fixed_cfg(lam=0.55, pop_size=50000, max_iters=8, seed=1))
        assert np.all(np.diff(tr.chi2) <= 5 / math.sqrt(50000))

    def test_seed_reproducible(self):
        cfg = fixed_cfg(pop_size=5000, max_iters=4, seed=11)
        assert run_de(cfg).chi2 == run_de(cfg).chi2

    def test_thread_count_invariance(self):
        code = (
            "from boht.density_evolution import *;"
            "c=DeConfig(r=3,offspring=OffspringSpec('poisson',2.0),lam=0.6,pop_size=20000,"
            "max_iters=3,seed=5);print(repr(run_de(c).chi2))"
        )
        outs = []
        for k in ("1", "3"):
            env = dict(os.environ, NUMBA_NUM_THREADS=k)
            res = subprocess.run(
                [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
            )
            outs.append(res.stdout.strip().splitlines()[-1])
        assert outs[0] == outs[1]

    def test_csv_and_sidecar(self, tmp_path):
        tr = run_de(fixed_cfg(pop_size=1000, max_iters=2))
        side = tr.write(tmp_path / "run.csv")
        lines = (tmp_path / "run.csv").read_text().splitlines()
        assert lines[0] == "iter,chi2,skl,capacity,count"
        assert len(lines) == 4
        assert float(lines[2].split(",")[1]) == tr.chi2[1]
        doc = json.loads(side.read_text())
        assert doc["verdict"] == tr.verdict.value
        assert doc["config"]["lam"] == 0.5 and doc["config"]["pop_size"] == 1000


class TestExactDe:
    def test_one_step_brute_force(self):
        for lam in (0.3, 0.5, 0.9):
            tr = exact_de(fixed_cfg(lam=lam, d=2, mode="exact_quantized", max_iters=1))
            assert tr.chi2[1] == pytest.approx(one_step_oracle(b_r_lambda(3, lam), 2), abs=1e-12)

    def test_one_step_general_kernel(self):
        K = HyperedgeKernel(3, np.array([0.5, 0.2, 0.2, 0.1]))
        cfg = DeConfig(r=3, offspring=OffspringSpec("fixed", 3), kernel=K,
                       mode="exact_quantized", max_iters=1)
        assert exact_de(cfg).chi2[1] == pytest.approx(one_step_oracle(K, 3), abs=1e-12)

    def test_lambda_zero(self):
        tr = exact_de(fixed_cfg(lam=0.0, mode="exact_quantized", max_iters=2))
        assert tr.chi2[1:] == [0.0, 0.0]
        assert tr.verdict == Verdict.NON_RECONSTRUCTION

    def test_bins_convergence(self):
        coarse = exact_de(fixed_cfg(lam=0.6, mode="exact_quantized", bins=64, max_iters=5))
        fine = exact_de(fixed_cfg(lam=0.6, mode="exact_quantized", bins=1024, max_iters=5))
        assert abs(coarse.chi2[-1] - fine.chi2[-1]) < 10 / 64

    def test_monotone(self):
        tr = exact_de(fixed_cfg(lam=0.55, mode="exact_quantized", max_iters=8))
        assert np.all(np.diff(tr.chi2) <= 1e-12)

    def test_poisson_unquantized_step(self):
        off = OffspringSpec("poisson", 1.5)
        ts, p = off.truncated_pmf()
        out = bp_exact(bms.identity(), b_r_lambda(3, 0.5), ts, p, None)
        assert 0 < bms.chi2_capacity(out) < 1

    def test_budget(self):
        with pytest.raises(ResourceError):
            exact_de(fixed_cfg(lam=0.5, d=7, mode="exact_quantized"))
        with pytest.raises(DomainError):
            exact_de(fixed_cfg())


class TestTreeMc:
    def test_depth_zero(self):
        assert tree_mc_estimate(3, 0.5, OffspringSpec("fixed", 2), 0, 10) == (1.0, 0.0)

    def test_lambda_zero(self):
        est, se = tree_mc_estimate(3, 0.0, OffspringSpec("fixed", 2), 3, 2000)
        assert est == 0.0 and se == 0.0

    def test_lambda_one(self):
        est, _ = tree_mc_estimate(3, 1.0, OffspringSpec("poisson", 2), 3, 2000)
        assert est == pytest.approx(1 - math.exp(-2), abs=0.05)

    def test_matches_exact(self):
        ex = exact_de(fixed_cfg(lam=0.5, mode="exact_quantized", bins=1024, max_iters=3))
        est, se = tree_mc_estimate(3, 0.5, OffspringSpec("fixed", 2), 3, 50000, seed=1)
        assert abs(est - ex.chi2[3]) < 4 * se + 2e-3

    def test_general_kernel(self):
        K = HyperedgeKernel(3, np.array([0.64, 0.16, 0.16, 0.04]))
        est, se = tree_mc_estimate(3, None, OffspringSpec("fixed", 2), 1, 50000, kernel=K)
        assert abs(est - one_step_oracle(K, 2)) < 4 * se

    def test_budget(self):
        with pytest.raises(ResourceError):
            tree_mc_estimate(3, 0.5, OffspringSpec("fixed", 4), 20, 1000)
        with pytest.raises(DomainError):
            tree_mc_estimate(3, 0.5, OffspringSpec("fixed", 2), -1, 10)
