import copy
import math

import numpy as np
import pytest
from scipy import stats as sps

from rmtldp.loggas import (
    GasState,
    MomentEstimate,
    Potential,
    concentration_bound,
    estimate_equilibrium_moment,
    iid_truncated_tail,
    lipschitz_concentration_probe,
    loggas_logdensity,
    mcmc_sweep,
    metropolis_accept_probability,
    moment,
    run_chain,
    sample_single_particle,
    truncated_moment,
)
from rmtldp.matcore import eigvals
from rmtldp.randsrc import GaussianProfile
from rmtldp.rng import stream
from rmtldp.wigner import assemble_wigner


class TestPotential:
    def test_quadratic_remainder_needs_higher_growth(self):
        with pytest.raises(ValueError):
            Potential(b=1.0, alpha=2.0, beta=1.0, w_kind="quadratic", w_coef=0.5)
        Potential(b=1.0, alpha=3.0, beta=1.0, w_kind="quadratic", w_coef=0.5)

    def test_abs_remainder(self):
        pot = Potential(b=1.0, alpha=2.0, beta=2.0, w_kind="abs", w_coef=2.0)
        assert pot.value(-1.5) == pytest.approx(1.5 ** 2 + 3.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            Potential(b=0.0, alpha=2.0, beta=1.0)
        with pytest.raises(ValueError):
            Potential(b=1.0, alpha=1.5, beta=1.0)
        with pytest.raises(ValueError):
            Potential(b=1.0, alpha=2.0, beta=1.0, w_kind="log")

    def test_json_roundtrip(self):
        pot = Potential(b=0.25, alpha=2.0, beta=1.0, w_kind="abs", w_coef=0.5)
        assert Potential.from_json(pot.to_json()) == pot


class TestLogDensity:
    def test_two_particle_value(self):
        pot = Potential(b=1.0, alpha=2.0, beta=2.0)
        # beta log|0-1| - 2 (V(0)+V(1)) = 0 - 2
        assert loggas_logdensity([0.0, 1.0], pot) == pytest.approx(-2.0)

    def test_collision_minus_inf(self):
        pot = Potential(b=1.0, alpha=2.0, beta=2.0)
        assert loggas_logdensity([0.7, 0.7, 1.0], pot) == -math.inf

    def test_permutation_invariance(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.5)
        rng = stream(301, 0)
        lam = rng.standard_normal(9)
        base = loggas_logdensity(lam, pot)
        for _ in range(5):
            perm = rng.permutation(9)
            assert loggas_logdensity(lam[perm], pot) == pytest.approx(base, rel=1e-12)

    def test_nonfinite_rejected(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        with pytest.raises(ValueError):
            loggas_logdensity([0.0, np.nan], pot)


class TestMetropolisKernel:
    def test_detailed_balance_on_three_state_toy(self):
        # explicit kernel enumeration on three N=2 configurations with a
        # uniform proposal over the other two states
        pot = Potential(b=1.0, alpha=2.0, beta=2.0)
        states = [np.array([0.0, 1.0]), np.array([0.3, 1.4]), np.array([-0.8, 0.5])]
        logpi = [loggas_logdensity(s, pot) for s in states]
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                k_ij = 0.5 * metropolis_accept_probability(logpi[j] - logpi[i])
                k_ji = 0.5 * metropolis_accept_probability(logpi[i] - logpi[j])
                lhs = math.exp(logpi[i]) * k_ij
                rhs = math.exp(logpi[j]) * k_ji
                assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_zero_step_accepts_everything(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        state = GasState.initial(pot, 8, seed=1, step=0.0)
        before = state.lambdas.copy()
        mcmc_sweep(state, pot)
        assert np.array_equal(state.lambdas, before)
        assert state.acceptance_rate == 1.0

    def test_checkpoint_roundtrip_resumes_identically(self):
        pot = Potential(b=0.5, alpha=2.0, beta=1.0)
        state = GasState.initial(pot, 6, seed=5)
        run_chain(state, pot, 5)
        blob = state.checkpoint(pot)
        restored, pot2 = GasState.from_checkpoint(copy.deepcopy(blob))
        assert pot2 == pot
        run_chain(state, pot, 3)
        run_chain(restored, pot2, 3)
        assert np.array_equal(state.lambdas, restored.lambdas)


class TestMoments:
    def test_constant_configuration(self):
        assert moment([1.0, 1.0, 1.0, 1.0], 3) == 1.0

    def test_truncated_moment_example(self):
        lam = np.concatenate([[5.0, -4.0], 0.1 * np.ones(18)])
        assert math.floor(math.log(20)) == 2
        assert truncated_moment(lam, 3) == pytest.approx((125.0 - 64.0) / 20.0)

    def test_partition_identity(self):
        rng = stream(302, 0)
        lam = rng.standard_normal(50) * 3
        p = 3
        k = math.floor(math.log(50))
        idx = np.argsort(-np.abs(lam))
        bottom = float(np.sum(lam[idx[k:]] ** p) / 50)
        assert moment(lam, p) - truncated_moment(lam, p) == pytest.approx(bottom, rel=1e-12)

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            truncated_moment([1.0, 2.0], 3)


class TestEquilibriumMoment:
    def test_p_zero_is_exactly_one(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        res = estimate_equilibrium_moment(pot, 0, 16, 10, seed=0)
        assert res.estimate == 1.0 and res.stderr == 0.0

    def test_odd_moment_vanishes_for_even_potential(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        res = estimate_equilibrium_moment(pot, 3, 16, 150, seed=1, burn_in=1500, thin=8)
        assert abs(res.estimate) <= 3.0 * res.stderr + 0.05

    def test_goe_oracle_second_moment(self):
        # quadratic potential x^2/4 at beta=1 is the eigenvalue law of a
        # sqrt(N)-normalized symmetric Gaussian matrix with diag variance 2
        pot = Potential(b=0.25, alpha=2.0, beta=1.0)
        res = estimate_equilibrium_moment(pot, 2, 64, 250, seed=2, burn_in=3000, thin=16)
        prof = GaussianProfile(sigma2=2.0, beta=1)
        draws = []
        for k in range(400):
            _, xn = assemble_wigner(64, prof, stream(303, 1, k))
            draws.append(float(np.mean(eigvals(xn) ** 2)))
        oracle = float(np.mean(draws))
        oracle_se = float(np.std(draws, ddof=1) / math.sqrt(len(draws)))
        assert abs(res.estimate - oracle) <= 3.0 * math.hypot(res.stderr, oracle_se)
        assert not res.flagged

    def test_returns_moment_estimate(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        res = estimate_equilibrium_moment(pot, 2, 8, 40, seed=3, burn_in=300, thin=2)
        assert isinstance(res, MomentEstimate)


class TestIidOracle:
    def test_rejection_sampler_matches_gaussian(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)  # V = x^2: density N(0, 1/(2N))
        N = 32
        x = sample_single_particle(pot, N, 100_000, stream(304, 0))
        ks = sps.kstest(x, sps.norm(scale=math.sqrt(1.0 / (2 * N))).cdf)
        assert ks.pvalue > 1e-4

    def test_unreachable_threshold(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        est = iid_truncated_tail(pot, 3, 32, 100.0, 2000, seed=1)
        assert est.p_hat == 0.0 and est.hits == 0 and est.flagged
        assert est.ci_high > 0.0

    def test_monotone_in_threshold(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        grid = [1e-4, 2e-4, 4e-4, 8e-4]
        vals = [iid_truncated_tail(pot, 3, 32, x, 4000, seed=7).p_hat for x in grid]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_against_convolution_oracle(self):
        # V = x^2, N = 32: single-particle law N(0, 1/64), k = 3 summands
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        N, k, x = 32, 3, 4e-4
        sigma = math.sqrt(1.0 / (2 * N))
        edges = np.linspace(-0.6, 0.6, 2 ** 15 + 1)
        cell_mass = np.diff(sps.norm(scale=sigma).cdf(np.cbrt(edges)))
        conv = np.convolve(np.convolve(cell_mass, cell_mass), cell_mass)
        centers = 0.5 * (edges[:-1] + edges[1:])
        grid3 = np.arange(conv.size) * (centers[1] - centers[0]) + 3 * centers[0]
        oracle = float(conv[grid3 >= N * x / 1.0].sum())
        est = iid_truncated_tail(pot, 3, N, x, 40_000, seed=9)
        assert abs(est.p_hat - oracle) <= 3.0 * est.stderr + 0.01


class TestConcentrationProbe:
    def test_bound_arithmetic(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        assert concentration_bound(pot, 32, 0.5) == pytest.approx(math.exp(-64.0))

    def test_zero_threshold_never_violated(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        rows = lipschitz_concentration_probe(pot, "identity_clip", 12, [0.0], 150,
                                             seed=4, burn_in=600, thin=3)
        assert rows[0].bound == 1.0 and not rows[0].violated

    def test_frequencies_weakly_decreasing(self):
        pot = Potential(b=1.0, alpha=2.0, beta=1.0)
        rows = lipschitz_concentration_probe(pot, "abs_clip", 12, [0.0, 0.01, 0.03, 0.1], 200,
                                             seed=5, burn_in=600, thin=3)
        freqs = [r.frequency for r in rows]
        assert all(b <= a for a, b in zip(freqs, freqs[1:]))
