"""Tests for posterior summaries and model-comparison scores."""

import math

import numpy as np
import pytest
from scipy.special import logsumexp

from projpolya.centering import CenteringMeasure
from projpolya.data import simulate_mixture, simulate_projected_normal
from projpolya.fitstats import (
    circular_median,
    density_estimate,
    lpml,
    mean_direction_difference,
    moment_posterior,
    savage_dickey_bf,
)
from projpolya.mcmc import McmcConfig, McmcState, PosteriorSamples, run_chain
from projpolya.projection import TWO_PI, marginal_density, moment_grid, default_grid
from projpolya.tree import TreeParams, sample_prior_tree, uniform_tree

UNIFORM_DENSITY = 1.0 / TWO_PI


def _samples_from_states(states, angles, params=None, config=None, report=None):
    """Assemble a PosteriorSamples with freshly computed density caches."""
    params = params or TreeParams()
    config = config or McmcConfig(iterations=10, burn_in=0, thin=1)
    dens_data = np.array(
        [marginal_density(s.tree, s.mu, angles, default_grid(s.mu)) for s in states]
    ).reshape(len(states), angles.size)
    dens_grid = None
    if report is not None:
        dens_grid = np.array(
            [marginal_density(s.tree, s.mu, report, default_grid(s.mu)) for s in states]
        )
    return PosteriorSamples(
        states=states,
        config=config,
        params=params,
        angles=angles,
        density_at_data=dens_data,
        report_angles=report,
        density_at_grid=dens_grid,
        quad_L=100,
        sweeps_run=10,
    )


def _state(tree, mu=(0.0, 0.0), n=0, alpha=1.0):
    return McmcState(
        tree=tree,
        resultants=np.ones(n),
        alpha=alpha,
        mu=CenteringMeasure(*mu),
        accept_r=np.zeros(n, dtype=np.int64),
    )


class TestDensityEstimate:
    def test_single_state_degenerate_band(self):
        tree = sample_prior_tree(TreeParams(M=3), np.random.default_rng(0))
        angles = np.array([1.0, 2.0])
        grid = moment_grid(64)
        samples = _samples_from_states([_state(tree)], angles, report=grid)
        est = density_estimate(samples)
        np.testing.assert_array_equal(est.mean, est.lower)
        np.testing.assert_array_equal(est.mean, est.upper)

    def test_band_ordering_and_periodic_closure(self):
        th = simulate_projected_normal(40, (0.5, 0.5), np.random.default_rng(1)).angles
        config = McmcConfig(iterations=300, burn_in=100, thin=5, seed=3)
        samples = run_chain(th, TreeParams(M=3), config)
        grid = np.concatenate([[0.0], np.linspace(0.5, 6.0, 24), [TWO_PI]])
        est = density_estimate(samples, grid=grid)
        assert np.all(est.lower <= est.mean + 1e-12) and np.all(est.mean <= est.upper + 1e-12)
        assert np.all(est.lower >= 0.0)
        # 0 wraps to 2*pi, so the first and last grid points carry equal
        # estimates
        assert est.grid[0] == est.grid[-1] == TWO_PI
        assert est.mean[0] == est.mean[-1]

    def test_uniform_data_band_covers_flat_density(self):
        th = simulate_projected_normal(500, (0.0, 0.0), np.random.default_rng(2)).angles
        config = McmcConfig(iterations=2000, burn_in=500, thin=5, seed=4)
        samples = run_chain(th, TreeParams(M=4), config, report_angles=moment_grid(64))
        est = density_estimate(samples)
        covered = np.mean((est.lower <= UNIFORM_DENSITY) & (UNIFORM_DENSITY <= est.upper))
        assert covered >= 0.9

    def test_peccary_estimate_is_bimodal_morning_and_afternoon(self):
        # published finding: peaks near 10:00 and 17:00 clock-time
        # (theta = 2.62 and 4.45)
        from projpolya.data import triunfo

        config = McmcConfig(seed=101)
        samples = run_chain(triunfo("peccary").angles, TreeParams(M=4, alpha=0.5, delta=1.1),
                            config, report_angles=moment_grid(128))
        est = density_estimate(samples)
        m = est.mean
        peaks = sorted(
            ((m[i], est.grid[i]) for i in range(m.size) if m[i] > m[i - 1] and m[i] > m[(i + 1) % m.size]),
            reverse=True,
        )
        top_two = sorted(theta for _, theta in peaks[:2])
        assert abs(top_two[0] - 2.618) < 0.45
        assert abs(top_two[1] - 4.451) < 0.45

    def test_deer_mode_in_the_evening(self):
        # published finding: the deer activity mode sits near 18:00
        # (theta = 3*pi/2), so the density there dominates mid-morning
        from projpolya.data import triunfo

        config = McmcConfig(seed=103)
        samples = run_chain(triunfo("deer").angles, TreeParams(M=4, alpha=2.0, delta=1.1),
                            config, report_angles=moment_grid(128))
        est = density_estimate(samples)
        f_evening = np.interp(1.5 * math.pi, est.grid, est.mean)
        f_morning = np.interp(0.25 * math.pi, est.grid, est.mean)
        assert f_evening > f_morning


class TestMomentPosterior:
    def test_identical_draws_zero_width(self):
        tree = sample_prior_tree(TreeParams(M=3), np.random.default_rng(5))
        grid = moment_grid(128)
        samples = _samples_from_states([_state(tree)] * 4, np.array([1.0]), report=grid)
        mp = moment_posterior(samples)
        lo, hi = mp.mean_direction_ci()
        assert lo == hi
        lo, hi = mp.concentration_ci()
        assert lo == hi

    def test_cached_grid_matches_recompute(self):
        th = simulate_projected_normal(30, (1.0, 0.0), np.random.default_rng(6)).angles
        config = McmcConfig(iterations=200, burn_in=50, thin=5, seed=7)
        samples = run_chain(th, TreeParams(M=3), config, report_angles=moment_grid(128))
        mp_cached = moment_posterior(samples, n_angles=128)
        mp_fresh = moment_posterior(samples, n_angles=96)
        # same draws, slightly different quadrature grids; compare on the
        # circle because directions near the seam wrap
        from projpolya.projection import wrap_to_pi

        gap = wrap_to_pi(mp_cached.mean_directions - mp_fresh.mean_directions)
        np.testing.assert_allclose(gap, 0.0, atol=0.05)

    def test_circular_median_at_seam(self):
        angles = np.array([6.1, 6.2, 0.05, 0.1, 6.25])
        med = circular_median(angles)
        assert med in angles
        # the median sits among the cluster near the seam, not at pi
        assert min(med, TWO_PI - med) < 0.3

    def test_unwrapped_ci_spans_seam(self):
        rng = np.random.default_rng(8)
        nus = (0.05 * rng.standard_normal(500)) % TWO_PI  # cluster at 0/2*pi
        from projpolya.fitstats import MomentPosterior

        mp = MomentPosterior(mean_directions=nus, concentrations=np.full(500, 0.5))
        lo, hi = mp.mean_direction_ci()
        assert hi - lo < 0.5  # contiguous, does not span the whole circle


class TestMeanDirectionDifference:
    def test_shifted_chains(self):
        from projpolya.fitstats import MomentPosterior

        rng = np.random.default_rng(9)
        base = 1.0 + 0.1 * rng.standard_normal(400)
        a = MomentPosterior(mean_directions=(base + 0.5) % TWO_PI, concentrations=np.full(400, 0.5))
        b = MomentPosterior(mean_directions=base % TWO_PI, concentrations=np.full(400, 0.5))
        diff, (lo, hi), p_greater = mean_direction_difference(a, b)
        assert abs(diff.mean() - 0.5) < 0.05
        assert lo < 0.5 < hi
        assert p_greater == 1.0

    def test_difference_wraps_to_pi_interval(self):
        from projpolya.fitstats import MomentPosterior

        a = MomentPosterior(mean_directions=np.array([0.1, 0.2]), concentrations=np.ones(2))
        b = MomentPosterior(mean_directions=np.array([6.2, 6.1]), concentrations=np.ones(2))
        diff, _, _ = mean_direction_difference(a, b)
        assert np.all(np.abs(diff) < 1.0)  # not near 2*pi


class TestLpml:
    def test_single_draw_single_datum(self):
        tree = uniform_tree(4)
        angles = np.array([1.3])
        samples = _samples_from_states([_state(tree)], angles)
        score = lpml(samples)
        expected = math.log(marginal_density(tree, CenteringMeasure(0.0, 0.0), 1.3))
        assert score.lpml == pytest.approx(expected, rel=1e-12)
        assert score.cpo[0] == pytest.approx(math.exp(expected), rel=1e-12)

    def test_harmonic_below_arithmetic(self):
        rng = np.random.default_rng(10)
        trees = [sample_prior_tree(TreeParams(M=3), rng) for _ in range(20)]
        angles = np.array([0.5, 2.5, 4.5])
        samples = _samples_from_states([_state(t) for t in trees], angles)
        score = lpml(samples)
        arithmetic = samples.density_at_data.mean(axis=0)
        assert np.all(score.cpo <= arithmetic + 1e-12)

    def test_invariant_to_data_order(self):
        rng = np.random.default_rng(11)
        trees = [sample_prior_tree(TreeParams(M=3), rng) for _ in range(10)]
        angles = np.array([0.5, 2.5, 4.5, 5.5])
        samples = _samples_from_states([_state(t) for t in trees], angles)
        perm = np.array([2, 0, 3, 1])
        permuted = _samples_from_states([_state(t) for t in trees], angles[perm])
        assert lpml(samples).lpml == pytest.approx(lpml(permuted).lpml, rel=1e-12)

    def test_degenerate_density_flagged(self):
        tree = uniform_tree(2)
        samples = _samples_from_states([_state(tree)], np.array([1.0]))
        samples.density_at_data[0, 0] = 0.0
        score = lpml(samples)
        assert score.degenerate[0]
        assert np.isfinite(score.lpml)


class TestSavageDickey:
    def test_zero_data_bf_is_exactly_one(self):
        rng = np.random.default_rng(12)
        params = TreeParams(M=4, alpha=0.7, delta=1.1)
        states = [_state(sample_prior_tree(params, rng), n=0) for _ in range(50)]
        samples = _samples_from_states(states, np.empty(0), params=params)
        sd = savage_dickey_bf(samples)
        assert sd.bf10 == 1.0

    def test_random_alpha_refused(self):
        th = simulate_projected_normal(10, (0.0, 0.0), np.random.default_rng(13)).angles
        config = McmcConfig(iterations=100, burn_in=20, thin=4, seed=14, alpha_prior=(1.0, 2.0))
        samples = run_chain(th, TreeParams(M=2), config)
        with pytest.raises(ValueError, match="fixed"):
            savage_dickey_bf(samples)

    def test_matches_marginal_likelihood_oracle(self):
        # tiny dataset: the Bayes factor equals the ratio of the marginal
        # likelihood under the tree prior to the flat-tree likelihood,
        # computable by brute-force averaging over prior draws
        angles = np.array([2.0, 4.4])
        c = CenteringMeasure(0.0, 0.0)
        params = TreeParams(M=4, alpha=0.5, delta=1.1)
        grid = default_grid(c, 100)
        rng = np.random.default_rng(15)
        T = 20000
        ll = np.empty(T)
        for t in range(T):
            tree = sample_prior_tree(params, rng)
            ll[t] = np.log(marginal_density(tree, c, angles, grid)).sum()
        log_m1 = logsumexp(ll) - math.log(T)
        log_m0 = np.log(marginal_density(uniform_tree(4), c, angles, grid)).sum()
        bf_oracle = math.exp(log_m1 - log_m0)

        config = McmcConfig(iterations=15000, burn_in=1000, thin=5, seed=16)
        samples = run_chain(angles, params, config)
        sd = savage_dickey_bf(samples)
        assert sd.bf10 == pytest.approx(bf_oracle, abs=0.05)
        assert sd.bf10 > 0.0
        assert sd.log_numerator - sd.log_denominator == pytest.approx(math.log(sd.bf10), rel=1e-9)

    def test_directional_sanity(self):
        # chains fit to data from the flat-tree law should give smaller
        # Bayes factors than chains fit to strongly multimodal data
        params = TreeParams(M=4, alpha=1.0, delta=1.1)
        bf_null, bf_mix = [], []
        for rep in range(10):
            null_data = simulate_projected_normal(200, (0.0, 0.0), np.random.default_rng(100 + rep))
            mix_data = simulate_mixture(200, rng=np.random.default_rng(200 + rep))
            config = McmcConfig(iterations=1000, burn_in=200, thin=5, seed=rep)
            bf_null.append(savage_dickey_bf(run_chain(null_data.angles, params, config)).bf10)
            bf_mix.append(savage_dickey_bf(run_chain(mix_data.angles, params, config)).bf10)
        assert np.median(bf_null) <= np.median(bf_mix)
