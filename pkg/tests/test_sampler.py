"""
Unit tests for the sampler module.

Feasibility bounds, the Metropolis kernel, agreement with exact enumeration on
small regions, height profiles and the comparison with the analytic limit
shape.
"""

from collections import Counter
from itertools import product

import numpy as np
import pytest

from fivevertex.errors import FeasibilityError, InvalidArgumentError
from fivevertex.limit_shape import builtin_G, limit_shape_mesh, polar_grid, semi_boxed_large_r_heights
from fivevertex.model_core import build_domain, height_function, log_config_weight, config_from_heights
from fivevertex.models import Region
from fivevertex.sampler import (
    MetropolisSampler,
    chain_generators,
    empirical_height_profile,
    enumerate_region,
    exact_height_mean,
    height_bounds,
    invalid_faces,
    limit_shape_discrepancy,
    mcmc_sample,
    region_log_weight,
    run_chains,
    staircase_region,
    sublattice_masks,
    transition_log_probability,
)


@pytest.fixture
def domain():
    return build_domain([0.6, 0.35], [1.0, 0.8])


@pytest.fixture
def small_region():
    return staircase_region(3, 3)


@pytest.fixture
def region():
    return staircase_region(5, 5)


class TestRegions:
    """Tests for staircase_region and height_bounds."""

    def test_staircase(self, region):
        """Test boundary heights floor((a + b)/2) and a free interior."""
        assert region.heights.shape == (6, 6)
        assert region.heights[5, 5] == 5 and region.heights[0, 3] == 1
        assert region.n_free == 16
        assert not region.free[0, 2] and region.free[2, 2]

    def test_bounds_are_extensions(self, region):
        """Test both bounds are valid, match the fixed faces and are ordered."""
        h_min, h_max = height_bounds(region)
        fixed = ~region.free
        for h in (h_min, h_max):
            assert not invalid_faces(h).any()
            assert np.array_equal(h[fixed], region.heights[fixed])
        assert np.all(h_min <= h_max)
        assert np.any(h_min < h_max)

    def test_infeasible(self):
        """Test an inconsistent boundary raises a feasibility error."""
        region = staircase_region(4, 4)
        heights = region.heights.copy()
        heights[4, 0] += 3
        with pytest.raises(FeasibilityError):
            height_bounds(Region(heights=heights, free=region.free))

    def test_bad_size(self):
        """Test degenerate rectangles are rejected."""
        with pytest.raises(InvalidArgumentError):
            staircase_region(1, 4)


class TestWeights:
    """Tests for the height-based weights."""

    def test_matches_config_weight(self, region, domain):
        """Test region_log_weight equals the edge-based configuration weight."""
        for h in height_bounds(region):
            expected = log_config_weight(config_from_heights(h), domain)
            assert region_log_weight(h, domain) == pytest.approx(expected, abs=1e-12)

    def test_detailed_balance(self, region, domain):
        """Test w(c) P(c -> c') = w(c') P(c' -> c) for every sublattice update."""
        states, log_w = enumerate_region(region, domain)
        picked = np.random.default_rng(0).choice(len(states), size=min(40, len(states)), replace=False)
        checked = 0
        for mask in sublattice_masks(region):
            faces = np.argwhere(mask)
            for k in picked:
                state, lw = states[k], log_w[k]
                for steps in product((-1, 0, 1), repeat=len(faces)):
                    other = state.copy()
                    for (a, b), step in zip(faces, steps):
                        other[a, b] += step
                    if invalid_faces(other).any():
                        continue
                    forward = transition_log_probability(state, other, region, domain, mask)
                    backward = transition_log_probability(other, state, region, domain, mask)
                    assert np.isfinite(forward) == np.isfinite(backward)
                    if np.isfinite(forward):
                        lw_other = region_log_weight(other, domain)
                        assert lw + forward == pytest.approx(lw_other + backward, abs=1e-12)
                        checked += 1
        assert checked > 0

    def test_rows_sum_to_one(self, region, domain):
        """Test the sublattice update probabilities out of a state sum to one."""
        states, _ = enumerate_region(region, domain)
        state = states[len(states) // 2]
        for mask in sublattice_masks(region):
            faces = np.argwhere(mask)
            total = 0.0
            for steps in product((-1, 0, 1), repeat=len(faces)):
                other = state.copy()
                for (a, b), step in zip(faces, steps):
                    other[a, b] += step
                total += np.exp(transition_log_probability(state, other, region, domain, mask))
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_not_a_move(self, region, domain):
        """Test a change outside the sublattice has zero probability."""
        h_min, h_max = height_bounds(region)
        first = sublattice_masks(region)[0]
        outside = (h_max != h_min) & ~first
        assert outside.any()
        assert transition_log_probability(h_min, h_max, region, domain, first) == -np.inf
        other = h_min.copy()
        other[tuple(np.argwhere(outside)[0])] += 1
        assert transition_log_probability(h_min, other, region, domain, first) == -np.inf

    def test_matches_sampler_update(self, region, domain):
        """Test one sampler update from a fixed state reproduces the kernel within 0.03 total variation."""
        h_min, _ = height_bounds(region)
        mask = sublattice_masks(region)[0]
        n = 20000
        states = np.stack([h_min] * n)
        sampler = MetropolisSampler(region, domain)
        sampler.update(states, chain_generators(21, n), mask)
        counts = Counter(s.tobytes() for s in states)
        tv = 0.0
        seen = 0.0
        for key, c in counts.items():
            other = np.frombuffer(key, dtype=states.dtype).reshape(h_min.shape)
            p = np.exp(transition_log_probability(h_min, other, region, domain, mask))
            tv += abs(c / n - p)
            seen += p
        tv += 1.0 - seen
        assert 0.5 * tv < 0.03


class TestDynamics:
    """Tests for MetropolisSampler and run_chains."""

    def test_sweep_keeps_validity(self, region, domain):
        """Test sweeps keep heights valid and boundary faces fixed."""
        h_min, h_max = height_bounds(region)
        states = np.stack([h_min, h_max])
        sampler = MetropolisSampler(region, domain)
        generators = chain_generators(3, 2)
        for _ in range(50):
            sampler.sweep(states, generators)
            assert not invalid_faces(states).any()
            assert np.array_equal(states[:, ~region.free], np.stack([region.heights[~region.free]] * 2))
        assert 0 < sampler.acceptance < 1

    def test_matches_enumeration(self, region, domain):
        """Test independent chain end states reproduce the exact mean heights."""
        states, log_w = enumerate_region(region, domain)
        exact = exact_height_mean(states, log_w)
        run = run_chains(region, domain, n_chains=1000, burn_in=200, sweeps=0, seed=5)
        profile = empirical_height_profile(run.final)
        assert np.all(np.abs(profile.mean - exact) <= 3 * profile.stderr + 1e-12)

    def test_stationary_distribution(self, small_region, domain):
        """Test the long-run state distribution is within 0.02 total variation of the exact one."""
        states, log_w = enumerate_region(small_region, domain)
        p = np.exp(log_w - log_w.max())
        p /= p.sum()
        exact = {s.tobytes(): q for s, q in zip(states, p)}

        h_min, _ = height_bounds(small_region)
        chains = np.stack([h_min] * 200)
        sampler = MetropolisSampler(small_region, domain)
        generators = chain_generators(8, 200)
        for _ in range(50):
            sampler.sweep(chains, generators)
        counts = Counter()
        for k in range(500):
            sampler.sweep(chains, generators)
            if k % 5 == 0:
                counts.update(c.tobytes() for c in chains)
        n = sum(counts.values())
        assert set(counts) <= set(exact)
        tv = 0.5 * sum(abs(counts.get(key, 0) / n - q) for key, q in exact.items())
        assert tv <= 0.02

    def test_reproducible_across_workers(self, region, domain):
        """Test the same seed gives the same chains regardless of worker count."""
        one = run_chains(region, domain, n_chains=4, burn_in=5, sweeps=5, seed=11, workers=1)
        two = run_chains(region, domain, n_chains=4, burn_in=5, sweeps=5, seed=11, workers=2)
        assert np.array_equal(one.final, two.final)
        assert np.array_equal(one.profile.mean, two.profile.mean)

    def test_bad_arguments(self, region, domain):
        """Test non-positive chain counts are rejected."""
        with pytest.raises(InvalidArgumentError):
            run_chains(region, domain, n_chains=0)

    def test_mcmc_sample(self, region, domain):
        """Test a single chain returns a valid configuration with the region's boundary."""
        config = mcmc_sample(region, domain, sweeps=20, seed=2)
        heights = height_function(config).heights + region.heights[0, 0]
        fixed = ~region.free
        assert np.array_equal(heights[fixed], region.heights[fixed])


class TestProfiles:
    """Tests for empirical_height_profile."""

    def test_single_sample(self, region):
        """Test one sample gives its own heights with zero error."""
        h = height_bounds(region)[1]
        profile = empirical_height_profile([config_from_heights(h)])
        assert np.array_equal(profile.mean, h - h[0, 0])
        assert not profile.stderr.any()

    def test_empty(self):
        """Test an empty sample is rejected."""
        with pytest.raises(InvalidArgumentError):
            empirical_height_profile([])

    def test_error_scaling(self, region, domain):
        """Test four times as many samples halve the standard error."""
        states, log_w = enumerate_region(region, domain)
        p = np.exp(log_w - log_w.max())
        p /= p.sum()
        rng = np.random.default_rng(21)
        small = empirical_height_profile(states[rng.choice(len(states), 2000, p=p)])
        large = empirical_height_profile(states[rng.choice(len(states), 8000, p=p)])
        ratio = large.stderr[region.free].mean() / small.stderr[region.free].mean()
        assert ratio == pytest.approx(0.5, abs=0.05)

    def test_fixed_faces_have_no_variance(self, region, domain):
        """Test the variance collapses on frozen faces."""
        run = run_chains(region, domain, n_chains=4, burn_in=10, sweeps=10, seed=4)
        assert not run.profile.stderr[~region.free].any()
        assert run.profile.stderr[region.free].any()


@pytest.mark.slow
class TestLimitShapeComparison:
    """Tests comparing sampled heights with the analytic limit shape."""

    def test_semi_boxed_large_r(self):
        """Test the L = 64 empirical height is within 0.05 of the analytic surface."""
        L = 64
        domain = build_domain([2, 1.25], [2, 1.25])
        mesh = limit_shape_mesh(builtin_G("semi_boxed_large_r", domain), domain, polar_grid(80, 80))
        region = semi_boxed_large_r_heights(L)
        run = run_chains(region, domain, n_chains=2, burn_in=4000, sweeps=1000, thin=10, seed=1)
        assert limit_shape_discrepancy(run.profile, mesh, L, window=(0.25, 1.75, 0.25, 1.75)) <= 0.05


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
