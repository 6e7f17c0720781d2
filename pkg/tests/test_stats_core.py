import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from mlaucb.environments import GaussianArmSpec
from mlaucb.errors import ConfigurationError, DomainError
from mlaucb.stats_core import (
    RandomStream,
    TDist,
    betainc,
    chk_quantile_bound,
    sample_bivariate,
    sample_bivariate_many,
    significance_level,
    t_cdf,
    t_quantile,
)

DOFS = list(range(1, 101)) + [1000]
DELTAS = [1e-6, 1e-3, 0.01, 0.05, 0.25, 0.49]


class TestRandomStream:
    def test_same_key_replays(self):
        a = RandomStream(11, 3).normal(50)
        b = RandomStream(11, 3).normal(50)
        assert np.array_equal(a, b)

    def test_distinct_ids_differ_and_are_uncorrelated(self):
        a = RandomStream(11, 3).normal(20000)
        b = RandomStream(11, 4).normal(20000)
        assert not np.array_equal(a[:10], b[:10])
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(20000)

    def test_distinct_base_seeds_differ(self):
        assert RandomStream(1, 0).normal() != RandomStream(2, 0).normal()

    def test_counter_is_monotone(self):
        s = RandomStream(5, 5)
        seen = [s.counter]
        for _ in range(5):
            s.normal(7)
            seen.append(s.counter)
        assert seen == sorted(seen) and seen[-1] > seen[0]

    def test_role_derivation_is_stable(self):
        a = RandomStream.for_role(9, 3, "online", 1).normal(5)
        b = RandomStream.for_role(9, 3, "online", 1).normal(5)
        c = RandomStream.for_role(9, 3, "offline", 1).normal(5)
        assert np.array_equal(a, b) and not np.array_equal(a, c)


class TestBivariate:
    def test_perfect_correlation_copies_reward(self):
        spec = GaussianArmSpec(0, 0, 1, 1, 1)
        r, h = sample_bivariate_many(spec, RandomStream(0, 0), 1000)
        assert np.array_equal(r, h)

    def test_zero_correlation(self):
        spec = GaussianArmSpec(3, -3, 1, 1, 0)
        r, h = sample_bivariate_many(spec, RandomStream(0, 1), 100_000)
        assert -0.02 < np.corrcoef(r, h)[0, 1] < 0.02

    def test_moments_match_fig4_arm(self):
        spec = GaussianArmSpec(0.5, 1.0, 1, 1, math.sqrt(0.5))
        r, h = sample_bivariate_many(spec, RandomStream(0, 2), 100_000)
        assert abs(r.mean() - 0.5) < 0.02
        assert abs(h.mean() - 1.0) < 0.02
        assert abs(np.corrcoef(r, h)[0, 1] - 0.7071) < 0.02

    def test_scales(self):
        spec = GaussianArmSpec(0, 0, 2.0, 0.5, -0.3)
        r, h = sample_bivariate_many(spec, RandomStream(0, 3), 100_000)
        assert r.std() == pytest.approx(2.0, rel=0.02)
        assert h.std() == pytest.approx(0.5, rel=0.02)
        assert np.corrcoef(r, h)[0, 1] == pytest.approx(-0.3, abs=0.02)

    def test_single_draw_is_a_pair_of_floats(self):
        r, h = sample_bivariate(GaussianArmSpec(0, 0, 1, 1, 0.5), RandomStream(0, 0))
        assert isinstance(r, float) and isinstance(h, float)

    @pytest.mark.parametrize("bad", [dict(sigma=0), dict(sigma_tilde=-1), dict(rho=1.5)])
    def test_invalid_spec(self, bad):
        kwargs = dict(mu=0, mu_tilde=0, sigma=1, sigma_tilde=1, rho=0) | bad
        with pytest.raises(ConfigurationError):
            GaussianArmSpec(**kwargs)


class TestTDistribution:
    def test_symmetry_point(self):
        assert t_cdf(7, 0) == 0.5

    def test_cauchy_cdf(self):
        assert t_cdf(1, 1) == pytest.approx(0.5 + math.atan(1) / math.pi, abs=1e-12)

    def test_cdf_d2_by_quadrature(self):
        # oracle: integrate the t_2 density numerically
        dens = lambda u: (1 + u * u / 2) ** -1.5 / (2 * math.sqrt(2))
        val, _ = integrate.quad(dens, -np.inf, 2.92)
        assert val == pytest.approx(0.95, abs=1e-4)
        assert t_cdf(2, 2.92) == pytest.approx(val, abs=1e-10)

    @pytest.mark.parametrize("d", [1, 2, 3, 5, 10, 30, 100, 1000])
    @pytest.mark.parametrize("x", [-40.0, -3.0, -0.5, 0.1, 1.0, 2.5, 8.0, 1e4])
    def test_cdf_against_scipy(self, d, x):
        assert t_cdf(d, x) == pytest.approx(stats.t.cdf(x, d), abs=1e-12)

    def test_betainc_against_scipy(self):
        from scipy.special import betainc as ref
        for a, b, x in [(0.5, 0.5, 0.3), (2.5, 0.5, 0.9), (50, 0.5, 0.99), (3, 7, 0.2)]:
            assert betainc(a, b, x) == pytest.approx(ref(a, b, x), abs=1e-13)

    def test_quantile_median(self):
        assert t_quantile(5, 0.5) == 0.0

    def test_quantile_cauchy(self):
        assert t_quantile(1, 0.025) == pytest.approx(math.tan(math.pi * 0.475), abs=1e-9)
        assert t_quantile(1, 0.025) == pytest.approx(12.7062, abs=1e-4)

    def test_quantile_normal_limit(self):
        z = NormalDist().inv_cdf(0.975)
        assert t_quantile(10 ** 6, 0.025) == pytest.approx(z, abs=1e-4)

    def test_round_trip_grid(self):
        worst = max(abs(t_cdf(d, t_quantile(d, de)) - (1 - de)) for d in DOFS for de in DELTAS)
        assert worst <= 1e-10

    @pytest.mark.parametrize("d", [1, 2, 3, 7, 40, 1000])
    def test_quantile_against_scipy(self, d):
        for de in DELTAS + [0.7, 0.99]:
            assert t_quantile(d, de) == pytest.approx(stats.t.isf(de, d), rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
    def test_quantile_domain(self, bad):
        with pytest.raises(DomainError):
            t_quantile(3, bad)

    def test_dof_domain(self):
        with pytest.raises(DomainError):
            t_cdf(0, 1.0)

    def test_tdist_wrapper(self):
        dist = TDist(4)
        assert dist.cdf(dist.quantile(0.1)) == pytest.approx(0.9, abs=1e-12)
        assert dist.sf(0.0) == 0.5

    @given(d=st.integers(1, 300), a=st.floats(1e-6, 0.49), b=st.floats(1e-6, 0.49))
    @settings(max_examples=200, deadline=None)
    def test_quantile_monotone_in_level(self, d, a, b):
        if a < b:
            a, b = b, a
        if a > b:
            assert t_quantile(d, b) > t_quantile(d, a)

    @given(d=st.integers(1, 300), delta=st.floats(1e-6, 0.4999))
    @settings(max_examples=200, deadline=None)
    def test_quantile_nonincreasing_in_dof(self, d, delta):
        assert t_quantile(d + 1, delta) <= t_quantile(d, delta) * (1 + 1e-12)

    @given(d=st.integers(1, 1000), delta=st.floats(1e-8, 1 - 1e-8))
    @settings(max_examples=300, deadline=None)
    def test_round_trip_property(self, d, delta):
        assert abs(t_cdf(d, t_quantile(d, delta)) - (1 - delta)) <= 1e-9


class TestQuantileBound:
    def test_d2_at_e(self):
        assert chk_quantile_bound(2, math.e) == pytest.approx(math.sqrt(2 * (math.e ** 2 - 1)), rel=1e-14)
        assert chk_quantile_bound(2, math.e) == pytest.approx(3.5746, abs=1e-4)

    def test_vanishes_as_s_approaches_one(self):
        assert chk_quantile_bound(3, 1 + 1e-12) < 1e-5

    def test_fig2_point(self):
        s = 1000.0
        d = math.floor(math.log(s))
        assert d == 6
        assert chk_quantile_bound(d, s) >= t_quantile(d, 1 / (2 * s * math.sqrt(math.log(s))))

    def test_dominates_quantile(self):
        for e in range(1, 7):
            s = 10.0 ** e
            for d in range(2, int(2 * math.log(s)) + 1):
                assert t_quantile(d, significance_level(s)) <= chk_quantile_bound(d, s)

    @pytest.mark.parametrize("d,s", [(1, 10.0), (2, 1.0), (3, 0.5), (2.5, 10.0)])
    def test_domain(self, d, s):
        with pytest.raises(DomainError):
            chk_quantile_bound(d, s)

    def test_significance_level(self):
        assert significance_level(21) == pytest.approx(1 / (42 * math.sqrt(math.log(21))))
        with pytest.raises(DomainError):
            significance_level(1)
