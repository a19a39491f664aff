import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tlps.errors import DegenerateThresholdError, InvalidModelError, UnstableModelError
from tlps.hyperexp import (
    TlpsModel,
    family_scale,
    heavy_tail_family,
    make_hyperexp,
    moments,
    sample_job_size,
    sample_job_sizes,
    truncated_ccdf,
    truncated_stats,
)

from .conftest import models, random_model


def quad_truncated_moment(dist, theta, n):
    # n-th moment of min(X, theta) as int_0^theta n y^(n-1) Fbar(y) dy
    val, _ = integrate.quad(lambda y: n * y ** (n - 1) * dist.ccdf(y), 0.0, theta,
                            epsabs=0, epsrel=1e-12, limit=200)
    return val


class TestConstruction:
    def test_unit_exponential(self):
        d = make_hyperexp([1], [1])
        assert moments(d) == (1.0, 2.0)

    def test_base_model(self, base_model):
        assert base_model.mean == pytest.approx(20 / 11, rel=1e-14)
        assert base_model.rho == pytest.approx(10 / 11, rel=1e-14)

    def test_two_equal_phases(self):
        m, d = moments(make_hyperexp([0.5, 0.5], [1, 2]))
        assert m == pytest.approx(0.75, rel=1e-15)
        assert d == pytest.approx(1.25, rel=1e-15)

    def test_base_second_moment(self, base_model):
        # 2 (10/11 + (1/11) * 100)
        assert base_model.second_moment == pytest.approx(20.0, rel=1e-14)

    def test_renormalizes_tiny_deviation(self):
        d = make_hyperexp([0.5 + 4e-10, 0.5], [1, 2])
        assert abs(d.weights.sum() - 1) < 1e-15

    @pytest.mark.parametrize(
        "weights, rates",
        [
            ([0.5, 0.5], [1.0]),
            ([], []),
            ([1.1, -0.1], [1, 2]),
            ([1.0], [0.0]),
            ([1.0], [-2.0]),
            ([0.5, 0.49], [1, 2]),
        ],
    )
    def test_rejects(self, weights, rates):
        with pytest.raises(InvalidModelError):
            make_hyperexp(weights, rates)

    def test_phase_order_preserved(self):
        d = make_hyperexp([0.2, 0.8], [0.1, 5.0])
        assert d.rates.tolist() == [0.1, 5.0]

    def test_immutable(self, base_model):
        with pytest.raises(ValueError):
            base_model.dist.rates[0] = 3.0

    def test_unstable_rejected(self):
        with pytest.raises(UnstableModelError):
            TlpsModel(make_hyperexp([1], [1]), 1.0)

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(InvalidModelError):
            TlpsModel(make_hyperexp([1], [1]), 0.0)


class TestHeavyTailFamily:
    @pytest.mark.parametrize(
        "n, eta, half_d",
        [(10, 0.95, 7.20), (100, 1.26, 32.28), (500, 1.40, 113.31), (1000, 1.44, 200.04)],
    )
    def test_table_values(self, n, eta, half_d):
        d = heavy_tail_family(n, 2.5, 1.2, 20 / 11)
        assert family_scale(n, 2.5, 1.2, 20 / 11) == pytest.approx(eta, abs=0.01)
        assert d.rates[0] == pytest.approx(family_scale(n, 2.5, 1.2, 20 / 11), rel=1e-14)
        # the tabulated "d" column equals sum p/mu^2, half of the second moment
        assert d.second_moment / 2 == pytest.approx(half_d, rel=5e-3)

    def test_single_phase(self):
        d = heavy_tail_family(1, 2.5, 1.2, 3.0)
        assert d.weights.tolist() == [1.0]
        assert d.rates[0] == pytest.approx(1 / 3.0, rel=1e-15)

    @pytest.mark.parametrize("n", [1, 7, 100, 1000])
    def test_mean_matches(self, n):
        assert heavy_tail_family(n, 2.5, 1.2, 20 / 11).mean == pytest.approx(20 / 11, rel=1e-10)

    def test_second_moment_grows(self):
        ds = [heavy_tail_family(n, 2.5, 1.2, 20 / 11).second_moment for n in (10, 100, 500, 1000)]
        assert all(a < b for a, b in zip(ds, ds[1:]))

    @pytest.mark.parametrize("g1, g2", [(1.0, 0.1), (2.5, 0.7), (2.5, 1.5), (3.0, 2.0)])
    def test_exponent_band(self, g1, g2):
        with pytest.raises(InvalidModelError):
            heavy_tail_family(10, g1, g2, 1.0)


class TestTruncatedStats:
    def test_theta_zero(self, base_model):
        s = truncated_stats(base_model, 0.0)
        assert (s.x1, s.x2, s.rho_theta, s.w_bar) == (0.0, 0.0, 0.0, 0.0)
        assert s.q == pytest.approx(base_model.rho, rel=1e-14)
        assert s.delta_rho == pytest.approx(1 - base_model.rho, rel=1e-14)
        assert s.ccdf_at_theta == pytest.approx(1.0, rel=1e-15)

    def test_large_theta(self, base_model):
        theta = 50 / base_model.dist.rates.min()
        s = truncated_stats(base_model, theta)
        assert np.all(s.tail_components < 1e-20)
        assert s.x1 == pytest.approx(base_model.mean, abs=1e-9)
        assert s.rho_theta == pytest.approx(base_model.rho, abs=1e-9)
        assert s.q == pytest.approx(0.0, abs=1e-9)
        assert s.x2 == pytest.approx(base_model.second_moment, rel=1e-9)

    def test_negative_theta(self, base_model):
        with pytest.raises(InvalidModelError):
            truncated_stats(base_model, -1e-9)

    def test_quadrature_oracle_base(self, base_model):
        theta = 4.4526
        s = truncated_stats(base_model, theta)
        x1 = quad_truncated_moment(base_model.dist, theta, 1)
        x2 = quad_truncated_moment(base_model.dist, theta, 2)
        assert s.x1 == pytest.approx(x1, rel=1e-6)
        assert s.x2 == pytest.approx(x2, rel=1e-6)
        assert s.rho_theta == pytest.approx(0.5 * x1, rel=1e-6)
        assert s.w_bar == pytest.approx(0.5 * x2 / (2 * (1 - 0.5 * x1)), rel=1e-6)

    def test_trapezoid_oracle_base(self, base_model):
        theta = 4.4526
        y = np.linspace(0.0, theta, 200_001)
        fbar = base_model.dist.ccdf(y)
        s = truncated_stats(base_model, theta)
        assert s.x1 == pytest.approx(np.trapezoid(fbar, y), rel=1e-6)
        assert s.x2 == pytest.approx(np.trapezoid(2 * y * fbar, y), rel=1e-6)

    def test_quadrature_oracle_random(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            model = random_model(rng)
            theta = float(rng.uniform(0.01, 5.0) / model.dist.rates.mean())
            s = truncated_stats(model, theta)
            assert s.x1 == pytest.approx(quad_truncated_moment(model.dist, theta, 1), rel=1e-6)
            assert s.x2 == pytest.approx(quad_truncated_moment(model.dist, theta, 2), rel=1e-6)

    def test_derived_quantities(self, base_model):
        s = truncated_stats(base_model, 2.0)
        lam = base_model.arrival_rate
        assert s.gamma == pytest.approx(lam / (1 - s.rho_theta), rel=1e-15)
        assert s.mean_batch == pytest.approx(s.ccdf_at_theta / (1 - s.rho_theta), rel=1e-15)
        b = 2 * lam * s.ccdf_at_theta * (s.w_bar + 2.0) / (1 - s.rho_theta)
        assert s.batch_extra == pytest.approx(b, rel=1e-14)
        assert s.b_over_f == pytest.approx(b / s.ccdf_at_theta, rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(models(), st.floats(0.0, 200.0))
    def test_invariants(self, model, theta):
        s = truncated_stats(model, theta)
        assert 0 <= s.rho_theta <= model.rho * (1 + 1e-14)
        assert 0 <= s.x1 <= model.mean * (1 + 1e-14)
        assert s.x2 >= 0
        assert 0 <= s.q <= model.rho * (1 + 1e-14) and s.q < 1
        assert s.q == pytest.approx((model.rho - s.rho_theta) / (1 - s.rho_theta), abs=1e-12)
        assert abs(s.tail_components.sum() - s.ccdf_at_theta) <= 1e-12
        assert abs(s.delta_rho - (1 - s.gamma * (model.mean - s.x1))) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(models(), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
    def test_monotone_in_theta(self, model, a, b):
        lo, hi = sorted((a, b))
        s1, s2 = truncated_stats(model, lo), truncated_stats(model, hi)
        assert s1.x1 <= s2.x1
        assert s1.rho_theta <= s2.rho_theta
        assert s1.q >= s2.q


class TestTruncatedCcdf:
    def test_at_zero(self, base_model):
        assert truncated_ccdf(truncated_stats(base_model, 3.0), 0.0) == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("theta", [0.0, 0.7, 12.0])
    def test_memoryless(self, mm1_model, theta):
        s = truncated_stats(mm1_model, theta)
        assert truncated_ccdf(s, 1.3) == pytest.approx(math.exp(-1.3), rel=1e-14)

    def test_ratio(self, base_model):
        s = truncated_stats(base_model, 2.0)
        direct = base_model.dist.ccdf(3.0) / base_model.dist.ccdf(2.0)
        assert truncated_ccdf(s, 1.0) == pytest.approx(direct, rel=1e-12)

    def test_underflow(self, base_model):
        s = truncated_stats(base_model, 1e5)
        with pytest.raises(DegenerateThresholdError):
            truncated_ccdf(s, 1.0)

    def test_negative_x(self, base_model):
        with pytest.raises(InvalidModelError):
            truncated_ccdf(truncated_stats(base_model, 1.0), -0.5)


class TestSampling:
    def test_unit_exponential_mean(self):
        d = make_hyperexp([1], [1])
        x = sample_job_sizes(d, np.random.default_rng(11), 1_000_000)
        assert abs(x.mean() - 1.0) < 0.004

    def test_base_mean(self, base_model):
        d = base_model.dist
        x = sample_job_sizes(d, np.random.default_rng(12), 1_000_000)
        sigma = math.sqrt(d.second_moment - d.mean**2)
        assert abs(x.mean() - d.mean) < 4 * sigma / 1000

    def test_reproducible(self, base_model):
        a = sample_job_sizes(base_model.dist, np.random.default_rng(3), 100)
        b = sample_job_sizes(base_model.dist, np.random.default_rng(3), 100)
        assert np.array_equal(a, b)

    def test_single(self):
        d = make_hyperexp([1], [2.0])
        v = sample_job_size(d, np.random.default_rng(0))
        ref = np.random.default_rng(0)
        ref.choice(1, size=1, p=[1.0])
        assert v == pytest.approx(ref.standard_exponential(1)[0] / 2.0, rel=1e-15)
