import math

import numpy as np
import pytest

from enclosure.certification import (CertificationParams, FrequencyGrid, F_curve, G_curve, H_curve,
                                     TrustedRegion, c_max, c_T, check_tau0, empirical_region, log_G,
                                     longest_run, n_t_threshold, region_from_samples, tau_max,
                                     theorem_bounds, theoretical_region, transform_decay_constants)
from enclosure.discretization import streamed_sweep
from enclosure.errors import DomainError, InfeasibleError, MagnitudeError, RegularityError
from enclosure.indicator import IndicatorSample
from enclosure.series import ExpMonomial, Generic, Geometry, Monomial, sample_trace

from oracles import mode_convolution

ROD = Geometry(1.0)
SQ = Monomial(2)
K_TERM = 1 / 3 + 2 / (3 * math.pi)


@pytest.fixture(scope="module")
def params():
    return CertificationParams.for_source(ROD, SQ)


def _params(**overrides):
    base = dict(mu=6.0, c_mu=0.16, c_T=55.0, c_max=133.0, delta=5.0, tau0=3.0, epsilon=1e-10, eta=0.09)
    base.update(overrides)
    return CertificationParams(**base)


class TestConstants:
    def test_terminal_monomial(self):
        assert c_T(ROD, SQ) == pytest.approx(K_TERM * 25 + 125 / 3, rel=1e-15)
        assert c_T(ROD, SQ) == pytest.approx(55.3052, abs=1e-4)

    def test_terminal_generic(self):
        src = Generic(lambda t: math.sin(2 * t))
        assert c_T(ROD, src) == pytest.approx(K_TERM + 5, rel=1e-6)
        assert c_T(ROD, src) == pytest.approx(5.5455, abs=1e-4)

    def test_terminal_norm_dominates(self):
        # u(x, T) = -(1/a) int f - (2/a) sum_k cos(k pi x / a) int e^{-lam_k (T - s)} f(s) ds
        f = lambda s: s * s
        modes = np.array([mode_convolution((k * math.pi) ** 2, 5.0, f) for k in range(1, 201)])
        x = np.linspace(0.0, 1.0, 2001)
        u = -125 / 3 - 2 * np.cos(np.outer(x, np.arange(1, 201) * math.pi)) @ modes
        l1 = np.sum(0.5 * (np.abs(u[1:]) + np.abs(u[:-1])) * np.diff(x))
        assert 0 < l1 <= c_T(ROD, SQ)

    def test_regularity_monomial(self):
        assert c_max(ROD, SQ) == pytest.approx(125 + 25 / 3, rel=1e-15)

    def test_regularity_dominates_curvature(self):
        samples = sample_trace(ROD, SQ, 20000)
        h = samples.t[1] - samples.t[0]
        second = np.diff(samples.u, 2) / h**2
        first = np.diff(samples.u) / h
        assert max(np.abs(second).max(), np.abs(first).max(), np.abs(samples.u).max()) <= c_max(ROD, SQ)

    @pytest.mark.parametrize("r", [0, 1])
    def test_regularity_rejects_low_order(self, r):
        with pytest.raises(RegularityError):
            c_max(ROD, Monomial(r))

    def test_regularity_generic_needs_vanishing_start(self):
        with pytest.raises(RegularityError):
            c_max(ROD, Generic(lambda t: t))
        with pytest.raises(RegularityError):
            c_max(ROD, Generic(lambda t: t, lambda t: 1.0, lambda t: 0.0))

    def test_regularity_exponential(self):
        src = ExpMonomial(math.e**2, 2.0)
        assert c_max(ROD, src) == pytest.approx((5 + 1 / 3) * src.sobolev_norm(5.0, 2), rel=1e-15)

    def test_decay_constants_non_monomial(self):
        src = ExpMonomial(math.e**2, 2.0)
        mu, c_mu = transform_decay_constants(src, 3.0, 5.0)
        assert mu == 6.0 and 0 < c_mu


class TestBaseFrequency:
    def test_published_configuration(self, params):
        report = check_tau0(params, ROD)
        assert report.F == pytest.approx(0.939, abs=1e-3)
        assert report.G == pytest.approx(2.9114e-11, rel=1e-3)
        assert report.H == pytest.approx(0.0904, abs=5e-4)
        assert report.passed

    def test_margins(self, params):
        report = check_tau0(params, ROD)
        assert report.margins[0] == pytest.approx(3 - report.F)
        assert report.as_tuple() == (True, True, True)

    def test_failures_are_reported(self, params):
        report = check_tau0(params, ROD, T=0.2)
        assert not report.frequency_ok and not report.passed

    def test_tight_slack_fails(self):
        p = CertificationParams.for_source(ROD, SQ, epsilon=1e-12, eta=0.01)
        report = check_tau0(p, ROD)
        assert report.frequency_ok and not report.finite_time_ok and not report.sampling_ok

    @pytest.mark.parametrize("tau", [1.0, 2.0, 3.0])
    def test_log_space_matches_direct(self, params, tau):
        g = params.c_T * math.exp(-5 * tau * tau + 3 * tau) * tau**params.mu / (2 * params.c_mu)
        assert G_curve(params, ROD, tau) == pytest.approx(g, rel=1e-13)
        h = 125 * params.c_max / (24 * params.c_mu * (1 - params.epsilon)) * (tau**-5 + tau**-7) ** 2
        assert H_curve(params, ROD, tau) == pytest.approx(h, rel=1e-13)

    def test_log_space_survives_underflow(self, params):
        assert math.exp(-5 * 15.0**2) == 0.0
        assert log_G(params, ROD, 15.0) == pytest.approx(-5 * 225 + 45 + 6 * math.log(15) + math.log(
            params.c_T / (2 * params.c_mu)), rel=1e-14)

    def test_weight_decreases_beyond_turning_point(self, params):
        start = F_curve(ROD, params.mu)
        taus = np.linspace(start, 15.0, 400)
        logs = [-5 * t * t + 3 * t + params.mu * math.log(t) for t in taus]
        assert all(np.diff(logs) < 0)
        before = np.linspace(0.3, start, 50)
        assert np.diff([-5 * t * t + 3 * t + params.mu * math.log(t) for t in before]).max() > 0

    def test_invalid_slack(self):
        with pytest.raises(DomainError):
            _params(epsilon=1.0)
        with pytest.raises(DomainError):
            _params(delta=0.0)


class TestThreshold:
    def test_published_value(self, params):
        assert abs(n_t_threshold(params, ROD, 3.0) - 2054266) <= 5

    def test_end_of_region(self, params):
        assert n_t_threshold(params, ROD, 5.0) <= 10**10

    @pytest.mark.parametrize("tau", [1.0, 2.0, 3.0])
    def test_matches_direct(self, params, tau):
        direct = math.floor(math.exp(tau) * tau ** ((5 + params.mu + 2 * params.delta) / 2)) + 1
        assert n_t_threshold(params, ROD, tau) == direct

    def test_monotone(self, params):
        values = [n_t_threshold(params, ROD, t) for t in np.arange(0.5, 8.0, 0.1)]
        assert all(x <= y for x, y in zip(values, values[1:]))

    def test_floor_boundary(self):
        # at tau = 1 the power factor is one and the argument is 1000 up to rounding
        g = Geometry(math.log(1000.0))
        assert n_t_threshold(_params(), g, 1.0) == 1001

    def test_overflow(self, params):
        with pytest.raises(MagnitudeError) as err:
            n_t_threshold(params, ROD, 40.0)
        assert err.value.log_value > math.log(2**53)

    def test_rejects_nonpositive(self, params):
        with pytest.raises(DomainError):
            n_t_threshold(params, ROD, 0.0)


class TestTauMax:
    def test_published(self, params):
        assert tau_max(params, ROD, 10**10) >= 5.0

    def test_at_threshold(self, params):
        assert tau_max(params, ROD, n_t_threshold(params, ROD, 3.0)) == pytest.approx(3.0, abs=1e-6)

    def test_nondecreasing(self, params):
        values = [tau_max(params, ROD, n) for n in (10**7, 10**8, 10**9)]
        assert values == sorted(values)

    def test_result_is_feasible(self, params):
        hi = tau_max(params, ROD, 10**8)
        assert n_t_threshold(params, ROD, hi) <= 10**8 < n_t_threshold(params, ROD, hi + 1e-5)

    def test_infeasible(self, params):
        with pytest.raises(InfeasibleError):
            tau_max(params, ROD, 1000)

    def test_theoretical_region(self, params):
        region = theoretical_region(params, ROD, 10**10)
        assert region.tau_lo == 3.0 and region.tau_hi >= 5.0 and region.kind == "theoretical"


class TestBounds:
    def test_certified_value(self, params):
        b13 = theorem_bounds(params, ROD, 3.0)[2]
        assert 0.016 <= b13 <= 0.017

    def test_gap_term(self, params):
        gap = -math.log(1 - math.exp(-6)) / 6
        assert gap == pytest.approx(4.1364e-4, rel=1e-4)
        b11 = theorem_bounds(params, ROD, 3.0)[0]
        assert gap < b11 < gap * (1 + 1e-6)

    def test_combined_dominates_parts(self, params):
        for tau in (3.0, 4.0, 5.0):
            b11, b12, b13 = theorem_bounds(params, ROD, tau)
            assert b11 <= b13 and b12 <= b13

    @pytest.mark.parametrize("tau", [3.0, pytest.param(3.5, marks=pytest.mark.slow),
                                     pytest.param(4.0, marks=pytest.mark.slow)])
    def test_measured_error_within_certified_bound(self, params, tau):
        N_t = n_t_threshold(params, ROD, tau)
        a_nt = streamed_sweep(ROD, SQ, N_t, [tau])[0].a_est
        assert abs(a_nt - 1.0) <= theorem_bounds(params, ROD, tau)[2]


class TestRegions:
    def test_longest_run(self):
        assert longest_run([True, True, False, True, True]) == (0, 2)
        assert longest_run([False, True, False, True, True, True]) == (3, 6)
        assert longest_run([False, False]) is None
        assert longest_run([]) is None

    def test_grid_points(self):
        pts = FrequencyGrid().points()
        assert pts[0] == 1.0 and pts[-1] == 15.0 and len(pts) == 29
        with pytest.raises(DomainError):
            FrequencyGrid(tau_start=0.0)
        with pytest.raises(DomainError):
            FrequencyGrid(tau_start=2.0, tau_end=1.0)

    def test_region_invariants(self):
        with pytest.raises(DomainError):
            TrustedRegion(2.0, 1.0, 0.01, "empirical")
        with pytest.raises(DomainError):
            TrustedRegion(1.0, 2.0, 0.0, "empirical")
        with pytest.raises(DomainError):
            TrustedRegion(1.0, None, 0.01, "empirical")

    def test_empty_region(self):
        samples = [IndicatorSample.from_transforms(t, 1.0, 1.0) for t in (1.0, 1.5)]
        region = region_from_samples(ROD, samples, 0.1, 0.5)
        assert region.empty and region.describe() == "None"
        assert region.summary() == "empirical,NA,NA,0.10000000000000001"
        assert region.diagnostics_csv().splitlines()[1].startswith("1,NA,NA,0,")

    def test_tie_prefers_lower_frequency(self):
        def exact(tau):
            # u_hat chosen so that I = -2 f_hat e^{-2 tau}, which recovers a = 1 exactly
            return IndicatorSample.from_transforms(tau, (-2 * math.exp(-2 * tau) - 1) / tau, 1.0)

        taus = [1.0, 1.5, 2.0, 2.5, 3.0]
        samples = [IndicatorSample.from_transforms(t, 1.0, 1.0) if t == 2.0 else exact(t) for t in taus]
        region = region_from_samples(ROD, samples, 0.01, 0.5)
        assert region.interval == (1.0, 1.5)

    def test_diagnostics_columns(self):
        region = empirical_region(ROD, SQ, N_t=1000, grid=FrequencyGrid(2.0, 3.0, 0.5))
        lines = region.diagnostics_csv().splitlines()
        assert lines[0] == "tau,a_est,abs_error,inside,cancellation_digits"
        assert len(lines) == 4 and all(len(line.split(",")) == 5 for line in lines)

    def test_grows_with_sample_count(self):
        regions = [empirical_region(ROD, SQ, N_t=n).interval for n in (10**3, 10**4, 10**5)]
        for small, large in zip(regions, regions[1:]):
            assert large[0] <= small[0] and small[1] <= large[1]

    def test_streaming_is_identical(self):
        grid = FrequencyGrid(1.0, 8.0, 0.5)
        dense = empirical_region(ROD, SQ, N_t=4000, grid=grid)
        stream = empirical_region(ROD, SQ, N_t=4000, grid=grid, stream=True)
        assert dense.interval == stream.interval

    def test_trapezoid_source_rule(self):
        assert empirical_region(ROD, SQ, N_t=1000, fhat_rule="trapezoid").interval == (2.0, 5.0)

    def test_measured_samples(self):
        samples = sample_trace(ROD, SQ, 1000)
        assert empirical_region(ROD, SQ, samples=samples).interval == empirical_region(ROD, SQ).interval
