"""Certified and empirical trusted frequency regions.

A trusted region is an interval of frequencies tau on which the discrete
endpoint estimate a_Nt(tau) is within a stated distance of the true a.  The
theoretical region follows from three admissibility checks at a base
frequency tau0 together with a sample-count threshold N_t^delta(tau); the
empirical region is observed by scanning a frequency grid.

Quantities of the form exp(-T tau^2) tau^mu underflow long before the
sweeps end, so every such product is formed as a sum of logarithms.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .discretization import discrete_gap_bound, discrete_sweep, streamed_sweep
from .errors import DomainError, InfeasibleError, MagnitudeError, RegularityError
from .indicator import cancellation_digits, laplace_transform, monomial_transform_constants
from .series import DEFAULT_N, ExpMonomial, Generic, Monomial, sample_trace

_TERMINAL_COEFF = 1.0 / 3.0 + 2.0 / (3.0 * math.pi)
_MAX_EXACT_INT = 2**53


# --------------------------------------------------------------------------
# Source-dependent constants


def c_T(geometry, source):
    """Bound on the L^1 norm of u(., T), already multiplied by the relevant source norm."""
    a_U, T = geometry.a_U, geometry.T
    if isinstance(source, Monomial):
        r = source.r
        return _TERMINAL_COEFF * T**r * a_U**2 + T ** (r + 1) / (r + 1)
    return (_TERMINAL_COEFF * a_U**2 + T) * source.sup_norm(T)


def c_max(geometry, source):
    """Bound on the W^{2,inf} norm of the trace u(0, .), already multiplied by the source norm."""
    a_L, a_U, T = geometry.a_L, geometry.a_U, geometry.T
    if isinstance(source, Monomial):
        r = source.r
        if r < 2:
            raise RegularityError(f"t^{r} does not vanish to second order at t = 0")
        if T >= r + 1:
            return T ** (r + 1) / a_L + T**r * a_U / 3.0
        return (T ** (r - 1) * max(T * T / (r + 1), T, r) / a_L
                + a_U * T ** (r - 2) * max(T * T, r * T, r * (r - 1)) / 3.0)
    if isinstance(source, Generic):
        if source.df is None or source.d2f is None:
            raise RegularityError("second-order bounds need the source derivatives")
        if abs(source.f(0.0)) > 0 or abs(source.df(0.0)) > 0:
            raise RegularityError("source and its derivative must vanish at t = 0")
    return (max(T, 1.0) / a_L + a_U / 3.0) * source.sobolev_norm(T, 2)


def transform_decay_constants(source, tau0, T, tau_hi=50.0):
    """(mu, C_mu) with f_hat(tau) >= C_mu tau^-mu for tau >= tau0.

    Exact for monomials.  Other sources with f(0) = f'(0) = 0 get mu = 6 and
    C_mu estimated as the smallest tau^6 f_hat(tau) on a dense grid.
    """
    if isinstance(source, Monomial):
        return monomial_transform_constants(source.r)
    mu = 6.0
    taus = np.geomspace(tau0, max(tau_hi, 2 * tau0), 400)
    c_mu = min(tau**mu * laplace_transform(source, float(tau), T) for tau in taus)
    if not c_mu > 0:
        raise RegularityError("the source transform is not positive on the frequency range")
    return mu, float(c_mu)


# --------------------------------------------------------------------------
# Admissibility functions


def F_curve(geometry, mu):
    """Lower admissible frequency as a function of the final time."""
    a_U, T = geometry.a_U, geometry.T
    return 3.0 * a_U / (4.0 * T) * (1.0 + math.sqrt(1.0 + 8.0 * T * mu / (9.0 * a_U**2)))


def log_G(params, geometry, tau):
    return (-geometry.T * tau * tau + 3.0 * geometry.a_U * tau + params.mu * math.log(tau)
            + math.log(params.c_T) - math.log(2.0 * params.c_mu))


def G_curve(params, geometry, tau):
    """Relative error bound of the finite-time indicator against the infinite-time one."""
    return math.exp(log_G(params, geometry, tau))


def _H_unscaled(params, geometry, tau, epsilon):
    d = params.delta
    return (geometry.T**3 * params.c_max / (24.0 * params.c_mu * (1.0 - epsilon))
            * (tau**-d + tau ** (-2.0 - d)) ** 2)


def H_curve(params, geometry, tau):
    """Relative discretization error bound when N_t meets the threshold at tau."""
    return _H_unscaled(params, geometry, tau, params.epsilon)


@dataclass(frozen=True)
class CertificationParams:
    mu: float
    c_mu: float
    c_T: float
    c_max: float
    delta: float
    tau0: float
    epsilon: float
    eta: float

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.eta < 1:
            raise DomainError(f"eta must lie in (0, 1), got {self.eta}")
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not self.tau0 > 0:
            raise DomainError(f"tau0 must be positive, got {self.tau0}")
        for name in ("mu", "c_mu", "c_T", "c_max"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def for_source(cls, geometry, source, delta=5.0, tau0=3.0, epsilon=None, eta=None):
        """Assemble all constants for ``source``; epsilon and eta default to G(tau0) and H(tau0)."""
        mu, c_mu = transform_decay_constants(source, tau0, geometry.T)
        draft = cls(mu, c_mu, c_T(geometry, source), c_max(geometry, source), delta, tau0, 0.5, 0.5)
        if epsilon is None:
            epsilon = G_curve(draft, geometry, tau0)
            if not 0 < epsilon < 1:
                raise DomainError(f"G(tau0) = {epsilon:.6g} is not in (0, 1); choose a larger tau0")
        if eta is None:
            eta = _H_unscaled(draft, geometry, tau0, epsilon)
            if not 0 < eta < 1:
                raise DomainError(f"H(tau0) = {eta:.6g} is not in (0, 1); choose a larger tau0 or delta")
        return replace(draft, epsilon=epsilon, eta=eta)


@dataclass(frozen=True)
class Tau0Report:
    F: float
    G: float
    H: float
    tau0: float
    epsilon: float
    eta: float

    @property
    def frequency_ok(self):
        return self.F <= self.tau0

    @property
    def finite_time_ok(self):
        return self.G <= self.epsilon

    @property
    def sampling_ok(self):
        return self.H <= self.eta

    @property
    def margins(self):
        return (self.tau0 - self.F, self.epsilon - self.G, self.eta - self.H)

    @property
    def passed(self):
        return self.frequency_ok and self.finite_time_ok and self.sampling_ok

    def as_tuple(self):
        return (self.frequency_ok, self.finite_time_ok, self.sampling_ok)


def check_tau0(params, geometry, T=None):
    """Evaluate the three admissibility conditions at tau0; failures are reported, not raised."""
    if T is not None and T != geometry.T:
        geometry = replace(geometry, T=T)
    tau0 = params.tau0
    return Tau0Report(F_curve(geometry, params.mu), G_curve(params, geometry, tau0),
                      H_curve(params, geometry, tau0), tau0, params.epsilon, params.eta)


# --------------------------------------------------------------------------
# Sample-count threshold


def log_threshold_argument(params, geometry, tau):
    return geometry.a_U * tau + (5.0 + params.mu + 2.0 * params.delta) / 2.0 * math.log(tau)


def n_t_threshold(params, geometry, tau):
    """floor(exp(a_U tau) tau^((5 + mu + 2 delta)/2)) + 1.

    If the argument lies within rounding distance of an integer n the
    result is n + 1, so the returned count never falls short.
    """
    if not tau > 0:
        raise DomainError(f"frequency must be positive, got {tau}")
    log_x = log_threshold_argument(params, geometry, tau)
    if log_x >= math.log(_MAX_EXACT_INT):
        raise MagnitudeError("sample-count threshold exceeds the exactly representable integers", log_x)
    x = math.exp(log_x)
    n = round(x)
    # exp(log_x) carries a relative error of about |log_x| ulps
    slack = 4.0 * (1.0 + abs(log_x)) * math.ulp(x)
    if abs(x - n) <= slack:
        return int(n) + 1
    return int(math.floor(x)) + 1


def _feasible(params, geometry, tau, N_t):
    # threshold(tau) <= N_t  <=>  exp(log_x) < N_t
    return log_threshold_argument(params, geometry, tau) < math.log(N_t)


def tau_max(params, geometry, N_t, tol=1e-6):
    """Largest tau >= tau0 whose sample threshold does not exceed N_t."""
    lo = params.tau0
    if n_t_threshold(params, geometry, lo) > N_t:
        raise InfeasibleError(
            f"N_t={N_t} is below the threshold {n_t_threshold(params, geometry, lo)} at tau0={lo}")
    step = max(lo, 1.0)
    hi = lo + step
    while _feasible(params, geometry, hi, N_t):
        lo = hi
        step *= 2.0
        hi = lo + step
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _feasible(params, geometry, mid, N_t):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------------
# Error bounds


def _finite_window_gap(geometry, tau):
    return -math.log1p(-math.exp(-2.0 * geometry.a_L * tau)) / (2.0 * tau)


def theorem_bounds(params, geometry, tau):
    """Return (continuous bound, discretization bound, combined bound) at tau."""
    gap = _finite_window_gap(geometry, tau)
    log_tail = (math.log(params.c_T) - geometry.T * tau * tau + 3.0 * geometry.a_U * tau
                + (params.mu - 1.0) * math.log(tau) - math.log(4.0 * params.c_mu * (1.0 - params.epsilon)))
    b11 = gap + math.exp(log_tail)
    b12 = discrete_gap_bound(params, tau, geometry)
    eps, eta = params.epsilon, params.eta
    b13 = gap + eps / (2.0 * tau * (1.0 - eps)) + eta / (2.0 * tau * (1.0 - eta))
    return b11, b12, b13


# --------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class FrequencyGrid:
    tau_start: float = 1.0
    tau_end: float = 15.0
    step: float = 0.5

    def __post_init__(self):
        if not self.tau_start > 0:
            raise DomainError(f"grid must start at a positive frequency, got {self.tau_start}")
        if not self.step > 0:
            raise DomainError(f"grid step must be positive, got {self.step}")
        if self.tau_end < self.tau_start:
            raise DomainError(f"grid end {self.tau_end} precedes its start {self.tau_start}")

    def points(self):
        n = int(math.floor((self.tau_end - self.tau_start) / self.step + 1e-9))
        return [self.tau_start + i * self.step for i in range(n + 1)]


@dataclass(frozen=True)
class RegionPoint:
    tau: float
    a_est: float
    abs_error: float
    inside: bool
    digits: float


@dataclass(frozen=True, eq=False)
class TrustedRegion:
    tau_lo: Optional[float]
    tau_hi: Optional[float]
    error_bound: float
    kind: str
    grid_step: Optional[float] = None
    points: List[RegionPoint] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("theoretical", "empirical"):
            raise DomainError(f"unknown region kind {self.kind!r}")
        if (self.tau_lo is None) != (self.tau_hi is None):
            raise DomainError("both ends of a region must be given, or neither")
        if self.tau_lo is not None and self.tau_lo > self.tau_hi:
            raise DomainError(f"region end {self.tau_hi} precedes its start {self.tau_lo}")
        if not self.error_bound > 0:
            raise DomainError("error bound must be positive")

    @property
    def empty(self):
        return self.tau_lo is None

    @property
    def interval(self):
        return None if self.empty else (self.tau_lo, self.tau_hi)

    def summary(self):
        lo = "NA" if self.empty else f"{self.tau_lo:.17g}"
        hi = "NA" if self.empty else f"{self.tau_hi:.17g}"
        return f"{self.kind},{lo},{hi},{self.error_bound:.17g}"

    def describe(self):
        return "None" if self.empty else f"[{self.tau_lo:.1f}, {self.tau_hi:.1f}]"

    def diagnostics_csv(self):
        buf = io.StringIO()
        buf.write("tau,a_est,abs_error,inside,cancellation_digits\n")
        for p in self.points:
            cells = [p.tau, p.a_est, p.abs_error]
            text = ["NA" if math.isnan(c) else f"{c:.17g}" for c in cells]
            text += ["1" if p.inside else "0", f"{p.digits:.17g}"]
            buf.write(",".join(text) + "\n")
        return buf.getvalue()


def theoretical_region(params, geometry, N_t):
    """[tau0, tau_max(N_t)] with the combined bound evaluated at its left end, where it is largest."""
    hi = tau_max(params, geometry, N_t)
    return TrustedRegion(params.tau0, hi, theorem_bounds(params, geometry, params.tau0)[2], "theoretical")


def longest_run(flags):
    """(start, stop) of the longest run of True values; the earliest wins ties. None if no True."""
    best, start = None, None
    for i, flag in enumerate(list(flags) + [False]):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if best is None or i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    return best


def region_from_samples(geometry, samples, bound, step=None):
    """Empirical region from already computed indicator samples."""
    points = []
    for s in samples:
        err = abs(s.a_est - geometry.a) if s.defined else math.nan
        inside = s.defined and err <= bound
        points.append(RegionPoint(s.tau, s.a_est if s.defined else math.nan, err, inside,
                                  cancellation_digits(s.I, s.u_hat, s.f_hat, s.tau)))
    run = longest_run(p.inside for p in points)
    if run is None:
        return TrustedRegion(None, None, bound, "empirical", step, points)
    return TrustedRegion(points[run[0]].tau, points[run[1] - 1].tau, bound, "empirical", step, points)


def empirical_region(geometry, source, N=DEFAULT_N, N_t=1000, bound=0.01, grid=None,
                     fhat_rule="exact", stream=False, samples=None):
    """Longest contiguous run of grid frequencies with |a_Nt(tau) - a| <= bound.

    ``samples`` may supply measured traces in place of the synthetic ones;
    ``fhat_rule="trapezoid"`` computes f_hat with the same trapezoid rule as
    the data instead of exactly.
    """
    grid = grid or FrequencyGrid()
    taus = grid.points()
    if samples is not None:
        points = discrete_sweep(samples, source, taus, fhat_rule)
    elif stream:
        points = streamed_sweep(geometry, source, N_t, taus, N, fhat_rule)
    else:
        points = discrete_sweep(sample_trace(geometry, source, N_t, N), source, taus, fhat_rule)
    return region_from_samples(geometry, points, bound, grid.step)
