"""Continuous-time indicator function and endpoint recovery.

With the test function exp(-tau^2 t - tau x), the indicator is
I(tau) = tau * u_hat(tau) + f_hat(tau), where hats denote the finite-time
transform w -> int_0^T exp(-tau^2 t) w(t) dt.  For an infinitely long
observation I decays like -2 f_hat exp(-2 a tau), which is inverted by
:func:`recover_a`.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError
from .series import (DEFAULT_N, ExpMonomial, Generic, Monomial, b_coeff, eigenvalues,
                     inverse_power_tail, mode_integral, _check_nonsingular)

_DIGITS = -math.log10(sys.float_info.epsilon)


def _check_tau(tau):
    if not (math.isfinite(tau) and tau > 0):
        raise DomainError(f"frequency tau must be positive, got {tau}")


def power_exp_integral(r, s, T):
    """int_0^T t**r exp(-s t) dt for real s (any sign) and integer r >= 0."""
    if s > 0:
        return float(special.gammainc(r + 1, s * T) * math.factorial(r) / s ** (r + 1))
    if s == 0:
        return T ** (r + 1) / (r + 1)
    # exp(-s t) grows; int = exp(-s T) * int_0^T exp(s (T - t)) t^r dt
    return float(math.exp(-s * T) * mode_integral(-s, np.array([T]), r)[0])


def laplace_transform(source, tau, T):
    """f_hat(tau) = int_0^T exp(-tau^2 t) f(t) dt."""
    _check_tau(tau)
    if T <= 0:
        raise DomainError(f"final time must be positive, got {T}")
    s = tau * tau
    if isinstance(source, Monomial):
        return power_exp_integral(source.r, s, T)
    if isinstance(source, ExpMonomial):
        return source.c * power_exp_integral(2, s + source.nu, T)
    if isinstance(source, Generic):
        f = source.f
        value, err = integrate.quad(lambda t: math.exp(-s * t) * f(t), 0.0, T,
                                    epsabs=1e-300, epsrel=1e-14, limit=500, full_output=1)[:2]
        if err > 1e-13 * abs(value) and err > 1e-300:
            raise QuadratureError("transform of the source did not converge", err)
        return value
    raise TypeError(f"unsupported source term {source!r}")


def monomial_transform_constants(r):
    """Return (mu, C_mu) of the two-sided bound C_mu tau^-mu <= f_hat <= r! tau^-mu for f = t**r."""
    if r < 0:
        raise DomainError(f"monomial exponent must be >= 0, got {r}")
    # 1 - e^-1 sum_{k<=r} 1/k! is the regularized lower gamma P(r+1, 1); gammainc avoids the cancellation
    c_mu = math.factorial(r) * float(special.gammainc(r + 1, 1.0))
    return 2.0 * (r + 1), c_mu


def u_hat_exact(geometry, source, tau, N=DEFAULT_N):
    """int_0^T exp(-tau^2 t) u_N(t) dt, transforming the truncated trace term by term."""
    _check_tau(tau)
    a, T = geometry.a, geometry.T
    s = tau * tau
    lam = eigenvalues(geometry, N)[::-1]
    if isinstance(source, Monomial):
        r = source.r
        Jr = power_exp_integral(r, s, T)
        tail_T = math.exp(-s * T) * mode_integral(lam, np.full_like(lam, T), r)
        modes = np.sum((Jr - tail_T) / (s + lam))
        poly = sum(b_coeff(j, r) * power_exp_integral(j, s, T) * inverse_power_tail(geometry, r + 1 - j, N + 1)
                   for j in range(r + 1))
        return -power_exp_integral(r + 1, s, T) / ((r + 1) * a) - (2.0 / a) * (modes + poly)
    if isinstance(source, ExpMonomial):
        nu = source.nu
        _check_nonsingular(geometry, nu)
        J_shift = power_exp_integral(2, s + nu, T)
        decay_T = math.exp(-(s + nu) * T)
        m = lam - nu
        modes = np.sum((J_shift - decay_T * mode_integral(m, np.full_like(m, T), 2)) / (s + lam))
        quasi = J_shift * inverse_power_tail(geometry, 1, N + 1)
        static = (J_shift - math.exp(-s * T) * power_exp_integral(2, nu, T)) / s
        return source.c * (-(2.0 / a) * quasi - static / a - (2.0 / a) * modes)
    if isinstance(source, Generic):
        raise DomainError("exact transform of the trace is only available for closed-form sources")
    raise TypeError(f"unsupported source term {source!r}")


def indicator(u_hat, f_hat, tau):
    return tau * u_hat + f_hat


def recover_a(I, f_hat, tau):
    """Endpoint estimate -log(I / (-2 f_hat)) / (2 tau); NaN when the ratio is not positive."""
    if f_hat == 0:
        raise ZeroDivisionError("transform of the source vanishes; endpoint is not identifiable")
    ratio = I / (-2.0 * f_hat)
    if not (ratio > 0) or not math.isfinite(ratio):
        return math.nan
    return -math.log(ratio) / (2.0 * tau)


def indicator_exact_asymptotic(geometry, f_hat, tau):
    """Indicator for an unbounded observation window: -2 f_hat exp(-2 a tau) / (1 - exp(-2 a tau))."""
    _check_tau(tau)
    return -2.0 * f_hat / math.expm1(2.0 * geometry.a * tau)


def a_infty_gap(geometry, tau):
    """a - a_inf(tau) = -log(1 - exp(-2 a tau)) / (2 tau), positive and decreasing in tau."""
    _check_tau(tau)
    return -math.log1p(-math.exp(-2.0 * geometry.a * tau)) / (2.0 * tau)


def cancellation_digits(I, u_hat, f_hat, tau):
    """Decimal digits of I that survive the subtraction tau*u_hat + f_hat in double precision."""
    scale = max(abs(tau * u_hat), abs(f_hat))
    if I == 0 or scale == 0:
        return 0.0 if scale else _DIGITS
    return _DIGITS - math.log10(scale / abs(I))


def _fmt(x):
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.17g}"


@dataclass(frozen=True)
class IndicatorSample:
    tau: float
    f_hat: float
    u_hat: float
    I: float
    a_est: Optional[float]

    CSV_HEADER = "tau,f_hat,u_hat,I,a_est"

    @classmethod
    def from_transforms(cls, tau, u_hat, f_hat):
        I = indicator(u_hat, f_hat, tau)
        return cls(tau, f_hat, u_hat, I, recover_a(I, f_hat, tau))

    @property
    def defined(self):
        return self.a_est is not None and not math.isnan(self.a_est)

    def csv_row(self):
        return ",".join(_fmt(x) for x in (self.tau, self.f_hat, self.u_hat, self.I, self.a_est))


def indicator_sample(geometry, source, tau, N=DEFAULT_N):
    """Exact-data indicator at one frequency."""
    f_hat = laplace_transform(source, tau, geometry.T)
    return IndicatorSample.from_transforms(tau, u_hat_exact(geometry, source, tau, N), f_hat)
