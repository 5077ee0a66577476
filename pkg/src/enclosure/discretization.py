"""Trapezoidal discretization of the measured trace and the discrete indicator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .indicator import IndicatorSample, laplace_transform, recover_a
from .series import DEFAULT_N, iter_trace_chunks, sample_times


@dataclass(frozen=True)
class QuadratureGrid:
    N_t: int
    T: float

    def __post_init__(self):
        if int(self.N_t) != self.N_t or self.N_t < 1:
            raise DomainError(f"number of subintervals must be a positive integer, got {self.N_t}")
        if not self.T > 0:
            raise DomainError(f"final time must be positive, got {self.T}")

    @property
    def step(self):
        return self.T / self.N_t

    def nodes(self):
        return sample_times(self.T, self.N_t)


def trapezoid(values, grid):
    """Composite trapezoid rule with step T/L over L+1 equidistant values."""
    g = np.asarray(values, dtype=float)
    if g.ndim != 1 or g.size != grid.N_t + 1:
        raise DomainError(f"expected {grid.N_t + 1} samples, got {g.size}")
    return grid.step * (0.5 * (g[0] + g[-1]) + float(np.sum(g[1:-1])))


def trapezoid_error_bound(T, L, sup_g2):
    return T**3 * sup_g2 / (12.0 * L * L)


def integrand_curvature_bound(tau, c_max_norm):
    """Bound (tau^2 + 1)^2 C_max ||f|| on |d^2/dt^2 [exp(-tau^2 t) u(0,t)]|."""
    return (tau * tau + 1.0) ** 2 * c_max_norm


def _weighted(t, u, tau):
    return np.exp(-tau * tau * t) * u


def discrete_transform(samples, tau):
    """Q_{N_t}: trapezoid approximation of int_0^T exp(-tau^2 t) u(0, t) dt."""
    if not samples.is_equidistant():
        raise DomainError("the discrete indicator needs equidistant samples")
    grid = QuadratureGrid(samples.n_intervals, samples.geometry.T)
    return trapezoid(_weighted(samples.t, samples.u, tau), grid)


def trapezoid_source_transform(source, tau, grid):
    """f_hat by the same trapezoid rule as the data, an alternative to the exact transform."""
    t = grid.nodes()
    return trapezoid(np.exp(-tau * tau * t) * source(t), grid)


def discrete_indicator(samples, f_hat, tau):
    """Return (Q, I_Nt, a_Nt) from equidistant samples; a_Nt is NaN when undefined."""
    Q = discrete_transform(samples, tau)
    I = tau * Q + f_hat
    return Q, I, recover_a(I, f_hat, tau)


def discrete_gap_bound(params, tau, geometry=None, T=None):
    """Bound on |a_Nt(tau) - a(tau)| when N_t reaches the sample threshold at tau."""
    if T is None:
        T = params.T if geometry is None else geometry.T
    d = params.delta
    shape = (tau ** -d + tau ** (-2.0 - d)) ** 2
    return (T**3 * params.c_max / (48.0 * params.c_mu * (1.0 - params.eta) * (1.0 - params.epsilon))
            * shape / tau)


def relative_indicator_error_bound(params, geometry, tau, N_t):
    """Bound on |I_Nt / I - 1| at sample count N_t, assembled in log space."""
    T, mu = geometry.T, params.mu
    log_b = (3 * math.log(T) + math.log(params.c_max) - math.log(24 * params.c_mu * (1 - params.epsilon))
             + (1 + mu) * math.log(tau) + 2 * geometry.a_U * tau + 2 * math.log(tau * tau + 1)
             - 2 * math.log(N_t))
    return math.exp(log_b)


def discrete_sweep(samples, source, taus, fhat_rule="exact"):
    """Discrete indicator samples over a list of frequencies from one set of measurements."""
    if fhat_rule not in ("exact", "trapezoid"):
        raise DomainError(f"unknown f_hat rule {fhat_rule!r}")
    grid = QuadratureGrid(samples.n_intervals, samples.geometry.T)
    out = []
    for tau in taus:
        Q = discrete_transform(samples, tau)
        if fhat_rule == "exact":
            f_hat = laplace_transform(source, tau, grid.T)
        else:
            f_hat = trapezoid_source_transform(source, tau, grid)
        out.append(IndicatorSample.from_transforms(tau, Q, f_hat))
    return out


def streamed_sweep(geometry, source, N_t, taus, N=DEFAULT_N, fhat_rule="exact", chunk=1 << 16):
    """Same as :func:`discrete_sweep` on synthetic data, without materializing all N_t + 1 samples."""
    if fhat_rule not in ("exact", "trapezoid"):
        raise DomainError(f"unknown f_hat rule {fhat_rule!r}")
    taus = [float(x) for x in taus]
    grid = QuadratureGrid(N_t, geometry.T)
    data_acc = [[] for _ in taus]
    src_acc = [[] for _ in taus]
    for j0, t, u in iter_trace_chunks(geometry, source, N_t, N, chunk):
        w = np.ones_like(t)
        if j0 == 0:
            w[0] = 0.5
        if j0 + t.size == N_t + 1:
            w[-1] = 0.5
        f = source(t) if fhat_rule == "trapezoid" else None
        for i, tau in enumerate(taus):
            e = np.exp(-tau * tau * t) * w
            data_acc[i].append(float(np.dot(e, u)))
            if f is not None:
                src_acc[i].append(float(np.dot(e, f)))
    out = []
    for i, tau in enumerate(taus):
        Q = grid.step * math.fsum(data_acc[i])
        if fhat_rule == "exact":
            f_hat = laplace_transform(source, tau, geometry.T)
        else:
            f_hat = grid.step * math.fsum(src_acc[i])
        out.append(IndicatorSample.from_transforms(tau, Q, f_hat))
    return out
