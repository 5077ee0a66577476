"""Forward model: boundary temperature u(0, t) of a rod with an insulated far end.

The rod occupies [0, a].  A heat flux f(t) is prescribed at x = 0, the end
x = a is insulated and the initial temperature is zero.  With the cosine
eigenvalues ``lambda_k = (k pi / a)**2`` the boundary trace is

    u(0, t) = -(1/a) int_0^t f  -  (2/a) sum_k int_0^t exp(-lambda_k (t - s)) f(s) ds.

Every closed form below is evaluated as a sum of same-signed terms so the
trace keeps full relative accuracy near t = 0, where it is tiny compared
with the individual zeta constants appearing in the textbook expansion.
This matters because the indicator function later cancels all but
~exp(-2 a tau) of the transformed trace.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError, SingularSourceError

DEFAULT_N = 1000

# exp(-x) is exactly zero in double precision beyond this argument.
_EXP_UNDERFLOW = 746.0
_SERIES_TERMS = 60


@dataclass(frozen=True)
class Geometry:
    """Rod length ``a``, a-priori bounds ``a_L <= a <= a_U`` and final time ``T``.

    The bounds default to ``a`` itself.
    """

    a: float
    a_L: Optional[float] = None
    a_U: Optional[float] = None
    T: float = 5.0

    def __post_init__(self):
        if self.a_L is None:
            object.__setattr__(self, "a_L", self.a)
        if self.a_U is None:
            object.__setattr__(self, "a_U", self.a)
        for name in ("a", "a_L", "a_U", "T"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise DomainError(f"{name} must be a finite number, got {value!r}")
        if not 0 < self.a_L <= self.a <= self.a_U:
            raise DomainError(
                f"need 0 < a_L <= a <= a_U, got a_L={self.a_L}, a={self.a}, a_U={self.a_U}")
        if self.T <= 0:
            raise DomainError(f"final time T must be positive, got {self.T}")


# --------------------------------------------------------------------------
# Source terms


@dataclass(frozen=True)
class Monomial:
    """Flux ``f(t) = t**r``."""

    r: int

    def __post_init__(self):
        if not isinstance(self.r, (int, np.integer)) or self.r < 0:
            raise DomainError(f"monomial exponent must be a non-negative integer, got {self.r!r}")

    def __call__(self, t):
        return np.asarray(t, dtype=float) ** self.r

    def derivative(self, t, order=1):
        if order > self.r:
            return np.zeros_like(np.asarray(t, dtype=float))
        coeff = math.factorial(self.r) / math.factorial(self.r - order)
        return coeff * np.asarray(t, dtype=float) ** (self.r - order)

    def sup_norm(self, T, order=0):
        """Sup of |f^(order)| on [0, T]."""
        if order > self.r:
            return 0.0
        return math.factorial(self.r) / math.factorial(self.r - order) * T ** (self.r - order)

    def sobolev_norm(self, T, order):
        return max(self.sup_norm(T, j) for j in range(order + 1))


@dataclass(frozen=True)
class ExpMonomial:
    """Flux ``f(t) = c t**2 exp(-nu t)``."""

    c: float
    nu: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise DomainError(f"amplitude must be finite, got {self.c}")
        if not (math.isfinite(self.nu) and self.nu >= 0):
            raise DomainError(f"decay rate must be a non-negative number, got {self.nu}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.c * t**2 * np.exp(-self.nu * t)

    def derivative(self, t, order=1):
        t = np.asarray(t, dtype=float)
        nu = self.nu
        # d^n/dt^n [t^2 e^{-nu t}] = e^{-nu t} ((-nu)^n t^2 + 2n(-nu)^(n-1) t + n(n-1)(-nu)^(n-2))
        poly = (-nu) ** order * t**2
        if order >= 1:
            poly = poly + 2 * order * (-nu) ** (order - 1) * t
        if order >= 2:
            poly = poly + order * (order - 1) * (-nu) ** (order - 2)
        return self.c * poly * np.exp(-nu * t)

    def sup_norm(self, T, order=0):
        """Sup of |f^(order)| on [0, T], from endpoints and interior critical points."""
        nu = self.nu
        candidates = [0.0, T]
        if nu > 0:
            # critical points of the order-th derivative are the roots of the next one
            n = order + 1
            coeffs = [(-nu) ** n, 2 * n * (-nu) ** (n - 1), n * (n - 1) * (-nu) ** (n - 2)]
            for root in np.roots(coeffs):
                if abs(root.imag) < 1e-12 and 0 < root.real < T:
                    candidates.append(float(root.real))
        return float(max(abs(self.derivative(np.array(candidates), order))))

    def sobolev_norm(self, T, order):
        return max(self.sup_norm(T, j) for j in range(order + 1))


@dataclass(frozen=True)
class Generic:
    """Flux given by a callable, optionally with its first and second derivatives.

    Norms are estimated by dense sampling, so they are not rigorous bounds.
    """

    f: Callable[[float], float]
    df: Optional[Callable[[float], float]] = None
    d2f: Optional[Callable[[float], float]] = None
    samples: int = field(default=4097, compare=False)

    def __call__(self, t):
        return np.vectorize(self.f, otypes=[float])(t)

    def derivative(self, t, order=1):
        fn = {1: self.df, 2: self.d2f}.get(order)
        if fn is None:
            raise DomainError(f"derivative of order {order} was not supplied for this source")
        return np.vectorize(fn, otypes=[float])(t)

    def sup_norm(self, T, order=0):
        t = np.linspace(0.0, T, self.samples)
        values = self(t) if order == 0 else self.derivative(t, order)
        return float(np.max(np.abs(values)))

    def sobolev_norm(self, T, order):
        return max(self.sup_norm(T, j) for j in range(order + 1))


SourceTerm = Union[Monomial, ExpMonomial, Generic]


# --------------------------------------------------------------------------
# Elementary pieces


def eigenvalue(geometry, k):
    """k-th Neumann eigenvalue (k pi / a)**2 of the rod."""
    if k < 1:
        raise DomainError(f"mode index must be >= 1, got {k}")
    return (k * math.pi / geometry.a) ** 2


def eigenvalues(geometry, N):
    return (np.arange(1, N + 1, dtype=float) * (math.pi / geometry.a)) ** 2


def zeta_even(k):
    """Riemann zeta at the even integer 2k."""
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    return float(special.zeta(2 * k, 1))


def inverse_power_tail(geometry, p, K):
    """sum_{k >= K} lambda_k**(-p), via the Hurwitz zeta function."""
    return (geometry.a / math.pi) ** (2 * p) * special.zeta(2 * p, K)


def b_coeff(j, r):
    """(-1)**(r - j) r! / j!, the coefficients of the monomial mode integrals."""
    if j < 0 or r < 0 or j > r:
        raise DomainError(f"need 0 <= j <= r, got j={j}, r={r}")
    return (-1) ** (r - j) * math.factorial(r) // math.factorial(j)


def mode_integral(m, t, r):
    """Evaluate int_0^t exp(-m (t - s)) s**r ds for scalar m of either sign.

    Equal to r! m^-(r+1) (-1)^(r+1) [exp(-m t) - P_r(-m t)] with P_r the
    degree-r Taylor polynomial of exp.  Uses the power series in m t when
    that argument is small, where the closed form would cancel.
    """
    t = np.asarray(t, dtype=float)
    x = m * t
    out = np.empty_like(x)
    near = np.abs(x) <= r + 1
    if near.any():
        xn = x[near]
        term = np.full_like(xn, 1.0 / math.factorial(r + 1))
        acc = np.zeros_like(xn)
        for i in range(_SERIES_TERMS):
            acc += term
            term = term * (-xn) / (i + r + 2)
        out[near] = math.factorial(r) * t[near] ** (r + 1) * acc
    far = ~near
    if far.any():
        xf = x[far]
        taylor = np.zeros_like(xf)
        power = np.ones_like(xf)
        for j in range(r + 1):
            taylor += power
            power = power * (-xf) / (j + 1)
        with np.errstate(over="ignore"):
            out[far] = (-1) ** (r + 1) * math.factorial(r) * (np.exp(-xf) - taylor) / m ** (r + 1)
    return out


def _as_times(t, T):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(arr > T * (1 + 1e-12)):
        raise DomainError(f"times must lie in [0, T] = [0, {T}]")
    return np.atleast_1d(arr), arr.ndim == 0


def _first_dead_mode(geometry, t, N):
    """Smallest K such that exp(-lambda_k t) underflows for all k >= K (capped at N + 1)."""
    with np.errstate(divide="ignore", over="ignore"):
        bound = geometry.a / math.pi * np.sqrt(_EXP_UNDERFLOW / np.where(t > 0, t, 1.0))
    K = np.where(t > 0, np.ceil(bound), N + 1)
    return np.minimum(K, N + 1).astype(np.int64)


def _sorted_mode_sum(geometry, t, N, term):
    """sum_{k < K(t), k <= N} term(lambda_k, t), accumulated from k = N down to 1.

    ``K(t)`` is the first mode whose exponential underflows; for sorted t the
    active set of each mode is a prefix, which keeps the cost near O(len(t)).
    """
    order = np.argsort(t, kind="stable")
    ts = t[order]
    K = _first_dead_mode(geometry, ts, N)
    lam = eigenvalues(geometry, N)
    acc = np.zeros_like(ts)
    # K is non-increasing along ts, so {K > k} is the prefix of length n_k
    neg_K = -K
    # mode integrals vanish at t = 0, so only positive times set the loop range
    positive = K[ts > 0]
    top = int(positive.max()) - 1 if positive.size else 0
    for k in range(min(N, top), 0, -1):
        n_k = np.searchsorted(neg_K, -k, side="left")
        if n_k:
            acc[:n_k] += term(k, lam[k - 1], ts[:n_k])
    out = np.empty_like(acc)
    out[order] = acc
    Kout = np.empty_like(K)
    Kout[order] = K
    return out, Kout


# --------------------------------------------------------------------------
# Traces


def dirichlet_trace_monomial(geometry, r, t, N=DEFAULT_N):
    """Truncated trace u_N(t) for f = t**r, keeping the exact zeta sums for the polynomial part.

    This is the N-mode expansion in which only the transient exponentials
    exp(-lambda_k t) are truncated; the error is bounded by
    :func:`truncation_bound_monomial`.
    """
    if N < 1:
        raise DomainError(f"truncation N must be >= 1, got {N}")
    ts, scalar = _as_times(t, geometry.T)
    a = geometry.a

    def term(k, lam, tt):
        return mode_integral(lam, tt, r)

    modes, K = _sorted_mode_sum(geometry, ts, N, term)
    # polynomial parts of all modes k >= K(t), whose exponentials vanish or are truncated
    poly = np.zeros_like(ts)
    for j in range(r + 1):
        poly += b_coeff(j, r) * ts**j * inverse_power_tail(geometry, r + 1 - j, K)
    u = -ts ** (r + 1) / ((r + 1) * a) - (2.0 / a) * (modes + poly)
    return float(u[0]) if scalar else u


def _check_nonsingular(geometry, nu):
    lam1 = eigenvalue(geometry, 1)
    k = max(1, round(geometry.a * math.sqrt(nu) / math.pi))
    for kk in (k - 1, k, k + 1):
        if kk >= 1 and abs(eigenvalue(geometry, kk) - nu) < 1e-8 * lam1:
            raise SingularSourceError(
                f"decay rate nu={nu} coincides with eigenvalue lambda_{kk}={eigenvalue(geometry, kk)}")


def dirichlet_trace_expmono(geometry, c, nu, t, N=DEFAULT_N):
    """Truncated trace for f = c t**2 exp(-nu t).

    Uses the once-integrated-by-parts expansion (valid since f(0) = 0): the
    quasi-static term -(a/3) f(t) absorbs the full sum of 1/lambda_k, and the
    N retained mode integrals are evaluated in closed form.  The truncation
    error is O(N^-3).
    """
    if N < 1:
        raise DomainError(f"truncation N must be >= 1, got {N}")
    _check_nonsingular(geometry, nu)
    ts, scalar = _as_times(t, geometry.T)
    a = geometry.a
    shifted = eigenvalues(geometry, N) - nu
    # sum_{k=K}^{N} shifted_k**-p for K = 1..N+1, smallest terms first
    tails = {p: np.concatenate([np.cumsum((shifted ** -p)[::-1])[::-1], [0.0]]) for p in (1, 2, 3)}

    def term(k, lam, tt):
        return mode_integral(lam - nu, tt, 2)

    modes, K = _sorted_mode_sum(geometry, ts, N, term)
    idx = K - 1
    # dead modes contribute their polynomial part t^2/m - 2t/m^2 + 2/m^3
    modes = modes + ts**2 * tails[1][idx] - 2 * ts * tails[2][idx] + 2 * tails[3][idx]
    decay = np.exp(-nu * ts)
    f1 = ts**2 * decay
    int_f1 = decay * mode_integral(-nu, ts, 2)
    u = -(2.0 / a) * f1 * inverse_power_tail(geometry, 1, N + 1) - int_f1 / a - (2.0 / a) * decay * modes
    u = c * u
    return float(u[0]) if scalar else u


def _convolve_mode(lam, t, g, tol):
    """int_0^t exp(-lam (t - s)) g(s) ds by adaptive quadrature in w = lam (t - s)."""
    if t == 0:
        return 0.0
    upper = min(lam * t, _EXP_UNDERFLOW)
    value, err, info = integrate.quad(
        lambda w: math.exp(-w) * g(t - w / lam), 0.0, upper,
        epsabs=tol * lam, epsrel=1e-13, limit=200, full_output=1)[:3]
    if err > max(tol * lam, 1e-13 * abs(value)) and info["last"] >= 200:
        raise QuadratureError(f"mode integral with lambda={lam:.6g} did not converge", err / lam)
    return value / lam


def _integral(g, t, tol):
    if t == 0:
        return 0.0
    value, err = integrate.quad(g, 0.0, t, epsabs=tol, epsrel=1e-13, limit=200, full_output=1)[:2]
    if err > max(tol, 1e-13 * abs(value)):
        raise QuadratureError("integral of the source did not converge", err)
    return value


def dirichlet_trace_generic(geometry, source, t, N=DEFAULT_N, tol=1e-12):
    """Truncated trace for a callable source, through per-mode adaptive quadrature.

    With no derivatives supplied this is the plain N-mode truncation.  When
    ``df`` (and ``d2f``) are given, the mode integrals are first integrated by
    parts once (twice) and the resulting boundary terms are summed over all
    modes in closed form, so the truncated part decays like N^-3 (N^-5).
    Each retained mode integral is computed to absolute tolerance tol / N.
    """
    if N < 1:
        raise DomainError(f"truncation N must be >= 1, got {N}")
    ts, scalar = _as_times(t, geometry.T)
    a = geometry.a
    f = source.f
    df = getattr(source, "df", None)
    d2f = getattr(source, "d2f", None)
    depth = 0 if df is None else (1 if d2f is None else 2)
    kernel = (f, df, d2f)[depth]
    lam = eigenvalues(geometry, N)
    mode_tol = tol / N
    f0 = f(0.0)
    df0 = df(0.0) if depth == 2 else 0.0
    out = np.empty_like(ts)
    for i, tt in enumerate(ts):
        tt = float(tt)
        total = 0.0
        for k in range(N, 0, -1):
            lk = lam[k - 1]
            conv = _convolve_mode(lk, tt, kernel, mode_tol)
            if depth == 0:
                total -= conv
            elif depth == 1:
                total += (math.exp(-lk * tt) * f0 + conv) / lk
            else:
                total += (math.exp(-lk * tt) * (f0 - df0 / lk) - conv / lk) / lk
        u = -_integral(f, tt, tol) / a + (2.0 / a) * total
        if depth >= 1:
            u -= a / 3.0 * f(tt)
        if depth == 2:
            u += a**3 / 45.0 * df(tt)
        out[i] = u
    return float(out[0]) if scalar else out


def dirichlet_trace(geometry, source, t, N=DEFAULT_N):
    """Dispatch to the closed-form trace matching the source type."""
    if isinstance(source, Monomial):
        return dirichlet_trace_monomial(geometry, source.r, t, N)
    if isinstance(source, ExpMonomial):
        return dirichlet_trace_expmono(geometry, source.c, source.nu, t, N)
    if isinstance(source, Generic):
        return dirichlet_trace_generic(geometry, source, t, N)
    raise TypeError(f"unsupported source term {source!r}")


# --------------------------------------------------------------------------
# Truncation error bounds


def truncation_bound_monomial(geometry, r, N, t):
    """Bound on |u(0,t) - u_N(t)| for f = t**r; much sharper away from t = 0."""
    if N < 1:
        raise DomainError(f"truncation N must be >= 1, got {N}")
    a = geometry.a
    fac = math.factorial(r)
    bound = 2 * fac * a ** (2 * r + 1) / ((2 * r + 1) * math.pi ** (2 * r + 2)) * float(N) ** (-2 * r - 1)
    if t > a**2 * math.log(2) / (math.pi**2 * (2 * N + 3)):
        log_fast = (math.log(4 * fac) + (2 * r + 1) * math.log(a) - (2 * r + 2) * math.log(math.pi)
                    - (N + 1) ** 2 / (2 * N + 3) * math.log(2) - (r + 1) * math.log(N + 1))
        bound = min(bound, math.exp(log_fast))
    return bound


def truncation_bound_generic(geometry, norm_f, N, smooth):
    """Sup-norm truncation bound: O(1/N) for bounded f, O(1/N^3) for W^{1,inf} f with f(0) = 0."""
    if N < 1:
        raise DomainError(f"truncation N must be >= 1, got {N}")
    a = geometry.a
    if smooth:
        return 2 * a**3 / (math.pi**4 * float(N) ** 3) * norm_f
    return 2 * a / (math.pi**2 * N) * norm_f


def truncation_bound(geometry, source, N, t=0.0):
    """The sharpest available truncation bound for ``source`` at time t."""
    if isinstance(source, Monomial):
        return truncation_bound_monomial(geometry, source.r, N, t)
    T = geometry.T
    if isinstance(source, ExpMonomial):
        return truncation_bound_generic(geometry, source.sobolev_norm(T, 1), N, smooth=True)
    return truncation_bound_generic(geometry, source.sup_norm(T), N, smooth=False)


# --------------------------------------------------------------------------
# Sampled data


@dataclass(frozen=True, eq=False)
class TraceSamples:
    """Boundary temperatures u(0, t_j) at increasing times covering [0, T]."""

    t: np.ndarray
    u: np.ndarray
    geometry: Geometry

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        u = np.array(self.u, dtype=float)
        if t.ndim != 1 or t.shape != u.shape or t.size < 2:
            raise DomainError("t and u must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(t) <= 0):
            raise DomainError("sample times must be strictly increasing")
        if t[0] != 0.0 or not math.isclose(t[-1], self.geometry.T, rel_tol=1e-12):
            raise DomainError(f"samples must start at 0 and end at T={self.geometry.T}")
        t.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "u", u)

    @property
    def n_intervals(self):
        return self.t.size - 1

    def is_equidistant(self, rtol=1e-9):
        expected = self.geometry.T * np.arange(self.t.size) / self.n_intervals
        return bool(np.allclose(self.t, expected, rtol=0.0, atol=rtol * self.geometry.T))

    def to_csv(self):
        buf = io.StringIO()
        buf.write("t,u\n")
        for tj, uj in zip(self.t, self.u):
            buf.write(f"{tj:.17g},{uj:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, geometry):
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "u"]:
            raise DomainError("trace CSV must start with the header 't,u'")
        rows = [(float(t), float(u)) for t, u in reader if t.strip()]
        t, u = zip(*rows) if rows else ((), ())
        return cls(np.array(t), np.array(u), geometry)


def sample_times(T, N_t):
    if N_t < 1:
        raise DomainError(f"number of time intervals must be >= 1, got {N_t}")
    t = T * np.arange(N_t + 1, dtype=float) / N_t
    t[-1] = T
    return t


def sample_trace(geometry, source, N_t, N=DEFAULT_N):
    """Synthetic measurements u(0, jT/N_t), j = 0..N_t."""
    t = sample_times(geometry.T, N_t)
    return TraceSamples(t, dirichlet_trace(geometry, source, t, N), geometry)


def iter_trace_chunks(geometry, source, N_t, N=DEFAULT_N, chunk=1 << 16):
    """Yield ``(j0, t, u)`` blocks of the equidistant samples without holding them all."""
    T = geometry.T
    for j0 in range(0, N_t + 1, chunk):
        j = np.arange(j0, min(j0 + chunk, N_t + 1), dtype=float)
        t = T * j / N_t
        if j[-1] == N_t:
            t[-1] = T
        yield j0, t, dirichlet_trace(geometry, source, t, N)
