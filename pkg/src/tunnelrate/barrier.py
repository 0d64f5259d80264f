"""Barrier geometry and partial tunnelling rates.

Units are hbar = m = omega = 1.  The well is ``V(x) = (x**2 - delta*x**nu)/2``;
after rescaling ``x -> x * delta**(-1/(nu-2))`` the barrier action becomes
``(2Q/lambda_nu) * F_nu(t)`` with

    F_nu(t) = integral_a^b sqrt(x**2 - x**nu - t) dx,

``a < b`` the positive roots of ``x**2 - x**nu = t`` and
``t_n = 2 lambda_nu (n + 1/2) / Q`` for oscillator level ``n``.

Rates are always carried as natural logarithms of ``gamma / omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .specialfn import ellip_ke_complementary, log_factorial

__all__ = [
    "DomainError",
    "UnsupportedError",
    "NumericalError",
    "LogRate",
    "BarrierSpec",
    "TurningPoints",
    "FCoefficients",
    "ValidityScore",
    "make_barrier",
    "barrier_lambda",
    "turning_points",
    "f_nu_quad",
    "f_closed",
    "f_smallt",
    "f_coeffs_analytic",
    "extract_f_coeffs",
    "gamma_n_exact",
    "gamma_n_poisson",
    "validity_n",
    "DEFAULT_THRESHOLD",
]

DEFAULT_THRESHOLD = 0.1

# analytic coefficients of the small-t expansion for the two elliptic cases
_F0_EXACT = {3.0: 4.0 / 15.0, 4.0: 1.0 / 3.0}
_F1_EXACT = {3.0: 1.5 * math.log(2.0), 4.0: math.log(2.0)}
_MU_EXACT = {3.0: 432.0, 4.0: 64.0}


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedError(ValueError):
    """Requested method does not exist for these parameters."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


@dataclass(frozen=True, order=True)
class LogRate:
    """A nonnegative rate stored as ``ln(gamma / omega)``; ``-inf`` is zero."""

    log_value: float

    def __add__(self, other: "LogRate") -> "LogRate":
        a, b = self.log_value, other.log_value
        if a == -math.inf:
            return other
        if b == -math.inf:
            return self
        hi, lo = max(a, b), min(a, b)
        return LogRate(hi + math.log1p(math.exp(lo - hi)))

    def scaled(self, log_factor: float) -> "LogRate":
        return LogRate(self.log_value + log_factor)

    def relative_to(self, other: "LogRate") -> float:
        """ln(self / other)."""
        return self.log_value - other.log_value

    def to_linear(self) -> float:
        """Explicit exponentiation; underflows to 0.0 below ~e^-745."""
        return math.exp(self.log_value)


def barrier_lambda(nu: float) -> float:
    """lambda_nu = ((nu-2)/(2 nu)) (2/nu)^(2/(nu-2)); the barrier top is 2*lambda."""
    return (nu - 2.0) / (2.0 * nu) * (2.0 / nu) ** (2.0 / (nu - 2.0))


def _check_nu(nu: float) -> None:
    if not nu > 2.0 or not math.isfinite(nu):
        raise DomainError(f"exponent nu must be finite and > 2, got {nu}")


def _check_t(nu: float, t: float) -> float:
    t_max = 2.0 * barrier_lambda(nu)
    if not 0.0 <= t < t_max:
        raise DomainError(
            f"energy above barrier top: t={t} outside [0, {t_max}) for nu={nu}"
        )
    return t_max


# ---------------------------------------------------------------------------
# turning points


@dataclass(frozen=True)
class TurningPoints:
    a: float
    b: float
    c: Optional[float] = None


def _residual(nu: float, t: float, x: float) -> float:
    return x * x - x**nu - t


def _polish(nu: float, t: float, x: float) -> float:
    # one Newton step; the brackets already give ~1 ulp
    d = 2.0 * x - nu * x ** (nu - 1.0)
    if d != 0.0:
        step = _residual(nu, t, x) / d
        if abs(step) < 1e-8 * max(x, 1e-300):
            x -= step
    return x


def _roots_numeric(nu: float, t: float) -> tuple[float, float]:
    x_m = (2.0 / nu) ** (1.0 / (nu - 2.0))
    if t == 0.0:
        return 0.0, 1.0
    f = lambda x: _residual(nu, t, x)  # noqa: E731
    a = brentq(f, math.sqrt(t) * (1.0 - 1e-15), x_m, xtol=1e-300, rtol=1e-15, maxiter=500)
    b = brentq(f, x_m, 1.0, xtol=1e-300, rtol=1e-15, maxiter=500)
    return _polish(nu, t, a), _polish(nu, t, b)


def _roots_quartic(t: float) -> tuple[float, float]:
    s = math.sqrt((1.0 - 2.0 * math.sqrt(t)) * (1.0 + 2.0 * math.sqrt(t)))
    b_sq = 0.5 * (1.0 + s)
    # a^2 b^2 = t avoids the cancellation in (1 - s)/2
    return math.sqrt(t / b_sq), math.sqrt(b_sq)


def _roots_cubic(t: float) -> tuple[float, float, float]:
    # x^3 - x^2 + t = 0, trigonometric form around x = 1/3
    if t == 0.0:
        return 0.0, 1.0, 0.0
    r = 2.0 / 3.0
    arg = 1.0 - 13.5 * t  # cos(3 theta)
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
    roots = sorted(1.0 / 3.0 + r * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3))
    c, a, b = roots
    if t < 1e-3:
        # the trig form loses the small roots entirely; x = +-sqrt(t / (1 - x)) contracts fast
        a, c = math.sqrt(t), -math.sqrt(t)
        for _ in range(60):
            a_new = math.sqrt(t / (1.0 - a))
            c_new = -math.sqrt(t / (1.0 - c))
            if a_new == a and c_new == c:
                break
            a, c = a_new, c_new
    # Newton repairs the remaining cancellation
    a = _newton_cubic(t, a)
    c = _newton_cubic(t, c)
    return a, b, c


def _newton_cubic(t: float, x: float) -> float:
    for _ in range(3):
        d = 3.0 * x * x - 2.0 * x
        if d == 0.0:
            break
        x -= (x * x * x - x * x + t) / d
    return x


def turning_points(nu: float, t: float) -> TurningPoints:
    """Roots of ``x**2 - x**nu = t``; for nu = 3 also the negative root ``c``.

    Raises
    ------
    DomainError
        If ``t`` is outside ``[0, 2*lambda_nu)``.
    """
    _check_nu(nu)
    _check_t(nu, t)
    if nu == 4.0:
        if t == 0.0:
            return TurningPoints(0.0, 1.0)
        a, b = _roots_quartic(t)
        return TurningPoints(a, b)
    if nu == 3.0:
        a, b, c = _roots_cubic(t)
        return TurningPoints(a, b, c)
    a, b = _roots_numeric(nu, t)
    return TurningPoints(a, b)


# ---------------------------------------------------------------------------
# the action integral F_nu(t)


def _gap_from(nu: float, x0: float, h: float) -> float:
    """``p(x0 + h) - p(x0)`` for p(x) = x^2 - x^nu, accurate for small |h|."""
    if x0 == 0.0:
        return h * h - abs(h) ** nu
    quad_part = h * (2.0 * x0 + h)
    pow_part = x0**nu * math.expm1(nu * math.log1p(h / x0))
    return quad_part - pow_part


def _integrand_theta(nu: float, a: float, b: float, theta: float) -> float:
    s = math.sin(theta)
    c = math.cos(theta)
    width = b - a
    if s <= c:
        gap = _gap_from(nu, a, width * s * s)
    else:
        gap = _gap_from(nu, b, -width * c * c)
    # gap = p(x) - t since p(a) = p(b) = t
    return 2.0 * width * s * c * math.sqrt(max(gap, 0.0))


def f_nu_quad(nu: float, t: float) -> float:
    """F_nu(t) by adaptive quadrature after ``x = a + (b - a) sin^2(theta)``.

    The substitution cancels the square-root behaviour at both turning
    points, so the integrand is smooth on ``[0, pi/2]``.
    """
    _check_nu(nu)
    _check_t(nu, t)
    tp = turning_points(nu, t)
    a, b = tp.a, tp.b
    # split where the left boundary layer ends so the adaptive rule sees it
    pts = []
    if b > a and a > 0.0:
        theta_a = math.asin(min(1.0, math.sqrt(min(1.0, 4.0 * a / (b - a)))))
        if 0.0 < theta_a < 0.5 * math.pi:
            pts.append(theta_a)
    value, err = quad(
        lambda th: _integrand_theta(nu, a, b, th),
        0.0,
        0.5 * math.pi,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=400,
        points=pts or None,
    )
    if err > 1e-10:
        raise NumericalError(f"F_nu quadrature error estimate {err:.3g} too large")
    return value


def f_closed(nu: float, t: float) -> float:
    """F_3 or F_4 through complete elliptic integrals of modulus sqrt(1 - xi^2)."""
    if nu not in (3, 4):
        raise UnsupportedError(f"closed-form F_nu exists only for nu = 3, 4 (got {nu})")
    nu = float(nu)
    _check_t(nu, t)
    if nu == 4.0:
        root = math.sqrt((1.0 - 2.0 * math.sqrt(t)) * (1.0 + 2.0 * math.sqrt(t)))
        # (1 - root)/(1 + root) written without cancellation
        xi_sq = 4.0 * t / (1.0 + root) ** 2
        k_val, e_val = ellip_ke_complementary(math.sqrt(xi_sq))
        kterm = 0.0 if xi_sq == 0.0 else 2.0 * xi_sq * k_val
        return (1.0 + xi_sq) ** -1.5 * ((1.0 + xi_sq) * e_val - kterm) / 3.0
    tp = turning_points(3.0, t)
    xi_sq = (tp.a - tp.c) / (tp.b - tp.c) if t > 0 else 0.0
    k_val, e_val = ellip_ke_complementary(math.sqrt(xi_sq))
    poly = 1.0 - xi_sq + xi_sq * xi_sq
    kterm = 0.0 if xi_sq == 0.0 else xi_sq * (1.0 + xi_sq) * k_val
    return 2.0 / 15.0 * poly ** -1.25 * (2.0 * poly * e_val - kterm)


@dataclass(frozen=True)
class FCoefficients:
    """Small-t coefficients: ``F(t) = f0 + (t/4) ln(t/e) - f1 t + O(t^2 ln t)``."""

    f0: float
    f1: float
    f1_error_estimate: float = 0.0


def f_coeffs_analytic(nu: float) -> FCoefficients:
    """Exact small-t coefficients for any nu > 2.

    With p = nu - 2, ``f0 = B(2/p, 3/2) / p`` and, from the limit
    ``integral_a^b dx / sqrt(x^2 - x^nu - t) = -ln(t)/2 + 2 f1 + o(1)``,
    ``f1 = nu ln 2 / (2 p)``.  Gives 4/15, (3/2) ln 2 at nu = 3 and
    1/3, ln 2 at nu = 4.
    """
    _check_nu(nu)
    p = nu - 2.0
    log_beta = math.lgamma(2.0 / p) + math.lgamma(1.5) - math.lgamma(2.0 / p + 1.5)
    return FCoefficients(f0=math.exp(log_beta) / p, f1=nu * math.log(2.0) / (2.0 * p))


def f_smallt(nu: float, t: float, coeffs: FCoefficients) -> float:
    """Truncated small-t expansion of F_nu."""
    _check_nu(nu)
    if not t > 0.0:
        raise DomainError(f"small-t expansion needs t > 0 (logarithm), got {t}")
    limit = 0.1 * 2.0 * barrier_lambda(nu)
    if t >= limit:
        raise DomainError(f"small-t expansion restricted to t < {limit:.6g}, got {t}")
    return coeffs.f0 + 0.25 * t * (math.log(t) - 1.0) - coeffs.f1 * t


def _correction_basis(nu: float) -> list:
    """Correction terms of ``g(t) - f1`` in decreasing order of size.

    Besides ``t ln t`` and ``t``, the left turning point feeds in powers
    ``t**(j (nu-2)/2)`` below 1 when nu < 4; they cancel identically at
    nu = 3.
    """
    basis = []
    step = 0.5 * (nu - 2.0)
    if nu != 3.0:
        j = 1
        while j * step < 1.0 - 1e-9:
            basis.append(lambda t, p=j * step: t**p)
            j += 1
    basis.append(lambda t: t * math.log(t))
    basis.append(lambda t: t)
    return basis


def _extrapolate(ts: list[float], gs: list[float], basis: list) -> tuple[float, float]:
    """Generalised Richardson extrapolation to ``t -> 0``.

    Each window of ``len(basis) + 1`` consecutive samples is solved exactly
    for the limit and the correction amplitudes; the error estimate is the
    change between the last two windows.
    """
    width = len(basis) + 1
    if width + 1 > len(ts):
        raise NumericalError(
            f"{len(basis)} correction terms need more than {len(ts)} samples"
        )
    estimates = []
    for i in range(len(ts) - width + 1):
        window = ts[i : i + width]
        m = np.array([[1.0] + [f(t) for f in basis] for t in window])
        estimates.append(float(np.linalg.solve(m, np.asarray(gs[i : i + width]))[0]))
    return estimates[-1], abs(estimates[-1] - estimates[-2])


@lru_cache(maxsize=64)
def extract_f_coeffs(nu: float) -> FCoefficients:
    """Numerically extract f0 and f1 of the small-t expansion of F_nu.

    ``g(t) = [f0 + (t/4) ln(t/e) - F(t)] / t`` tends to f1; the corrections
    are eliminated by extrapolation on ``t_k = 1e-2 * 2**-k``, k = 0..10.
    Close to nu = 2 the fractional corrections pile up and the procedure
    gives up (roughly below nu = 2.3).

    Raises
    ------
    NumericalError
        If the extrapolation error estimate exceeds 1e-4.
    """
    _check_nu(nu)
    f0 = f_nu_quad(nu, 0.0)
    t_max = 2.0 * barrier_lambda(nu)
    # keep the sample sequence inside the small-t region for nu close to 2
    t_start = min(1e-2, 1e-2 * t_max)
    ts = [t_start * 2.0**-k for k in range(11)]
    gs = [(f0 + 0.25 * t * (math.log(t) - 1.0) - f_nu_quad(nu, t)) / t for t in ts]
    f1, err = _extrapolate(ts, gs, _correction_basis(nu))
    if not err <= 1e-4:
        raise NumericalError(
            f"f1 extrapolation for nu={nu} did not converge (estimate {err:.3g})"
        )
    return FCoefficients(f0=f0, f1=f1, f1_error_estimate=err)


# ---------------------------------------------------------------------------
# barrier specification


@dataclass(frozen=True)
class BarrierSpec:
    """Exponent ``nu`` and barrier quality ``Q = V0 / (hbar omega)`` with derived constants."""

    nu: float
    Q: float
    lam: float
    t_max: float
    mu: float
    chi: float
    f0: float
    f1: float
    log_gamma0: float
    xstar_sq: float
    delta: float

    @property
    def log_chi(self) -> float:
        return math.log(self.chi)

    def t_of_level(self, n: int) -> float:
        return 2.0 * self.lam * (n + 0.5) / self.Q


def make_barrier(nu: float = 3.0, Q: Optional[float] = None, *, delta: Optional[float] = None) -> BarrierSpec:
    """Build a :class:`BarrierSpec` from ``nu`` and either ``Q`` or ``delta``.

    For nu = 3 and nu = 4 the constants are mu_3 = 432 and mu_4 = 64; other
    exponents use :func:`f_coeffs_analytic` (which :func:`extract_f_coeffs`
    reproduces numerically wherever its extrapolation converges).
    """
    nu = float(nu)
    _check_nu(nu)
    if (Q is None) == (delta is None):
        raise DomainError("exactly one of Q and delta must be given")
    lam = barrier_lambda(nu)
    if Q is None:
        if not delta > 0.0:
            raise DomainError(f"delta must be > 0, got {delta}")
        Q = lam * delta ** (-2.0 / (nu - 2.0))
    Q = float(Q)
    if not (Q > 0.0 and math.isfinite(Q)):
        raise DomainError(f"barrier quality Q must be finite and > 0, got {Q}")
    if delta is None:
        delta = (Q / lam) ** (-(nu - 2.0) / 2.0)
    if nu in _MU_EXACT:
        f0, f1 = _F0_EXACT[nu], _F1_EXACT[nu]
        mu = _MU_EXACT[nu]
    else:
        coeffs = f_coeffs_analytic(nu)
        f0, f1 = coeffs.f0, coeffs.f1
        mu = math.exp(4.0 * f1) / (2.0 * lam)
    chi = mu * Q
    log_gamma0 = 0.5 * math.log(chi / (2.0 * math.pi)) - 2.0 * Q / lam * f0
    return BarrierSpec(
        nu=nu,
        Q=Q,
        lam=lam,
        t_max=2.0 * lam,
        mu=mu,
        chi=chi,
        f0=f0,
        f1=f1,
        log_gamma0=log_gamma0,
        xstar_sq=2.0 * nu * Q / (nu - 2.0),
        delta=delta,
    )


# ---------------------------------------------------------------------------
# partial rates


def gamma_n_exact(spec: BarrierSpec, n: int, method: str = "quadrature") -> LogRate:
    """ln(gamma_n / omega) = -ln(2 pi) - (2Q/lambda) F_nu(t_n).

    ``method`` is ``"quadrature"`` or ``"closed"`` (nu = 3, 4 only).
    """
    if n < 0:
        raise DomainError(f"level index must be >= 0, got {n}")
    if not n + 0.5 < spec.Q:
        raise DomainError(
            f"energy above barrier: level n={n} has n+1/2 >= Q={spec.Q}"
        )
    t = spec.t_of_level(n)
    if method == "quadrature":
        f_val = f_nu_quad(spec.nu, t)
    elif method == "closed":
        f_val = f_closed(spec.nu, t)
    else:
        raise UnsupportedError(f"unknown partial-rate method {method!r}")
    return LogRate(-math.log(2.0 * math.pi) - 2.0 * spec.Q / spec.lam * f_val)


def gamma_n_poisson(spec: BarrierSpec, n: int) -> LogRate:
    """Poisson law ``gamma_n = gamma_0 chi^n / n!``."""
    if n < 0:
        raise DomainError(f"level index must be >= 0, got {n}")
    return LogRate(spec.log_gamma0 + n * math.log(spec.chi) - log_factorial(n))


@dataclass(frozen=True)
class ValidityScore:
    condition: str
    score: float
    threshold: float = DEFAULT_THRESHOLD

    @property
    def passed(self) -> bool:
        return self.score < self.threshold


def validity_n(spec: BarrierSpec, n: int, threshold: float = DEFAULT_THRESHOLD) -> ValidityScore:
    """Score ``n^2 ln Q / Q`` of the Poisson-law restriction."""
    if not spec.Q > 1.0:
        raise DomainError(f"validity score needs Q > 1, got {spec.Q}")
    return ValidityScore("n^2 lnQ/Q << 1", n * n * math.log(spec.Q) / spec.Q, threshold)
