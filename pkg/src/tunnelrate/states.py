"""Level populations rho_n of the wave-packet families.

Three flavours of population are exposed:

``log_rho_array``
    Physical, normalised populations (the default everywhere).
``log_rho_unnormalized_array``
    The distribution exactly as written for each family; for the odd
    squeezed and photon-added coherent states this lacks its normalisation
    constant, whose value :func:`normalization_report` quantifies.
``leading_order_log_rho_array``
    Small-parameter populations whose Poisson-weighted sum reproduces each
    closed-form total rate term by term (used for the "paper" convention of
    :mod:`tunnelrate.rates`).

Populations are returned as natural logarithms; forbidden levels are ``-inf``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import ClassVar, Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .specialfn import (
    assoc_laguerre,
    hermite_sequence,
    legendre_sequence,
    log_laguerre_sequence,
)

__all__ = [
    "StateError",
    "StateSpec",
    "Fock",
    "Coherent",
    "Squeezed",
    "SqueezedVacuum",
    "Thermal",
    "GaussianMixedZeroMean",
    "ShiftedThermal",
    "EvenCoherent",
    "OddCoherent",
    "OddSqueezed",
    "PhotonAddedCoherent",
    "DisplacedNumber",
    "Moments",
    "log_rho",
    "log_rho_array",
    "log_rho_unnormalized_array",
    "leading_order_log_rho_array",
    "gaussian_mixed_complex_rho",
    "normalization_report",
    "leading_order_normalization",
    "finite_support",
    "moments",
    "summed_moments",
    "leading_order_moments",
    "DEFAULT_N_MAX",
]

DEFAULT_N_MAX = 512
TAIL_TARGET = 1e-12
_UNIT_TOL = 1e-12


class StateError(ValueError):
    """Invalid wave-packet parameters."""


def _logfact(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


# ---------------------------------------------------------------------------
# state families


@dataclass(frozen=True)
class StateSpec:
    family: ClassVar[str] = "state"

    def describe(self) -> str:
        fields = ", ".join(f"{k}={v!r}" for k, v in self.__dict__.items())
        return f"{self.family}({fields})"


@dataclass(frozen=True)
class Fock(StateSpec):
    family: ClassVar[str] = "fock"
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise StateError(f"Fock level must be a nonnegative integer, got {self.m}")


@dataclass(frozen=True)
class Coherent(StateSpec):
    family: ClassVar[str] = "coherent"
    alpha: complex

    @classmethod
    def with_nbar(cls, nbar: float) -> "Coherent":
        return cls(complex(math.sqrt(nbar)))


@dataclass(frozen=True)
class Squeezed(StateSpec):
    """Eigenstate of ``u a + v a^dagger`` with eigenvalue ``beta``."""

    family: ClassVar[str] = "squeezed"
    beta: complex
    u: complex
    v: complex

    def __post_init__(self):
        gap = abs(self.u) ** 2 - abs(self.v) ** 2 - 1.0
        if abs(gap) > _UNIT_TOL:
            raise StateError(f"|u|^2 - |v|^2 must equal 1 (off by {gap:.3g})")

    @classmethod
    def from_beta_v(cls, beta: complex, v: complex) -> "Squeezed":
        """Take ``u`` real and positive."""
        return cls(complex(beta), complex(math.sqrt(1.0 + abs(v) ** 2)), complex(v))

    @property
    def psi(self) -> float:
        """Phase ``arg(beta / sqrt(u v))`` with the principal square root."""
        if self.beta == 0 or self.v == 0:
            return 0.0
        return cmath.phase(self.beta / cmath.sqrt(self.u * self.v))


@dataclass(frozen=True)
class SqueezedVacuum(StateSpec):
    family: ClassVar[str] = "squeezed_vacuum"
    v: complex

    def __post_init__(self):
        if not cmath.isfinite(complex(self.v)):
            raise StateError(f"squeezing parameter must be finite, got {self.v}")

    @classmethod
    def with_nbar(cls, nbar: float) -> "SqueezedVacuum":
        return cls(complex(math.sqrt(nbar)))

    @property
    def u(self) -> float:
        return math.sqrt(1.0 + abs(self.v) ** 2)

    def as_squeezed(self) -> Squeezed:
        return Squeezed(0j, complex(self.u), complex(self.v))


@dataclass(frozen=True)
class Thermal(StateSpec):
    family: ClassVar[str] = "thermal"
    nbar: float

    def __post_init__(self):
        if not self.nbar >= 0.0:
            raise StateError(f"thermal occupation must be >= 0, got {self.nbar}")

    @classmethod
    def with_nbar(cls, nbar: float) -> "Thermal":
        return cls(nbar)


@dataclass(frozen=True)
class GaussianMixedZeroMean(StateSpec):
    """Zero-mean Gaussian mixed state of mean occupation ``nbar``.

    ``eps`` measures the mixing: purity ``1/(1 + 2 eps)``, i.e. degree of
    mixing ``d = (1 + 2 eps)^2 / 4``; ``T = 1 + 2 nbar``.  ``eps = 0`` is a
    squeezed vacuum and ``eps = nbar`` the thermal state.
    """

    family: ClassVar[str] = "gaussian_mixed"
    nbar: float
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= self.nbar:
            raise StateError(f"need 0 <= eps <= nbar, got eps={self.eps}, nbar={self.nbar}")

    @property
    def d(self) -> float:
        return 0.25 * (1.0 + 2.0 * self.eps) ** 2

    @property
    def T(self) -> float:
        return 1.0 + 2.0 * self.nbar


@dataclass(frozen=True)
class ShiftedThermal(StateSpec):
    """Displaced thermal state (coherent amplitude ``alpha``, thermal ``nth``)."""

    family: ClassVar[str] = "shifted_thermal"
    alpha: complex
    nth: float

    def __post_init__(self):
        if not self.nth >= 0.0:
            raise StateError(f"thermal occupation must be >= 0, got {self.nth}")


@dataclass(frozen=True)
class EvenCoherent(StateSpec):
    family: ClassVar[str] = "even_coherent"
    alpha: complex

    @classmethod
    def with_nbar(cls, nbar: float) -> "EvenCoherent":
        # invert nbar = x tanh x
        from scipy.optimize import brentq

        if nbar == 0:
            return cls(0j)
        x = brentq(lambda x: x * math.tanh(x) - nbar, 0.0, nbar + 2.0 * math.sqrt(nbar) + 1.0, xtol=1e-300, rtol=1e-15)
        return cls(complex(math.sqrt(x)))


@dataclass(frozen=True)
class OddCoherent(StateSpec):
    family: ClassVar[str] = "odd_coherent"
    alpha: complex

    def __post_init__(self):
        if self.alpha == 0:
            raise StateError("odd coherent state is undefined at alpha = 0")


@dataclass(frozen=True)
class OddSqueezed(StateSpec):
    """``exp(z a^dagger^2 / 2)|1>``."""

    family: ClassVar[str] = "odd_squeezed"
    z: complex

    def __post_init__(self):
        if not abs(self.z) < 1.0:
            raise StateError(f"odd squeezed state needs |z| < 1, got {abs(self.z)}")


@dataclass(frozen=True)
class PhotonAddedCoherent(StateSpec):
    """``(a^dagger)^m |alpha>``."""

    family: ClassVar[str] = "pacs"
    alpha: complex
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise StateError(f"photon number m must be a nonnegative integer, got {self.m}")


@dataclass(frozen=True)
class DisplacedNumber(StateSpec):
    """``D(alpha)|m>``."""

    family: ClassVar[str] = "displaced_number"
    m: int
    alpha: complex

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise StateError(f"Fock index m must be a nonnegative integer, got {self.m}")


# ---------------------------------------------------------------------------
# populations as written


def _delta_at(m: int, n_max: int) -> np.ndarray:
    out = np.full(n_max + 1, -np.inf)
    if m <= n_max:
        out[m] = 0.0
    return out


def _poisson(x: float, n_max: int, with_exp: bool = True) -> np.ndarray:
    if x == 0.0:
        return _delta_at(0, n_max)
    n = np.arange(n_max + 1)
    out = n * math.log(x) - _logfact(n)
    return out - x if with_exp else out


def _squeezed(state: Squeezed, n_max: int) -> np.ndarray:
    beta, u, v = complex(state.beta), complex(state.u), complex(state.v)
    if abs(v) < 1e-100:
        # corrections are O(|v| n); the Hermite argument would overflow
        return _poisson(abs(beta / u) ** 2, n_max)
    x = beta / cmath.sqrt(2.0 * u * v)
    herm = hermite_sequence(n_max, x)
    log_h = np.array([h.log_mag for h in herm])
    n = np.arange(n_max + 1)
    const = -math.log(abs(u)) - abs(beta) ** 2 + (beta * beta * v.conjugate() / u).real
    return const - _logfact(n) + n * math.log(abs(v / (2.0 * u))) + 2.0 * log_h


def _squeezed_vacuum(v: float, n_max: int, u: float) -> np.ndarray:
    out = np.full(n_max + 1, -np.inf)
    if v == 0.0:
        out[0] = 0.0
        return out
    k = np.arange(n_max // 2 + 1)
    out[0::2] = -math.log(u) + _logfact(2 * k) - 2.0 * _logfact(k) + 2 * k * math.log(v / (2.0 * u))
    return out


def _thermal(nbar: float, n_max: int) -> np.ndarray:
    if nbar == 0.0:
        return _delta_at(0, n_max)
    n = np.arange(n_max + 1)
    return n * math.log(nbar) - (n + 1) * math.log1p(nbar)


def _log_laplace_legendre(n_max: int, p: float, q: float) -> np.ndarray:
    """ln sum_k C(n,2k) C(2k,k) p^(n-2k) (q/4)^k for n = 0..n_max, p, q >= 0.

    This is ``r^n P_n(w)`` written through ``p = r w`` and
    ``q = r^2 (w^2 - 1)``; every term is nonnegative.
    """
    out = np.empty(n_max + 1)
    log_p = _safe_log(p)
    log_q4 = _safe_log(q / 4.0)
    for n in range(n_max + 1):
        k = np.arange(n // 2 + 1)
        with np.errstate(invalid="ignore"):
            terms = (
                _logfact(n) - _logfact(n - 2 * k) - 2.0 * _logfact(k)
                + np.where(n - 2 * k > 0, (n - 2 * k) * log_p, 0.0)
                + np.where(k > 0, k * log_q4, 0.0)
            )
        terms = np.where(np.isnan(terms), -np.inf, terms)
        out[n] = logsumexp(terms)
    return out


def _gaussian_factors(state: GaussianMixedZeroMean) -> tuple[float, float, float, float]:
    """``4d - 1``, ``4d + 1 - 2T``, ``4d + 1 + 2T`` and ``T^2 - 4d`` free of cancellation."""
    eps, nbar = state.eps, state.nbar
    four_d_m1 = 4.0 * eps * (1.0 + eps)
    a_fac = 4.0 * ((eps - nbar) + eps * eps)
    b_fac = 4.0 * (1.0 + nbar + eps * (1.0 + eps))
    gap = 4.0 * (nbar - eps) * (1.0 + nbar + eps)
    return four_d_m1, a_fac, b_fac, gap


def _gaussian_mixed_parts(state: GaussianMixedZeroMean, n_max: int):
    """Complex log of each population (log modulus, phase)."""
    four_d_m1, a_fac, b_fac, _ = _gaussian_factors(state)
    w = four_d_m1 / cmath.sqrt(complex(a_fac * b_fac))
    log_ratio = cmath.log(complex(a_fac / b_fac))
    leg = legendre_sequence(n_max, w)
    n = np.arange(n_max + 1)
    log_c = math.log(2.0) - 0.5 * math.log(b_fac)
    log_mag = log_c + 0.5 * n * log_ratio.real + np.array([p.log_mag for p in leg])
    phase = 0.5 * n * log_ratio.imag + np.array([p.phase for p in leg])
    return log_mag, phase


def gaussian_mixed_complex_rho(state: GaussianMixedZeroMean, n_max: int) -> np.ndarray:
    """Populations of the Gaussian mixed state evaluated in complex arithmetic.

    The imaginary parts should vanish; they are kept so callers can check it.
    """
    log_mag, phase = _gaussian_mixed_parts(state, n_max)
    with np.errstate(under="ignore"):
        return np.exp(log_mag) * np.exp(1j * phase)


def _gaussian_mixed(state: GaussianMixedZeroMean, n_max: int) -> np.ndarray:
    if state.nbar == 0.0:
        return _delta_at(0, n_max)
    four_d_m1, a_fac, b_fac, gap = _gaussian_factors(state)
    if abs(a_fac) < 1e-13 * b_fac:
        # r -> 0 with r*w finite: the complex form degenerates, use the real expansion
        p = four_d_m1 / b_fac
        q = 4.0 * gap / b_fac**2
        return math.log(2.0) - 0.5 * math.log(b_fac) + _log_laplace_legendre(n_max, p, q)
    log_mag, phase = _gaussian_mixed_parts(state, n_max)
    cos_phase = np.cos(phase)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(cos_phase > 0.0, log_mag + np.log(np.abs(cos_phase)), -np.inf)
    return np.where(np.isfinite(log_mag), out, -np.inf)


def _shifted_thermal(alpha: complex, nth: float, n_max: int) -> np.ndarray:
    x = abs(alpha) ** 2
    if nth == 0.0:
        return _poisson(x, n_max)
    if x == 0.0:
        return _thermal(nth, n_max)
    y = x / (nth * (1.0 + nth))
    if y > 1e200:
        # thermal part far below resolution; relative change ~ n * nth
        return _poisson(x, n_max)
    lag = np.array([v for _, v in log_laguerre_sequence(n_max, 0.0, -y)])
    n = np.arange(n_max + 1)
    return n * math.log(nth) - (n + 1) * math.log1p(nth) - x / (1.0 + nth) + lag


def _log_cosh(x: float) -> float:
    return x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)


def _log_sinh(x: float) -> float:
    if x < 20.0:
        return math.log(math.sinh(x))
    return x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0)


def _parity_poisson(x: float, n_max: int, parity: int) -> np.ndarray:
    """x^n / n! on levels of the given parity, -inf elsewhere."""
    out = np.full(n_max + 1, -np.inf)
    if x == 0.0:
        if parity == 0:
            out[0] = 0.0
        return out
    n = np.arange(parity, n_max + 1, 2)
    out[parity::2] = n * math.log(x) - _logfact(n)
    return out


def _odd_squeezed(z: complex, n_max: int) -> np.ndarray:
    out = np.full(n_max + 1, -np.inf)
    k = np.arange((n_max - 1) // 2 + 1) if n_max >= 1 else np.arange(0)
    if len(k) == 0:
        return out
    base = _logfact(2 * k + 1) - 2.0 * _logfact(k)
    if z == 0:
        out[1] = 0.0
        return out
    out[1::2] = base + 2 * k * math.log(abs(z) / 2.0)
    return out


def _pacs(alpha: complex, m: int, n_max: int) -> np.ndarray:
    x = abs(alpha) ** 2
    if x == 0.0:
        return _delta_at(m, n_max)
    out = np.full(n_max + 1, -np.inf)
    n = np.arange(m, n_max + 1)
    if len(n):
        out[m:] = _logfact(n) + (n - m) * math.log(x) - _logfact(m) - 2.0 * _logfact(n - m)
    return out


def _displaced_number(m: int, alpha: complex, n_max: int) -> np.ndarray:
    x = abs(alpha) ** 2
    if x == 0.0:
        return _delta_at(m, n_max)
    out = np.empty(n_max + 1)
    log_x = math.log(x)
    for n in range(n_max + 1):
        lo, hi = min(n, m), max(n, m)
        # |<n|D|m>|^2 = (lo!/hi!) x^(hi-lo) e^-x [L_lo^(hi-lo)(x)]^2
        lag = assoc_laguerre(lo, hi - lo, x)
        if lag == 0.0:
            out[n] = -np.inf
            continue
        out[n] = (
            math.lgamma(lo + 1) - math.lgamma(hi + 1) + (hi - lo) * log_x - x
            + 2.0 * math.log(abs(lag))
        )
    return out


def log_rho_unnormalized_array(state: StateSpec, n_max: int) -> np.ndarray:
    """ln of each family's population formula as written, n = 0..n_max."""
    if isinstance(state, Fock):
        return _delta_at(state.m, n_max)
    if isinstance(state, Coherent):
        return _poisson(abs(state.alpha) ** 2, n_max)
    if isinstance(state, Squeezed):
        return _squeezed(state, n_max)
    if isinstance(state, SqueezedVacuum):
        return _squeezed_vacuum(abs(state.v), n_max, state.u)
    if isinstance(state, Thermal):
        return _thermal(state.nbar, n_max)
    if isinstance(state, GaussianMixedZeroMean):
        return _gaussian_mixed(state, n_max)
    if isinstance(state, ShiftedThermal):
        return _shifted_thermal(state.alpha, state.nth, n_max)
    if isinstance(state, EvenCoherent):
        x = abs(state.alpha) ** 2
        return _parity_poisson(x, n_max, 0) - (_log_cosh(x) if x else 0.0)
    if isinstance(state, OddCoherent):
        x = abs(state.alpha) ** 2
        return _parity_poisson(x, n_max, 1) - _log_sinh(x)
    if isinstance(state, OddSqueezed):
        return _odd_squeezed(state.z, n_max)
    if isinstance(state, PhotonAddedCoherent):
        return _pacs(state.alpha, state.m, n_max)
    if isinstance(state, DisplacedNumber):
        return _displaced_number(state.m, state.alpha, n_max)
    raise TypeError(f"unknown state type {type(state).__name__}")


# ---------------------------------------------------------------------------
# leading-order populations behind the closed-form rates


def leading_order_log_rho_array(state: StateSpec, n_max: int) -> np.ndarray:
    """Unnormalised small-parameter populations matched to the closed-form rates.

    With partial rates ``gamma_0 chi^n / n!`` these sum exactly to the
    closed forms of :func:`tunnelrate.rates.rate_closed`, e.g. ``nbar^n``
    for the thermal state (whose rate is ``gamma_0 exp(chi nbar)``).

    Raises
    ------
    StateError
        For families without a closed-form rate.
    """
    if isinstance(state, (Fock, Coherent, OddSqueezed, PhotonAddedCoherent)):
        return log_rho_unnormalized_array(state, n_max)
    if isinstance(state, Thermal):
        if state.nbar == 0.0:
            return _delta_at(0, n_max)
        return np.arange(n_max + 1) * math.log(state.nbar)
    if isinstance(state, SqueezedVacuum):
        return _squeezed_vacuum(abs(state.v), n_max, 1.0)
    if isinstance(state, GaussianMixedZeroMean):
        return _log_laplace_legendre(n_max, state.eps, state.nbar - state.eps)
    if isinstance(state, ShiftedThermal):
        x = abs(state.alpha) ** 2
        if state.nth == 0.0:
            return _poisson(x, n_max, with_exp=False)
        if x == 0.0:
            return np.arange(n_max + 1) * math.log(state.nth)
        lag = np.array([v for _, v in log_laguerre_sequence(n_max, 0.0, -x / state.nth)])
        return np.arange(n_max + 1) * math.log(state.nth) + lag
    if isinstance(state, EvenCoherent):
        return _parity_poisson(abs(state.alpha) ** 2, n_max, 0)
    if isinstance(state, OddCoherent):
        x = abs(state.alpha) ** 2
        return _parity_poisson(x, n_max, 1) - math.log(x)
    raise StateError(f"no closed-form rate (hence no leading-order populations) for {state.family}")


# ---------------------------------------------------------------------------
# normalisation


def _parity_stride(state: StateSpec) -> int:
    if isinstance(state, (EvenCoherent, OddCoherent, OddSqueezed, SqueezedVacuum)):
        return 2
    if isinstance(state, Squeezed) and state.beta == 0:
        return 2
    if isinstance(state, GaussianMixedZeroMean) and state.eps == 0:
        return 2
    return 1


def _tail_bound(log_terms: np.ndarray, stride: int) -> float:
    """Ratio-test bound on sum_{n > n_max} of the terms, relative to their sum.

    The test runs on sums of consecutive pairs so that distributions whose
    odd and even levels differ by many orders of magnitude are handled.
    """
    finite = np.flatnonzero(np.isfinite(log_terms))
    if len(finite) == 0:
        return 0.0
    last = finite[-1]
    if last < len(log_terms) - stride:
        # finite support ended inside the window
        return 0.0
    total = logsumexp(log_terms[finite])
    top = len(log_terms) - 1
    pairs = np.array(
        [np.logaddexp(log_terms[top - 2 * j - 1], log_terms[top - 2 * j]) for j in range(9, -1, -1)
         if top - 2 * j - 1 >= 0]
    )
    if len(pairs) < 3 or not np.all(np.isfinite(pairs)):
        return math.inf
    r = float(np.exp(np.diff(pairs)).max())
    if r >= 1.0:
        return math.inf
    # ratios increase towards their limit for several families; widen the bound
    r = min(1.0 - 0.5 * (1.0 - r), 0.999999)
    return 2.0 * math.exp(pairs[-1] - total) * r / (1.0 - r)


def normalization_report(state: StateSpec, n_max: int = DEFAULT_N_MAX) -> tuple[float, float]:
    """``(raw_sum, tail_bound)`` of the written population formula up to ``n_max``.

    Raises
    ------
    StateError
        If the ratio-test tail bound is not below 1e-12; retry with a
        larger ``n_max``.
    """
    terms = log_rho_unnormalized_array(state, n_max)
    tail = _tail_bound(terms, _parity_stride(state))
    if not tail < TAIL_TARGET:
        raise StateError(
            f"tail bound {tail:.3g} not below {TAIL_TARGET} at n_max={n_max}; increase n_max"
        )
    return math.exp(logsumexp(terms)), tail


@lru_cache(maxsize=512)
def _log_norm(state: StateSpec) -> float:
    n_max = DEFAULT_N_MAX
    while True:
        try:
            raw, _ = normalization_report(state, n_max)
            return math.log(raw)
        except StateError:
            if n_max >= 1 << 16:
                raise
            n_max *= 2


def log_rho_array(state: StateSpec, n_max: int) -> np.ndarray:
    """Normalised ln rho_n for n = 0..n_max (``-inf`` for empty levels)."""
    return log_rho_unnormalized_array(state, n_max) - _log_norm(state)


def log_rho(state: StateSpec, n: int) -> float:
    """Normalised ln rho_n."""
    if n < 0:
        raise ValueError("level index must be nonnegative")
    return float(log_rho_array(state, n)[n])


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class Moments:
    """Mean occupation, its variance ``sigma_n`` and Mandel's ``S = (sigma_n - nbar)/nbar``."""

    nbar: float
    sigma_n: Optional[float]

    @property
    def mandel_s(self) -> Optional[float]:
        if self.sigma_n is None:
            return None
        if self.nbar == 0.0:
            return 0.0
        return (self.sigma_n - self.nbar) / self.nbar


def summed_moments(state: StateSpec, n_max: Optional[int] = None) -> Moments:
    """n-bar and variance by direct summation of the normalised populations."""
    if n_max is None:
        n_max = DEFAULT_N_MAX
        while True:
            terms = log_rho_unnormalized_array(state, n_max)
            if _tail_bound(terms, _parity_stride(state)) < TAIL_TARGET or n_max >= 1 << 16:
                break
            n_max *= 2
    with np.errstate(under="ignore"):
        rho = np.exp(log_rho_array(state, n_max))
    n = np.arange(n_max + 1, dtype=float)
    mean = math.fsum(n * rho)
    # variance from central moment to avoid cancellation at tiny nbar
    var = math.fsum((n - mean) ** 2 * rho)
    return Moments(mean, var)


def _squeezed_moments(beta: complex, u: complex, v: complex) -> Moments:
    cross = (beta * beta * v.conjugate() / u).real
    nbar = abs(v) ** 2 * (1.0 + abs(beta) ** 2) + abs(u) ** 2 * (abs(beta) ** 2 - 2.0 * cross)
    sigma = 2.0 * nbar * (2.0 * abs(u) ** 2 - 1.0) - 2.0 * abs(v) ** 4 - abs(beta) ** 2
    return Moments(nbar, sigma)


def moments(state: StateSpec) -> Moments:
    """Moments from exact closed forms where available, else by summation."""
    if isinstance(state, Fock):
        return Moments(float(state.m), 0.0)
    if isinstance(state, Coherent):
        x = abs(state.alpha) ** 2
        return Moments(x, x)
    if isinstance(state, Squeezed):
        return _squeezed_moments(complex(state.beta), complex(state.u), complex(state.v))
    if isinstance(state, SqueezedVacuum):
        sq = state.as_squeezed()
        return _squeezed_moments(sq.beta, sq.u, sq.v)
    if isinstance(state, EvenCoherent):
        x = abs(state.alpha) ** 2
        return Moments(x * math.tanh(x), summed_moments(state).sigma_n)
    if isinstance(state, OddCoherent):
        x = abs(state.alpha) ** 2
        return Moments(x / math.tanh(x), summed_moments(state).sigma_n)
    if isinstance(state, DisplacedNumber):
        x = abs(state.alpha) ** 2
        return Moments(state.m + x, (2 * state.m + 1) * x)
    return summed_moments(state)


def leading_order_moments(state: StateSpec) -> Moments:
    """Small-parameter approximations of n-bar and sigma_n.

    ``sigma_n`` is ``None`` when no approximation is available.
    """
    if isinstance(state, EvenCoherent):
        x = abs(state.alpha) ** 2
        return Moments(x * x, 2.0 * x * x)
    if isinstance(state, OddCoherent):
        x = abs(state.alpha) ** 2
        return Moments(1.0 + x * x / 3.0, None)
    if isinstance(state, OddSqueezed):
        return Moments(1.0 + 3.0 * abs(state.z) ** 2, None)
    if isinstance(state, PhotonAddedCoherent):
        x = abs(state.alpha) ** 2
        return Moments(state.m + (state.m + 1) * x, (state.m + 1) * x)
    if isinstance(state, SqueezedVacuum):
        return Moments(abs(state.v) ** 2, None)
    if isinstance(state, Squeezed):
        b2 = abs(state.beta) ** 2
        nbar = b2 * (1.0 - 2.0 * abs(state.v) * math.cos(2.0 * state.psi))
        return Moments(nbar, 2.0 * nbar - b2)
    return moments(state)


def finite_support(state: StateSpec) -> Optional[int]:
    """Largest populated level when the distribution has finite support, else None."""
    if isinstance(state, Fock):
        return state.m
    if isinstance(state, (Coherent, EvenCoherent)) and state.alpha == 0:
        return 0
    if isinstance(state, (PhotonAddedCoherent, DisplacedNumber)) and state.alpha == 0:
        return state.m
    if isinstance(state, OddSqueezed) and state.z == 0:
        return 1
    if isinstance(state, Squeezed) and state.beta == 0 and state.v == 0:
        return 0
    if isinstance(state, SqueezedVacuum) and state.v == 0:
        return 0
    if isinstance(state, (Thermal, GaussianMixedZeroMean)) and state.nbar == 0:
        return 0
    if isinstance(state, ShiftedThermal) and state.alpha == 0 and state.nth == 0:
        return 0
    return None


def leading_order_normalization(state: StateSpec, n_max: int = DEFAULT_N_MAX) -> tuple[float, float]:
    """``(raw_sum, tail_bound)`` of :func:`leading_order_log_rho_array`."""
    terms = leading_order_log_rho_array(state, n_max)
    tail = _tail_bound(terms, _parity_stride(state))
    if not tail < TAIL_TARGET:
        raise StateError(
            f"tail bound {tail:.3g} not below {TAIL_TARGET} at n_max={n_max}; increase n_max"
        )
    return math.exp(logsumexp(terms)), tail
