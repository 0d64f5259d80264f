"""Special-function kernel: elliptic integrals, Bessel functions, orthogonal
polynomial recurrences and log-domain helpers.

Everything here is a pure function of its arguments.  Elliptic integrals take
the *modulus* ``k`` (not the parameter ``m = k**2``).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "LogMagnitudePhase",
    "ellip_k",
    "ellip_e",
    "ellip_ke_complementary",
    "log_bessel_i0",
    "bessel_j0",
    "hermite",
    "hermite_sequence",
    "legendre_p",
    "legendre_sequence",
    "assoc_laguerre",
    "log_laguerre_sequence",
    "log_factorial",
    "log_sum_exp",
    "signed_log_sum",
]

_AGM_TOL = 1e-15
_I0_SWITCH = 20.0


@dataclass(frozen=True)
class LogMagnitudePhase:
    """A complex number stored as ``exp(log_mag) * exp(1j * phase)``.

    ``log_mag == -inf`` is the zero marker.
    """

    log_mag: float
    phase: float = 0.0

    ZERO_LOG = -math.inf

    @classmethod
    def zero(cls) -> "LogMagnitudePhase":
        return cls(-math.inf, 0.0)

    @classmethod
    def from_complex(cls, z: complex) -> "LogMagnitudePhase":
        if z == 0:
            return cls.zero()
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))

    @property
    def is_zero(self) -> bool:
        return self.log_mag == -math.inf

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.log_mag), self.phase)


# ---------------------------------------------------------------------------
# elliptic integrals


def _agm_ke(kp: float) -> tuple[float, float]:
    """K and E from the complementary modulus ``kp = sqrt(1 - k**2)`` by AGM."""
    a, b = 1.0, kp
    # c_0**2 = k**2 = 1 - kp**2, formed without cancellation
    c_sq = (1.0 - kp) * (1.0 + kp)
    total = 0.5 * c_sq
    power = 0.5
    for _ in range(64):
        if abs(a - b) <= _AGM_TOL * a:
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        total += power * c * c
    k_val = math.pi / (2.0 * a)
    return k_val, k_val * (1.0 - total)


def ellip_ke_complementary(kp: float) -> tuple[float, float]:
    """Return ``(K(k), E(k))`` given the complementary modulus ``kp``.

    Passing ``kp`` directly keeps full precision when ``k`` is close to 1,
    which is the regime of the small-energy barrier integrals.  ``kp == 0``
    gives ``(inf, 1.0)``.
    """
    if not 0.0 <= kp <= 1.0:
        raise ValueError(f"complementary modulus must lie in [0, 1], got {kp}")
    if kp == 0.0:
        return math.inf, 1.0
    return _agm_ke(kp)


def ellip_k(k: float) -> float:
    """Complete elliptic integral of the first kind, modulus ``k`` in [0, 1)."""
    if not 0.0 <= k < 1.0:
        raise ValueError(f"ellip_k requires 0 <= k < 1, got {k}")
    return _agm_ke(math.sqrt((1.0 - k) * (1.0 + k)))[0]


def ellip_e(k: float) -> float:
    """Complete elliptic integral of the second kind, modulus ``k`` in [0, 1]."""
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"ellip_e requires 0 <= k <= 1, got {k}")
    if k == 1.0:
        return 1.0
    return _agm_ke(math.sqrt((1.0 - k) * (1.0 + k)))[1]


# ---------------------------------------------------------------------------
# Bessel functions


def log_bessel_i0(x: float) -> float:
    """Natural log of the modified Bessel function I_0 for ``x >= 0``.

    Power series below x = 20, Hankel asymptotic series above.  Never
    overflows: ``log_bessel_i0(1e6)`` is fine.
    """
    if x < 0.0 or math.isnan(x):
        raise ValueError(f"log_bessel_i0 requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x <= _I0_SWITCH:
        q = 0.25 * x * x
        term = 1.0
        total = 1.0
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            total += term
            if term < 1e-17 * total:
                break
        return math.log(total)
    # I0(x) ~ e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    inv = 1.0 / (8.0 * x)
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        new = term * (2 * k - 1) ** 2 * inv / k
        if new >= term or new < 1e-17 * total:
            break
        term = new
        total += term
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(total)


def bessel_j0(x: float) -> float:
    """Bessel function J_0 (absolute error ~1e-15 for |x| <= 50).

    Power series for |x| <= 2, Miller backward recurrence normalised by
    ``J0 + 2 sum J_2k = 1`` beyond that.
    """
    x = abs(x)
    if x <= 2.0:
        q = -0.25 * x * x
        term = 1.0
        total = 1.0
        k = 0
        while abs(term) > 1e-18:
            k += 1
            term *= q / (k * k)
            total += term
        return total
    start = 2 * ((int(x) + 40 + int(4.0 * math.sqrt(x))) // 2)
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    j0 = 0.0
    for order in range(start, 0, -1):
        j_prev = 2.0 * order / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            norm *= 1e-250
        if (order - 1) % 2 == 0 and order - 1 > 0:
            norm += 2.0 * j_cur
        if order - 1 == 0:
            j0 = j_cur
    return j0 / (norm + j0)


# ---------------------------------------------------------------------------
# orthogonal polynomials


def _renormalized_recurrence(n, p0, p1, step):
    """Run a three-term recurrence keeping a shared scale exponent.

    ``step(k, p_prev, p_cur)`` returns p_{k+1}.  Yields ``(value, log_scale)``
    for every degree 0..n where the true value is ``value * exp(log_scale)``.
    """
    out = [(p0, 0.0)]
    if n == 0:
        return out
    out.append((p1, 0.0))
    prev, cur, log_scale = p0, p1, 0.0
    for k in range(1, n):
        nxt = step(k, prev, cur)
        prev, cur = cur, nxt
        big = max(abs(prev), abs(cur))
        if big > 1e100 or (0.0 < big < 1e-100):
            prev /= big
            cur /= big
            log_scale += math.log(big)
        out.append((cur, log_scale))
    return out


def _to_lmp(value: complex, log_scale: float) -> LogMagnitudePhase:
    if value == 0:
        return LogMagnitudePhase.zero()
    return LogMagnitudePhase(math.log(abs(value)) + log_scale, math.atan2(value.imag, value.real))


def hermite_sequence(n: int, x: complex) -> list[LogMagnitudePhase]:
    """Physicists' Hermite polynomials H_0..H_n at complex ``x``."""
    x = complex(x)
    seq = _renormalized_recurrence(
        n, 1.0 + 0j, 2.0 * x, lambda k, hp, hc: 2.0 * x * hc - 2.0 * k * hp
    )
    return [_to_lmp(v, s) for v, s in seq]


def hermite(n: int, x: complex) -> LogMagnitudePhase:
    """H_n(x) via ``H_{k+1} = 2x H_k - 2k H_{k-1}``."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    return hermite_sequence(n, x)[n]


def legendre_sequence(n: int, w: complex) -> list[LogMagnitudePhase]:
    """Legendre polynomials P_0..P_n at complex ``w``."""
    w = complex(w)
    seq = _renormalized_recurrence(
        n, 1.0 + 0j, w, lambda k, pp, pc: ((2 * k + 1) * w * pc - k * pp) / (k + 1)
    )
    return [_to_lmp(v, s) for v, s in seq]


def legendre_p(n: int, w: complex) -> LogMagnitudePhase:
    """P_n(w) via ``(k+1) P_{k+1} = (2k+1) w P_k - k P_{k-1}``."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    return legendre_sequence(n, w)[n]


def _laguerre_step(a, x):
    return lambda k, lp, lc: ((2 * k + 1 + a - x) * lc - (k + a) * lp) / (k + 1)


def assoc_laguerre(n: int, a: float, x: float) -> float:
    """Generalised Laguerre polynomial L_n^{(a)}(x) for any real ``a``."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if n == 0:
        return 1.0
    prev, cur = 1.0, 1.0 + a - x
    step = _laguerre_step(a, x)
    for k in range(1, n):
        prev, cur = cur, step(k, prev, cur)
    return cur


def log_laguerre_sequence(n: int, a: float, x: float) -> list[tuple[int, float]]:
    """``(sign, ln|L_k^{(a)}(x)|)`` for k = 0..n, overflow-safe.

    A zero value is reported as ``(0, -inf)``.
    """
    seq = _renormalized_recurrence(n, 1.0, 1.0 + a - x, _laguerre_step(a, x))
    out = []
    for value, scale in seq:
        if value == 0.0:
            out.append((0, -math.inf))
        else:
            out.append((1 if value > 0 else -1, math.log(abs(value)) + scale))
    return out


def log_factorial(n: int) -> float:
    """ln(n!)."""
    if n < 0:
        raise ValueError("log_factorial requires n >= 0")
    if n < 2:
        return 0.0
    return math.lgamma(n + 1.0)


# ---------------------------------------------------------------------------
# log-domain summation


def log_sum_exp(values: Iterable[float]) -> float:
    """ln(sum(exp(v))) with max subtraction; empty or all -inf gives -inf."""
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    top = max(vals)
    if top == math.inf:
        return math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))


def signed_log_sum(
    terms: Sequence[tuple[int, float]],
) -> tuple[int, float, float]:
    """Sum signed log-domain terms ``(sign, ln|value|)``.

    Returns ``(sign, ln|sum|, cancellation)`` where ``cancellation`` is
    ``|sum| / sum(|terms|)`` (1 means no cancellation, 0 total cancellation).
    """
    live = [(s, v) for s, v in terms if s != 0 and v != -math.inf]
    if not live:
        return 0, -math.inf, 1.0
    top = max(v for _, v in live)
    total = math.fsum(s * math.exp(v - top) for s, v in live)
    scale = math.fsum(math.exp(v - top) for _, v in live)
    if total == 0.0:
        return 0, -math.inf, 0.0
    sign = 1 if total > 0 else -1
    return sign, top + math.log(abs(total)), abs(total) / scale
