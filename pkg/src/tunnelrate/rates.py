"""Total decay rates of wave packets.

The total rate is the population-weighted sum of partial rates,
``gamma = sum_n rho_n gamma_n``.  It can be obtained by direct summation
(any state, any partial-rate method), by closed forms valid with the
Poisson partial-rate law, by phase integrals (squeezed and displaced
number states) and by steepest-descent asymptotics.

Population conventions for the series:

``"exact"``
    normalised physical populations (default);
``"paper"``
    the leading-order populations whose sums the closed forms are, so the
    series reproduces :func:`rate_closed` term by term;
``"paper_normalized"``
    the same populations divided by their sum.

Note on the shifted thermal state: its closed form
``gamma_0 exp(chi nth) I0(2|alpha| sqrt(chi))`` equals the product of the
thermal and coherent rates only when rates are read in units of gamma_0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .barrier import (
    DEFAULT_THRESHOLD,
    BarrierSpec,
    DomainError,
    LogRate,
    NumericalError,
    UnsupportedError,
    ValidityScore,
    gamma_n_exact,
    validity_n,
)
from .specialfn import log_bessel_i0, bessel_j0, signed_log_sum
from .states import (
    Coherent,
    DisplacedNumber,
    EvenCoherent,
    Fock,
    GaussianMixedZeroMean,
    OddCoherent,
    OddSqueezed,
    PhotonAddedCoherent,
    ShiftedThermal,
    Squeezed,
    SqueezedVacuum,
    StateSpec,
    Thermal,
    finite_support,
    leading_order_log_rho_array,
    leading_order_normalization,
    log_rho_array,
    moments,
)

__all__ = [
    "RateResult",
    "ComparisonReport",
    "total_rate_series",
    "rate_closed",
    "rate_squeezed_phase_integral",
    "rate_displaced_phase_integral",
    "rate_asymptotic",
    "rate_asymptotic_mandel",
    "compare_methods",
    "state_validity",
    "PARTIAL_METHODS",
    "CONVENTIONS",
]

PARTIAL_METHODS = ("poisson", "quadrature", "closed")
CONVENTIONS = ("exact", "paper", "paper_normalized")
SERIES_N_MAX = 4096
_PI_TOL = 1e-10
_PI_MAX_NODES = 1 << 20


@dataclass(frozen=True)
class RateResult:
    """A total rate with its provenance.

    ``method`` is one of ``series``, ``closed``, ``phase_integral`` or
    ``asymptotic``; ``detail`` names the partial-rate law and population
    convention where relevant.  ``error_estimate`` is an absolute error in
    ln-space.
    """

    rate: LogRate
    method: str
    validity_flags: tuple[ValidityScore, ...] = ()
    error_estimate: float = 0.0
    detail: str = ""
    n_terms: Optional[int] = None

    @property
    def log_value(self) -> float:
        return self.rate.log_value

    @property
    def label(self) -> str:
        return f"{self.method}[{self.detail}]" if self.detail else self.method

    @property
    def all_valid(self) -> bool:
        return all(f.passed for f in self.validity_flags)


@dataclass(frozen=True)
class ComparisonReport:
    results: dict[str, RateResult]
    errors: dict[str, str]
    differences: dict[str, float] = field(default_factory=dict)
    baseline: str = "series[poisson,exact]"

    def max_abs_difference(self) -> float:
        return max((abs(v) for v in self.differences.values()), default=0.0)


# ---------------------------------------------------------------------------
# validity


def _log_q(spec: BarrierSpec) -> float:
    return math.log(spec.Q) if spec.Q > 1.0 else math.inf


def state_validity(
    state: StateSpec, spec: BarrierSpec, threshold: float = DEFAULT_THRESHOLD
) -> tuple[ValidityScore, ...]:
    """Smallness conditions under which the closed-form rate of ``state`` holds."""
    lq = _log_q(spec)
    q = spec.Q
    flag = lambda cond, score: ValidityScore(cond, float(score), threshold)  # noqa: E731
    if isinstance(state, Fock):
        return (validity_n(spec, state.m, threshold),) if spec.Q > 1 else ()
    if isinstance(state, Coherent):
        return (flag("nbar lnQ << 1", abs(state.alpha) ** 2 * lq),)
    if isinstance(state, Thermal):
        return (flag("nbar sqrt(Q lnQ) << 1", state.nbar * math.sqrt(q * lq)),)
    if isinstance(state, SqueezedVacuum):
        return (flag("|v|^2 Q lnQ << 1", abs(state.v) ** 2 * q * lq),)
    if isinstance(state, GaussianMixedZeroMean):
        return (
            flag("(nbar-eps) Q lnQ << 1", (state.nbar - state.eps) * q * lq),
            flag("eps sqrt(Q lnQ) << 1", state.eps * math.sqrt(q * lq)),
        )
    if isinstance(state, ShiftedThermal):
        return (
            flag("|alpha|^2 lnQ << 1", abs(state.alpha) ** 2 * lq),
            flag("nth sqrt(Q lnQ) << 1", state.nth * math.sqrt(q * lq)),
        )
    if isinstance(state, (EvenCoherent, OddCoherent)):
        return (flag("|alpha|^2 mu lnQ << 1", abs(state.alpha) ** 2 * spec.mu * lq),)
    if isinstance(state, OddSqueezed):
        return (flag("|z|^2 Q lnQ << 1", abs(state.z) ** 2 * q * lq),)
    if isinstance(state, (PhotonAddedCoherent, DisplacedNumber)):
        return (
            flag("|alpha|^2 lnQ << 1", abs(state.alpha) ** 2 * lq),
            validity_n(spec, state.m, threshold) if spec.Q > 1 else flag("Q > 1", math.inf),
        )
    if isinstance(state, Squeezed):
        return (
            flag("|beta|^2 << 1", abs(state.beta) ** 2),
            flag("1/chi << 1", 1.0 / spec.chi),
        )
    return ()


# ---------------------------------------------------------------------------
# direct summation


def _partial_rates(spec: BarrierSpec, partial: str) -> Callable[[int, int], np.ndarray]:
    """Return ``f(lo, hi)`` giving ln gamma_n for n in [lo, hi)."""
    if partial == "poisson":
        def poisson(lo: int, hi: int) -> np.ndarray:
            n = np.arange(lo, hi)
            return spec.log_gamma0 + n * spec.log_chi - gammaln(n + 1.0)

        return poisson
    if partial in ("quadrature", "closed"):
        cache: dict[int, float] = {}

        def exact(lo: int, hi: int) -> np.ndarray:
            out = np.empty(hi - lo)
            for i, n in enumerate(range(lo, hi)):
                if n not in cache:
                    cache[n] = gamma_n_exact(spec, n, partial).log_value
                out[i] = cache[n]
            return out

        return exact
    raise UnsupportedError(f"unknown partial-rate method {partial!r}; choose from {PARTIAL_METHODS}")


def _population_source(state: StateSpec, convention: str) -> Callable[[int], np.ndarray]:
    if convention == "exact":
        return lambda n_max: log_rho_array(state, n_max)
    if convention == "paper":
        return lambda n_max: leading_order_log_rho_array(state, n_max)
    if convention == "paper_normalized":
        raw, _ = _leading_norm(state)
        shift = math.log(raw)
        return lambda n_max: leading_order_log_rho_array(state, n_max) - shift
    raise UnsupportedError(f"unknown convention {convention!r}; choose from {CONVENTIONS}")


def _leading_norm(state: StateSpec) -> tuple[float, float]:
    n_max = 512
    while True:
        try:
            return leading_order_normalization(state, n_max)
        except ValueError:
            if n_max >= 1 << 16:
                raise
            n_max *= 2


def total_rate_series(
    state: StateSpec,
    spec: BarrierSpec,
    partial: str = "poisson",
    tol: float = 1e-14,
    *,
    convention: str = "exact",
    n_max: int = SERIES_N_MAX,
    threshold: float = DEFAULT_THRESHOLD,
) -> RateResult:
    """Direct log-sum-exp of ``ln rho_n + ln gamma_n``.

    Summation stops at the first populated level past the running argmax
    whose term is below ``tol`` times the running sum and smaller than the
    previous populated term.

    Raises
    ------
    NumericalError
        If the stopping rule is not met by ``n_max`` or before the levels
        reach the barrier top.
    """
    if not 0.0 < tol <= 1e-3:
        raise DomainError(f"tol must lie in (0, 1e-3], got {tol}")
    pop = _population_source(state, convention)
    gam = _partial_rates(spec, partial)
    flags = list(state_validity(state, spec, threshold))
    detail = f"{partial},{convention}"

    support = finite_support(state)
    if support is not None:
        rho = pop(support)
        live = np.flatnonzero(np.isfinite(rho))
        terms = [rho[n] + gam(n, n + 1)[0] for n in live]
        value = float(logsumexp(terms)) if terms else -math.inf
        if spec.Q > 1:
            flags.append(validity_n(spec, int(live[-1]) if len(live) else 0, threshold))
        return RateResult(LogRate(value), "series", tuple(flags), 1e-15 * len(terms), detail, support + 1)

    log_tol = math.log(tol)
    running = -math.inf
    best_n, best_term = -1, -math.inf
    prev_term = math.inf
    rho = pop(min(64, n_max + 1) - 1)
    n = 0
    while True:
        if n >= len(rho):
            if len(rho) >= n_max + 1:
                raise NumericalError(
                    f"series did not converge by n_max={n_max} "
                    f"(running ln-sum {running:.6g}, argmax n={best_n})"
                )
            rho = pop(min(2 * len(rho), n_max + 1) - 1)
        if rho[n] == -math.inf:
            n += 1
            continue
        try:
            lg = gam(n, n + 1)[0]
        except DomainError as exc:
            raise NumericalError(
                f"series reached the barrier top at n={n} before converging "
                f"(term/sum = {math.exp(prev_term - running):.3g}): {exc}"
            ) from exc
        term = rho[n] + lg
        running = float(np.logaddexp(running, term))
        if term > best_term:
            best_n, best_term = n, term
        elif n > best_n and term <= prev_term and term < log_tol + running:
            ratio = math.exp(term - prev_term)
            tail = math.exp(term - running) * (ratio / (1.0 - ratio) if ratio < 1.0 else 1.0)
            if spec.Q > 1:
                flags.append(validity_n(spec, best_n, threshold))
            err = tail + 1e-15 * math.sqrt(n + 1)
            return RateResult(LogRate(running), "series", tuple(flags), err, detail, n + 1)
        prev_term = term
        n += 1


# ---------------------------------------------------------------------------
# closed forms


def _log_i0_pm_j0(z: float, sign: int) -> tuple[float, float]:
    """ln[I0(z) + sign*J0(z)] for z >= 0 and an error estimate.

    Below z = 20 the combination is summed as a single positive series,
    2 sum over even (sign=+1) or odd (sign=-1) k of (z/2)^(2k)/(k!)^2,
    so there is no cancellation.
    """
    if z <= 20.0:
        if sign < 0 and z == 0.0:
            return -math.inf, 0.0
        q = 0.25 * z * z
        log_q = math.log(q) if q > 0 else -math.inf
        k0 = 0 if sign > 0 else 1
        terms = []
        k = k0
        while True:
            t = k * log_q - 2.0 * math.lgamma(k + 1.0) if k else 0.0
            terms.append(t)
            if t < max(terms) - 40.0:
                break
            k += 2
        return math.log(2.0) + float(logsumexp(terms)), 1e-15
    j0 = bessel_j0(z)
    parts = [(1, log_bessel_i0(z))]
    if j0 != 0.0:
        parts.append((sign * (1 if j0 > 0 else -1), math.log(abs(j0))))
    s, value, cancel = signed_log_sum(parts)
    err = 1e-15 if cancel >= 1e-13 else 1e-15 / max(cancel, 1e-300)
    return value, err


def rate_closed(
    state: StateSpec, spec: BarrierSpec, threshold: float = DEFAULT_THRESHOLD
) -> RateResult:
    """Closed-form total rate for the Poisson partial-rate law.

    The closed forms sum the leading-order populations (see
    ``leading_order_log_rho_array``); compare them with the series in the
    ``"paper"`` convention for exact agreement.

    Raises
    ------
    UnsupportedError
        For squeezed states with ``v != 0`` and displaced number states;
        use the phase-integral functions instead.
    """
    g0, chi, lchi = spec.log_gamma0, spec.chi, spec.log_chi
    err = 1e-15 * max(1.0, abs(g0))
    if isinstance(state, Squeezed):
        if state.v != 0:
            raise UnsupportedError(
                "no closed form for a general squeezed state; use rate_squeezed_phase_integral"
            )
        state = Coherent(state.beta / state.u)
    if isinstance(state, DisplacedNumber):
        raise UnsupportedError(
            "no closed form for displaced number states; use rate_displaced_phase_integral"
        )
    if isinstance(state, Fock):
        value = g0 + state.m * lchi - math.lgamma(state.m + 1.0)
    elif isinstance(state, Coherent):
        x = abs(state.alpha) ** 2
        value = g0 - x + log_bessel_i0(2.0 * math.sqrt(chi * x))
    elif isinstance(state, Thermal):
        value = g0 + chi * state.nbar
    elif isinstance(state, SqueezedVacuum):
        value = g0 + log_bessel_i0(chi * abs(state.v))
    elif isinstance(state, GaussianMixedZeroMean):
        value = g0 + chi * state.eps + log_bessel_i0(chi * math.sqrt(state.nbar - state.eps))
    elif isinstance(state, ShiftedThermal):
        value = g0 + chi * state.nth + log_bessel_i0(2.0 * abs(state.alpha) * math.sqrt(chi))
    elif isinstance(state, EvenCoherent):
        comb, e = _log_i0_pm_j0(2.0 * abs(state.alpha) * math.sqrt(chi), +1)
        value, err = g0 - math.log(2.0) + comb, err + e
    elif isinstance(state, OddCoherent):
        x = abs(state.alpha) ** 2
        comb, e = _log_i0_pm_j0(2.0 * math.sqrt(x * chi), -1)
        # gamma_1 / (2 chi x) with gamma_1 = gamma_0 chi
        value, err = g0 - math.log(2.0 * x) + comb, err + e
    elif isinstance(state, OddSqueezed):
        value = g0 + lchi + log_bessel_i0(chi * abs(state.z))
    elif isinstance(state, PhotonAddedCoherent):
        value = (
            g0 + state.m * lchi - math.lgamma(state.m + 1.0)
            + log_bessel_i0(2.0 * abs(state.alpha) * math.sqrt(chi))
        )
    else:
        raise UnsupportedError(f"no closed form for {type(state).__name__}")
    return RateResult(LogRate(value), "closed", state_validity(state, spec, threshold), err)


# ---------------------------------------------------------------------------
# phase integrals


def _periodic_log_mean(log_integrand: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """ln of (1/2pi) times the integral over one period, by the trapezoid rule.

    Node count doubles from 16 until successive results agree to 1e-10.
    """
    nodes = 16
    prev = None
    while nodes <= _PI_MAX_NODES:
        phi = 2.0 * math.pi * np.arange(nodes) / nodes
        g = log_integrand(phi)
        top = float(np.max(g))
        cur = top + math.log(float(np.mean(np.exp(g - top))))
        if prev is not None and abs(cur - prev) < _PI_TOL:
            return cur, abs(cur - prev)
        prev = cur
        nodes *= 2
    raise NumericalError("phase integral did not converge with 2^20 nodes")


def rate_squeezed_phase_integral(
    beta: complex,
    u: complex,
    v: complex,
    spec: BarrierSpec,
    *,
    convention: str = "exact",
    threshold: float = DEFAULT_THRESHOLD,
) -> RateResult:
    """Rate of the squeezed state ``(beta, u, v)`` as a single phase integral.

    ``convention="exact"`` keeps the prefactor
    ``exp(-|beta|^2 + Re(beta^2 v*/u))``, which makes the result the exact
    sum of the Poisson partial rates over the squeezed populations;
    ``"paper"`` drops it (it is ``1 + O(|beta|^2)``).
    """
    beta, u, v = complex(beta), complex(u), complex(v)
    state = Squeezed(beta, u, v)  # validates |u|^2 - |v|^2 = 1
    au = abs(u)
    a = 2.0 * abs(beta / u) * math.sqrt(spec.chi)
    b = spec.chi * abs(v / u)
    psi = state.psi
    log_mean, err = _periodic_log_mean(lambda phi: a * np.cos(phi + psi) - b * np.cos(2.0 * phi))
    value = spec.log_gamma0 - math.log(au) + log_mean
    if convention == "exact":
        value += -abs(beta) ** 2 + (beta * beta * v.conjugate() / u).real
    elif convention != "paper":
        raise UnsupportedError(f"unknown convention {convention!r}")
    return RateResult(
        LogRate(value), "phase_integral", state_validity(state, spec, threshold), err + 1e-14,
        f"squeezed,{convention}",
    )


def rate_displaced_phase_integral(
    m: int, alpha: complex, spec: BarrierSpec, *, threshold: float = DEFAULT_THRESHOLD
) -> RateResult:
    """Rate of the displaced number state ``D(alpha)|m>`` as a phase integral.

    Exact sum of the Poisson partial rates over the displaced-number
    populations:
    ``gamma_0 e^-x / m! * (1/2pi) int exp(-2 sqrt(chi x) cos phi)
    (x + chi + 2 sqrt(chi x) cos phi)^m dphi`` with ``x = |alpha|^2``.
    """
    state = DisplacedNumber(m, complex(alpha))
    x = abs(alpha) ** 2
    chi = spec.chi
    s = 2.0 * math.sqrt(chi * x)

    def log_integrand(phi):
        base = x + chi + s * np.cos(phi)
        if m == 0:
            return -s * np.cos(phi)
        with np.errstate(divide="ignore"):
            return -s * np.cos(phi) + m * np.log(base)

    log_mean, err = _periodic_log_mean(log_integrand)
    value = spec.log_gamma0 - x - math.lgamma(m + 1.0) + log_mean
    return RateResult(
        LogRate(value), "phase_integral", state_validity(state, spec, threshold), err + 1e-14,
        "displaced_number",
    )


# ---------------------------------------------------------------------------
# asymptotics


def _large_flag(name: str, arg: float, threshold: float) -> ValidityScore:
    return ValidityScore(f"{name} >> 1", 1.0 / arg if arg > 0 else math.inf, threshold)


def rate_asymptotic_mandel(
    nbar: float, sigma_n: float, spec: BarrierSpec, *, threshold: float = DEFAULT_THRESHOLD
) -> RateResult:
    """Steepest-descent rate written through n-bar and Mandel's S.

    ``gamma_0 [(4 pi)^2 chi nbar]^(-1/4) exp(2 sqrt(chi nbar) + chi S / 2)``.
    """
    if not nbar > 0.0:
        raise DomainError("the Mandel-form asymptote needs nbar > 0")
    s = (sigma_n - nbar) / nbar
    arg = 2.0 * math.sqrt(spec.chi * nbar)
    value = (
        spec.log_gamma0 - 0.25 * math.log((4.0 * math.pi) ** 2 * spec.chi * nbar)
        + arg + 0.5 * spec.chi * s
    )
    return RateResult(
        LogRate(value), "asymptotic", (_large_flag("2 sqrt(chi nbar)", arg, threshold),),
        1.0 / (2.0 * arg), "mandel",
    )


def _coherent_asymptote(g0: float, chi: float, nbar: float) -> tuple[float, float]:
    arg = 2.0 * math.sqrt(chi * nbar)
    return g0 - 0.5 * math.log(4.0 * math.pi * math.sqrt(chi * nbar)) + arg, arg


def rate_asymptotic(
    state: StateSpec,
    spec: BarrierSpec,
    *,
    variant: Optional[str] = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> RateResult:
    """Steepest-descent asymptote of the total rate.

    Families: coherent, squeezed (``variant`` ``"slight"``, ``"vacuum"`` or
    ``"mandel"``; chosen by regime when omitted), squeezed vacuum and
    displaced number states.  Regime conditions are attached as flags; a
    result outside its regime is flagged, not refused.
    """
    g0, chi = spec.log_gamma0, spec.chi
    if isinstance(state, Coherent):
        nbar = abs(state.alpha) ** 2
        if nbar == 0.0:
            raise DomainError("the coherent asymptote needs nbar > 0")
        value, arg = _coherent_asymptote(g0, chi, nbar)
        flags = (_large_flag("2 sqrt(chi nbar)", arg, threshold),) + state_validity(state, spec, threshold)
        return RateResult(LogRate(value), "asymptotic", flags, 1.0 / (4.0 * arg), "coherent")
    if isinstance(state, SqueezedVacuum):
        state = state.as_squeezed()
        variant = variant or "vacuum"
    if isinstance(state, Squeezed):
        b_abs, v_abs = abs(state.beta), abs(state.v)
        psi = state.psi
        if variant is None:
            variant = "slight" if chi * v_abs < b_abs * math.sqrt(chi) else "vacuum"
        if variant == "mandel":
            mom = moments(state)
            res = rate_asymptotic_mandel(mom.nbar, mom.sigma_n, spec, threshold=threshold)
            return RateResult(res.rate, "asymptotic", res.validity_flags, res.error_estimate, "mandel")
        if variant == "slight":
            arg = 2.0 * b_abs * math.sqrt(chi)
            coh = g0 - b_abs**2 + log_bessel_i0(arg)
            value = coh - chi * v_abs * math.cos(2.0 * psi)
            flags = (
                _large_flag("|beta| sqrt(chi)", b_abs * math.sqrt(chi), threshold),
                ValidityScore(
                    "chi|v| << |beta| sqrt(chi)",
                    chi * v_abs / (b_abs * math.sqrt(chi)) if b_abs else math.inf,
                    threshold,
                ),
            )
            return RateResult(LogRate(value), "asymptotic", flags, 1.0 / max(arg, 1e-300), "slightly_squeezed")
        if variant == "vacuum":
            if v_abs == 0.0:
                raise DomainError("the squeezed-vacuum asymptote needs v != 0")
            arg = chi * v_abs
            c = 2.0 * b_abs * math.sqrt(chi) * math.sin(psi)
            log_cosh = abs(c) + math.log1p(math.exp(-2.0 * abs(c))) - math.log(2.0)
            value = g0 - 0.5 * math.log(2.0 * math.pi * arg) + arg + log_cosh
            flags = (
                _large_flag("chi|v|", arg, threshold),
                ValidityScore(
                    "|beta| << |v| sqrt(chi)", b_abs / (v_abs * math.sqrt(chi)), threshold
                ),
            )
            return RateResult(LogRate(value), "asymptotic", flags, 1.0 / (8.0 * arg), "squeezed_vacuum")
        raise UnsupportedError(f"unknown squeezed asymptote variant {variant!r}")
    if isinstance(state, DisplacedNumber):
        a_abs = abs(state.alpha)
        if a_abs == 0.0:
            raise DomainError("the displaced-number asymptote needs alpha != 0")
        arg = 2.0 * a_abs * math.sqrt(chi)
        log_gm = g0 + state.m * spec.log_chi - math.lgamma(state.m + 1.0)
        value = log_gm - 0.5 * math.log(4.0 * math.pi * a_abs * math.sqrt(chi)) + arg
        flags = (_large_flag("2|alpha| sqrt(chi)", arg, threshold),) + state_validity(state, spec, threshold)
        return RateResult(LogRate(value), "asymptotic", flags, 1.0 / (4.0 * arg), "displaced_number")
    raise UnsupportedError(f"no asymptotic formula for {type(state).__name__}")


# ---------------------------------------------------------------------------
# comparison


def compare_methods(
    state: StateSpec, spec: BarrierSpec, *, threshold: float = DEFAULT_THRESHOLD
) -> ComparisonReport:
    """Evaluate every applicable method; failures are recorded, not raised."""
    jobs: dict[str, Callable[[], RateResult]] = {}
    partials = ["poisson", "quadrature"] + (["closed"] if spec.nu in (3.0, 4.0) else [])
    for p in partials:
        jobs[f"series[{p},exact]"] = lambda p=p: total_rate_series(state, spec, p, threshold=threshold)
    jobs["closed"] = lambda: rate_closed(state, spec, threshold)
    if isinstance(state, (Squeezed, SqueezedVacuum, Coherent)):
        if isinstance(state, Coherent):
            b, u, v = state.alpha, 1.0, 0.0
        elif isinstance(state, SqueezedVacuum):
            b, u, v = 0.0, state.u, state.v
        else:
            b, u, v = state.beta, state.u, state.v
        jobs["phase_integral"] = lambda: rate_squeezed_phase_integral(b, u, v, spec, threshold=threshold)
    if isinstance(state, DisplacedNumber):
        jobs["phase_integral"] = lambda: rate_displaced_phase_integral(state.m, state.alpha, spec, threshold=threshold)
    if isinstance(state, (Coherent, Squeezed, SqueezedVacuum, DisplacedNumber)):
        jobs["asymptotic"] = lambda: rate_asymptotic(state, spec, threshold=threshold)

    results: dict[str, RateResult] = {}
    errors: dict[str, str] = {}
    for name, job in jobs.items():
        try:
            results[name] = job()
        except (ValueError, ArithmeticError) as exc:
            errors[name] = f"{type(exc).__name__}: {exc}"

    names = list(results)
    diffs = {
        f"{a} - {b}": results[a].log_value - results[b].log_value
        for i, a in enumerate(names)
        for b in names[i + 1:]
        if math.isfinite(results[a].log_value) and math.isfinite(results[b].log_value)
    }
    return ComparisonReport(results, errors, diffs)
