"""Programmatic acceptance checks.

Each check returns a :class:`CheckResult` carrying the tolerance it was
judged against and the worst observed value.  ``run_checks`` is what
``tunnelrate verify`` executes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import barrier as B
from . import rates as R
from . import states as S
from .specialfn import log_bessel_i0


@dataclass(frozen=True)
class CheckResult:
    number: int
    group: str
    description: str
    tolerance: float
    observed: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.number:2d} {self.group}: observed={self.observed:.3e} "
            f"tolerance={self.tolerance:.3e} {self.detail}".rstrip()
        )

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "group": self.group,
            "description": self.description,
            "tolerance": self.tolerance,
            "observed": self.observed,
            "passed": self.passed,
            "detail": self.detail,
        }


def _result(number, group, description, tol, observed, detail="", passed=None):
    if passed is None:
        passed = bool(observed <= tol)
    return CheckResult(number, group, description, tol, float(observed), passed, detail)


# ---------------------------------------------------------------------------


def check_f_values(scale: float = 1.0) -> CheckResult:
    tol = 1e-10 * scale
    errs = {
        "nu=4": abs(B.f_nu_quad(4, 0.0) - 1.0 / 3.0),
        "nu=3": abs(B.f_nu_quad(3, 0.0) - 4.0 / 15.0),
        "nu=6": abs(B.f_nu_quad(6, 0.0) - math.pi / 8.0),
    }
    worst = max(errs, key=errs.get)
    return _result(1, "f-values", "F_nu(0) against 1/3, 4/15, pi/8", tol, errs[worst], f"worst {worst}")


def check_elliptic(scale: float = 1.0) -> CheckResult:
    tol = 1e-8 * scale
    worst, where = 0.0, ""
    for nu in (3, 4):
        t_max = 2.0 * B.barrier_lambda(nu)
        for t in np.linspace(0.0, 0.95 * t_max, 50):
            q = B.f_nu_quad(nu, float(t))
            c = B.f_closed(nu, float(t))
            rel = abs(c - q) / abs(q)
            if rel > worst:
                worst, where = rel, f"nu={nu} t={t:.6g}"
    return _result(2, "elliptic", "closed elliptic forms vs quadrature, relative", tol, worst, where)


def check_f_coefficients(scale: float = 1.0) -> CheckResult:
    tol_f1 = 1e-4 * scale
    tol_mu = 1e-3 * scale
    parts = []
    ok = True
    worst = 0.0
    for nu, f1_ref, mu_ref in ((4, math.log(2.0), 64.0), (3, 1.5 * math.log(2.0), 432.0)):
        c = B.extract_f_coeffs(float(nu))
        e_f1 = abs(c.f1 - f1_ref)
        mu = math.exp(4.0 * c.f1) / (2.0 * B.barrier_lambda(nu))
        e_mu = abs(mu / mu_ref - 1.0)
        ok &= e_f1 <= tol_f1 and e_mu <= tol_mu
        worst = max(worst, e_f1)
        parts.append(f"nu={nu}: f1 err {e_f1:.2e}, mu rel err {e_mu:.2e}")
    return _result(
        3, "f-coefficients", "extracted f1 and reconstructed mu", tol_f1, worst, "; ".join(parts), ok
    )


def check_gamma0(scale: float = 1.0) -> CheckResult:
    tol = 1e-10 * scale
    worst, where = 0.0, ""
    refs = {
        3: lambda q: 0.5 * math.log(216.0 * q / math.pi) - 36.0 * q / 5.0,
        4: lambda q: 0.5 * math.log(32.0 * q / math.pi) - 16.0 * q / 3.0,
    }
    for nu, ref in refs.items():
        for q in (10.0, 50.0):
            got = B.gamma_n_poisson(B.make_barrier(nu, q), 0).log_value
            err = abs(got - ref(q))
            if err >= worst:
                worst, where = err, f"nu={nu} Q={q:g}"
    return _result(4, "gamma0", "ln gamma_0 closed expressions", tol, worst, where)


POISSON_Q_GRID = (20.0, 50.0, 100.0, 200.0)


def poisson_law_differences(nu: float, n: int, qs: Iterable[float] = POISSON_Q_GRID) -> list[float]:
    """ln gamma_n(Poisson) - ln gamma_n(exact) over a grid of Q."""
    out = []
    for q in qs:
        spec = B.make_barrier(nu, q)
        out.append(B.gamma_n_poisson(spec, n).log_value - B.gamma_n_exact(spec, n).log_value)
    return out


def stirling_offset(n: int) -> float:
    """Large-Q limit of ln gamma_n(Poisson) - ln gamma_n(exact).

    Equals ``(n+1/2) ln(n+1/2) - (n+1/2) + ln(2 pi)/2 - ln n!``, the error of
    Stirling's formula for ``Gamma(n + 1)`` evaluated at ``n + 1/2``.
    """
    h = n + 0.5
    return h * math.log(h) - h + 0.5 * math.log(2.0 * math.pi) - math.lgamma(n + 1.0)


def check_poisson_law(scale: float = 1.0) -> CheckResult:
    """Monotone decrease of |Poisson - exact| and the 10 n^2 lnQ/Q bound.

    Evaluated literally.  The difference tends to :func:`stirling_offset`
    (0.072 at n = 0), so the bound, which is 0 at n = 0, cannot hold.
    """
    failures = []
    worst_ratio = 0.0
    for nu in (3.0, 4.0):
        for n in (0, 1, 2):
            diffs = [abs(d) for d in poisson_law_differences(nu, n)]
            if not all(b < a for a, b in zip(diffs, diffs[1:])):
                failures.append(f"nu={nu:g} n={n}: not decreasing {['%.4g' % d for d in diffs]}")
            for q, d in zip(POISSON_Q_GRID, diffs):
                bound = 10.0 * n * n * math.log(q) / q * scale
                ratio = d / bound if bound > 0 else math.inf
                worst_ratio = max(worst_ratio, ratio)
                if d > bound:
                    failures.append(f"nu={nu:g} n={n} Q={q:g}: {d:.4g} > {bound:.4g}")
    detail = "; ".join(failures[:4]) + (f" (+{len(failures) - 4} more)" if len(failures) > 4 else "")
    return _result(
        5, "poisson-law", "|ln Poisson - ln exact| decreasing and <= 10 n^2 lnQ/Q",
        1.0, worst_ratio, detail, passed=not failures,
    )


def _moment_cases():
    for p in (0.01, 0.05, 0.1):
        yield S.Coherent(complex(p))
        yield S.Squeezed.from_beta_v(complex(p), 0.5j * p)
        yield S.Squeezed.from_beta_v(complex(0.5 * p, p), complex(p))
        yield S.SqueezedVacuum(complex(p))
        yield S.EvenCoherent(complex(p))
        yield S.OddCoherent(complex(p))
        for m in (0, 1, 2):
            yield S.DisplacedNumber(m, complex(p))


def _all_family_cases():
    for p in (0.01, 0.05, 0.1):
        yield S.Fock(2)
        yield S.Coherent(complex(p))
        yield S.Squeezed.from_beta_v(complex(p), 0.5j * p)
        yield S.SqueezedVacuum(complex(p))
        yield S.Thermal(p)
        yield S.GaussianMixedZeroMean(p, 0.5 * p)
        yield S.ShiftedThermal(complex(p), p * p)
        yield S.EvenCoherent(complex(p))
        yield S.OddCoherent(complex(p))
        yield S.OddSqueezed(complex(p))
        yield S.PhotonAddedCoherent(complex(p), 2)
        yield S.DisplacedNumber(2, complex(p))


def _laguerre_0(m: int, x: float) -> float:
    return math.fsum(math.comb(m, k) * (-x) ** k / math.factorial(k) for k in range(m + 1))


def check_distributions(scale: float = 1.0) -> CheckResult:
    tol_norm = 1e-10 * scale
    tol_mom = 1e-8 * scale
    worst_norm, worst_mom = 0.0, 0.0
    where = ""
    for st in _all_family_cases():
        total = math.fsum(np.exp(S.log_rho_array(st, S.DEFAULT_N_MAX)))
        err = abs(total - 1.0)
        if err > worst_norm:
            worst_norm = err
        # the as-written formulas must themselves be normalised, or match their known sums
        raw, _ = S.normalization_report(st)
        if isinstance(st, S.OddSqueezed):
            expected = (1.0 - abs(st.z) ** 2) ** -1.5
        elif isinstance(st, S.PhotonAddedCoherent):
            x = abs(st.alpha) ** 2
            expected = math.exp(x) * _laguerre_0(st.m, -x)
        else:
            expected = 1.0
        worst_norm = max(worst_norm, abs(raw / expected - 1.0))
    for st in _moment_cases():
        closed = S.moments(st)
        summed = S.summed_moments(st)
        for a, b, what in ((closed.nbar, summed.nbar, "nbar"), (closed.sigma_n, summed.sigma_n, "sigma")):
            rel = abs(a - b) / abs(b)
            if rel > worst_mom:
                worst_mom, where = rel, f"{st.describe()} {what}"
    ok = worst_norm <= tol_norm and worst_mom <= tol_mom
    return _result(
        6, "distributions", "normalisation and closed-form moments",
        tol_mom, worst_mom, f"norm err {worst_norm:.2e}; worst moment {where}", ok,
    )


def _closed_families(p: float):
    return [
        S.Coherent(complex(p)),
        S.Thermal(p * p),
        S.SqueezedVacuum(complex(p)),
        S.GaussianMixedZeroMean(p * p, 0.5 * p * p),
        S.ShiftedThermal(complex(p), p * p),
        S.EvenCoherent(complex(p)),
        S.OddCoherent(complex(p)),
        S.OddSqueezed(complex(p)),
        S.PhotonAddedCoherent(complex(p), 1),
    ]


def check_closed_vs_series(scale: float = 1.0) -> CheckResult:
    tol = 1e-9 * scale
    worst_raw, worst_norm_ratio = 0.0, 0.0
    where = ""
    for nu in (3.0, 4.0):
        for q in (10.0, 20.0, 50.0):
            spec = B.make_barrier(nu, q)
            for p in (0.01, 0.05, 0.1):
                for st in _closed_families(p):
                    closed = R.rate_closed(st, spec).log_value
                    raw = R.total_rate_series(st, spec, convention="paper").log_value
                    norm = R.total_rate_series(st, spec, convention="paper_normalized").log_value
                    err = abs(raw - closed)
                    if err > worst_raw:
                        worst_raw, where = err, f"{st.describe()} nu={nu:g} Q={q:g}"
                    deficiency = abs(R._leading_norm(st)[0] - 1.0)
                    gap = abs(norm - closed)
                    bound = 2.0 * deficiency * scale
                    ratio = gap / bound if bound > 0 else (0.0 if gap <= tol else math.inf)
                    worst_norm_ratio = max(worst_norm_ratio, ratio)
    ok = worst_raw <= tol and worst_norm_ratio <= 1.0
    return _result(
        7, "closed-vs-series", "closed form vs series (as-written and normalised)",
        tol, worst_raw, f"worst {where}; normalised gap / bound = {worst_norm_ratio:.3f}", ok,
    )


def check_phase_integrals(scale: float = 1.0) -> CheckResult:
    tol_id = 1e-10 * scale
    tol_gen = 1e-6 * scale
    spec4 = B.make_barrier(4.0, 20.0)
    errs = {}
    beta = 0.05
    errs["v=0"] = abs(
        R.rate_squeezed_phase_integral(beta, 1.0, 0.0, spec4).log_value
        - R.rate_closed(S.Coherent(beta), spec4).log_value
    )
    v = 0.1j
    u = math.sqrt(1.0 + abs(v) ** 2)
    bessel = spec4.log_gamma0 - math.log(u) + log_bessel_i0(spec4.chi * abs(v) / u)
    errs["beta=0"] = abs(R.rate_squeezed_phase_integral(0.0, u, v, spec4).log_value - bessel)
    series = R.total_rate_series(S.Squeezed(beta, u, v), spec4).log_value
    general = R.rate_squeezed_phase_integral(beta, u, v, spec4).log_value
    errs["general"] = abs(math.expm1(general - series))
    ok = errs["v=0"] <= tol_id and errs["beta=0"] <= tol_id and errs["general"] <= tol_gen
    return _result(
        8, "phase-integrals", "squeezed phase integral identities",
        tol_gen, max(errs.values()), ", ".join(f"{k}: {e:.2e}" for k, e in errs.items()), ok,
    )


def check_asymptotics(scale: float = 1.0) -> CheckResult:
    problems = []
    worst = 0.0
    big = B.make_barrier(3.0, 5000.0)
    for cn in (100.0, 400.0, 1600.0):
        st = S.Coherent(complex(math.sqrt(cn / big.chi)))
        err = abs(R.rate_asymptotic(st, big).log_value - R.rate_closed(st, big).log_value)
        bound = scale / (4.0 * math.sqrt(cn))
        worst = max(worst, err / bound)
        if err > bound:
            problems.append(f"coherent chi*nbar={cn:g}: {err:.3g} > {bound:.3g}")
    # a large chi keeps |v| small, so replacing |u| by 1 costs nothing
    for label, pairs in (
        ("squeezed-vacuum", [_sqvac_pair(big, arg) for arg in (20.0, 40.0, 80.0)]),
        ("displaced", [_disp_pair(big, arg) for arg in (20.0, 40.0, 80.0)]),
    ):
        rel = [abs(math.expm1(a - e)) for a, e in pairs]
        worst = max(worst, rel[0] / (0.05 * scale))
        if rel[0] > 0.05 * scale:
            problems.append(f"{label} at 20: {rel[0]:.3g} > 5%")
        if not all(b < a for a, b in zip(rel, rel[1:])):
            problems.append(f"{label} not improving: {['%.3g' % r for r in rel]}")
    return _result(
        9, "asymptotics", "steepest-descent formulas vs exact", 1.0, worst,
        "; ".join(problems) or "worst value is error/bound", passed=not problems,
    )


def _sqvac_pair(spec: B.BarrierSpec, arg: float) -> tuple[float, float]:
    v = 1j * arg / spec.chi
    st = S.Squeezed.from_beta_v(1e-3, v)
    asym = R.rate_asymptotic(st, spec, variant="vacuum").log_value
    exact = R.rate_squeezed_phase_integral(st.beta, st.u, st.v, spec).log_value
    return asym, exact


def _disp_pair(spec: B.BarrierSpec, arg: float) -> tuple[float, float]:
    alpha = arg / (2.0 * math.sqrt(spec.chi))
    st = S.DisplacedNumber(1, complex(alpha))
    return (
        R.rate_asymptotic(st, spec).log_value,
        R.rate_displaced_phase_integral(st.m, st.alpha, spec).log_value,
    )


def check_orderings(scale: float = 1.0) -> CheckResult:
    spec = B.make_barrier(3.0, 15.0)
    th = R.total_rate_series(S.Thermal(0.02), spec).log_value
    coh = R.total_rate_series(S.Coherent.with_nbar(0.02), spec).log_value
    th1 = R.total_rate_series(S.Thermal(0.01), spec).log_value
    sv1 = R.total_rate_series(S.SqueezedVacuum.with_nbar(0.01), spec).log_value
    ok = th > coh and sv1 > th1
    margin = min(th - coh, sv1 - th1)
    return _result(
        10, "orderings", "thermal > coherent (nbar 0.02); squeezed vacuum > thermal (nbar 0.01)",
        0.0, -margin,
        f"ln(th/coh)={th - coh:.4g}, ln(sqvac/th)={sv1 - th1:.4g}", ok,
    )


def check_even_state(scale: float = 1.0) -> CheckResult:
    spec = B.make_barrier(3.0, 15.0)
    even = R.total_rate_series(S.EvenCoherent.with_nbar(1e-4), spec).log_value
    coh = R.total_rate_series(S.Coherent.with_nbar(1e-4), spec).log_value
    return _result(
        11, "even-state", "even coherent decays faster than coherent at nbar 1e-4",
        0.0, coh - even, f"ln(even/coh)={even - coh:.4g}", even > coh,
    )


def check_cli_determinism(scale: float = 1.0) -> CheckResult:
    from .cli import run_capture

    commands = [
        ["partial-rates", "--nu", "3", "--Q", "10", "--n-max", "3"],
        ["total-rate", "--nu", "3", "--Q", "15", "--state", "thermal nbar=0.01", "--format", "json"],
        ["scan", "--nu", "3", "--Q", "15", "--axis", "nbar", "--start", "0.001", "--stop", "0.05",
         "--points", "4", "--state", "coherent alpha=0.1", "--state", "thermal nbar=0.01"],
    ]
    mismatched = []
    for argv in commands:
        first = run_capture(argv)
        second = run_capture(argv)
        if first != second or first[0] != 0:
            mismatched.append(argv[0])
    return _result(
        12, "cli", "repeated CLI runs are byte-identical", 0.0, float(len(mismatched)),
        ", ".join(mismatched), not mismatched,
    )


CHECKS: dict[str, Callable[[float], CheckResult]] = {
    "f-values": check_f_values,
    "elliptic": check_elliptic,
    "f-coefficients": check_f_coefficients,
    "gamma0": check_gamma0,
    "poisson-law": check_poisson_law,
    "distributions": check_distributions,
    "closed-vs-series": check_closed_vs_series,
    "phase-integrals": check_phase_integrals,
    "asymptotics": check_asymptotics,
    "orderings": check_orderings,
    "even-state": check_even_state,
    "cli": check_cli_determinism,
}


def run_checks(only: Optional[Iterable[str]] = None, tolerance_scale: float = 1.0) -> list[CheckResult]:
    """Run the named groups (all by default) in their fixed order."""
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check group(s) {unknown}; choose from {list(CHECKS)}")
    out = []
    for name in CHECKS:
        if name not in names:
            continue
        try:
            out.append(CHECKS[name](tolerance_scale))
        except (ValueError, ArithmeticError) as exc:
            number = list(CHECKS).index(name) + 1
            out.append(CheckResult(number, name, "raised", 0.0, math.inf, False, f"{type(exc).__name__}: {exc}"))
    return out
