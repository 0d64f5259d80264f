"""Command-line front end.

Subcommands::

    tunnelrate partial-rates --nu 3 --Q 10 --n-max 3
    tunnelrate total-rate --nu 3 --Q 15 --state "thermal nbar=0.01"
    tunnelrate scan --axis nbar --start 0.001 --stop 0.05 --points 8 \\
        --state "coherent alpha=0.1" --state "thermal nbar=0.01"
    tunnelrate verify [--only GROUP] [--tolerance-scale X]

Every rate is printed as ``ln(gamma/omega)``; ``--linear`` exponentiates.
Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import barrier as B
from . import rates as R
from . import states as S

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

THREADS_ENV = "TUNNELRATE_THREADS"
_LINEAR_LIMIT = 700.0


class ConfigError(ValueError):
    """Bad command-line or config-file input."""


# ---------------------------------------------------------------------------
# state grammar

_COMPLEX_RE = re.compile(r"^[+-]?[0-9.eE+-]*[ij]?$")


def parse_complex(text: str) -> complex:
    """Parse ``a``, ``bi``, ``a+bi`` or ``a-bi`` (``j`` also accepted)."""
    t = text.strip().replace("I", "i").replace("J", "j")
    if not t or " " in t or not _COMPLEX_RE.match(t):
        raise ConfigError(f"bad complex literal {text!r}")
    if t.endswith("i"):
        t = t[:-1] + "j"
    if t in ("j", "+j", "-j"):
        t = t.replace("j", "1j")
    try:
        return complex(t)
    except ValueError:
        raise ConfigError(f"bad complex literal {text!r}") from None


def _real(text: str) -> float:
    z = parse_complex(text)
    if z.imag != 0.0:
        raise ConfigError(f"expected a real number, got {text!r}")
    return z.real


def _integer(text: str) -> int:
    v = _real(text)
    if v != int(v):
        raise ConfigError(f"expected an integer, got {text!r}")
    return int(v)


_FAMILIES: dict[str, tuple[Callable, dict[str, Callable]]] = {
    "fock": (lambda p: S.Fock(p["m"]), {"m": _integer}),
    "coherent": (
        lambda p: S.Coherent(p["alpha"]) if "alpha" in p else S.Coherent.with_nbar(p["nbar"]),
        {"alpha": parse_complex, "nbar": _real},
    ),
    "squeezed": (
        lambda p: S.Squeezed(p["beta"], p["u"], p["v"]) if "u" in p else S.Squeezed.from_beta_v(p["beta"], p["v"]),
        {"beta": parse_complex, "u": parse_complex, "v": parse_complex},
    ),
    "squeezed_vacuum": (
        lambda p: S.SqueezedVacuum(p["v"]) if "v" in p else S.SqueezedVacuum.with_nbar(p["nbar"]),
        {"v": parse_complex, "nbar": _real},
    ),
    "thermal": (lambda p: S.Thermal(p["nbar"]), {"nbar": _real}),
    "gaussian_mixed": (
        lambda p: S.GaussianMixedZeroMean(p["nbar"], p["eps"]), {"nbar": _real, "eps": _real}
    ),
    "shifted_thermal": (
        lambda p: S.ShiftedThermal(p["alpha"], p["nth"]), {"alpha": parse_complex, "nth": _real}
    ),
    "even_coherent": (
        lambda p: S.EvenCoherent(p["alpha"]) if "alpha" in p else S.EvenCoherent.with_nbar(p["nbar"]),
        {"alpha": parse_complex, "nbar": _real},
    ),
    "odd_coherent": (lambda p: S.OddCoherent(p["alpha"]), {"alpha": parse_complex}),
    "odd_squeezed": (lambda p: S.OddSqueezed(p["z"]), {"z": parse_complex}),
    "pacs": (lambda p: S.PhotonAddedCoherent(p["alpha"], p["m"]), {"alpha": parse_complex, "m": _integer}),
    "displaced_number": (
        lambda p: S.DisplacedNumber(p["m"], p["alpha"]), {"m": _integer, "alpha": parse_complex}
    ),
}
_ALIASES = {"sqvac": "squeezed_vacuum", "photon_added_coherent": "pacs", "displaced": "displaced_number"}


def parse_state(text: str) -> S.StateSpec:
    """Parse ``family key=value ...`` into a state."""
    words = text.split()
    if not words:
        raise ConfigError("empty state specification")
    family = words[0].lower().replace("-", "_")
    family = _ALIASES.get(family, family)
    if family not in _FAMILIES:
        raise ConfigError(f"unknown state family {words[0]!r}; choose from {sorted(_FAMILIES)}")
    build, fields = _FAMILIES[family]
    params: dict[str, Any] = {}
    for word in words[1:]:
        key, sep, value = word.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value in state, got {word!r}")
        if key not in fields:
            raise ConfigError(f"{family} has no parameter {key!r}; known: {sorted(fields)}")
        params[key] = fields[key](value)
    try:
        return build(params)
    except KeyError as exc:
        raise ConfigError(f"{family} is missing parameter {exc.args[0]!r}") from None
    except S.StateError as exc:
        raise ConfigError(f"invalid {family} state: {exc}") from None


def _with_nbar(state: S.StateSpec, nbar: float) -> S.StateSpec:
    if isinstance(state, S.Coherent):
        phase = state.alpha / abs(state.alpha) if state.alpha else 1.0
        return S.Coherent(math.sqrt(nbar) * phase)
    if isinstance(state, S.Thermal):
        return S.Thermal(nbar)
    if isinstance(state, S.SqueezedVacuum):
        return S.SqueezedVacuum.with_nbar(nbar)
    if isinstance(state, S.EvenCoherent):
        return S.EvenCoherent.with_nbar(nbar)
    if isinstance(state, S.GaussianMixedZeroMean):
        frac = state.eps / state.nbar if state.nbar else 0.0
        return S.GaussianMixedZeroMean(nbar, frac * nbar)
    raise ConfigError(f"the nbar axis is not defined for {state.family}")


def _with_alpha(state: S.StateSpec, mag: float) -> S.StateSpec:
    def rescale(z: complex) -> complex:
        return mag * (z / abs(z)) if z else complex(mag)

    if isinstance(state, (S.Coherent, S.EvenCoherent, S.OddCoherent)):
        return type(state)(rescale(state.alpha))
    if isinstance(state, S.ShiftedThermal):
        return S.ShiftedThermal(rescale(state.alpha), state.nth)
    if isinstance(state, S.PhotonAddedCoherent):
        return S.PhotonAddedCoherent(rescale(state.alpha), state.m)
    if isinstance(state, S.DisplacedNumber):
        return S.DisplacedNumber(state.m, rescale(state.alpha))
    if isinstance(state, S.Squeezed):
        return S.Squeezed(rescale(state.beta), state.u, state.v)
    if isinstance(state, S.SqueezedVacuum):
        return S.SqueezedVacuum(rescale(state.v))
    if isinstance(state, S.OddSqueezed):
        return S.OddSqueezed(rescale(state.z))
    raise ConfigError(f"the alpha axis is not defined for {state.family}")


# ---------------------------------------------------------------------------
# output


def fmt_number(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def present(log_value: float, linear: bool) -> Any:
    """ln value, or its exponential with under/overflow spelled out."""
    if not linear:
        return log_value
    if log_value >= _LINEAR_LIMIT:
        return "overflow"
    if log_value <= -_LINEAR_LIMIT:
        return "underflow"
    return math.exp(log_value)


def rate_column(name: str, linear: bool) -> str:
    """Column name for a rate: ``ln_`` is dropped when values are exponentiated."""
    return name[3:] if linear and name.startswith("ln_") else name


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt_number(float(v))
    return str(v)


def _json_safe(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else fmt_number(v)
    return v


def write_csv(out, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])


def write_json(out, obj: Any) -> None:
    out.write(json.dumps(_json_safe(obj), indent=2, allow_nan=False))
    out.write("\n")


def _flags_json(flags) -> list[dict]:
    return [
        {"condition": f.condition, "score": f.score, "threshold": f.threshold, "passed": f.passed}
        for f in flags
    ]


def _flags_text(flags) -> str:
    return ";".join(f"{f.condition}:{fmt_number(f.score)}:{'ok' if f.passed else 'violated'}" for f in flags)


# ---------------------------------------------------------------------------
# commands


@dataclass
class Context:
    args: argparse.Namespace
    out: Any


def _barrier(args, nu: Optional[float] = None, q: Optional[float] = None) -> B.BarrierSpec:
    nu = args.nu if nu is None else nu
    if q is not None:
        return B.make_barrier(nu, q)
    if args.delta is not None:
        return B.make_barrier(nu, delta=args.delta)
    if args.Q is None:
        raise ConfigError("one of --Q or --delta is required")
    return B.make_barrier(nu, args.Q)


def cmd_partial_rates(ctx: Context) -> int:
    args = ctx.args
    if args.n_max < 0:
        raise ConfigError("--n-max must be >= 0")
    spec = _barrier(args)
    lin = args.linear
    header = [
        "n", "t_n", rate_column("ln_gamma_exact", lin), rate_column("ln_gamma_poisson", lin),
        "validity_score", "valid", "error",
    ]
    rows = []
    for n in range(args.n_max + 1):
        t_n = spec.t_of_level(n)
        if not n + 0.5 < spec.Q:
            rows.append([n, None, None, None, None, None, f"domain-error: n+1/2 >= Q={fmt_number(spec.Q)}"])
            continue
        exact = B.gamma_n_exact(spec, n, args.method).log_value
        poisson = B.gamma_n_poisson(spec, n).log_value
        flag = B.validity_n(spec, n, args.threshold) if spec.Q > 1 else None
        rows.append([
            n, t_n, present(exact, args.linear), present(poisson, args.linear),
            flag.score if flag else None, flag.passed if flag else None, None,
        ])
    if args.format == "json":
        write_json(ctx.out, {
            "barrier": _barrier_json(spec),
            "rows": [dict(zip(header, r)) for r in rows],
        })
    else:
        write_csv(ctx.out, header, rows)
    return EXIT_OK


def _barrier_json(spec: B.BarrierSpec) -> dict:
    return {
        "nu": spec.nu, "Q": spec.Q, "delta": spec.delta, "lambda": spec.lam,
        "mu": spec.mu, "chi": spec.chi, "ln_gamma0": spec.log_gamma0,
    }


def _total_results(state: S.StateSpec, spec: B.BarrierSpec, args) -> tuple[dict, dict]:
    report = R.compare_methods(state, spec, threshold=args.threshold)
    results = dict(report.results)
    errors = dict(report.errors)
    if "closed" in results:
        try:
            results["series[poisson,paper]"] = R.total_rate_series(
                state, spec, convention="paper", threshold=args.threshold
            )
        except (ValueError, ArithmeticError) as exc:
            errors["series[poisson,paper]"] = f"{type(exc).__name__}: {exc}"
    return results, errors


def cmd_total_rate(ctx: Context) -> int:
    args = ctx.args
    if not args.state:
        raise ConfigError("--state is required")
    spec = _barrier(args)
    state = parse_state(args.state[0])
    results, errors = _total_results(state, spec, args)
    g0 = spec.log_gamma0
    lin = args.linear
    if args.format == "json":
        write_json(ctx.out, {
            "barrier": _barrier_json(spec),
            "state": args.state[0],
            "results": [
                {
                    "label": name,
                    "method": r.method,
                    rate_column("ln_rate", lin): present(r.log_value, lin),
                    rate_column("ln_rate_over_gamma0", lin): present(r.log_value - g0, lin),
                    "error_estimate": r.error_estimate,
                    "validity": _flags_json(r.validity_flags),
                }
                for name, r in results.items()
            ],
            "errors": errors,
        })
    else:
        header = ["state", "nu", "Q", "ln_gamma0"]
        row: list[Any] = [args.state[0], spec.nu, spec.Q, g0]
        for name, r in results.items():
            header += [
                f"{name}:{rate_column('ln_rate', lin)}",
                f"{name}:{rate_column('ln_rate_over_gamma0', lin)}",
                f"{name}:error_estimate",
            ]
            row += [present(r.log_value, lin), present(r.log_value - g0, lin), r.error_estimate]
        flags = next(iter(results.values())).validity_flags if results else ()
        header += ["validity", "errors"]
        row += [_flags_text(flags), ";".join(f"{k}: {v}" for k, v in errors.items())]
        write_csv(ctx.out, header, [row])
    return EXIT_OK


_SCAN_METHODS = {
    "series": None,
    "series-poisson": "poisson",
    "series-quadrature": "quadrature",
    "series-closed": "closed",
    "closed": None,
    "asymptotic": None,
    "phase-integral": None,
}


def _scan_value(method: str, state: S.StateSpec, spec: B.BarrierSpec, args) -> float:
    if method == "series":
        return R.total_rate_series(state, spec, args.partial, convention=args.convention).log_value
    if method.startswith("series-"):
        return R.total_rate_series(state, spec, _SCAN_METHODS[method], convention=args.convention).log_value
    if method == "closed":
        return R.rate_closed(state, spec).log_value
    if method == "asymptotic":
        return R.rate_asymptotic(state, spec).log_value
    if isinstance(state, S.DisplacedNumber):
        return R.rate_displaced_phase_integral(state.m, state.alpha, spec).log_value
    if isinstance(state, S.SqueezedVacuum):
        state = state.as_squeezed()
    if isinstance(state, S.Coherent):
        state = S.Squeezed(state.alpha, 1.0, 0.0)
    if isinstance(state, S.Squeezed):
        return R.rate_squeezed_phase_integral(state.beta, state.u, state.v, spec).log_value
    raise B.UnsupportedError(f"no phase integral for {state.family}")


def _axis_values(args) -> list[float]:
    if args.values:
        try:
            vals = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"bad --values list {args.values!r}") from None
    else:
        if args.start is None or args.stop is None:
            raise ConfigError("scan needs --values or --start/--stop")
        if args.points < 1 or args.start > args.stop:
            raise ConfigError("empty scan range")
        if args.points == 1:
            vals = [args.start]
        elif args.spacing == "log":
            if args.start <= 0:
                raise ConfigError("log spacing needs --start > 0")
            vals = list(np.geomspace(args.start, args.stop, args.points))
        else:
            vals = list(np.linspace(args.start, args.stop, args.points))
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError("empty or non-finite scan range")
    return [float(v) for v in vals]


def _scan_point(value: float, states: list[S.StateSpec], methods: list[str], args) -> list[Any]:
    cells: list[Any] = []
    errors: list[str] = []
    try:
        spec = _barrier(
            args,
            nu=value if args.axis == "nu" else None,
            q=value if args.axis == "Q" else None,
        )
    except (ValueError, ArithmeticError) as exc:
        width = len(states) * (len(methods) + (1 if args.diff else 0))
        return [value] + [None] * width + [f"barrier: {exc}"]
    for i, base in enumerate(states):
        vals = []
        try:
            state = base
            if args.axis == "nbar":
                state = _with_nbar(base, value)
            elif args.axis == "alpha":
                state = _with_alpha(base, value)
        except (ValueError, ArithmeticError) as exc:
            errors.append(f"s{i}: {exc}")
            state = None
        for m in methods:
            if state is None:
                vals.append(None)
                continue
            try:
                vals.append(_scan_value(m, state, spec, args))
            except (ValueError, ArithmeticError) as exc:
                errors.append(f"s{i} {m}: {type(exc).__name__}: {exc}")
                vals.append(None)
        cells += [None if v is None else present(v, args.linear) for v in vals]
        if args.diff:
            ok = len(vals) >= 2 and vals[0] is not None and vals[1] is not None
            cells.append(abs(vals[0] - vals[1]) if ok else None)
    return [value] + cells + ["; ".join(errors) or None]


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def cmd_scan(ctx: Context) -> int:
    args = ctx.args
    if not args.state:
        raise ConfigError("scan needs at least one --state")
    states = [parse_state(s) for s in args.state]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in _SCAN_METHODS]
    if bad or not methods:
        raise ConfigError(f"unknown scan method(s) {bad}; choose from {list(_SCAN_METHODS)}")
    if args.diff and len(methods) < 2:
        raise ConfigError("--diff needs at least two methods")
    values = _axis_values(args)
    # resolve barrier options once so config errors surface before the sweep
    if args.axis not in ("Q",):
        _barrier(args, nu=values[0] if args.axis == "nu" else None)

    header = [args.axis]
    for i, st in enumerate(states):
        label = f"s{i}_{st.family}"
        header += [f"{rate_column('ln_rate', args.linear)}:{label}:{m}" for m in methods]
        if args.diff:
            header.append(f"absdiff:{label}")
    header.append("error")

    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda v: _scan_point(v, states, methods, args), values))
    else:
        rows = [_scan_point(v, states, methods, args) for v in values]

    if args.format == "json":
        write_json(ctx.out, {"columns": header, "rows": [dict(zip(header, r)) for r in rows]})
    else:
        write_csv(ctx.out, header, rows)
    return EXIT_OK


def cmd_verify(ctx: Context) -> int:
    from .verification import CHECKS, run_checks

    args = ctx.args
    only = args.only or None
    if only:
        unknown = [o for o in only if o not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown check group(s) {unknown}; choose from {list(CHECKS)}")
    results = run_checks(only, args.tolerance_scale)
    failed = [r for r in results if not r.passed]
    report = {
        "passed": not failed,
        "first_failure": failed[0].group if failed else None,
        "tolerance_scale": args.tolerance_scale,
        "checks": [r.as_dict() for r in results],
    }
    if args.format == "csv":
        write_csv(
            ctx.out,
            ["number", "group", "passed", "observed", "tolerance", "detail"],
            [[r.number, r.group, r.passed, r.observed, r.tolerance, r.detail] for r in results],
        )
    else:
        write_json(ctx.out, report)
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _common(p: argparse.ArgumentParser, default_format: str = "csv") -> None:
    p.add_argument("--config", metavar="PATH", help="key=value file with defaults for these options")
    p.add_argument("--nu", type=float, default=3.0, help="barrier exponent (default 3)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--Q", type=float, help="barrier quality V0/(hbar omega)")
    g.add_argument("--delta", type=float, help="anharmonicity in oscillator units")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--output", metavar="PATH", help="write here instead of stdout")
    p.add_argument("--threshold", type=_positive, default=B.DEFAULT_THRESHOLD,
                   help="validity-score threshold (default 0.1)")
    p.add_argument("--linear", action="store_true",
                   help="print gamma/omega instead of its logarithm")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunnelrate",
        description="Quasiclassical tunnelling rates out of a metastable well.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partial-rates", help="partial rates gamma_n of the oscillator levels")
    _common(p)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--method", choices=("quadrature", "closed"), default="quadrature",
                   help="evaluation of the action integral for the exact column")
    p.set_defaults(func=cmd_partial_rates)

    p = sub.add_parser("total-rate", help="total rate of a wave packet by every method")
    _common(p, "json")
    p.add_argument("--state", action="append", help='e.g. "coherent alpha=0.1+0.0i"')
    p.set_defaults(func=cmd_total_rate)

    p = sub.add_parser("scan", help="sweep one parameter and tabulate rates")
    _common(p)
    p.add_argument("--state", action="append", help="state to include (repeatable)")
    p.add_argument("--axis", choices=("Q", "nbar", "alpha", "nu"), required=False, default="Q")
    p.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--methods", default="series",
                   help=f"comma-separated from {', '.join(_SCAN_METHODS)} (default series)")
    p.add_argument("--partial", choices=R.PARTIAL_METHODS, default="poisson",
                   help="partial-rate law used by the plain 'series' method")
    p.add_argument("--convention", choices=R.CONVENTIONS, default="exact")
    p.add_argument("--diff", action="store_true",
                   help="add |first - second method| per state")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="run the acceptance checks")
    _common(p, "json")
    p.add_argument("--only", action="append", metavar="GROUP", help="restrict to a check group")
    p.add_argument("--tolerance-scale", type=_positive, default=1.0)
    p.set_defaults(func=cmd_verify)
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def load_config(path: str, sub: argparse.ArgumentParser) -> dict[str, Any]:
    """Read ``key=value`` lines; keys are long option names without dashes."""
    by_name = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                by_name[opt[2:].lower()] = action
                by_name[opt[2:].lower().replace("-", "_")] = action
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        key, sep, value = line.strip().partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}:{col}: expected key=value")
        key, value = key.strip(), value.strip()
        action = by_name.get(key.lower())
        if action is None or key.lower() in ("config", "help"):
            raise ConfigError(f"{path}:{lineno}:{col}: unknown key {key!r}")
        eq = raw.index("=")
        vcol = eq + 2 + (len(raw[eq + 1:]) - len(raw[eq + 1:].lstrip()))
        try:
            if isinstance(action, argparse._StoreTrueAction):
                parsed: Any = value.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                parsed = action.type(value)
            else:
                parsed = value
            if action.choices is not None and parsed not in action.choices:
                raise ValueError(f"must be one of {list(action.choices)}")
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"{path}:{lineno}:{vcol}: bad value for {key}: {exc}") from None
        if isinstance(action, argparse._AppendAction):
            values.setdefault(action.dest, []).append(parsed)
        else:
            values[action.dest] = parsed
    if "Q" in values and "delta" in values:
        raise ConfigError(f"{path}: give only one of Q and delta")
    return values


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = _subparser(parser, args.command)
        cfg = load_config(args.config, sub)
        # command-line flags win over the file; Q and delta exclude each other across sources
        if args.Q is not None or args.delta is not None:
            cfg.pop("Q", None)
            cfg.pop("delta", None)
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    except ConfigError as exc:
        print(f"tunnelrate: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    buffer = io.StringIO()
    try:
        code = args.func(Context(args, buffer))
    except (ConfigError, B.DomainError, B.UnsupportedError, S.StateError) as exc:
        print(f"tunnelrate: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (B.NumericalError, ArithmeticError) as exc:
        print(f"tunnelrate: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    text = buffer.getvalue()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def run_capture(argv: Sequence[str]) -> tuple[int, str]:
    """Run the CLI in-process, returning ``(exit_code, stdout_text)``."""
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(list(argv))
    return code, out.getvalue()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
