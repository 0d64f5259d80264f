"""Quasiclassical tunnelling rates of wave packets out of a metastable well."""

from .barrier import (
    BarrierSpec,
    DomainError,
    LogRate,
    NumericalError,
    UnsupportedError,
    gamma_n_exact,
    gamma_n_poisson,
    make_barrier,
)
from .rates import (
    RateResult,
    compare_methods,
    rate_asymptotic,
    rate_closed,
    rate_displaced_phase_integral,
    rate_squeezed_phase_integral,
    total_rate_series,
)
from .states import StateError, log_rho, moments, normalization_report

__version__ = "0.1.0"

__all__ = [
    "BarrierSpec",
    "DomainError",
    "LogRate",
    "NumericalError",
    "UnsupportedError",
    "StateError",
    "RateResult",
    "make_barrier",
    "gamma_n_exact",
    "gamma_n_poisson",
    "log_rho",
    "moments",
    "normalization_report",
    "total_rate_series",
    "rate_closed",
    "rate_squeezed_phase_integral",
    "rate_displaced_phase_integral",
    "rate_asymptotic",
    "compare_methods",
]
