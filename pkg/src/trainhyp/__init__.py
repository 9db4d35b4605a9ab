"""Gromov hyperbolicity diagnostics for trains and flute surfaces."""

__version__ = "0.1.0"

from .core import Constant, Explicit, LogFamily, Power, SpecError, TrainSpec, load_spec, materialize  # noqa: E402
from .gamma import GammaKind, KEstimate, Window, delta, gamma_value, k_estimate, min_gamma, sup_over_h  # noqa: E402
from .classifier import Outcome, Verdict, classify, necessary_checks, quasi_increasing_c1, tail_constant_c2  # noqa: E402

__all__ = [
    "Constant",
    "Explicit",
    "LogFamily",
    "Power",
    "SpecError",
    "TrainSpec",
    "load_spec",
    "materialize",
    "GammaKind",
    "KEstimate",
    "Window",
    "delta",
    "gamma_value",
    "k_estimate",
    "min_gamma",
    "sup_over_h",
    "Outcome",
    "Verdict",
    "classify",
    "necessary_checks",
    "quasi_increasing_c1",
    "tail_constant_c2",
]
