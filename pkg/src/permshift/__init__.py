"""Hierarchical permutation subshifts with prescribed entropy dimension."""

import sys

# level counts such as 1904! are serialized as decimal strings
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)

from .construction import (  # noqa: E402
    Construction,
    ConstructionParams,
    Generation,
    Ordering,
    Symbol,
    Variant,
    WordRef,
    build,
    permuted_positions,
    seed_generation,
    seed_words,
    validate_params,
)

__version__ = "0.1.0"
