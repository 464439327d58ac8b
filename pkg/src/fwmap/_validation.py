"""Input checks in the spirit of ``sklearn.utils.validation``."""

import numbers

from .model import Decomposition


def check_decomposition(decomp):
    if not isinstance(decomp, Decomposition):
        raise TypeError(
            f"expected a Decomposition (see build_decomposition), got {type(decomp).__name__}"
        )
    return decomp


def check_scalar(value, name, min_val=None, include_min=True, allow_none=False):
    if value is None and allow_none:
        return None
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    if min_val is not None:
        bad = value < min_val if include_min else value <= min_val
        if bad:
            op = ">=" if include_min else ">"
            raise ValueError(f"{name} must be {op} {min_val}, got {value}")
    return value


def check_choice(value, name, choices):
    if value not in choices:
        raise ValueError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value
