"""
Purpose of script: contains the shared input checks used by the typed
configs and the glyph world. Each check raises InvalidConfig naming the
offending field, so a bad flag on the command line is reported the same way
wherever it is consumed.
"""
# Imports
# -------------------------------------------------------------------------
# Python:
import math
from typing import Iterable

# 3rd party:
import numpy as np

# Local
from dictguide.exceptions import InvalidConfig


def check_probability(name: str, value: float) -> float:
    """
    Check that a value is a probability.

    Parameters
    ----------
    name : str
        Field name used in the error message.
    value : float
        Value to check.

    Returns
    -------
    The value as a float.
    """
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise InvalidConfig(f"{name} must be in [0, 1], got {value}")
    return value


def check_positive(name: str, value: float, allow_zero: bool = False) -> float:
    """Check that a number is > 0 (or >= 0 when allow_zero is set)."""
    if math.isnan(value) or value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise InvalidConfig(f"{name} must be {bound}, got {value}")
    return value


def check_at_least(name: str, value: int, minimum: int) -> int:
    if int(value) != value or value < minimum:
        raise InvalidConfig(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def check_strictly_increasing(name: str, values: Iterable[int]) -> tuple:
    values = tuple(values)
    if not values:
        raise InvalidConfig(f"{name} must not be empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InvalidConfig(f"{name} must be strictly increasing, got {values}")
    return values


def simplex_violation(rows: np.ndarray, tol: float) -> float:
    """
    Largest deviation of a stack of probability rows from the simplex.

    Returns the max over rows of |sum - 1|, or inf when any entry is
    negative beyond tol or non-finite. A value <= tol means every row is a
    valid distribution.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(rows)) or np.any(rows < -tol):
        return math.inf
    return float(np.max(np.abs(rows.sum(axis=-1) - 1.0), initial=0.0))
