"""
Unit tests of the shared input checks in utilities/processing_steps.py.

To run these tests:
        1) Open a prompt and set the directory to the project folder
        2) Enter:
            >pytest tests/unittests/test_processing_steps.py
"""

import math

import numpy as np
import pytest

from dictguide.exceptions import InvalidConfig
from dictguide.utilities import processing_steps


def test_check_probability_accepts_bounds():
    assert processing_steps.check_probability('p', 0) == 0.0
    assert processing_steps.check_probability('p', 1) == 1.0


@pytest.mark.parametrize('value', [-0.01, 1.01, math.nan])
def test_check_probability_rejects(value):
    with pytest.raises(InvalidConfig, match='p must be in'):
        processing_steps.check_probability('p', value)


def test_check_positive():
    assert processing_steps.check_positive('tau', 0.07) == 0.07
    assert processing_steps.check_positive('lambda', 0.0, allow_zero=True) == 0.0
    with pytest.raises(InvalidConfig):
        processing_steps.check_positive('tau', 0.0)


def test_check_at_least():
    assert processing_steps.check_at_least('n', 3, 1) == 3
    with pytest.raises(InvalidConfig):
        processing_steps.check_at_least('n', 0, 1)
    with pytest.raises(InvalidConfig):
        processing_steps.check_at_least('n', 2.5, 1)


def test_check_strictly_increasing():
    assert processing_steps.check_strictly_increasing('grid', [1, 5, 10]) == (1, 5, 10)
    for bad in ([], [1, 1], [5, 1]):
        with pytest.raises(InvalidConfig):
            processing_steps.check_strictly_increasing('grid', bad)


def test_simplex_violation():
    rows = np.array([[0.5, 0.5], [1.0, 0.0]])
    assert processing_steps.simplex_violation(rows, 1e-9) == 0.0
    assert processing_steps.simplex_violation(np.array([[0.5, 0.6]]), 1e-9) == pytest.approx(0.1)
    assert processing_steps.simplex_violation(np.array([[1.5, -0.5]]), 1e-9) == math.inf
    assert processing_steps.simplex_violation(np.array([[np.nan, 1.0]]), 1e-9) == math.inf
