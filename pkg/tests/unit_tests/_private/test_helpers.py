import math
import numpy as np
import pytest

from cran_positioning._private._helpers import (
    as_float_list,
    db_to_linear,
    derive_rng,
    fold_angle,
    scaled_condition_number,
    stable_key,
    wrap_angle
)

def test_wrap_angle() -> None:
    """Test wrapping onto (-pi, pi]."""
    np.testing.assert_allclose(wrap_angle(np.array([0.0, 3 * np.pi / 2, -np.pi, np.pi, -5.0])),
                               [0.0, -np.pi / 2, np.pi, np.pi, 2 * np.pi - 5.0])

def test_fold_angle() -> None:
    """Test that mirrored angles fold onto the same value in [0, pi]."""
    assert float(fold_angle(-np.pi / 3)) == pytest.approx(np.pi / 3)
    assert float(fold_angle(2 * np.pi - 0.5)) == pytest.approx(0.5)

def test_db_to_linear() -> None:
    """Test decibel conversion."""
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(-10.0) == pytest.approx(0.1)
    assert db_to_linear(20.0) == pytest.approx(100.0)

def test_derive_rng_is_reproducible() -> None:
    """Test that streams depend only on seed and keys."""
    first = derive_rng(2017, 1, 2).standard_normal(4)
    derive_rng(2017, 9).standard_normal(100)
    np.testing.assert_array_equal(derive_rng(2017, 1, 2).standard_normal(4), first)
    assert not np.array_equal(derive_rng(2017, 2, 1).standard_normal(4), first)

def test_stable_key() -> None:
    """Test that label keys are deterministic and distinct."""
    assert stable_key("direct-ideal") == stable_key("direct-ideal")
    assert stable_key("0/2") != stable_key("0/3")
    assert 0 <= stable_key("indirect") < 2**32

def test_scaled_condition_number() -> None:
    """Test that unit scaling removes disparities between parameter units."""
    matrix = np.diag([1e14, 1e-2])
    assert np.linalg.cond(matrix) > 1e15
    assert scaled_condition_number(matrix) == pytest.approx(1.0)
    assert math.isinf(scaled_condition_number(np.diag([1.0, 0.0])))
    assert scaled_condition_number(np.array([[1.0, 1.0], [1.0, 1.0]])) > 1e12

def test_as_float_list() -> None:
    """Test conversion of numpy scalars to plain floats."""
    values = as_float_list(np.array([1, 2.5]))
    assert values == [1.0, 2.5]
    assert all(type(value) is float for value in values)
