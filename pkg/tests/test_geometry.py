import math

import numpy as np
import pytest

from hfdistill.errors import InvalidInputError
from hfdistill.geometry import GridFactorization, factorize_grid, flatten_grid, reshape_logits


def brute_force_height(c):
    return max(d for d in range(1, c + 1) if c % d == 0 and d * d <= c)


@pytest.mark.parametrize("c, shape", [(200, (10, 20)), (67, (1, 67)), (40, (5, 8)), (120, (10, 12)), (100, (10, 10))])
def test_reference_factorizations(c, shape):
    assert factorize_grid(c).shape == shape


def test_matches_divisor_oracle_up_to_1000():
    for c in range(1, 1001):
        f = factorize_grid(c)
        assert f.height * f.width == c
        assert f.height <= f.width
        assert f.height == brute_force_height(c)
        assert not any(c % d == 0 for d in range(f.height + 1, math.isqrt(c) + 1))


@pytest.mark.parametrize("bad", [0, -3, 2.5, True])
def test_invalid_class_counts(bad):
    with pytest.raises(InvalidInputError):
        factorize_grid(bad)


def test_factorization_type_checks_product():
    with pytest.raises(InvalidInputError):
        GridFactorization(10, 3, 3)


def test_row_major_reshape():
    g = reshape_logits([1, 2, 3, 4], factorize_grid(4))
    assert g.values.tolist() == [[1, 2], [3, 4]]


def test_element_37_position():
    g = reshape_logits(np.arange(100.0), factorize_grid(100))
    assert g.values[3, 7] == 37


def test_round_trip_120():
    v = np.random.default_rng(0).normal(size=120)
    fact = factorize_grid(120)
    assert fact.shape == (10, 12)
    np.testing.assert_array_equal(flatten_grid(reshape_logits(v, fact)), v)


def test_flatten_example_and_inverse():
    fact = factorize_grid(4)
    g = reshape_logits([1, 2, 3, 4], fact)
    assert flatten_grid(g).tolist() == [1, 2, 3, 4]
    np.testing.assert_array_equal(reshape_logits(flatten_grid(g), fact).values, g.values)


def test_single_row_flatten_unchanged():
    v = np.random.default_rng(1).normal(size=67)
    np.testing.assert_array_equal(flatten_grid(reshape_logits(v, factorize_grid(67))), v)


def test_bijection_for_many_class_counts():
    rng = np.random.default_rng(2)
    for c in list(range(1, 60)) + [100, 120, 200, 997, 1000]:
        fact = factorize_grid(c)
        v = rng.normal(size=(3, c))
        np.testing.assert_array_equal(flatten_grid(reshape_logits(v, fact)), v)


def test_length_mismatch():
    with pytest.raises(InvalidInputError):
        reshape_logits(np.zeros(5), factorize_grid(4))
