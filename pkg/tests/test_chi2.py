"""Chi-square CDF/inverse against closed forms and the error function."""

import math

import numpy as np
import pytest

from pmips import chi_square_cdf, chi_square_inv_cdf


def test_cdf_zero_at_origin():
    for m in (1, 2, 6, 10, 30):
        assert chi_square_cdf(m, 0.0) == 0.0
        assert chi_square_cdf(m, -5.0) == 0.0


def test_cdf_two_dof_closed_form_point():
    # With 2 degrees of freedom the CDF is 1 - exp(-x/2).
    assert chi_square_cdf(2, 2 * math.log(2)) == pytest.approx(0.5, abs=1e-12)


def test_cdf_one_dof_against_erf():
    # One degree of freedom: P(Z^2 <= x) = erf(sqrt(x/2)).
    for x in (0.25, 1.0, 2.0, 5.0):
        assert chi_square_cdf(1, x) == pytest.approx(math.erf(math.sqrt(x / 2)), abs=1e-12)


def test_cdf_two_dof_closed_form_grid():
    xs = np.linspace(1e-6, 60.0, 1000)
    worst = max(abs(chi_square_cdf(2, x) - (1 - math.exp(-x / 2))) for x in xs)
    assert worst <= 1e-10


def test_cdf_monotone_and_strict_above_zero():
    for m in (1, 3, 6, 12):
        xs = np.linspace(0.0, 50.0, 400)
        vals = [chi_square_cdf(m, x) for x in xs]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert all(b > a for a, b in zip(vals[1:], vals[2:]))  # strict for x > 0


def test_cdf_tends_to_one():
    for m in (1, 2, 6, 30):
        assert chi_square_cdf(m, 1e6 * m) > 1 - 1e-9


def test_cdf_rejects_zero_dof():
    with pytest.raises(ValueError):
        chi_square_cdf(0, 1.0)


def test_inv_cdf_at_zero():
    for m in (1, 2, 6, 10):
        assert chi_square_inv_cdf(m, 0.0) == 0.0


def test_inv_cdf_two_dof_closed_form():
    assert chi_square_inv_cdf(2, 0.5) == pytest.approx(2 * math.log(2), abs=1e-9)


@pytest.mark.parametrize("m", [1, 2, 6, 8, 10])
@pytest.mark.parametrize("p", [0.3, 0.5, 0.7, 0.9])
def test_inv_cdf_round_trip(m, p):
    x = chi_square_inv_cdf(m, p)
    assert chi_square_cdf(m, x) == pytest.approx(p, abs=1e-9)


def test_inv_cdf_domain_errors():
    with pytest.raises(ValueError):
        chi_square_inv_cdf(2, -0.1)
    with pytest.raises(ValueError):
        chi_square_inv_cdf(2, 1.0)
    with pytest.raises(ValueError):
        chi_square_inv_cdf(0, 0.5)
