import pytest
from fractions import Fraction
from app.services.problem import with_alpha
from app.services.series import (
    hankel_jmax,
    rational_coefficients,
    riccati_coefficients,
    riccati_coefficients_with_derivative,
)
from app.utils.errors import DecimalParseError, DomainError, ModeError


def test_harmonic_ground_energy_zero(harmonic):
    """f_0..f_3 of V = x^2 at E = 0"""
    assert rational_coefficients(harmonic, 0, 3) == [0, Fraction(-1, 3), 0, Fraction(1, 63)]


def test_harmonic_eigenvalue_truncates(harmonic):
    """At E = 1 the log-derivative is exactly x"""
    assert rational_coefficients(harmonic, 1, 10) == [1] + [0] * 10


def test_odd_harmonic_eigenvalue_truncates(harmonic):
    odd = with_alpha(harmonic, 1)
    assert rational_coefficients(odd, 3, 8) == [1] + [0] * 8


def test_harmonic_second_even_level(harmonic):
    """E = 5: f_0 = 5 and f_j = 4 * 2^j, the expansion of x + 4x/(1 - 2x^2)"""
    f = rational_coefficients(harmonic, 5, 8)
    assert f[0] == 5
    assert f[1:] == [4 * 2 ** j for j in range(1, 9)]


def test_floating_matches_rational(triple_well, ctx50):
    exact = rational_coefficients(triple_well, 1, 20)
    table = riccati_coefficients(triple_well, 1, 20, ctx50)
    assert table.jmax == 20
    for a, r in zip(table.f, exact):
        assert abs(a - ctx50.mpf(r)) <= ctx50.tolerance(10) * max(abs(ctx50.mpf(r)), 1)


def test_floating_accepts_complex_energy(double_well, ctx30):
    table = riccati_coefficients(double_well, ctx30.parse("0.81+0.07i"), 6, ctx30)
    assert table.f[0] == ctx30.parse("0.81+0.07i")
    assert table.f[1].imag != 0


def test_derivative_matches_finite_difference(triple_well):
    from app.utils.apnum import with_digits
    ctx = with_digits(60)
    E = ctx.parse("0.97+0.01i")
    h = ctx.pow10(-20)
    table = riccati_coefficients_with_derivative(triple_well, E, 12, ctx)
    plus = riccati_coefficients(triple_well, E + h, 12, ctx).f
    minus = riccati_coefficients(triple_well, E - h, 12, ctx).f
    for j, derivative in enumerate(table.df_dE):
        estimate = (plus[j] - minus[j]) / (2 * h)
        assert abs(derivative - estimate) <= ctx.pow10(-25) * max(abs(derivative), 1)


def test_first_derivative_is_inverse_denominator(harmonic, ctx30):
    table = riccati_coefficients_with_derivative(with_alpha(harmonic, 1), 2, 3, ctx30)
    assert table.df_dE[0] == ctx30.mpf(1) / 3


def test_rational_mode_rejects_floats(triple_well, ctx30):
    with pytest.raises(ModeError):
        rational_coefficients(triple_well, 0.97, 4)
    with pytest.raises(ModeError):
        rational_coefficients(triple_well, ctx30.parse("0.97"), 4)


def test_rational_mode_rejects_complex_text(triple_well):
    with pytest.raises(ModeError):
        rational_coefficients(triple_well, "0.97+1i", 4)
    with pytest.raises(DecimalParseError):
        rational_coefficients(triple_well, "0.9x7", 4)


def test_negative_jmax(triple_well, ctx30):
    with pytest.raises(DomainError):
        riccati_coefficients(triple_well, 1, -1, ctx30)


def test_hankel_jmax():
    assert hankel_jmax(2, 0) == 3
    assert hankel_jmax(15, 0) == 29
    assert hankel_jmax(5, 2) == 11
