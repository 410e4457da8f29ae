"""
Unit tests for special_fns.py module.

Tests cover:
- Airy function and derivative across the series and asymptotic ranges
- Tail integral of Ai
- GOE edge density
- Semicircle density, cdf and quantile
- Domain validation
"""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import airy

from errors import DomainError
from special_fns import (
    airy_ai, airy_ai_prime, airy_ai_tail_integral, log_gamma, rho_edge, rho_sc,
    semicircle_cdf, semicircle_quantile,
)


class TestAiry:
    """Tests for airy_ai and airy_ai_prime."""

    @pytest.mark.unit
    def test_values_at_zero(self):
        """Test Ai(0) and Ai'(0)."""
        assert airy_ai(0.0) == pytest.approx(0.355028053887817, rel=1e-13)
        assert airy_ai_prime(0.0) == pytest.approx(-0.258819403792807, rel=1e-13)

    @pytest.mark.unit
    @pytest.mark.parametrize("x", [-30.0, -12.5, -7.01, -7.0, -3.3, -1.0, 0.5, 2.0, 5.99, 6.01, 9.0, 15.0])
    def test_matches_reference(self, x):
        """Test agreement with scipy on both sides of each switch point."""
        ai, aip, _, _ = airy(x)
        assert airy_ai(x) == pytest.approx(ai, rel=1e-6, abs=1e-13)
        assert airy_ai_prime(x) == pytest.approx(aip, rel=1e-6, abs=1e-13)

    @pytest.mark.unit
    def test_scalar_in_scalar_out(self):
        """Test that a scalar input returns a float."""
        assert isinstance(airy_ai(1.0), float)

    @pytest.mark.unit
    def test_array_shape_preserved(self):
        """Test that array inputs keep their shape."""
        x = np.linspace(-5.0, 5.0, 12).reshape(3, 4)
        assert airy_ai(x).shape == (3, 4)
        assert airy_ai_prime(x).shape == (3, 4)

    @pytest.mark.unit
    def test_non_finite_rejected(self):
        """Test that NaN and infinity raise DomainError."""
        with pytest.raises(DomainError):
            airy_ai(float('nan'))
        with pytest.raises(DomainError):
            airy_ai_prime(np.array([0.0, np.inf]))


class TestAiryTailIntegral:
    """Tests for airy_ai_tail_integral."""

    @pytest.mark.unit
    def test_one_third_at_zero(self):
        """Test that the integral from 0 to infinity is 1/3."""
        assert airy_ai_tail_integral(0.0) == pytest.approx(1.0 / 3.0, abs=1e-10)

    @pytest.mark.unit
    @pytest.mark.parametrize("x", [-20.0, -8.0, -2.5, 1.0, 4.0, 11.9, 15.0])
    def test_matches_quadrature(self, x):
        """Test against adaptive quadrature of scipy's Ai."""
        if x < 0:
            piece, _ = integrate.quad(lambda t: airy(t)[0], x, 0.0, limit=400)
            expected = 1.0 / 3.0 + piece
        else:
            expected, _ = integrate.quad(lambda t: airy(t)[0], x, np.inf, epsabs=0.0, epsrel=1e-10, limit=400)
        assert airy_ai_tail_integral(x) == pytest.approx(expected, rel=1e-7)

    @pytest.mark.unit
    def test_asymptotic_branch_continuous(self):
        """Test continuity across the switch to the asymptotic tail."""
        below = airy_ai_tail_integral(11.999999)
        above = airy_ai_tail_integral(12.0)
        assert below == pytest.approx(above, rel=1e-5)

    @pytest.mark.unit
    def test_tends_to_one_far_left(self):
        """Test that the full integral of Ai is 1 (oscillation decays)."""
        assert airy_ai_tail_integral(-60.0) == pytest.approx(1.0, abs=0.02)


class TestRhoEdge:
    """Tests for rho_edge."""

    @pytest.mark.unit
    def test_non_negative(self):
        """Test that the edge density is non-negative on a wide grid."""
        values = rho_edge(np.linspace(-15.0, 15.0, 301))
        assert np.all(values >= 0.0)

    @pytest.mark.unit
    def test_bulk_matching(self):
        """Test the square-root growth sqrt(-x)/pi deep inside the spectrum."""
        x = -20.0
        assert rho_edge(x) == pytest.approx(math.sqrt(-x) / math.pi, rel=0.05)

    @pytest.mark.unit
    def test_small_beyond_edge(self):
        """Test decay to the right of the edge."""
        assert rho_edge(5.0) < 1e-3
        assert rho_edge(3.0) > rho_edge(5.0)

    @pytest.mark.unit
    def test_closed_form_at_zero(self):
        """Test the value Ai'(0)^2 + Ai(0)/3 at the origin."""
        expected = 0.258819403792807 ** 2 + 0.5 * 0.355028053887817 * (1.0 - 1.0 / 3.0)
        assert rho_edge(0.0) == pytest.approx(expected, rel=1e-9)


class TestSemicircle:
    """Tests for rho_sc, semicircle_cdf and semicircle_quantile."""

    @pytest.mark.unit
    def test_density_peak(self):
        """Test the density at the center."""
        assert rho_sc(0.0) == pytest.approx(2.0 / math.pi)
        assert rho_sc(1.0) == 0.0

    @pytest.mark.unit
    def test_cdf_counts_mass_above(self):
        """Test that the cdf measures mass above lambda."""
        assert semicircle_cdf(1.0) == pytest.approx(0.0, abs=1e-15)
        assert semicircle_cdf(-1.0) == pytest.approx(1.0)
        assert semicircle_cdf(0.0) == pytest.approx(0.5)

    @pytest.mark.unit
    def test_cdf_decreasing(self):
        """Test that the cdf decreases in lambda."""
        values = semicircle_cdf(np.linspace(-1.0, 1.0, 101))
        assert np.all(np.diff(values) < 0)

    @pytest.mark.unit
    def test_cdf_derivative_is_minus_density(self):
        """Test d/dlambda cdf = -rho_sc."""
        h = 1e-6
        lam = 0.3
        slope = (semicircle_cdf(lam + h) - semicircle_cdf(lam - h)) / (2 * h)
        assert slope == pytest.approx(-rho_sc(lam), rel=1e-6)

    @pytest.mark.unit
    def test_quantile_inverts_cdf(self):
        """Test that the quantile inverts the cdf."""
        x = np.array([0.0, 1e-8, 0.1, 0.37, 0.5, 0.9, 1.0 - 1e-8, 1.0])
        q = semicircle_quantile(x)
        assert semicircle_cdf(q) == pytest.approx(x, abs=1e-12)

    @pytest.mark.unit
    def test_quantile_endpoints(self):
        """Test Q_0 = 1, Q_1/2 = 0 and Q_1 = -1."""
        assert semicircle_quantile(0.0) == 1.0
        assert semicircle_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
        assert semicircle_quantile(1.0) == -1.0

    @pytest.mark.unit
    def test_out_of_range_rejected(self):
        """Test DomainError outside [-1, 1] and [0, 1]."""
        with pytest.raises(DomainError):
            rho_sc(1.5)
        with pytest.raises(DomainError):
            semicircle_cdf(-1.01)
        with pytest.raises(DomainError):
            semicircle_quantile(1.2)


class TestLogGamma:
    """Tests for log_gamma."""

    @pytest.mark.unit
    def test_factorial(self):
        """Test log Gamma(5) = log 24."""
        assert log_gamma(5.0) == pytest.approx(math.log(24.0))

    @pytest.mark.unit
    def test_non_positive_rejected(self):
        """Test DomainError for x <= 0."""
        with pytest.raises(DomainError):
            log_gamma(0.0)
