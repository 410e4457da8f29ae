"""
Unit tests for landscape.py module.

Tests cover:
- Complexity exponents and the complexity atom
- Toppling density, mode and cdf
- Hierarchy probabilities from edge histograms
- Exact finite-N counts from the density sources
- Region specifications and distribution containers
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from errors import DomainError
from goe import EmpiricalSource
from landscape import (
    DistributionKind, IndexDistribution, LandscapeParams, Region, RegimeSpec, complexity_cdf,
    edge_laplace, exact_index_distribution, f_exponent, hierarchy_distribution, kappa_max_complexity,
    kappa_max_toppling, log_edge_laplace, mean_cumulative_exact, mean_neq_exact, mean_nk_exact,
    neq_complexity, neq_hierarchy, neq_toppling, pk_hierarchy, pk_simplicity, regime_distribution,
    sigma_0, sigma_eq, sqrt_gauss_log_norm, toppling_cdf, toppling_density,
)
from special_fns import rho_edge, semicircle_cdf


class TestComplexity:
    """Tests for the complexity region closed forms."""

    @pytest.mark.unit
    def test_sigma_eq_value(self):
        """Test Sigma_eq(0.5) = 0.3181472."""
        assert sigma_eq(0.5) == pytest.approx(0.3181472, abs=1e-7)
        assert sigma_eq(0.5) == pytest.approx((0.25 - 1.0) / 2.0 - math.log(0.5), abs=1e-12)

    @pytest.mark.unit
    def test_sigma_0_value(self):
        """Test Sigma_0(0.5) = 0.0681472."""
        assert sigma_0(0.5) == pytest.approx(0.0681472, abs=1e-7)

    @pytest.mark.unit
    def test_f_exponent(self):
        """Test f(s; m) at fixed points and its minimum -m^2/2 at s = sqrt2 m."""
        assert f_exponent(0.0, 0.7) == pytest.approx(0.7 ** 2 / 2.0, abs=1e-15)
        assert f_exponent(math.sqrt(2.0), 1.0) == pytest.approx(-0.5, abs=1e-15)
        grid = np.linspace(-3.0, 3.0, 60001)
        values = f_exponent(grid, 0.8)
        assert grid[np.argmin(values)] == pytest.approx(math.sqrt(2.0) * 0.8, abs=1e-4)
        assert values.min() == pytest.approx(-0.32, abs=1e-8)

    @pytest.mark.unit
    @pytest.mark.parametrize("m", [0.05, 0.3, 0.7, 0.95, 0.999])
    def test_exponents_positive(self, m):
        """Test that both exponents are positive below m = 1."""
        assert sigma_eq(m) > sigma_0(m) > 0

    @pytest.mark.unit
    @pytest.mark.parametrize("m", [0.0, 1.0, 1.5, float('nan')])
    def test_out_of_domain(self, m):
        """Test DomainError outside (0, 1)."""
        with pytest.raises(DomainError):
            sigma_eq(m)

    @pytest.mark.unit
    def test_atom_is_semicircle_mass(self):
        """Test that the atom sits at the semicircle mass above m."""
        for m in np.linspace(0.05, 0.95, 10):
            assert kappa_max_complexity(m) == pytest.approx(semicircle_cdf(m), abs=1e-12)

    @pytest.mark.unit
    def test_atom_limits(self):
        """Test kappa_max -> 0 as m -> 1 and -> 1/2 as m -> 0."""
        assert kappa_max_complexity(1.0 - 1e-12) == pytest.approx(0.0, abs=1e-12)
        assert kappa_max_complexity(1e-12) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.unit
    def test_cdf_is_step(self):
        """Test the step function at the atom."""
        atom = kappa_max_complexity(0.5)
        assert complexity_cdf(0.5, atom - 1e-9) == 0.0
        assert complexity_cdf(0.5, atom + 1e-12) == 1.0
        assert complexity_cdf(0.5, 1.0) == 1.0

    @pytest.mark.unit
    def test_log_neq(self):
        """Test the subexponential prefactor of the total count."""
        n, m = 50, 0.4
        expected = n * sigma_eq(m) + math.log(4.0 * math.sqrt(n / math.pi) * math.sqrt(1 - m * m))
        assert neq_complexity(m, n) == pytest.approx(expected)


class TestToppling:
    """Tests for the toppling region."""

    @pytest.mark.unit
    def test_kappa_max_value(self):
        """Test (4 sqrt2/(3 pi)) 0.8^(3/2) = 0.42948."""
        expected = 4.0 * math.sqrt(2.0) / (3.0 * math.pi) * 0.8 ** 1.5
        assert kappa_max_toppling(-0.8) == pytest.approx(expected, rel=1e-12)
        assert kappa_max_toppling(-0.8) == pytest.approx(0.42948, abs=1e-5)
        assert kappa_max_toppling(0.3) == 0.0

    @pytest.mark.unit
    def test_numeric_mode(self):
        """Test that the density peaks at kappa_max on a fine grid."""
        grid = np.arange(0.0, 2.0, 1e-4)
        values = toppling_density(-0.8, grid)
        assert grid[np.argmax(values)] == pytest.approx(0.42948, abs=2e-4)

    @pytest.mark.unit
    def test_positive_delta_decreasing(self):
        """Test that the density decreases from kappa = 0 when delta > 0."""
        values = toppling_density(0.2, np.arange(0.0, 3.0, 1e-4))
        assert np.all(np.diff(values) < 0)

    @pytest.mark.unit
    @pytest.mark.parametrize("delta", [-2.0, -0.8, 0.0, 0.2, 1.5])
    def test_normalized(self, delta):
        """Test that the density integrates to one."""
        upper = 3.0 * kappa_max_toppling(delta) + 6.0
        total, _ = integrate.quad(lambda x: toppling_density(delta, x), 0.0, upper, limit=200,
                                  points=[kappa_max_toppling(delta)] if delta < 0 else None)
        assert total == pytest.approx(1.0, abs=1e-7)

    @pytest.mark.unit
    def test_cdf_matches_density(self):
        """Test that the cdf is the integral of the density."""
        part, _ = integrate.quad(lambda x: toppling_density(-0.8, x), 0.0, 0.5, limit=200, points=[0.42948])
        assert toppling_cdf(-0.8, 0.5) == pytest.approx(part, abs=1e-7)

    @pytest.mark.unit
    def test_mass_near_zero_grows_with_delta(self):
        """Test that large delta pushes the law toward kappa = 0."""
        masses = [toppling_cdf(delta, 0.1) for delta in (1.0, 2.0, 3.0)]
        assert masses[0] < masses[1] < masses[2]
        assert 0.6 < masses[2] < 0.9

    @pytest.mark.unit
    def test_cdf_endpoints(self):
        """Test cdf 0 at the origin and 1 far out."""
        assert toppling_cdf(-0.8, 0.0) == pytest.approx(0.0, abs=1e-10)
        assert toppling_cdf(-0.8, 1e6) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.unit
    def test_cdf_monotone(self):
        """Test that the cdf is non-decreasing."""
        values = toppling_cdf(0.5, np.linspace(0.0, 4.0, 81))
        assert np.all(np.diff(values) >= 0)

    @pytest.mark.unit
    def test_sqrt_gauss_norm(self):
        """Test the zero-drift normalization Gamma(3/4) 2^(-1/4)."""
        expected = math.lgamma(0.75) - 0.25 * math.log(2.0)
        assert sqrt_gauss_log_norm(0.0) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.unit
    def test_neq_growth(self):
        """Test the N^(1/4) growth of the total count."""
        assert neq_toppling(-0.5, 10000) / neq_toppling(-0.5, 16) == pytest.approx(5.0)

    @pytest.mark.unit
    def test_negative_kappa_rejected(self):
        """Test DomainError for negative kappa."""
        with pytest.raises(DomainError):
            toppling_density(0.0, -0.1)


class TestHierarchy:
    """Tests for the hierarchy region."""

    @pytest.mark.unit
    def test_edge_laplace_matches_quadrature(self):
        """Test the edge Laplace transform against adaptive quadrature."""
        value, _ = integrate.quad(lambda x: math.exp(x) * rho_edge(x), -60.0, 25.0, limit=400)
        assert log_edge_laplace(1.0) == pytest.approx(math.log(value), abs=1e-6)

    @pytest.mark.unit
    def test_edge_laplace_needs_positive_delta(self):
        """Test DomainError for delta <= 0."""
        with pytest.raises(DomainError):
            edge_laplace(0.0)

    @pytest.mark.unit
    def test_neq_limits(self):
        """Test the growing count near the toppling side and a single minimum deep in the region."""
        assert neq_hierarchy(0.25) > neq_hierarchy(0.5) > 1.0
        assert neq_hierarchy(4.0) == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.unit
    @pytest.mark.slow
    def test_probabilities_ordered(self, edge_densities):
        """Test p0 > p1 > p2 beyond three combined standard errors at delta = 0.8."""
        values = [pk_hierarchy(0.8, k, edge_densities) for k in range(3)]
        for (p_a, se_a), (p_b, se_b) in zip(values, values[1:]):
            assert p_a - p_b > 3.0 * math.hypot(se_a, se_b)

    @pytest.mark.unit
    @pytest.mark.slow
    def test_distribution_partial_sum(self, edge_densities):
        """Test that the tracked probabilities sum to at most one."""
        dist = hierarchy_distribution(0.8, edge_densities)
        assert dist.kind is DistributionKind.DISCRETE
        assert not dist.normalized
        assert 0.5 < dist.metadata['partial_sum'] < 1.1
        assert dist.metadata['edge_n'] == 300

    @pytest.mark.unit
    def test_plain_histogram_rejected(self):
        """Test that a histogram without edge scaling is refused."""
        from goe import BinSpec, GoeSampler, order_statistic_density
        density = order_statistic_density(GoeSampler.for_size(5, seed=1), 0, BinSpec(-10, 10, n_bins=40), 50)
        with pytest.raises(DomainError):
            pk_hierarchy(0.8, 0, {0: density})


class TestSimplicity:
    """Tests for the simplicity region."""

    @pytest.mark.unit
    def test_only_minima(self):
        """Test p_0 = 1 and p_k = 0 otherwise."""
        assert pk_simplicity(0) == 1.0
        assert pk_simplicity(3) == 0.0
        with pytest.raises(DomainError):
            pk_simplicity(-1)


class TestExactCounts:
    """Tests for the exact finite-N counts."""

    @pytest.mark.unit
    def test_distribution_normalized(self, small_empirical_source):
        """Test that the exact p_k sum to one with cdf ending at one."""
        dist = exact_index_distribution(LandscapeParams(1.2, 10), small_empirical_source)
        assert dist.total() == pytest.approx(1.0)
        assert dist.cdf[-1] == pytest.approx(1.0)
        assert len(dist.support) == 11
        assert dist.metadata['model'] == 'landscape'

    @pytest.mark.unit
    def test_cumulative_consistent(self, small_empirical_source):
        """Test that the cumulative count at k = n is the total count."""
        params = LandscapeParams(1.2, 10)
        total = mean_neq_exact(params, small_empirical_source)
        cumulative = mean_cumulative_exact(params, 10, small_empirical_source)
        assert cumulative.log_value == pytest.approx(total.log_value)
        first = mean_nk_exact(params, 0, small_empirical_source)
        assert first.value <= total.value
        assert first.metadata['k'] == 0

    @pytest.mark.unit
    def test_source_size_mismatch(self, small_empirical_source):
        """Test DomainError when the source is not GOE_{n+1}."""
        with pytest.raises(DomainError):
            mean_neq_exact(LandscapeParams(1.2, 9), small_empirical_source)

    @pytest.mark.unit
    def test_index_range(self, small_empirical_source):
        """Test DomainError for k > n."""
        with pytest.raises(DomainError):
            mean_nk_exact(LandscapeParams(1.2, 10), 11, small_empirical_source)

    @pytest.mark.unit
    def test_single_minimum_far_above_threshold(self, small_determinant_source):
        """Test that strong confinement leaves one minimum on average."""
        estimate = mean_neq_exact(LandscapeParams(5.0, 10), small_determinant_source)
        assert estimate.value == pytest.approx(1.0, abs=max(5.0 * estimate.stderr, 0.03))
        minima = mean_nk_exact(LandscapeParams(5.0, 10), 0, small_determinant_source)
        assert minima.value / estimate.value == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.unit
    @pytest.mark.slow
    def test_complexity_growth_rate(self):
        """Test log <N_eq> at n = 40, m = 0.5 against the large-n form within 5% of n Sigma_eq."""
        source = EmpiricalSource.build(41, 20000, seed=21)
        estimate = mean_neq_exact(LandscapeParams(0.5, 40), source)
        assert abs(estimate.log_value - neq_complexity(0.5, 40)) < 0.05 * 40 * sigma_eq(0.5)

    @pytest.mark.unit
    def test_params_validation(self):
        """Test DomainError for bad m and n."""
        with pytest.raises(DomainError):
            LandscapeParams(0.0, 10)
        with pytest.raises(DomainError):
            LandscapeParams(1.0, 0)


class TestRegimeSpec:
    """Tests for RegimeSpec and regime_distribution."""

    @pytest.mark.unit
    def test_couplings(self):
        """Test m as a function of n in each region."""
        assert RegimeSpec(Region.HIERARCHY, delta=2.0).coupling(8) == pytest.approx(2.0)
        assert RegimeSpec(Region.TOPPLING, delta=-1.0).coupling(100) == pytest.approx(0.9)
        assert RegimeSpec(Region.COMPLEXITY, m=0.5).coupling(100) == 0.5

    @pytest.mark.unit
    def test_scale_exponents(self):
        """Test the index scaling exponent of each region."""
        assert RegimeSpec('simplicity', m=2.0).scale_exponent == Fraction(0)
        assert RegimeSpec('toppling', delta=0.0).scale_exponent == Fraction(1, 4)
        assert RegimeSpec('complexity', m=0.5).scale_exponent == Fraction(1)

    @pytest.mark.unit
    @pytest.mark.parametrize("kwargs", [
        {'region': 'hierarchy', 'delta': -0.5},
        {'region': 'toppling'},
        {'region': 'simplicity', 'm': 0.9},
        {'region': 'complexity', 'm': 1.2},
    ])
    def test_validation(self, kwargs):
        """Test DomainError for parameters outside a region."""
        with pytest.raises(DomainError):
            RegimeSpec(**kwargs)

    @pytest.mark.unit
    def test_unknown_region(self):
        """Test that an unknown region name is rejected."""
        with pytest.raises(ValueError):
            RegimeSpec('glassy', m=0.5)

    @pytest.mark.unit
    def test_tag(self):
        """Test the human-readable tag."""
        assert RegimeSpec('toppling', delta=-0.8).tag == 'toppling(delta=-0.8)'

    @pytest.mark.unit
    def test_complexity_distribution_is_atom(self):
        """Test the complexity distribution: one unit atom at kappa_max."""
        dist = regime_distribution(RegimeSpec('complexity', m=0.5), n=100)
        assert dist.atoms == [(kappa_max_complexity(0.5), 1.0)]
        assert dist.total() == pytest.approx(1.0)
        assert dist.argmax() == pytest.approx(kappa_max_complexity(0.5))
        assert 'log_neq' in dist.metadata

    @pytest.mark.unit
    def test_toppling_distribution(self):
        """Test the toppling distribution container."""
        dist = regime_distribution(RegimeSpec('toppling', delta=-0.8), n=1000)
        assert dist.kind is DistributionKind.CONTINUOUS
        assert dist.total() == pytest.approx(1.0, abs=1e-3)
        assert dist.cdf[-1] == pytest.approx(1.0, abs=1e-6)
        assert dist.argmax() == pytest.approx(0.42948, abs=3e-3)

    @pytest.mark.unit
    def test_simplicity_distribution(self):
        """Test the simplicity distribution."""
        dist = regime_distribution(RegimeSpec('simplicity', m=2.0))
        assert dist.prob.tolist() == [1.0]
        assert dist.metadata['neq'] == 1.0

    @pytest.mark.unit
    def test_hierarchy_needs_histograms(self):
        """Test DomainError when no edge histograms are given."""
        with pytest.raises(DomainError):
            regime_distribution(RegimeSpec('hierarchy', delta=0.8))


class TestIndexDistribution:
    """Tests for the IndexDistribution container."""

    @pytest.mark.unit
    def test_negative_probability_rejected(self):
        """Test DomainError for negative entries."""
        with pytest.raises(DomainError):
            IndexDistribution(DistributionKind.DISCRETE, Fraction(0), np.arange(2), np.array([0.5, -0.1]), True)

    @pytest.mark.unit
    def test_length_mismatch_rejected(self):
        """Test DomainError when support and prob differ in length."""
        with pytest.raises(DomainError):
            IndexDistribution(DistributionKind.DISCRETE, Fraction(0), np.arange(3), np.array([1.0]), True)

    @pytest.mark.unit
    def test_to_json(self):
        """Test the serialized form."""
        dist = IndexDistribution(DistributionKind.DISCRETE, Fraction(1, 4), np.arange(2), np.array([0.75, 0.25]),
                                 True, atoms=[(0.3, 0.1)])
        data = dist.to_json()
        assert data['scale_exponent'] == '1/4'
        assert data['atoms'] == [{'atom_location': 0.3, 'mass': 0.1}]
        assert data['points'][1] == {'index_or_kappa': 1.0, 'prob_or_density': 0.25, 'stderr': 0.0}
