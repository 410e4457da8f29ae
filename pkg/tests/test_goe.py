"""
Unit tests for goe.py module.

Tests cover:
- Sampler validation and method selection
- Reproducibility independent of the thread count
- Edge rescaling and bin grids
- Order-statistic and spectral densities
- Gaussian approximations of order statistics
- Density sources for the counting integrals
- Point densities from the joint eigenvalue density
- Resampling when the eigen-solver fails
"""

import math

import numpy as np
import pytest
from scipy.stats import ks_2samp, norm

import config
from errors import CoverageError, DomainError, SamplingError
from goe import (
    Affine, BinSpec, Branch, EmpiricalDensity, GaussianSource, GoeSampler, SamplingMethod,
    build_source, edge_rescale, edge_unscale, gaussian_approx, joint_density_point, log_goe_partition,
    order_statistic_densities, order_statistic_density, order_statistic_samples, sample_spectra,
    sample_spectrum, spectral_density,
)
from sampling_status import sampling_status


class TestGoeSampler:
    """Tests for GoeSampler construction."""

    @pytest.mark.unit
    def test_method_selection(self):
        """Test dense sampling up to n = 64 and tridiagonal above."""
        assert GoeSampler.for_size(64).method is SamplingMethod.DENSE
        assert GoeSampler.for_size(65).method is SamplingMethod.TRIDIAGONAL

    @pytest.mark.unit
    def test_edge(self):
        """Test that the spectral edge is sqrt(2n) at variance 1/2."""
        assert GoeSampler.for_size(50).edge == pytest.approx(10.0)
        assert GoeSampler(n=50, variance_scale=2.0).edge == pytest.approx(20.0)

    @pytest.mark.unit
    def test_method_from_string(self):
        """Test that the method may be given by value."""
        assert GoeSampler(n=5, method='dense').method is SamplingMethod.DENSE

    @pytest.mark.unit
    @pytest.mark.parametrize("kwargs", [{'n': 0}, {'n': 2.5}, {'n': 3, 'variance_scale': 0.0},
                                        {'n': 3, 'variance_scale': float('inf')}])
    def test_invalid_configuration(self, kwargs):
        """Test DomainError for bad sizes and variances."""
        with pytest.raises(DomainError):
            GoeSampler(**kwargs)

    @pytest.mark.unit
    def test_to_json(self):
        """Test the serialized form."""
        data = GoeSampler.for_size(10, seed=3).to_json()
        assert data == {'n': 10, 'variance_scale': 0.5, 'method': 'dense', 'seed': 3}


class TestSampling:
    """Tests for sample_spectra and sample_spectrum."""

    @pytest.mark.unit
    def test_descending(self):
        """Test that spectra come out in descending order."""
        spectra = sample_spectra(GoeSampler.for_size(8, seed=1), 20)
        assert spectra.shape == (20, 8)
        assert np.all(np.diff(spectra, axis=1) <= 0)

    @pytest.mark.unit
    def test_thread_count_does_not_change_samples(self):
        """Test that samples are identical for one and several threads."""
        sampler = GoeSampler.for_size(200, seed=5)
        single = sample_spectra(sampler, 1500, top=2, threads=1)
        threaded = sample_spectra(sampler, 1500, top=2, threads=3)
        assert np.array_equal(single, threaded)

    @pytest.mark.unit
    def test_sample_by_index(self):
        """Test that sample i can be regenerated on its own."""
        sampler = GoeSampler.for_size(6, seed=9)
        spectra = sample_spectra(sampler, 10)
        assert np.allclose(sample_spectrum(sampler, 7), spectra[7])

    @pytest.mark.unit
    def test_tridiagonal_top_matches_full(self):
        """Test that selecting the largest eigenvalues matches the full spectrum."""
        sampler = GoeSampler(n=80, method=SamplingMethod.TRIDIAGONAL, seed=2)
        full = sample_spectra(sampler, 5)
        top = sample_spectra(sampler, 5, top=3)
        assert np.allclose(full[:, :3], top)

    @pytest.mark.unit
    @pytest.mark.parametrize("variance_scale", [0.5, 0.05])
    def test_dense_and_tridiagonal_agree(self, variance_scale):
        """Test that both samplers draw the same top, middle and bottom eigenvalue laws."""
        dense = sample_spectra(GoeSampler(n=20, variance_scale=variance_scale,
                                          method=SamplingMethod.DENSE, seed=21), 4000)
        tridiagonal = sample_spectra(GoeSampler(n=20, variance_scale=variance_scale,
                                                method=SamplingMethod.TRIDIAGONAL, seed=22), 4000)
        for column in (0, 10, 19):
            assert ks_2samp(dense[:, column], tridiagonal[:, column]).pvalue > 1e-3

    @pytest.mark.unit
    def test_variance_convention(self):
        """Test diagonal variance 2v for n = 1."""
        values = sample_spectra(GoeSampler(n=1, seed=4), 20000)[:, 0]
        assert np.std(values) == pytest.approx(1.0, rel=0.03)

    @pytest.mark.unit
    def test_bad_arguments(self):
        """Test DomainError for bad sample counts and top."""
        sampler = GoeSampler.for_size(4)
        with pytest.raises(DomainError):
            sample_spectra(sampler, 0)
        with pytest.raises(DomainError):
            sample_spectra(sampler, 5, top=5)

    @pytest.mark.unit
    def test_counters_updated(self):
        """Test that sampling updates the shared counters."""
        sample_spectra(GoeSampler.for_size(4, seed=1), 30)
        assert sampling_status.get_status()['stats']['samples'] == 30

    @pytest.mark.unit
    def test_solver_failure_exhausts_retries(self, mocker, monkeypatch):
        """Test resampling and the final SamplingError."""
        monkeypatch.setattr(config, 'SADDLE_MAX_RESAMPLES', 3)
        mocker.patch('goe._draw_dense', side_effect=np.linalg.LinAlgError("no convergence"))
        with pytest.raises(SamplingError):
            sample_spectra(GoeSampler.for_size(4, seed=1), 1)
        stats = sampling_status.get_status()['stats']
        assert stats['resamples'] == 2
        assert stats['failures'] == 1

    @pytest.mark.unit
    def test_solver_recovers(self, mocker):
        """Test that a single failure is redrawn transparently."""
        real = np.array([1.0, 0.0, -1.0])
        mocker.patch('goe._draw_dense', side_effect=[np.linalg.LinAlgError("no convergence"), real])
        spectra = sample_spectra(GoeSampler.for_size(3, seed=1), 1)
        assert np.array_equal(spectra[0], real)
        assert sampling_status.get_status()['stats']['resamples'] == 1


class TestEdgeScaling:
    """Tests for edge_rescale, edge_unscale and Affine."""

    @pytest.mark.unit
    def test_edge_maps_to_zero(self):
        """Test that the spectral edge maps to sigma = 0."""
        assert edge_rescale(math.sqrt(2 * 100), 100) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.unit
    def test_inverse(self):
        """Test that unscale inverts rescale."""
        lam = np.array([10.0, 13.9, 14.3])
        assert edge_unscale(edge_rescale(lam, 100), 100) == pytest.approx(lam)

    @pytest.mark.unit
    def test_affine_matches_edge_rescale(self):
        """Test Affine.edge against edge_rescale at v = 1/2."""
        lam = np.array([12.0, 14.0])
        assert Affine.edge(100).apply(lam) == pytest.approx(edge_rescale(lam, 100))

    @pytest.mark.unit
    def test_affine_invert(self):
        """Test Affine.invert."""
        affine = Affine(scale=2.0, shift=-1.0)
        assert affine.invert(affine.apply(3.0)) == pytest.approx(3.0)

    @pytest.mark.unit
    def test_invalid(self):
        """Test DomainError for n < 1 and non-finite input."""
        with pytest.raises(DomainError):
            edge_rescale(1.0, 0)
        with pytest.raises(DomainError):
            edge_rescale(float('nan'), 4)


class TestBinSpec:
    """Tests for BinSpec."""

    @pytest.mark.unit
    def test_width(self):
        """Test bins from a width."""
        edges = BinSpec(-1.0, 1.0, width=0.05).edges()
        assert len(edges) == 41

    @pytest.mark.unit
    def test_sample_count_rule(self):
        """Test the cube-root rule when no width is given."""
        assert len(BinSpec(0.0, 1.0).edges(999)) == 11

    @pytest.mark.unit
    def test_empty_grid(self):
        """Test DomainError for an empty interval."""
        with pytest.raises(DomainError):
            BinSpec(1.0, 1.0, n_bins=4).edges()


class TestDensities:
    """Tests for the binned densities."""

    @pytest.mark.unit
    def test_spectral_density_integrates_to_n(self):
        """Test that the eigenvalue density integrates to n."""
        density = spectral_density(GoeSampler.for_size(5, seed=3), BinSpec(-15, 15, width=0.1), 2000)
        assert density.integral() == pytest.approx(5.0)
        assert density.multiplicity == 5
        assert np.sum(density.density * density.widths) == pytest.approx(5.0)

    @pytest.mark.unit
    def test_order_densities_normalized(self):
        """Test that each order statistic integrates to one."""
        densities = order_statistic_densities(GoeSampler.for_size(6, seed=3), [0, 2, 5],
                                              BinSpec(-15, 15, width=0.1), 3000)
        for density in densities.values():
            assert density.integral() == pytest.approx(1.0)
            assert density.n_below == density.n_above == 0

    @pytest.mark.unit
    def test_order_densities_are_ordered(self):
        """Test that the largest eigenvalue sits above the second largest on average."""
        densities = order_statistic_densities(GoeSampler.for_size(6, seed=3), [0, 1],
                                              BinSpec(-15, 15, width=0.1), 3000)
        means = {k: np.sum(d.centers * d.density * d.widths) for k, d in densities.items()}
        assert means[0] > means[1]

    @pytest.mark.unit
    def test_k_out_of_range(self):
        """Test DomainError for k >= n."""
        with pytest.raises(DomainError):
            order_statistic_density(GoeSampler.for_size(4), 4, BinSpec(-5, 5, n_bins=10), 10)

    @pytest.mark.unit
    def test_outside_grid_counted(self):
        """Test that values outside the grid are counted, not binned."""
        density = order_statistic_density(GoeSampler.for_size(4, seed=1), 0, BinSpec(10.0, 11.0, n_bins=4), 50)
        assert density.n_below == 50
        assert density.integral() == 0.0

    @pytest.mark.unit
    def test_merge(self):
        """Test merging two densities on the same grid."""
        grid = BinSpec(-10, 10, width=0.5)
        a = order_statistic_density(GoeSampler.for_size(4, seed=1), 0, grid, 100)
        b = order_statistic_density(GoeSampler.for_size(4, seed=2), 0, grid, 50)
        merged = a.merge(b)
        assert merged.n_samples == 150
        assert merged.integral() == pytest.approx(1.0)

    @pytest.mark.unit
    def test_merge_different_grids(self):
        """Test DomainError when merging across grids."""
        a = order_statistic_density(GoeSampler.for_size(4, seed=1), 0, BinSpec(-10, 10, n_bins=20), 10)
        b = order_statistic_density(GoeSampler.for_size(4, seed=1), 0, BinSpec(-10, 10, n_bins=40), 10)
        with pytest.raises(DomainError):
            a.merge(b)

    @pytest.mark.unit
    def test_counts_must_match_bins(self):
        """Test validation of the counts array."""
        with pytest.raises(DomainError):
            EmpiricalDensity(bin_edges=np.linspace(0, 1, 4), counts=np.zeros(2), n_samples=1)

    @pytest.mark.unit
    def test_to_json_rows(self):
        """Test the serialized bins."""
        density = order_statistic_density(GoeSampler.for_size(3, seed=1), 0, BinSpec(-8, 8, n_bins=8), 20)
        data = density.to_json()
        assert data['k'] == 0
        assert len(data['bins']) == 8
        assert set(data['bins'][0]) == {'bin_left', 'bin_right', 'density', 'stderr'}

    @pytest.mark.unit
    def test_order_statistic_samples(self):
        """Test raw draws of the second largest eigenvalue."""
        sampler = GoeSampler.for_size(5, seed=8)
        draws = order_statistic_samples(sampler, 1, 10)
        assert np.allclose(draws, sample_spectra(sampler, 10)[:, 1])


class TestGaussianApprox:
    """Tests for gaussian_approx."""

    @pytest.mark.unit
    def test_bulk_center(self):
        """Test that the median eigenvalue sits at zero."""
        mu, sigma = gaussian_approx(100, 50, 'bulk')
        assert mu == pytest.approx(0.0, abs=1e-10)
        assert sigma == pytest.approx(math.sqrt(math.log(100) / 200))

    @pytest.mark.unit
    def test_edge_below_edge(self):
        """Test that the edge branch places lambda_k below sqrt(2n)."""
        mu, sigma = gaussian_approx(1000, 5, Branch.EDGE)
        assert mu < math.sqrt(2000)
        assert sigma > 0

    @pytest.mark.unit
    @pytest.mark.parametrize("branch,k", [('edge', 0), ('bulk', 0), ('bulk', 10), ('edge', 10)])
    def test_invalid_k(self, branch, k):
        """Test DomainError when k lies outside the branch's range."""
        with pytest.raises(DomainError):
            gaussian_approx(10, k, branch)


class TestSources:
    """Tests for the density sources."""

    @pytest.mark.unit
    def test_empirical_constant_weight(self, small_empirical_source):
        """Test that each order statistic integrates to one against a unit weight."""
        result = small_empirical_source.integrate_all(lambda x: np.zeros_like(x))
        assert result.log_values == pytest.approx(np.zeros(11), abs=1e-12)
        assert result.fractions == pytest.approx(np.arange(1, 12) / 11.0)
        assert result.log_total == pytest.approx(math.log(11.0))

    @pytest.mark.unit
    def test_empirical_coverage_error(self, small_empirical_source):
        """Test CoverageError for a weight peaked far beyond the samples."""
        with pytest.raises(CoverageError):
            small_empirical_source.integrate_all(lambda x: np.where(x > 30.0, 0.0, -np.inf))

    @pytest.mark.unit
    @pytest.mark.slow
    def test_determinant_constant_weight(self, small_determinant_source):
        """Test that the total density integrates to N + 1 and fractions grow linearly."""
        result = small_determinant_source.integrate_all(lambda x: np.zeros_like(x))
        tolerance = max(5.0 * result.rel_stderr_total, 0.05)
        assert math.exp(result.log_total) / 11.0 == pytest.approx(1.0, abs=tolerance)
        expected = np.arange(1, 12) / 11.0
        assert np.all(np.abs(result.fractions - expected) <= np.maximum(4.0 * result.fraction_stderr, 0.03))

    @pytest.mark.unit
    @pytest.mark.slow
    def test_determinant_matches_empirical(self, small_empirical_source, small_determinant_source):
        """Test that both sources agree on a Gaussian weight."""
        def weight(x):
            return -0.5 * (x - 2.0) ** 2

        emp = small_empirical_source.integrate_all(weight)
        det = small_determinant_source.integrate_all(weight)
        tolerance = max(5.0 * (det.rel_stderr_total + emp.rel_stderr_total), 0.05)
        assert det.log_total == pytest.approx(emp.log_total, abs=tolerance)
        spread = 5.0 * (det.fraction_stderr[0] + emp.fraction_stderr[0]) + 0.02
        assert det.fractions[0] == pytest.approx(emp.fractions[0], abs=spread)

    @pytest.mark.unit
    def test_gaussian_source_skips_k0(self):
        """Test that the Gaussian source leaves k = 0 empty."""
        result = GaussianSource(n_matrix=11).integrate_all(lambda x: np.zeros_like(x))
        assert result.log_values[0] == -np.inf
        assert result.log_values[1:] == pytest.approx(np.zeros(10), abs=1e-8)
        assert result.metadata['unsupported_k'] == [0]

    @pytest.mark.unit
    def test_build_source(self):
        """Test construction by name."""
        assert isinstance(build_source('gaussian', 11, 0), GaussianSource)
        with pytest.raises(DomainError):
            build_source('histogram', 11, 10)


def _goe2_density(x, k):
    """Closed-form density of the (k+1)-th largest eigenvalue of GOE_2."""
    if k == 0:
        return math.exp(-x * x / 2.0) * (x * norm.cdf(x) + norm.pdf(x)) / math.sqrt(2.0)
    return math.exp(-x * x / 2.0) * (norm.pdf(x) - x * norm.sf(x)) / math.sqrt(2.0)


class TestJointDensity:
    """Tests for point densities from the joint eigenvalue density."""

    @pytest.mark.unit
    def test_partition_function(self):
        """Test the normalization for n = 1 and n = 2."""
        assert log_goe_partition(1) == pytest.approx(0.5 * math.log(2.0 * math.pi))
        assert log_goe_partition(2) == pytest.approx(math.log(4.0 * math.sqrt(math.pi)))

    @pytest.mark.unit
    def test_single_eigenvalue_is_exact(self):
        """Test that n = 1 gives the standard normal density with zero error."""
        density, se = joint_density_point(1, 0, 0.7, 10)
        assert density == pytest.approx(norm.pdf(0.7))
        assert se == 0.0

    @pytest.mark.unit
    @pytest.mark.parametrize("k,x", [(0, -1.0), (0, 0.5), (0, 3.5), (1, -0.5), (1, 2.5), (1, 4.0)])
    def test_matches_goe2(self, k, x):
        """Test against the closed form for GOE_2, deep tails included."""
        density, se = joint_density_point(2, k, x, 20000, seed=5)
        expected = _goe2_density(x, k)
        assert abs(density - expected) <= 5.0 * se + 1e-3 * expected

    @pytest.mark.unit
    def test_matches_histogram_in_bulk(self):
        """Test agreement with sampled order statistics of GOE_5 where both are accurate."""
        sampler = GoeSampler.for_size(5, seed=8)
        density = order_statistic_density(sampler, 2, BinSpec(-0.1, 0.1, n_bins=1), 40000)
        value, se = joint_density_point(5, 2, 0.0, 40000, seed=9)
        sampled, sampled_se = density.density[0], density.stderr[0]
        assert abs(value - sampled) <= 4.0 * math.hypot(se, sampled_se) + 0.02 * sampled

    @pytest.mark.unit
    def test_domain_errors(self):
        """Test DomainError for bad sizes, indices, points and sample counts."""
        with pytest.raises(DomainError):
            joint_density_point(0, 0, 0.0, 100)
        with pytest.raises(DomainError):
            joint_density_point(3, 3, 0.0, 100)
        with pytest.raises(DomainError):
            joint_density_point(3, 1, math.inf, 100)
        with pytest.raises(DomainError):
            joint_density_point(3, 1, 0.0, 1)
