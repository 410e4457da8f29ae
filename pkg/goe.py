"""
Monte Carlo engine for GOE eigenvalue order statistics.

Samples are drawn in fixed blocks whose size depends only on the matrix
size; block b draws from Philox(SeedSequence(seed, spawn_key=(b,))), so
sample i is the same number regardless of how many worker threads run.
Partial histograms are merged in block order.

Conventions: a sampler with variance_scale v has off-diagonal variance v and
diagonal variance 2v, so its spectral edge sits at 2*sqrt(n v). The counting
formulas use v = 1/2 (edge at sqrt(2n), joint density ~ |Delta| e^{-sum l^2/2}).
"""

# Standard library imports
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.special import gammaln, logsumexp
from scipy.stats import gamma as gamma_dist, norm
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt
from tqdm import tqdm

# Local imports
import config
from errors import CoverageError, DomainError, SamplingError
from quadrature import gauss_legendre_nodes, log_bin_means, log_integrate
from sampling_status import sampling_status
from special_fns import semicircle_quantile

logger = logging.getLogger(__name__)

DENSE_LIMIT = 64
MAX_BLOCK = 4096
DEFAULT_BIN_WIDTH = 0.05
DEFAULT_MARGIN = 6.0
MIN_EFFECTIVE_SAMPLES = 20.0
DROPPED_MASS_RTOL = 1e-3


class SamplingMethod(Enum):
    DENSE = 'dense'
    TRIDIAGONAL = 'tridiagonal'

    def to_json(self):
        """Convert to JSON-serializable format."""
        return self.value


class Branch(Enum):
    EDGE = 'edge'
    BULK = 'bulk'

    def to_json(self):
        """Convert to JSON-serializable format."""
        return self.value


def _block_size(n: int) -> int:
    return max(1, min(MAX_BLOCK, 2 ** 17 // n))


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based generator for one block of samples."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


@dataclass(frozen=True)
class GoeSampler:
    """
    Configuration of a GOE draw.

    Attributes:
        n: Matrix size
        variance_scale: Off-diagonal variance (diagonal variance is twice that)
        method: Dense symmetric matrix or equivalent tridiagonal model
        seed: Root seed of the block generators
    """
    n: int
    variance_scale: float = 0.5
    method: SamplingMethod = SamplingMethod.TRIDIAGONAL
    seed: int = config.SADDLE_SEED

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"matrix size must be a positive integer, got {self.n}")
        if not (self.variance_scale > 0 and math.isfinite(self.variance_scale)):
            raise DomainError(f"variance_scale must be positive, got {self.variance_scale}")
        if not isinstance(self.method, SamplingMethod):
            object.__setattr__(self, 'method', SamplingMethod(self.method))

    @classmethod
    def for_size(cls, n: int, variance_scale: float = 0.5, seed: Optional[int] = None) -> 'GoeSampler':
        """Dense sampling for n <= 64, tridiagonal above."""
        method = SamplingMethod.DENSE if n <= DENSE_LIMIT else SamplingMethod.TRIDIAGONAL
        return cls(n=n, variance_scale=variance_scale, method=method,
                   seed=config.SADDLE_SEED if seed is None else int(seed))

    @property
    def edge(self) -> float:
        return 2.0 * math.sqrt(self.n * self.variance_scale)

    def to_json(self) -> Dict[str, Any]:
        return {'n': self.n, 'variance_scale': self.variance_scale,
                'method': self.method.value, 'seed': self.seed}


def _draw_dense(rng: np.random.Generator, n: int, v: float, top: int) -> np.ndarray:
    g = rng.standard_normal((n, n))
    m = math.sqrt(v) * (g + g.T) / math.sqrt(2.0)
    return np.linalg.eigvalsh(m)[::-1][:top]


def _draw_tridiagonal(rng: np.random.Generator, n: int, v: float, top: int) -> np.ndarray:
    diagonal = rng.normal(0.0, math.sqrt(2.0 * v), size=n)
    if n == 1:
        return diagonal.copy()
    off = np.sqrt(v * rng.chisquare(np.arange(n - 1, 0, -1)))
    if top >= n:
        return eigvalsh_tridiagonal(diagonal, off)[::-1]
    values = eigvalsh_tridiagonal(diagonal, off, select='i', select_range=(n - top, n - 1))
    return values[::-1]


def _log_resample(retry_state):
    sampling_status.resample()
    logger.warning(f"Eigen-solver did not converge (attempt {retry_state.attempt_number}), redrawing")


def _draw(sampler: GoeSampler, rng: np.random.Generator, top: int) -> np.ndarray:
    draw = _draw_dense if sampler.method is SamplingMethod.DENSE else _draw_tridiagonal
    retrying = Retrying(
        stop=stop_after_attempt(max(1, config.SADDLE_MAX_RESAMPLES)),
        retry=retry_if_exception_type(np.linalg.LinAlgError),
        before_sleep=_log_resample,
    )
    try:
        return retrying(draw, rng, sampler.n, sampler.variance_scale, top)
    except RetryError as e:
        sampling_status.failure()
        raise SamplingError(f"eigen-solver failed {config.SADDLE_MAX_RESAMPLES} times for n={sampler.n}") from e


def _block_spectra(sampler: GoeSampler, block: int, count: int, top: int) -> np.ndarray:
    sampling_status.block_started()
    rng = block_rng(sampler.seed, block)
    out = np.empty((count, top))
    for i in range(count):
        out[i] = _draw(sampler, rng, top)
    sampling_status.block_completed(count)
    return out


def _run_blocks(sampler: GoeSampler, n_samples: int, top: int,
                consume: Callable[[np.ndarray], Any], threads: int = 1,
                progress: bool = False) -> List[Any]:
    """Draw n_samples spectra block by block; return consume() of each block in block order."""
    if n_samples < 1:
        raise DomainError(f"n_samples must be positive, got {n_samples}")
    size = _block_size(sampler.n)
    blocks = [(b, min(size, n_samples - b * size)) for b in range(math.ceil(n_samples / size))]
    logger.debug(f"Sampling {n_samples} spectra of n={sampler.n} in {len(blocks)} blocks, {threads} threads")

    def job(block: int, count: int):
        return consume(_block_spectra(sampler, block, count, top))

    results: List[Any] = [None] * len(blocks)
    with tqdm(total=len(blocks), disable=not progress, desc=f"GOE n={sampler.n}") as bar:
        if threads <= 1:
            for b, count in blocks:
                results[b] = job(b, count)
                bar.update(1)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = {pool.submit(job, b, count): b for b, count in blocks}
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
                    bar.update(1)
    return results


def sample_spectrum(sampler: GoeSampler, index: int = 0) -> np.ndarray:
    """Descending spectrum of sample number index."""
    size = _block_size(sampler.n)
    block, offset = divmod(int(index), size)
    return _block_spectra(sampler, block, offset + 1, sampler.n)[offset]


def sample_spectra(sampler: GoeSampler, n_samples: int, top: Optional[int] = None,
                   threads: int = 1, progress: bool = False) -> np.ndarray:
    """
    Descending spectra of samples 0..n_samples-1.

    Args:
        sampler: Sampler configuration
        n_samples: Number of draws
        top: Keep only the largest top eigenvalues (all when None)
        threads: Worker threads
        progress: Show a progress bar

    Returns:
        Array of shape (n_samples, top)
    """
    top = sampler.n if top is None else int(top)
    if not 1 <= top <= sampler.n:
        raise DomainError(f"top must lie in [1, {sampler.n}], got {top}")
    return np.concatenate(_run_blocks(sampler, n_samples, top, lambda s: s, threads, progress))


@dataclass(frozen=True)
class Affine:
    """Map x -> scale * x + shift applied to eigenvalues before binning."""
    scale: float = 1.0
    shift: float = 0.0
    label: str = 'identity'

    def apply(self, x):
        return self.scale * np.asarray(x) + self.shift

    def invert(self, y):
        return (np.asarray(y) - self.shift) / self.scale

    @classmethod
    def edge(cls, n: int, variance_scale: float = 0.5) -> 'Affine':
        """Edge scaling sigma = (l/sqrt(2v) - sqrt(2n)) sqrt(2) n^(1/6)."""
        factor = math.sqrt(2.0) * n ** (1.0 / 6.0)
        return cls(scale=factor / math.sqrt(2.0 * variance_scale),
                   shift=-2.0 * n ** (2.0 / 3.0), label=f'edge(n={n})')

    def to_json(self) -> Dict[str, Any]:
        return {'scale': self.scale, 'shift': self.shift, 'label': self.label}


def edge_rescale(lam, n: int):
    """sigma = (lam - sqrt(2n)) sqrt(2) n^(1/6), for spectra with edge at sqrt(2n)."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise DomainError("lambda must be finite")
    sigma = (lam - math.sqrt(2.0 * n)) * math.sqrt(2.0) * n ** (1.0 / 6.0)
    return float(sigma) if sigma.ndim == 0 else sigma


def edge_unscale(sigma, n: int):
    """Inverse of edge_rescale."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    sigma = np.asarray(sigma, dtype=float)
    lam = math.sqrt(2.0 * n) + sigma / (math.sqrt(2.0) * n ** (1.0 / 6.0))
    return float(lam) if lam.ndim == 0 else lam


@dataclass(frozen=True)
class BinSpec:
    """Uniform bins on [lower, upper]; bin count from n_bins, width, or the sample count."""
    lower: float
    upper: float
    n_bins: Optional[int] = None
    width: Optional[float] = None

    def edges(self, n_samples: Optional[int] = None) -> np.ndarray:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)) or self.upper <= self.lower:
            raise DomainError(f"empty grid [{self.lower}, {self.upper}]")
        if self.n_bins is not None:
            bins = int(self.n_bins)
        elif self.width is not None:
            bins = int(math.ceil((self.upper - self.lower) / self.width - 1e-9))
        else:
            bins = int(math.ceil((n_samples or 1) ** (1.0 / 3.0)))
        if bins < 1:
            raise DomainError("grid must contain at least one bin")
        return np.linspace(self.lower, self.upper, bins + 1)


@dataclass(frozen=True)
class EmpiricalDensity:
    """
    Binned Monte Carlo density.

    counts[b] is the number of tracked values that fell in bin b over all
    samples; sum_sq[b] is the sum over samples of the squared per-sample
    count (equal to counts for a single order statistic).
    """
    bin_edges: np.ndarray
    counts: np.ndarray
    n_samples: int
    multiplicity: int = 1
    sum_sq: Optional[np.ndarray] = None
    n_below: int = 0
    n_above: int = 0
    transform: Affine = field(default_factory=Affine)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.counts) != len(self.bin_edges) - 1:
            raise DomainError("counts must have one entry per bin")
        if self.sum_sq is None:
            object.__setattr__(self, 'sum_sq', np.asarray(self.counts, dtype=float))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n_samples * self.widths)

    @property
    def stderr(self) -> np.ndarray:
        mean = self.counts / self.n_samples
        var = np.maximum(self.sum_sq / self.n_samples - mean ** 2, 0.0)
        return np.sqrt(var / max(self.n_samples - 1, 1)) / self.widths

    def integral(self) -> float:
        """Tracked values per sample that landed inside the grid."""
        return float(np.sum(self.counts)) / self.n_samples

    def merge(self, other: 'EmpiricalDensity') -> 'EmpiricalDensity':
        if not np.array_equal(self.bin_edges, other.bin_edges) or self.transform != other.transform:
            raise DomainError("cannot merge densities on different grids")
        return replace(self, counts=self.counts + other.counts, n_samples=self.n_samples + other.n_samples,
                       sum_sq=self.sum_sq + other.sum_sq, n_below=self.n_below + other.n_below,
                       n_above=self.n_above + other.n_above)

    def rows(self) -> List[Tuple[float, float, float, float]]:
        """(bin_left, bin_right, density, stderr) per bin."""
        return list(zip(self.bin_edges[:-1].tolist(), self.bin_edges[1:].tolist(),
                        self.density.tolist(), self.stderr.tolist()))

    def to_json(self) -> Dict[str, Any]:
        return {
            **self.metadata,
            'n_samples': self.n_samples,
            'multiplicity': self.multiplicity,
            'n_below': self.n_below,
            'n_above': self.n_above,
            'transform': self.transform.to_json(),
            'bins': [{'bin_left': l, 'bin_right': r, 'density': d, 'stderr': s}
                     for l, r, d, s in self.rows()],
        }


@dataclass
class _Histograms:
    counts: np.ndarray      # (K, B)
    total_sq: np.ndarray    # (B,)
    below: np.ndarray       # (K,)
    above: np.ndarray       # (K,)

    def __add__(self, other: '_Histograms') -> '_Histograms':
        return _Histograms(self.counts + other.counts, self.total_sq + other.total_sq,
                           self.below + other.below, self.above + other.above)


def _histogram_block(values: np.ndarray, edges: np.ndarray) -> _Histograms:
    samples, stats = values.shape
    bins = len(edges) - 1
    idx = np.searchsorted(edges, values, side='right') - 1
    inside = (idx >= 0) & (idx < bins)
    k_index = np.broadcast_to(np.arange(stats), values.shape)
    counts = np.bincount((k_index * bins + idx)[inside], minlength=stats * bins).reshape(stats, bins)
    s_index = np.broadcast_to(np.arange(samples)[:, None], values.shape)
    per_sample = np.bincount((s_index * bins + idx)[inside], minlength=samples * bins).reshape(samples, bins)
    return _Histograms(counts=counts.astype(np.int64),
                       total_sq=np.sum(per_sample.astype(np.int64) ** 2, axis=0),
                       below=np.sum(idx < 0, axis=0).astype(np.int64),
                       above=np.sum(idx >= bins, axis=0).astype(np.int64))


def _order_histograms(sampler: GoeSampler, edges: np.ndarray, n_samples: int, top: int,
                      transform: Affine, threads: int, progress: bool) -> _Histograms:
    partials = _run_blocks(sampler, n_samples, top,
                           lambda spectra: _histogram_block(transform.apply(spectra), edges),
                           threads, progress)
    total = partials[0]
    for part in partials[1:]:
        total = total + part
    return total


def _check_k(sampler: GoeSampler, k: int):
    if int(k) != k or not 0 <= k <= sampler.n - 1:
        raise DomainError(f"order index k must lie in [0, {sampler.n - 1}], got {k}")


def order_statistic_densities(sampler: GoeSampler, ks: Sequence[int], grid: BinSpec, n_samples: int,
                              transform: Optional[Affine] = None, threads: int = 1,
                              progress: bool = False) -> Dict[int, EmpiricalDensity]:
    """
    Densities of several order statistics from the same samples.

    Args:
        sampler: Sampler configuration
        ks: Order indices (k = 0 is the largest eigenvalue)
        grid: Bins in the transformed variable
        n_samples: Number of draws
        transform: Map applied to eigenvalues before binning
        threads: Worker threads
        progress: Show a progress bar

    Returns:
        Mapping k -> EmpiricalDensity of the (k+1)-th largest eigenvalue
    """
    ks = [int(k) for k in ks]
    if not ks:
        raise DomainError("at least one order index is required")
    for k in ks:
        _check_k(sampler, k)
    transform = transform or Affine()
    edges = grid.edges(n_samples)
    top = max(ks) + 1
    hist = _order_histograms(sampler, edges, n_samples, top, transform, threads, progress)
    meta = {'n': sampler.n, 'seed': sampler.seed, 'method': sampler.method.value,
            'variance_scale': sampler.variance_scale}
    return {k: EmpiricalDensity(bin_edges=edges, counts=hist.counts[k], n_samples=n_samples,
                                n_below=int(hist.below[k]), n_above=int(hist.above[k]),
                                transform=transform, metadata={**meta, 'k': k})
            for k in ks}


def order_statistic_density(sampler: GoeSampler, k: int, grid: BinSpec, n_samples: int,
                            transform: Optional[Affine] = None, threads: int = 1,
                            progress: bool = False) -> EmpiricalDensity:
    """Density of the (k+1)-th largest eigenvalue."""
    _check_k(sampler, k)
    return order_statistic_densities(sampler, [k], grid, n_samples, transform, threads, progress)[k]


def spectral_density(sampler: GoeSampler, grid: BinSpec, n_samples: int,
                     transform: Optional[Affine] = None, threads: int = 1,
                     progress: bool = False, top: Optional[int] = None) -> EmpiricalDensity:
    """
    Density of all eigenvalues, integrating to n over the real line.

    With top set, only the top largest eigenvalues of each sample are
    counted and the density integrates to top.
    """
    top = sampler.n if top is None else int(top)
    if not 1 <= top <= sampler.n:
        raise DomainError(f"top must lie in [1, {sampler.n}], got {top}")
    transform = transform or Affine()
    edges = grid.edges(n_samples)
    hist = _order_histograms(sampler, edges, n_samples, top, transform, threads, progress)
    return EmpiricalDensity(bin_edges=edges, counts=hist.counts.sum(axis=0), n_samples=n_samples,
                            multiplicity=top, sum_sq=hist.total_sq.astype(float),
                            n_below=int(hist.below.sum()), n_above=int(hist.above.sum()),
                            transform=transform,
                            metadata={'n': sampler.n, 'seed': sampler.seed,
                                      'k': 'all' if top == sampler.n else f'top{top}',
                                      'method': sampler.method.value})


def edge_order_densities(n: int, n_stats: int, grid: BinSpec, n_samples: int, seed: Optional[int] = None,
                         threads: int = 1, progress: bool = False) -> Dict[int, EmpiricalDensity]:
    """Edge-rescaled densities of the n_stats largest eigenvalues of GOE_n (v = 1/2)."""
    sampler = GoeSampler.for_size(n, seed=seed)
    if not 1 <= n_stats <= n:
        raise DomainError(f"n_stats must lie in [1, {n}]")
    return order_statistic_densities(sampler, range(n_stats), grid, n_samples,
                                     transform=Affine.edge(n, sampler.variance_scale),
                                     threads=threads, progress=progress)


def order_statistic_samples(sampler: GoeSampler, k: int, n_samples: int, threads: int = 1,
                            progress: bool = False) -> np.ndarray:
    """Raw draws of the (k+1)-th largest eigenvalue."""
    _check_k(sampler, k)
    return sample_spectra(sampler, n_samples, top=k + 1, threads=threads, progress=progress)[:, k]


def gaussian_approx(n: int, k: int, branch) -> Tuple[float, float]:
    """
    Gaussian mean and width of the (k+1)-th largest eigenvalue (edge at sqrt(2n)).

    Args:
        n: Matrix size
        k: Order index
        branch: 'edge' for 1 <= k << n, 'bulk' for 0 < k < n

    Returns:
        Tuple (mu, sigma)
    """
    branch = Branch(branch)
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if branch is Branch.EDGE:
        if not 1 <= k < n:
            raise DomainError(f"edge branch needs 1 <= k < n, got k={k}")
        mu = math.sqrt(2.0 * n) * (1.0 - (3.0 * math.pi * k / (4.0 * math.sqrt(2.0) * n)) ** (2.0 / 3.0))
        var = 2.0 * math.log(k) / (n ** (1.0 / 3.0) * (12.0 * math.pi * k) ** (2.0 / 3.0))
        return mu, math.sqrt(var)
    if not 0 < k < n:
        raise DomainError(f"bulk branch needs 0 < k < n, got k={k}")
    q = semicircle_quantile(k / n)
    var = math.log(n) / (2.0 * n * (1.0 - q ** 2))
    return q * math.sqrt(2.0 * n), math.sqrt(var)


def log_goe_partition(n: int) -> float:
    """log of int |Delta(x)| prod e^{-x_i^2/2} dx over unordered x in R^n."""
    j = np.arange(1, n + 1)
    return 0.5 * n * math.log(2.0 * math.pi) + float(np.sum(gammaln(1.0 + j / 2.0) - gammaln(1.5)))


def joint_density_point(n: int, k: int, lam: float, n_samples: int,
                        seed: Optional[int] = None) -> Tuple[float, float]:
    """
    rho^{(k+1)}_n(lam) of GOE_n (v = 1/2) by importance sampling of its joint eigenvalue density.

    The eigenvalue at lam is pinned; the k eigenvalues above it are drawn
    as lam + Gamma(2, rate) and the n - k - 1 below it from a standard
    normal truncated at lam, so configurations that put lam deep in a
    tail are drawn as often as typical ones.

    Returns:
        Tuple (density, stderr)
    """
    if int(n) != n or n < 1:
        raise DomainError(f"matrix size must be a positive integer, got {n}")
    if int(k) != k or not 0 <= k <= n - 1:
        raise DomainError(f"order index k must lie in [0, {n - 1}], got {k}")
    if not math.isfinite(lam):
        raise DomainError(f"evaluation point must be finite, got {lam}")
    if n_samples < 2:
        raise DomainError(f"n_samples must be at least 2, got {n_samples}")

    m, below = n - 1, n - 1 - k
    rate = max(lam, 0.0) + 1.0
    log_tail = float(norm.logcdf(lam))
    log_prefactor = (math.log(n) - log_goe_partition(n) - 0.5 * lam ** 2
                     + float(gammaln(m + 1) - gammaln(k + 1) - gammaln(below + 1)))
    rng = block_rng(config.SADDLE_SEED if seed is None else int(seed), 0)
    chunk = max(1, 2 ** 22 // max(1, m * m))
    log_w = []
    for start in range(0, n_samples, chunk):
        size = min(chunk, n_samples - start)
        shift = rng.gamma(2.0, 1.0 / rate, size=(size, k))
        under = norm.ppf((1.0 - rng.uniform(size=(size, below))) * math.exp(log_tail))
        mu = np.concatenate([lam + shift, under], axis=1)
        log_f = -0.5 * np.sum(mu ** 2, axis=1)
        if m:
            log_f += np.sum(np.log(np.abs(lam - mu)), axis=1)
        if m > 1:
            i, j = np.triu_indices(m, 1)
            log_f += np.sum(np.log(np.abs(mu[:, i] - mu[:, j])), axis=1)
        log_q = (np.sum(gamma_dist.logpdf(shift, 2.0, scale=1.0 / rate), axis=1)
                 + np.sum(norm.logpdf(under), axis=1) - below * log_tail)
        log_w.append(log_f - log_q)
    log_w = np.concatenate(log_w)
    mean, rel = DeterminantSource._mean(log_w)
    density = math.exp(log_prefactor + mean)
    return density, density * rel


# ---------------------------------------------------------------------------
# Density sources for the exact counting integrals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceIntegrals:
    """
    Integrals of a weight against the order-statistic densities of GOE_{N+1}.

    log_values[k] = log int w(l) rho^{(k+1)}(l) dl; log_cumulative[k] is the same
    for the sum over j <= k. Relative standard errors are zero for
    deterministic sources. fractions[k] = cumulative / total.
    """
    log_values: np.ndarray
    rel_stderr: np.ndarray
    log_cumulative: np.ndarray
    rel_stderr_cumulative: np.ndarray
    log_total: float
    rel_stderr_total: float
    fractions: np.ndarray
    fraction_stderr: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)


def _fractions(log_cum: np.ndarray, log_total: float, se_cum: np.ndarray,
               se_comp: np.ndarray) -> np.ndarray:
    """Delta-method error of A/(A+B) with A, B treated as independent."""
    with np.errstate(invalid='ignore', divide='ignore'):
        frac = np.exp(log_cum - log_total)
        comp = np.clip(1.0 - frac, 0.0, 1.0)
        err = np.sqrt((comp * frac * se_cum) ** 2 + (frac * comp * se_comp) ** 2)
    return np.nan_to_num(err)


@dataclass
class EmpiricalSource:
    """
    Histogram source: every order statistic of GOE_{N+1} binned from shared samples.

    Bin-averaged weights are integrated exactly per bin, so the estimate is
    (1/S) sum_b c_b wbar_b. Errors use per-bin second moments (exact for a
    single order statistic, diagonal for sums of them).
    """
    counts: np.ndarray
    total_sq: np.ndarray
    below: np.ndarray
    above: np.ndarray
    bin_edges: np.ndarray
    n_samples: int
    n_matrix: int
    seed: int
    kind: str = 'empirical'

    @classmethod
    def build(cls, n_matrix: int, n_samples: int, seed: Optional[int] = None,
              bin_width: float = DEFAULT_BIN_WIDTH, margin: float = DEFAULT_MARGIN,
              threads: int = 1, progress: bool = False) -> 'EmpiricalSource':
        sampler = GoeSampler.for_size(n_matrix, seed=seed)
        reach = sampler.edge + margin
        edges = BinSpec(-reach, reach, width=bin_width).edges()
        logger.info(f"Building empirical density source: GOE_{n_matrix}, {n_samples} samples, seed {sampler.seed}")
        hist = _order_histograms(sampler, edges, n_samples, n_matrix, Affine(), threads, progress)
        return cls(counts=hist.counts, total_sq=hist.total_sq.astype(float), below=hist.below,
                   above=hist.above, bin_edges=edges, n_samples=n_samples, n_matrix=n_matrix,
                   seed=sampler.seed)

    def metadata(self) -> Dict[str, Any]:
        return {'source': self.kind, 'n_matrix': self.n_matrix, 'n_samples': self.n_samples,
                'seed': self.seed, 'bin_width': float(self.bin_edges[1] - self.bin_edges[0])}

    def _estimate(self, counts: np.ndarray, sum_sq: np.ndarray,
                  log_w: np.ndarray) -> Tuple[float, float, float]:
        """(log of the estimate, relative stderr, E[X^2]/E[X]^2) for per-sample X = sum_b c_b wbar_b."""
        with np.errstate(divide='ignore'):
            log_c = np.log(counts)
            log_sq = np.log(sum_sq)
        log_s = math.log(self.n_samples)
        first = float(logsumexp(log_c + log_w)) - log_s
        if not np.isfinite(first):
            return -np.inf, np.nan, np.inf
        second = float(logsumexp(log_sq + 2.0 * log_w)) - log_s
        ratio = math.exp(second - 2.0 * first)
        rel = math.sqrt(max(ratio - 1.0, 0.0) / max(self.n_samples - 1, 1))
        return first, rel, ratio

    def _check_coverage(self, log_weight, log_w: np.ndarray, log_total: float, second_ratio: float):
        lo, hi = self.bin_edges[0], self.bin_edges[-1]
        if not np.isfinite(log_total):
            raise CoverageError(f"no samples where the weight is non-negligible; grid [{lo:.3f}, {hi:.3f}]",
                                interval=(lo, hi))
        ess = self.n_samples / second_ratio
        if ess < MIN_EFFECTIVE_SAMPLES:
            peak = float(self.bin_edges[np.argmax(log_w)])
            raise CoverageError(f"integral carried by {ess:.1f} effective samples; the weight peaks near "
                                f"{peak:.3f} where the sampled density is too sparse", interval=(lo, hi))
        for dropped, span in ((int(self.above.sum()), np.linspace(hi, hi + 20.0, 201)),
                              (int(self.below.sum()), np.linspace(lo - 20.0, lo, 201))):
            if dropped == 0:
                continue
            bound = math.log(dropped / self.n_samples) + float(np.max(log_weight(span)))
            if bound - log_total > math.log(DROPPED_MASS_RTOL):
                raise CoverageError(f"{dropped} eigenvalues fell outside the grid [{lo:.3f}, {hi:.3f}] "
                                    f"where the weight is not negligible", interval=(lo, hi))

    def integrate_all(self, log_weight: Callable[[np.ndarray], np.ndarray]) -> SourceIntegrals:
        log_w = log_bin_means(log_weight, self.bin_edges)
        n_stats = self.n_matrix
        values = np.empty(n_stats)
        rel = np.empty(n_stats)
        for k in range(n_stats):
            values[k], rel[k], _ = self._estimate(self.counts[k], self.counts[k], log_w)
        cumulative = np.cumsum(self.counts, axis=0)
        log_cum = np.empty(n_stats)
        rel_cum = np.empty(n_stats)
        rel_comp = np.zeros(n_stats)
        for k in range(n_stats):
            log_cum[k], rel_cum[k], _ = self._estimate(cumulative[k], cumulative[k], log_w)
            if k < n_stats - 1:
                complement = cumulative[-1] - cumulative[k]
                _, rel_comp[k], _ = self._estimate(complement, complement, log_w)
        log_total, rel_total, second_ratio = self._estimate(cumulative[-1], self.total_sq, log_w)
        self._check_coverage(log_weight, log_w, log_total, second_ratio)
        rel_comp = np.nan_to_num(rel_comp)
        fractions = np.exp(log_cum - log_total)
        return SourceIntegrals(log_values=values, rel_stderr=np.nan_to_num(rel), log_cumulative=log_cum,
                               rel_stderr_cumulative=np.nan_to_num(rel_cum), log_total=log_total,
                               rel_stderr_total=rel_total, fractions=fractions,
                               fraction_stderr=_fractions(log_cum, log_total, np.nan_to_num(rel_cum), rel_comp),
                               metadata=self.metadata())


@dataclass(frozen=True)
class GaussianSource:
    """Gaussian approximation of each order-statistic density (fast, approximate)."""
    n_matrix: int
    branch: Branch = Branch.BULK
    kind: str = 'gaussian'

    def metadata(self) -> Dict[str, Any]:
        return {'source': self.kind, 'n_matrix': self.n_matrix, 'branch': Branch(self.branch).value,
                'approximate': True}

    def supported(self) -> np.ndarray:
        """Both branches exclude k = 0."""
        return np.arange(1, self.n_matrix)

    def log_value(self, log_weight, k: int) -> float:
        mu, sigma = gaussian_approx(self.n_matrix, k, self.branch)
        if sigma == 0.0:
            return float(log_weight(np.array([mu]))[0])
        log_norm = -0.5 * math.log(2.0 * math.pi * sigma ** 2)
        return log_integrate(lambda x: log_weight(x) + log_norm - 0.5 * ((x - mu) / sigma) ** 2,
                             mu - 12.0 * sigma, mu + 12.0 * sigma, rtol=1e-10)

    def integrate_all(self, log_weight: Callable[[np.ndarray], np.ndarray]) -> SourceIntegrals:
        n_stats = self.n_matrix
        values = np.full(n_stats, -np.inf)
        for k in self.supported():
            values[k] = self.log_value(log_weight, int(k))
        log_cum = np.logaddexp.accumulate(values)
        log_total = float(log_cum[-1])
        zeros = np.zeros(n_stats)
        return SourceIntegrals(log_values=values, rel_stderr=zeros, log_cumulative=log_cum,
                               rel_stderr_cumulative=zeros, log_total=log_total, rel_stderr_total=0.0,
                               fractions=np.exp(log_cum - log_total), fraction_stderr=zeros,
                               metadata={**self.metadata(), 'unsupported_k': [0]})


@dataclass
class DeterminantSource:
    """
    Conditional-determinant source.

    Uses rho^{(k+1)}_{N+1}(l) = C e^{-l^2/2} E_{GOE_N}[|det(l - M)| 1(k eigenvalues above l)]
    with C = (N+1) / (2 sqrt(2) Gamma((N+3)/2)). For each GOE_N sample the
    weight is integrated exactly over the interval between consecutive
    eigenvalues, so tails of the extreme eigenvalues cost no rare events.
    """
    n_matrix: int
    n_samples: int
    seed: Optional[int] = None
    threads: int = 1
    progress: bool = False
    order: int = 20
    kind: str = 'determinant'
    _spectra: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_matrix < 2:
            raise DomainError("determinant source needs N + 1 >= 2")
        self.seed = config.SADDLE_SEED if self.seed is None else int(self.seed)

    def metadata(self) -> Dict[str, Any]:
        return {'source': self.kind, 'n_matrix': self.n_matrix, 'n_samples': self.n_samples,
                'seed': self.seed}

    @property
    def spectra(self) -> np.ndarray:
        if self._spectra is None:
            sampler = GoeSampler.for_size(self.n_matrix - 1, seed=self.seed)
            logger.info(f"Sampling GOE_{sampler.n} spectra for the determinant source ({self.n_samples} samples)")
            self._spectra = sample_spectra(sampler, self.n_samples, threads=self.threads, progress=self.progress)
        return self._spectra

    @property
    def log_constant(self) -> float:
        n = self.n_matrix - 1
        return math.log(n + 1) - math.log(2.0 * math.sqrt(2.0)) - float(gammaln((n + 3) / 2.0))

    @staticmethod
    def _log_integrand(log_weight, lam: np.ndarray, mu: np.ndarray) -> np.ndarray:
        # lam: (S, ...), mu: (S, N)
        shape = lam.shape
        flat = lam.reshape(shape[0], -1)
        with np.errstate(divide='ignore'):
            log_det = np.sum(np.log(np.abs(flat[:, :, None] - mu[:, None, :])), axis=2)
        out = log_weight(flat.ravel()).reshape(flat.shape) - 0.5 * flat ** 2 + log_det
        return out.reshape(shape)

    def _outer_limit(self, log_weight, mu: np.ndarray, start: np.ndarray, direction: float) -> np.ndarray:
        steps = np.arange(1, 241) * 0.25
        lam = start[:, None] + direction * steps[None, :]
        g = self._log_integrand(log_weight, lam, mu)
        significant = g >= np.max(g, axis=1, keepdims=True) - 45.0
        last = steps.size - 1 - np.argmax(significant[:, ::-1], axis=1)
        if np.any(last >= steps.size - 1):
            raise CoverageError("integrand still significant 60 units beyond the extreme eigenvalue",
                                interval=(float(start.min()), float(start.max())))
        return start + direction * steps[last + 1]

    def _interval_logs(self, log_weight, mu: np.ndarray) -> np.ndarray:
        """log of the weight integral over each of the N+1 index intervals, shape (S, N+1)."""
        s, n = mu.shape
        x, w = gauss_legendre_nodes(self.order)
        upper = self._outer_limit(log_weight, mu, mu[:, 0], 1.0)
        lower = self._outer_limit(log_weight, mu, mu[:, -1], -1.0)
        # interval k is (mu_k, mu_{k-1}) with mu_{-1} = upper and mu_N = lower
        left = np.concatenate([mu, lower[:, None]], axis=1)
        right = np.concatenate([upper[:, None], mu], axis=1)
        panels = 8
        fractions = np.linspace(0.0, 1.0, panels + 1)
        a = left[:, :, None] + (right - left)[:, :, None] * fractions[None, None, :-1]
        b = left[:, :, None] + (right - left)[:, :, None] * fractions[None, None, 1:]
        half = 0.5 * (b - a)
        nodes = 0.5 * (a + b)[..., None] + half[..., None] * x
        g = self._log_integrand(log_weight, nodes, mu)
        with np.errstate(divide='ignore'):
            log_terms = g + np.log(np.abs(half))[..., None] + np.log(w)
        return logsumexp(log_terms.reshape(s, n + 1, -1), axis=2)

    def sample_logs(self, log_weight: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Per-sample log interval integrals including the normalization constant, shape (S, N+1)."""
        spectra = self.spectra
        n = spectra.shape[1]
        chunk = max(1, int(2e7 // ((n + 1) * 8 * self.order * n)))
        parts = [self._interval_logs(log_weight, spectra[i:i + chunk])
                 for i in range(0, spectra.shape[0], chunk)]
        return np.concatenate(parts) + self.log_constant

    @staticmethod
    def _mean(logs: np.ndarray) -> Tuple[float, float]:
        s = logs.shape[0]
        first = float(logsumexp(logs)) - math.log(s)
        if not np.isfinite(first):
            return -np.inf, np.nan
        second = float(logsumexp(2.0 * logs)) - math.log(s)
        rel = math.sqrt(max(math.exp(second - 2.0 * first) - 1.0, 0.0) / max(s - 1, 1))
        return first, rel

    def integrate_all(self, log_weight: Callable[[np.ndarray], np.ndarray]) -> SourceIntegrals:
        logs = self.sample_logs(log_weight)
        n_stats = logs.shape[1]
        cum = np.logaddexp.accumulate(logs, axis=1)
        values, rel = np.empty(n_stats), np.empty(n_stats)
        log_cum, rel_cum = np.empty(n_stats), np.empty(n_stats)
        for k in range(n_stats):
            values[k], rel[k] = self._mean(logs[:, k])
            log_cum[k], rel_cum[k] = self._mean(cum[:, k])
        log_total, rel_total = log_cum[-1], rel_cum[-1]
        if not np.isfinite(log_total):
            raise CoverageError("weight vanishes on every sampled interval")
        # ratio estimator error from per-sample pairs
        scale = cum[:, -1:].max()
        totals = np.exp(cum[:, -1] - scale)
        fractions = np.exp(log_cum - log_total)
        frac_err = np.empty(n_stats)
        for k in range(n_stats):
            parts = np.exp(cum[:, k] - scale)
            resid = parts - fractions[k] * totals
            frac_err[k] = math.sqrt(np.mean(resid ** 2) / max(logs.shape[0] - 1, 1)) / np.mean(totals)
        return SourceIntegrals(log_values=values, rel_stderr=np.nan_to_num(rel), log_cumulative=log_cum,
                               rel_stderr_cumulative=np.nan_to_num(rel_cum), log_total=float(log_total),
                               rel_stderr_total=float(rel_total), fractions=fractions, fraction_stderr=frac_err,
                               metadata=self.metadata())


def build_source(kind: str, n_matrix: int, n_samples: int, seed: Optional[int] = None,
                 threads: int = 1, progress: bool = False, branch: str = 'bulk'):
    """Construct a density source by name: empirical, determinant or gaussian."""
    if kind == 'empirical':
        return EmpiricalSource.build(n_matrix, n_samples, seed=seed, threads=threads, progress=progress)
    if kind == 'determinant':
        return DeterminantSource(n_matrix=n_matrix, n_samples=n_samples, seed=seed,
                                 threads=threads, progress=progress)
    if kind == 'gaussian':
        return GaussianSource(n_matrix=n_matrix, branch=Branch(branch))
    raise DomainError(f"unknown density source '{kind}'")
