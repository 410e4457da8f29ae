"""
Unconstrained random energy landscape.

Exact finite-N mean counts of stationary points by instability index and
the closed-form index distributions of the four scaling regions
(simplicity, hierarchy, toppling, complexity).

Exact counts use the variable l = sqrt(N) s, in which

    <N_k> = c_N m^-N e^{N m^2/2} int e^{-(l - sqrt(2N) m)^2/2} rho^{(k+1)}_{N+1}(l) dl

with rho^{(k+1)}_{N+1} the density of the (k+1)-th largest eigenvalue of
GOE_{N+1} whose edge sits at sqrt(2(N+1)).
"""

# Standard library imports
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

# Third-party imports
import numpy as np
from scipy.special import gammaincc, gammaln

# Local imports
from errors import CoverageError, DomainError
from goe import EmpiricalDensity, SourceIntegrals
from quadrature import integrate, log_integrate
from special_fns import rho_edge, semicircle_cdf

logger = logging.getLogger(__name__)

TOPPLING_C = (3.0 * math.pi / (4.0 * math.sqrt(2.0))) ** (2.0 / 3.0)
TOPPLING_C2 = math.sqrt(2.0) * TOPPLING_C
HIERARCHY_CUTOFF = 12
EDGE_BULK_SWITCH = -40.0
DROPPED_MASS_RTOL = 1e-3


class Region(Enum):
    SIMPLICITY = 'simplicity'
    HIERARCHY = 'hierarchy'
    TOPPLING = 'toppling'
    COMPLEXITY = 'complexity'

    def to_json(self):
        """Convert to JSON-serializable format."""
        return self.value


class DistributionKind(Enum):
    DISCRETE = 'discrete'
    CONTINUOUS = 'continuous'

    def to_json(self):
        """Convert to JSON-serializable format."""
        return self.value


@dataclass(frozen=True)
class LandscapeParams:
    m: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m > 0):
            raise DomainError(f"coupling m must be positive, got {self.m}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension n must be a positive integer, got {self.n}")


@dataclass(frozen=True)
class RegimeSpec:
    """
    One of the four scaling regions with its parameter.

    Attributes:
        region: Scaling region
        delta: Microscopic offset for hierarchy (m = 1 + delta N^-1/3) and toppling (m = 1 + delta N^-1/2)
        m: Macroscopic coupling for simplicity (m > 1) and complexity (0 < m < 1)
    """
    region: Region
    delta: Optional[float] = None
    m: Optional[float] = None

    def __post_init__(self):
        region = Region(self.region)
        object.__setattr__(self, 'region', region)
        if region in (Region.HIERARCHY, Region.TOPPLING):
            if self.delta is None or not math.isfinite(self.delta):
                raise DomainError(f"{region.value} region needs a finite delta")
            if region is Region.HIERARCHY and self.delta <= 0:
                raise DomainError(f"hierarchy region needs delta > 0, got {self.delta}")
        elif region is Region.SIMPLICITY:
            if self.m is None or not self.m > 1:
                raise DomainError(f"simplicity region needs m > 1, got {self.m}")
        elif region is Region.COMPLEXITY:
            if self.m is None or not 0 < self.m < 1:
                raise DomainError(f"complexity region needs 0 < m < 1, got {self.m}")

    @property
    def scale_exponent(self) -> Fraction:
        return {Region.SIMPLICITY: Fraction(0), Region.HIERARCHY: Fraction(0),
                Region.TOPPLING: Fraction(1, 4), Region.COMPLEXITY: Fraction(1)}[self.region]

    def coupling(self, n: int) -> float:
        """Coupling m at dimension n."""
        if self.region is Region.HIERARCHY:
            return 1.0 + self.delta / n ** (1.0 / 3.0)
        if self.region is Region.TOPPLING:
            return 1.0 + self.delta / math.sqrt(n)
        return self.m

    @property
    def tag(self) -> str:
        value = f"delta={self.delta}" if self.delta is not None else f"m={self.m}"
        return f"{self.region.value}({value})"

    def to_json(self) -> Dict[str, Any]:
        return {'region': self.region.value, 'delta': self.delta, 'm': self.m}


@dataclass(frozen=True)
class IndexDistribution:
    """
    Distribution of the (rescaled) instability index.

    For discrete kinds prob holds p_k on integer support; for continuous
    kinds prob holds density values on the kappa grid. Dirac atoms are kept
    as (location, mass) pairs and never discretized. cdf, when present, is
    the cumulative distribution on the same support.
    """
    kind: DistributionKind
    scale_exponent: Fraction
    support: np.ndarray
    prob: np.ndarray
    normalized: bool
    stderr: Optional[np.ndarray] = None
    cdf: Optional[np.ndarray] = None
    atoms: List[Tuple[float, float]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.support) != len(self.prob):
            raise DomainError("support and prob must have the same length")
        if np.any(np.asarray(self.prob) < 0):
            raise DomainError("probabilities must be non-negative")

    def total(self) -> float:
        """Sum of p_k, or integral of the density plus atom masses."""
        atoms = sum(mass for _, mass in self.atoms)
        if self.kind is DistributionKind.DISCRETE:
            return float(np.sum(self.prob)) + atoms
        return float(np.trapz(self.prob, self.support)) + atoms

    def argmax(self) -> float:
        if self.atoms:
            return max(self.atoms, key=lambda a: a[1])[0]
        return float(self.support[int(np.argmax(self.prob))])

    def rows(self) -> List[Tuple[float, float, float]]:
        """(index_or_kappa, prob_or_density, stderr) per support point."""
        errors = self.stderr if self.stderr is not None else np.zeros(len(self.prob))
        return list(zip(np.asarray(self.support, dtype=float).tolist(),
                        np.asarray(self.prob, dtype=float).tolist(),
                        np.asarray(errors, dtype=float).tolist()))

    def to_json(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'scale_exponent': str(self.scale_exponent),
            'normalized': self.normalized,
            'atoms': [{'atom_location': loc, 'mass': mass} for loc, mass in self.atoms],
            'metadata': self.metadata,
            'points': [{'index_or_kappa': x, 'prob_or_density': p, 'stderr': s} for x, p, s in self.rows()],
            'cdf': None if self.cdf is None else np.asarray(self.cdf).tolist(),
        }


@dataclass(frozen=True)
class CountEstimate:
    """Mean count held as a logarithm with its relative standard error."""
    log_value: float
    rel_stderr: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def stderr(self) -> float:
        return self.value * self.rel_stderr


# ---------------------------------------------------------------------------
# Exact finite-N counts
# ---------------------------------------------------------------------------

def f_exponent(s, m):
    """(s - m/sqrt2)^2 - s^2/2."""
    return (s - m / math.sqrt(2.0)) ** 2 - s ** 2 / 2.0


def log_c_n(n: int) -> float:
    """log of sqrt(2/pi) (2/N)^{N/2} Gamma((N+1)/2)."""
    return 0.5 * math.log(2.0 / math.pi) + 0.5 * n * math.log(2.0 / n) + float(gammaln((n + 1) / 2.0))


def _check_source(source, n: int):
    if source.n_matrix != n + 1:
        raise DomainError(f"density source describes GOE_{source.n_matrix}, counts at n={n} need GOE_{n + 1}")


def _check_index(k: int, n: int):
    if int(k) != k or not 0 <= k <= n:
        raise DomainError(f"index k must lie in [0, {n}], got {k}")


def exact_integrals(params: LandscapeParams, source) -> Tuple[float, SourceIntegrals]:
    """Log prefactor and weight integrals for every index at once."""
    _check_source(source, params.n)
    n, m = params.n, params.m
    center = math.sqrt(2.0 * n) * m
    log_prefactor = log_c_n(n) - n * math.log(m) + 0.5 * n * m ** 2
    integrals = source.integrate_all(lambda lam: -0.5 * (lam - center) ** 2)
    return log_prefactor, integrals


def mean_nk_exact(params: LandscapeParams, k: int, source) -> CountEstimate:
    """
    Exact mean number of stationary points of index k.

    Args:
        params: Coupling m and dimension n
        k: Instability index in [0, n]
        source: Density source for GOE_{n+1} order statistics

    Returns:
        CountEstimate with propagated Monte Carlo error
    """
    _check_index(k, params.n)
    log_prefactor, integrals = exact_integrals(params, source)
    return CountEstimate(log_prefactor + integrals.log_values[k], float(integrals.rel_stderr[k]),
                         metadata={**integrals.metadata, 'k': int(k)})


def mean_cumulative_exact(params: LandscapeParams, k: int, source) -> CountEstimate:
    """Exact mean number of stationary points with index at most k."""
    _check_index(k, params.n)
    log_prefactor, integrals = exact_integrals(params, source)
    return CountEstimate(log_prefactor + integrals.log_cumulative[k], float(integrals.rel_stderr_cumulative[k]),
                         metadata={**integrals.metadata, 'k': int(k)})


def mean_neq_exact(params: LandscapeParams, source) -> CountEstimate:
    """Exact mean total number of stationary points."""
    log_prefactor, integrals = exact_integrals(params, source)
    return CountEstimate(log_prefactor + integrals.log_total, integrals.rel_stderr_total,
                         metadata=integrals.metadata)


def distribution_from_integrals(log_prefactor: float, integrals: SourceIntegrals,
                                metadata: Dict[str, Any]) -> IndexDistribution:
    """Discrete p_k = <N_k>/<N_eq> with the cumulative P_k attached."""
    probs = np.exp(integrals.log_values - integrals.log_total)
    probs = np.where(np.isfinite(probs), probs, 0.0)
    stderr = probs * integrals.rel_stderr
    return IndexDistribution(
        kind=DistributionKind.DISCRETE, scale_exponent=Fraction(0),
        support=np.arange(len(probs)), prob=probs, stderr=stderr, normalized=True,
        cdf=integrals.fractions,
        metadata={**metadata, **integrals.metadata,
                  'log_neq': log_prefactor + integrals.log_total,
                  'neq_rel_stderr': integrals.rel_stderr_total,
                  'cdf_stderr': integrals.fraction_stderr.tolist()})


def exact_index_distribution(params: LandscapeParams, source) -> IndexDistribution:
    """Finite-N annealed index distribution from the exact counts."""
    log_prefactor, integrals = exact_integrals(params, source)
    return distribution_from_integrals(log_prefactor, integrals,
                                       {'model': 'landscape', 'm': params.m, 'n': params.n})


# ---------------------------------------------------------------------------
# Closed forms of the four regions
# ---------------------------------------------------------------------------

def _check_complexity_m(m: float):
    if not (math.isfinite(m) and 0 < m < 1):
        raise DomainError(f"m must lie in (0, 1), got {m}")


def sigma_eq(m: float) -> float:
    """Complexity exponent of all stationary points, (m^2 - 1)/2 - ln m."""
    _check_complexity_m(m)
    return (m ** 2 - 1.0) / 2.0 - math.log(m)


def sigma_0(m: float) -> float:
    """Complexity exponent of minima."""
    return sigma_eq(m) - (1.0 - m) ** 2


def pk_simplicity(k: int) -> float:
    if int(k) != k or k < 0:
        raise DomainError(f"index k must be a non-negative integer, got {k}")
    return 1.0 if k == 0 else 0.0


def neq_simplicity() -> float:
    return 1.0


def log_edge_laplace(delta: float) -> float:
    """
    log of the integral of e^{delta l} rho_edge(l) over the real line.

    Below l = -40 the bulk form sqrt(-l)/pi is integrated in closed form.
    """
    if not (math.isfinite(delta) and delta > 0):
        raise DomainError(f"edge Laplace transform needs delta > 0, got {delta}")
    # e^{delta l} Ai(l) peaks at l = delta^2 with width sqrt(2 delta)
    upper = max(10.0, delta ** 2 + 8.0 * math.sqrt(2.0 * delta) + 4.0)

    def log_f(lam):
        with np.errstate(divide='ignore'):
            return delta * lam + np.log(rho_edge(lam))

    body = log_integrate(log_f, EDGE_BULK_SWITCH, upper, rtol=1e-11, panels=16)
    a = -EDGE_BULK_SWITCH
    tail = (math.log(gammaincc(1.5, a * delta)) + float(gammaln(1.5))
            - 1.5 * math.log(delta) - math.log(math.pi))
    return float(np.logaddexp(body, tail))


def edge_laplace(delta: float) -> float:
    return math.exp(log_edge_laplace(delta))


def neq_hierarchy(delta: float) -> float:
    """2 e^{-delta^3/3} times the edge Laplace transform."""
    return 2.0 * math.exp(-delta ** 3 / 3.0 + log_edge_laplace(delta))


def edge_moment(delta: float, density: EmpiricalDensity) -> Tuple[float, float]:
    """
    Estimate of the integral of e^{delta sigma} dF_k(sigma) from an edge histogram.

    Bin averages of e^{delta sigma} are exact; the error is the
    single-order-statistic multinomial error.
    """
    if not density.transform.label.startswith('edge'):
        raise DomainError("edge moments need an edge-rescaled histogram")
    a, b = density.bin_edges[:-1], density.bin_edges[1:]
    width = b - a
    wbar = (np.exp(delta * b) - np.exp(delta * a)) / (delta * width)
    s = density.n_samples
    mean = float(np.sum(density.counts * wbar)) / s
    second = float(np.sum(density.counts * wbar ** 2)) / s
    stderr = math.sqrt(max(second - mean ** 2, 0.0) / max(s - 1, 1))
    hi = density.bin_edges[-1]
    if density.n_above and (density.n_above / s) * math.exp(delta * hi) > DROPPED_MASS_RTOL * mean:
        raise CoverageError(f"{density.n_above} samples above sigma={hi} carry non-negligible weight",
                            interval=(float(density.bin_edges[0]), float(hi)))
    if mean <= 0:
        raise CoverageError("edge histogram is empty", interval=(float(density.bin_edges[0]), float(hi)))
    return mean, stderr


def pk_hierarchy(delta: float, k: int, edge_densities: Dict[int, EmpiricalDensity]) -> Tuple[float, float]:
    """
    Hierarchy-region probability p_k with its standard error.

    Args:
        delta: Offset delta > 0 in m = 1 + delta N^-1/3
        k: Index
        edge_densities: Edge-rescaled histograms keyed by order index

    Returns:
        Tuple (p_k, stderr)
    """
    if not (math.isfinite(delta) and delta > 0):
        raise DomainError(f"hierarchy needs delta > 0, got {delta}")
    if k not in edge_densities:
        raise CoverageError(f"no edge histogram for order index {k}")
    numerator, stderr = edge_moment(delta, edge_densities[k])
    denominator = edge_laplace(delta)
    return numerator / denominator, stderr / denominator


def hierarchy_distribution(delta: float, edge_densities: Dict[int, EmpiricalDensity]) -> IndexDistribution:
    ks = sorted(edge_densities)
    values = [pk_hierarchy(delta, k, edge_densities) for k in ks]
    prob = np.array([v[0] for v in values])
    first = edge_densities[ks[0]]
    return IndexDistribution(
        kind=DistributionKind.DISCRETE, scale_exponent=Fraction(0), support=np.array(ks),
        prob=prob, stderr=np.array([v[1] for v in values]), normalized=False,
        cdf=np.cumsum(prob),
        metadata={'neq': neq_hierarchy(delta), 'partial_sum': float(prob.sum()),
                  'edge_n': first.metadata.get('n'), 'n_samples': first.n_samples,
                  'seed': first.metadata.get('seed')})


def _check_kappa(kappa):
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0) or not np.all(np.isfinite(kappa)):
        raise DomainError("rescaled index must be finite and non-negative")
    return kappa


def _toppling_log_norm(delta: float) -> float:
    # x = u^3 removes the cusp of x^(2/3) at the origin
    center = math.sqrt(max(0.0, -delta) / TOPPLING_C)
    upper = math.sqrt((max(0.0, -delta) + 9.0) / TOPPLING_C) + 1.0

    def log_f(u):
        with np.errstate(divide='ignore'):
            return math.log(3.0) + 2.0 * np.log(u) - (delta + TOPPLING_C * u ** 2) ** 2

    left = log_integrate(log_f, 0.0, center, rtol=1e-13) if center > 0 else -np.inf
    right = log_integrate(log_f, center, upper, rtol=1e-13, panels=8)
    return float(np.logaddexp(left, right))


def toppling_density(delta: float, x):
    """Normalized density of kappa = k/N^(1/4) in the toppling region."""
    x = _check_kappa(x)
    value = np.exp(-(delta + TOPPLING_C * x ** (2.0 / 3.0)) ** 2 - _toppling_log_norm(delta))
    return float(value) if value.ndim == 0 else value


def _sqrt_gauss_parts(drift: float):
    # s = v^2 turns sqrt(s) ds into 2 v^2 dv; the integrand is scaled by e^{-peak^2/2}
    if not math.isfinite(drift):
        raise DomainError(f"drift must be finite, got {drift}")
    peak = max(0.0, -drift)
    shift = peak ** 2 / 2.0

    def f(v):
        s = v ** 2
        return 2.0 * s * np.exp(-s ** 2 / 2.0 - drift * s - shift)

    v_end = math.sqrt(2.0 * peak + 16.0)
    v_peak = math.sqrt(peak)
    total = integrate(f, 0.0, v_peak, rtol=1e-13) + integrate(f, v_peak, v_end, rtol=1e-13)
    return f, v_peak, v_end, shift, total


def sqrt_gauss_log_norm(drift: float) -> float:
    """log of int_0^inf sqrt(s) e^{-s^2/2 - drift s} ds."""
    _, _, _, shift, total = _sqrt_gauss_parts(drift)
    return math.log(total) + shift


def sqrt_gauss_cdf(drift: float, upper) -> np.ndarray:
    """
    int_0^U sqrt(s) e^{-s^2/2 - drift s} ds divided by the same integral to infinity.

    Uses s = v^2; U may be an array.
    """
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    f, v_peak, v_end, _, total = _sqrt_gauss_parts(drift)
    out = np.empty_like(upper)
    for i, u in enumerate(upper):
        v = math.sqrt(min(u, v_end ** 2))
        if v <= v_peak:
            part = integrate(f, 0.0, v, rtol=1e-13)
        else:
            part = total - integrate(f, v, v_end, rtol=1e-13)
        out[i] = min(max(part / total, 0.0), 1.0)
    return out


def sqrt_gauss_grid_upper(drift: float, scale: float) -> float:
    """kappa beyond which the law with upper limit scale * kappa^(2/3) holds under e^-36 of its mass."""
    return max(2.0, ((max(0.0, -drift) + math.sqrt(72.0)) / scale) ** 1.5)


def toppling_cdf(delta: float, kappa):
    """P(kappa) in the toppling region: drift sqrt2 delta, upper limit c2 kappa^(2/3)."""
    kappa = _check_kappa(kappa)
    values = sqrt_gauss_cdf(math.sqrt(2.0) * delta, TOPPLING_C2 * np.atleast_1d(kappa) ** (2.0 / 3.0))
    return float(values[0]) if kappa.ndim == 0 else values.reshape(kappa.shape)


def kappa_max_toppling(delta: float) -> float:
    """(4 sqrt2/(3 pi)) (-delta)^(3/2) for delta < 0, else 0."""
    return 0.0 if delta >= 0 else (-delta / TOPPLING_C) ** 1.5


def neq_toppling(delta: float, n: int) -> float:
    """2 N^(1/4) e^{delta^2} int_0^inf e^{-(delta + c x^(2/3))^2} dx."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return 2.0 * n ** 0.25 * math.exp(delta ** 2 + _toppling_log_norm(delta))


def kappa_max_complexity(m: float) -> float:
    """(1/pi)(arccos m - m sqrt(1 - m^2))."""
    _check_complexity_m(m)
    return (math.acos(m) - m * math.sqrt(1.0 - m * m)) / math.pi


def complexity_cdf(m: float, kappa):
    """Step function at the atom t(m)."""
    _check_complexity_m(m)
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0) or np.any(kappa > 1):
        raise DomainError("kappa must lie in [0, 1]")
    atom = semicircle_cdf(m)
    values = np.where(kappa >= atom, 1.0, 0.0)
    return float(values) if values.ndim == 0 else values


def neq_complexity(m: float, n: int) -> float:
    """log <N_eq> = N Sigma_eq(m) + log(4 sqrt(N/pi) sqrt(1 - m^2))."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return n * sigma_eq(m) + math.log(4.0 * math.sqrt(n / math.pi) * math.sqrt(1.0 - m * m))


def regime_distribution(regime: RegimeSpec, n: Optional[int] = None,
                        edge_densities: Optional[Dict[int, EmpiricalDensity]] = None,
                        grid_points: int = 2001) -> IndexDistribution:
    """
    Closed-form index distribution of a scaling region.

    Args:
        regime: Region and parameter
        n: Dimension, used for the total count where the region needs it
        edge_densities: Edge histograms (hierarchy region only)
        grid_points: Points of the kappa grid for continuous kinds

    Returns:
        IndexDistribution with the region tag in its metadata
    """
    meta = {'model': 'landscape', 'regime': regime.tag, **regime.to_json()}
    if regime.region is Region.SIMPLICITY:
        return IndexDistribution(kind=DistributionKind.DISCRETE, scale_exponent=Fraction(0),
                                 support=np.array([0]), prob=np.array([1.0]), normalized=True,
                                 cdf=np.array([1.0]), metadata={**meta, 'neq': neq_simplicity()})
    if regime.region is Region.HIERARCHY:
        if not edge_densities:
            raise DomainError("hierarchy region needs Monte Carlo edge densities")
        dist = hierarchy_distribution(regime.delta, edge_densities)
        return replace(dist, metadata={**meta, **dist.metadata})
    if regime.region is Region.TOPPLING:
        hi = sqrt_gauss_grid_upper(math.sqrt(2.0) * regime.delta, TOPPLING_C2)
        kappa = np.linspace(0.0, hi, grid_points)
        meta['kappa_max'] = kappa_max_toppling(regime.delta)
        if n is not None:
            meta['neq'] = neq_toppling(regime.delta, n)
        return IndexDistribution(kind=DistributionKind.CONTINUOUS, scale_exponent=Fraction(1, 4),
                                 support=kappa, prob=toppling_density(regime.delta, kappa),
                                 normalized=True, cdf=toppling_cdf(regime.delta, kappa), metadata=meta)
    atom = kappa_max_complexity(regime.m)
    kappa = np.linspace(0.0, 1.0, grid_points)
    meta['kappa_max'] = atom
    meta['sigma_eq'] = sigma_eq(regime.m)
    if n is not None:
        meta['log_neq'] = neq_complexity(regime.m, n)
    return IndexDistribution(kind=DistributionKind.CONTINUOUS, scale_exponent=Fraction(1),
                             support=kappa, prob=np.zeros_like(kappa), normalized=True,
                             cdf=complexity_cdf(regime.m, kappa), atoms=[(atom, 1.0)], metadata=meta)
