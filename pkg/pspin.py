"""
Spherical p-spin model with an external field.

The couplings J, the field strength sigma and the interaction order p enter
the counting only through

    B = (J^2 (p - 2) - sigma^2) / (J^2 p + sigma^2),

and the index distribution is symmetric under k -> n - k. Throughout, n is
the index range of the stationary points (the GOE dimension is n + 1).
"""

# Standard library imports
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple

# Third-party imports
import numpy as np

# Local imports
from errors import CoverageError, DomainError
from goe import EmpiricalDensity, SourceIntegrals
from landscape import (CountEstimate, DistributionKind, IndexDistribution, distribution_from_integrals,
                       neq_hierarchy, pk_hierarchy)
from quadrature import integrate
from special_fns import semicircle_quantile

logger = logging.getLogger(__name__)


def b_param(J: float, sigma: float, p: int) -> float:
    """B = (J^2 (p-2) - sigma^2)/(J^2 p + sigma^2), in (-1, (p-2)/p]."""
    if not (math.isfinite(J) and J > 0):
        raise DomainError(f"J must be positive, got {J}")
    if not (math.isfinite(sigma) and sigma >= 0):
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    if int(p) != p or p < 2:
        raise DomainError(f"p must be an integer >= 2, got {p}")
    return (J ** 2 * (p - 2) - sigma ** 2) / (J ** 2 * p + sigma ** 2)


@dataclass(frozen=True)
class PSpinParams:
    J: float
    sigma: float
    p: int
    n: int

    def __post_init__(self):
        b_param(self.J, self.sigma, self.p)
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension n must be a positive integer, got {self.n}")

    @property
    def B(self) -> float:
        return b_param(self.J, self.sigma, self.p)

    def to_json(self) -> Dict[str, Any]:
        return {'J': self.J, 'sigma': self.sigma, 'p': self.p, 'n': self.n, 'B': self.B}


class PSpinRegion(Enum):
    """Scaling regions of B, in the order of decreasing field strength."""
    A = 'a'
    B = 'b'
    C = 'c'
    D = 'd'

    def to_json(self):
        return self.value


@dataclass(frozen=True)
class PSpinRegime:
    """
    A p-spin scaling region with its parameter.

    Region a takes B in (-1, 0), region d takes B in (0, 1); regions b and c
    take beta with B = -beta n^{-1/3} (beta > 0) and B = -beta/n respectively.
    """
    region: PSpinRegion
    beta: Optional[float] = None
    b: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'region', PSpinRegion(self.region))
        if self.region in (PSpinRegion.A, PSpinRegion.D):
            if self.b is None or not math.isfinite(self.b):
                raise DomainError(f"region {self.region.value} needs B")
            if self.region is PSpinRegion.A and not -1 < self.b < 0:
                raise DomainError(f"region a needs -1 < B < 0, got {self.b}")
            if self.region is PSpinRegion.D and not 0 < self.b < 1:
                raise DomainError(f"region d needs 0 < B < 1, got {self.b}")
        else:
            if self.beta is None or not math.isfinite(self.beta):
                raise DomainError(f"region {self.region.value} needs beta")
            if self.region is PSpinRegion.B and self.beta <= 0:
                raise DomainError(f"region b needs beta > 0, got {self.beta}")

    @property
    def scale_exponent(self) -> Fraction:
        return Fraction(1) if self.region in (PSpinRegion.C, PSpinRegion.D) else Fraction(0)

    def coupling(self, n: int) -> float:
        """B at dimension n."""
        if self.region is PSpinRegion.B:
            return -self.beta * n ** (-1.0 / 3.0)
        if self.region is PSpinRegion.C:
            return -self.beta / n
        return self.b

    @property
    def tag(self) -> str:
        if self.region in (PSpinRegion.A, PSpinRegion.D):
            return f"pspin-{self.region.value}(B={self.b})"
        return f"pspin-{self.region.value}(beta={self.beta})"

    def to_json(self) -> Dict[str, Any]:
        return {'region': self.region.value, 'beta': self.beta, 'B': self.b}


# ---------------------------------------------------------------------------
# Exact finite-N counts
# ---------------------------------------------------------------------------

def _check_b(b: float):
    if not (math.isfinite(b) and -1 < b < 1):
        raise DomainError(f"B must lie in (-1, 1), got {b}")


def log_c_prime(b: float, n: int) -> float:
    """log c'_N = log(2 sqrt(N) ((1+B)/(1-B))^{(N+1)/2} sqrt(1-B))."""
    _check_b(b)
    return (math.log(2.0) + 0.5 * math.log(n) + 0.5 * (n + 1) * math.log((1.0 + b) / (1.0 - b))
            + 0.5 * math.log(1.0 - b))


def pspin_integrals(b: float, n: int, source) -> Tuple[float, SourceIntegrals]:
    """Log prefactor c'_N/sqrt(N) and the integrals of e^{-B l^2/2} against GOE_{n+1} order statistics."""
    _check_b(b)
    if source.n_matrix != n + 1:
        raise DomainError(f"density source describes GOE_{source.n_matrix}, counts at n={n} need GOE_{n + 1}")

    def log_weight(lam):
        return -0.5 * b * np.asarray(lam, dtype=float) ** 2

    return log_c_prime(b, n) - 0.5 * math.log(n), source.integrate_all(log_weight)


def _check_index(k: int, n: int):
    if int(k) != k or not 0 <= k <= n:
        raise DomainError(f"index k must lie in [0, {n}], got {k}")


def mean_nk_pspin(b: float, n: int, k: int, source) -> CountEstimate:
    """
    Exact mean number of stationary points of index k.

    Args:
        b: Reduced parameter B in (-1, 1)
        n: Index range
        k: Index in [0, n]
        source: Density source for GOE_{n+1}

    Returns:
        CountEstimate of <N_k>
    """
    _check_index(k, n)
    log_prefactor, integrals = pspin_integrals(b, n, source)
    return CountEstimate(log_prefactor + integrals.log_values[k], float(integrals.rel_stderr[k]),
                         metadata={**integrals.metadata, 'model': 'pspin', 'B': b, 'n': n, 'k': int(k)})


def mean_cumulative_pspin(b: float, n: int, k: int, source) -> CountEstimate:
    _check_index(k, n)
    log_prefactor, integrals = pspin_integrals(b, n, source)
    return CountEstimate(log_prefactor + integrals.log_cumulative[k], float(integrals.rel_stderr_cumulative[k]),
                         metadata={**integrals.metadata, 'model': 'pspin', 'B': b, 'n': n, 'k': int(k)})


def mean_neq_pspin(b: float, n: int, source) -> CountEstimate:
    log_prefactor, integrals = pspin_integrals(b, n, source)
    return CountEstimate(log_prefactor + integrals.log_total, float(integrals.rel_stderr_total),
                         metadata={**integrals.metadata, 'model': 'pspin', 'B': b, 'n': n})


def exact_index_distribution_pspin(b: float, n: int, source,
                                   params: Optional[PSpinParams] = None) -> IndexDistribution:
    log_prefactor, integrals = pspin_integrals(b, n, source)
    meta = {'model': 'pspin', 'B': b, 'n': n}
    if params is not None:
        meta.update(params.to_json())
    return distribution_from_integrals(log_prefactor, integrals, meta)


# ---------------------------------------------------------------------------
# Region a: -1 < B < 0 fixed
# ---------------------------------------------------------------------------

def pk_region_a_pspin(k: int, n: int) -> float:
    """Half of the mass on the minima, half on the maxima."""
    _check_index(k, n)
    return 0.5 if k in (0, n) else 0.0


def neq_region_a_pspin() -> float:
    return 2.0


# ---------------------------------------------------------------------------
# Region b: B = -beta n^{-1/3}
# ---------------------------------------------------------------------------

def pk_region_b_pspin(beta: float, k: int, n: int,
                      edge_densities: Dict[int, EmpiricalDensity]) -> Tuple[float, float]:
    """
    Mirrored hierarchy: p_k = p_{n-k} = (1/2) h_k(beta).

    The maxima side reuses the top-edge histograms through the symmetry of
    the GOE spectrum, so both ends come from the same samples.
    """
    _check_index(k, n)
    if 2 * k == n:
        raise DomainError(f"n={n} is too small: index {k} would belong to both the minima and "
                          f"the maxima hierarchy")
    j = min(k, n - k)
    if j not in edge_densities:
        raise CoverageError(f"no edge histogram for order index {j}")
    p, se = pk_hierarchy(beta, j, edge_densities)
    return 0.5 * p, 0.5 * se


def neq_region_b_pspin(beta: float) -> float:
    """4 e^{-beta^3/3} int e^{beta l} rho_edge(l) dl."""
    return 2.0 * neq_hierarchy(beta)


# ---------------------------------------------------------------------------
# Region c: B = -beta/n
# ---------------------------------------------------------------------------

def _theta_integrand(beta: float):
    # l = sin(theta): rho_sc(l) dl = (2/pi) cos^2(theta) dtheta
    def f(theta):
        return np.exp(beta * np.sin(theta) ** 2) * (2.0 / math.pi) * np.cos(theta) ** 2
    return f


def region_c_normalization(beta: float) -> float:
    """int e^{beta l^2} rho_sc(l) dl over [-1, 1]."""
    if not math.isfinite(beta):
        raise DomainError(f"beta must be finite, got {beta}")
    return integrate(_theta_integrand(beta), -math.pi / 2.0, math.pi / 2.0, rtol=1e-13)


def _check_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1) or not np.all(np.isfinite(x)):
        raise DomainError("kappa must lie in [0, 1]")
    return x


def density_region_c_pspin(beta: float, x):
    """p(x) = e^{beta Q_x^2}/Z, Q_x the semicircle quantile, symmetric about x = 1/2."""
    x = _check_unit(x)
    q = semicircle_quantile(np.minimum(x, 1.0 - x))
    value = np.exp(beta * np.asarray(q) ** 2) / region_c_normalization(beta)
    return float(value) if np.ndim(value) == 0 else value


def cdf_region_c_pspin(beta: float, kappa):
    """P(kappa) = int_{asin Q_kappa}^{pi/2} e^{beta sin^2} (2/pi) cos^2 dtheta / Z."""
    kappa = _check_unit(kappa)
    norm = region_c_normalization(beta)
    f = _theta_integrand(beta)
    flat = np.atleast_1d(kappa)
    q = np.atleast_1d(semicircle_quantile(flat))
    out = np.array([integrate(f, math.asin(min(max(v, -1.0), 1.0)), math.pi / 2.0, rtol=1e-12) / norm
                    for v in q])
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if kappa.ndim == 0 else out.reshape(kappa.shape)


def neq_region_c_pspin(beta: float, n: int) -> float:
    """2 N e^{-beta} int e^{beta l^2} rho_sc(l) dl."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return 2.0 * n * math.exp(-beta) * region_c_normalization(beta)


# ---------------------------------------------------------------------------
# Region d: 0 < B fixed
# ---------------------------------------------------------------------------

def cdf_region_d_pspin(b: float, kappa):
    """Step at kappa = 1/2."""
    if not (math.isfinite(b) and 0 < b < 1):
        raise DomainError(f"region d needs 0 < B < 1, got {b}")
    kappa = _check_unit(kappa)
    values = np.where(kappa >= 0.5, 1.0, 0.0)
    return float(values) if values.ndim == 0 else values


def neq_region_d_pspin(b: float, n: int) -> float:
    """log <N_eq> = (N/2) log((1+B)/(1-B)) + log(4 sqrt(N) sqrt((1+B)/(pi B)))."""
    if not (math.isfinite(b) and 0 < b < 1):
        raise DomainError(f"region d needs 0 < B < 1, got {b}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return (0.5 * n * math.log((1.0 + b) / (1.0 - b))
            + math.log(4.0 * math.sqrt(n) * math.sqrt((1.0 + b) / (math.pi * b))))


def regime_distribution_pspin(regime: PSpinRegime, n: Optional[int] = None,
                              edge_densities: Optional[Dict[int, EmpiricalDensity]] = None,
                              grid_points: int = 2001) -> IndexDistribution:
    """
    Closed-form index distribution of a p-spin region.

    Region b needs n (to place the mirrored end) and edge densities.
    """
    meta: Dict[str, Any] = {'model': 'pspin', 'regime': regime.tag, **regime.to_json()}
    if regime.region is PSpinRegion.A:
        if n is None:
            raise DomainError("region a needs n to place the maxima")
        return IndexDistribution(kind=DistributionKind.DISCRETE, scale_exponent=Fraction(0),
                                 support=np.array([0, n]), prob=np.array([0.5, 0.5]), normalized=True,
                                 cdf=np.array([0.5, 1.0]), metadata={**meta, 'neq': neq_region_a_pspin()})
    if regime.region is PSpinRegion.B:
        if n is None or not edge_densities:
            raise DomainError("region b needs n and Monte Carlo edge densities")
        depth = max(edge_densities) + 1
        if n < 2 * depth:
            raise DomainError(f"region b needs n >= {2 * depth} to keep {depth} orders at each edge apart, "
                              f"got n={n}")
        ks = sorted(set(range(depth)) | set(range(max(0, n - depth + 1), n + 1)))
        values = [pk_region_b_pspin(regime.beta, k, n, edge_densities) for k in ks]
        prob = np.array([v[0] for v in values])
        first = edge_densities[min(edge_densities)]
        return IndexDistribution(kind=DistributionKind.DISCRETE, scale_exponent=Fraction(0),
                                 support=np.array(ks), prob=prob, stderr=np.array([v[1] for v in values]),
                                 normalized=False, cdf=np.cumsum(prob),
                                 metadata={**meta, 'neq': neq_region_b_pspin(regime.beta),
                                           'partial_sum': float(prob.sum()), 'n': n,
                                           'n_samples': first.n_samples, 'seed': first.metadata.get('seed')})
    kappa = np.linspace(0.0, 1.0, grid_points)
    if regime.region is PSpinRegion.C:
        if n is not None:
            meta['neq'] = neq_region_c_pspin(regime.beta, n)
        return IndexDistribution(kind=DistributionKind.CONTINUOUS, scale_exponent=Fraction(1),
                                 support=kappa, prob=density_region_c_pspin(regime.beta, kappa),
                                 normalized=True, cdf=cdf_region_c_pspin(regime.beta, kappa), metadata=meta)
    if n is not None:
        meta['log_neq'] = neq_region_d_pspin(regime.b, n)
    meta['kappa_max'] = 0.5
    return IndexDistribution(kind=DistributionKind.CONTINUOUS, scale_exponent=Fraction(1),
                             support=kappa, prob=np.zeros_like(kappa), normalized=True,
                             cdf=cdf_region_d_pspin(regime.b, kappa), atoms=[(0.5, 1.0)], metadata=meta)
