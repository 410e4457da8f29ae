"""
Fixed-energy random landscape.

Stationary points are counted at a prescribed energy level eps0. Besides
the coupling m the model carries the correlation-shape parameter q > 1.
The complexity exponent has two branches separated by the line m = m_c(eps0):
inside the bulk (saddle s_sp < sqrt2) and beyond it, where the large-deviation
cost of pulling an eigenvalue out of the spectrum is added.
"""

# Standard library imports
import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

# Local imports
from errors import BranchError, DomainError, FractionalProbabilityWarning, RootBracketError
from goe import SourceIntegrals
from landscape import (TOPPLING_C, TOPPLING_C2, CountEstimate, DistributionKind, IndexDistribution,
                       Region, distribution_from_integrals, log_c_n, sqrt_gauss_cdf, sqrt_gauss_grid_upper,
                       sqrt_gauss_log_norm)
from quadrature import gauss_legendre_nodes
from special_fns import semicircle_cdf

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
ROOT_XTOL = 1e-14
MAX_BRACKET_DOUBLINGS = 60
GEOMETRIC_CHUNK = 4096


def _check_q(q: float):
    if not (math.isfinite(q) and q > 1):
        raise DomainError(f"q must exceed 1, got {q}")


def _check_m(m: float):
    if not (math.isfinite(m) and m > 0):
        raise DomainError(f"m must be positive, got {m}")


@dataclass(frozen=True)
class ConstrainedParams:
    m: float
    eps0: float
    q: float
    n: int

    def __post_init__(self):
        _check_m(self.m)
        _check_q(self.q)
        if not math.isfinite(self.eps0):
            raise DomainError(f"eps0 must be finite, got {self.eps0}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension n must be a positive integer, got {self.n}")

    def to_json(self) -> Dict[str, Any]:
        return {'m': self.m, 'eps0': self.eps0, 'q': self.q, 'n': self.n}


@dataclass(frozen=True)
class PhaseDiagram:
    """
    Zero-complexity curves of the fixed-energy model.

    Attributes:
        q: Correlation-shape parameter
        m: Grid of couplings in (0, 1]
        eps_minus: Lower curve eps_-(m)
        eps_plus: Upper curve eps_+(m)
        line_level: eps0 = -1/(2q), the zero line for m >= 1
        critical_point: (1, -1/(2q))
        threshold: Threshold energy -(1 + 2q^2)/(2q)
        toppling_slope: Slope q of the toppling boundary eps = q delta
        cone_slopes: Slopes of the two cone lines in the (delta, eps) plane
        lower_endpoint: Coupling where eps_- meets the line m = m_c
    """
    q: float
    m: np.ndarray
    eps_minus: np.ndarray
    eps_plus: np.ndarray
    line_level: float
    critical_point: Tuple[float, float]
    threshold: float
    toppling_slope: float
    cone_slopes: Tuple[float, float]
    lower_endpoint: float
    metadata: Dict[str, Any] = field(default_factory=dict)

    def rows(self) -> List[Tuple[float, float, float]]:
        """(m, eps_minus, eps_plus) per grid point."""
        return list(zip(self.m.tolist(), self.eps_minus.tolist(), self.eps_plus.tolist()))

    def to_json(self) -> Dict[str, Any]:
        return {
            'q': self.q,
            'critical_point': list(self.critical_point),
            'threshold': self.threshold,
            'line_level': self.line_level,
            'toppling_boundary': {'slope': self.toppling_slope},
            'cone_slopes': list(self.cone_slopes),
            'lower_endpoint': self.lower_endpoint,
            'metadata': self.metadata,
            'curves': [{'m': m, 'eps_minus': lo, 'eps_plus': hi} for m, lo, hi in self.rows()],
        }


# ---------------------------------------------------------------------------
# Critical coupling and saddle points
# ---------------------------------------------------------------------------

def m_c(eps0: float, q: float) -> float:
    """1 + (1 + 2 q eps0)/(2 q^2)."""
    _check_q(q)
    return 1.0 + (1.0 + 2.0 * q * eps0) / (2.0 * q ** 2)


def eps_threshold(q: float) -> float:
    """-(1 + 2q^2)/(2q), where m_c reaches zero."""
    _check_q(q)
    return -(1.0 + 2.0 * q ** 2) / (2.0 * q)


def eps_critical(m: float, q: float) -> float:
    """Energy level whose critical coupling equals m."""
    _check_q(q)
    return (2.0 * q ** 2 * (m - 1.0) - 1.0) / (2.0 * q)


def eps_peak(m: float, q: float) -> float:
    """Energy level of maximal complexity at coupling m < 1."""
    _check_q(q)
    _check_m(m)
    return (0.5 / m - m) / q


def rate_outside_bulk(s: float) -> float:
    """phi(s) = s sqrt(s^2 - 2)/2 - ln((s + sqrt(s^2 - 2))/sqrt2) for s >= sqrt2."""
    if not math.isfinite(s) or s < SQRT2:
        raise DomainError(f"rate function needs s >= sqrt2, got {s}")
    r = math.sqrt(max(s * s - 2.0, 0.0))
    return 0.5 * s * r - math.log((s + r) / SQRT2)


def exponent_f_total(s, r, m: float, eps0: float, q: float):
    """F(s, R) = f(s; m) + g(R; m) + h(s, R; m, eps0)."""
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    f = (s - m / SQRT2) ** 2 - s ** 2 / 2.0
    g = m ** 2 * r ** 2 / 2.0 - np.log(r)
    h = (SQRT2 * s - m + q * eps0 - m * r ** 2 / 2.0) ** 2 / (2.0 * (q ** 2 - 1.0))
    value = f + g + h
    return float(value) if value.ndim == 0 else value


def _inside_y(m: float, eps0: float, q: float) -> Tuple[float, float]:
    # y = m R^2 = Delta - q A with A = m q - eps0, rationalized when q A > 0
    a = m * q - eps0
    delta = math.sqrt(2.0 * (1.0 + q ** 2) + q ** 2 * a ** 2)
    y = 2.0 * (1.0 + q ** 2) / (delta + q * a) if q * a > 0 else delta - q * a
    return y, delta


def saddle_points(m: float, eps0: float, q: float) -> Tuple[float, float, float]:
    """
    Saddle point of F inside the bulk.

    Returns:
        Tuple (s_sp, R_sp, Delta) with s_sp = sqrt2/y and R_sp = sqrt(y/m)
    """
    _check_m(m)
    _check_q(q)
    y, delta = _inside_y(m, eps0, q)
    return SQRT2 / y, math.sqrt(y / m), delta


def saddle_points_upper(m: float, eps0: float, q: float) -> Tuple[float, float]:
    """Saddle point of F + phi beyond the bulk edge, valid for m > m_c."""
    _check_m(m)
    _check_q(q)
    a = m * q - eps0
    if a * a < 2.0 or a < 0:
        raise BranchError(f"no saddle beyond the edge at m={m}, eps0={eps0}, q={q}")
    r = math.sqrt(a * a - 2.0)
    gap = 2.0 / (a + r)
    s = ((1.0 + 2.0 * q ** 2) * gap + 2.0 * r) / (2.0 * SQRT2 * q)
    return s, math.sqrt(q * gap / m)


def sigma_eq_lower(m: float, eps0: float, q: float) -> float:
    """Complexity exponent -F(s_sp, R_sp) of the inside-bulk branch."""
    s, r, _ = saddle_points(m, eps0, q)
    return -exponent_f_total(s, r, m, eps0, q)


def sigma_eq_upper(m: float, eps0: float, q: float) -> float:
    """Complexity exponent -F(s', R') - phi(s') of the beyond-edge branch."""
    s, r = saddle_points_upper(m, eps0, q)
    if s < SQRT2 - 1e-12:
        raise BranchError(f"saddle s'={s:.6f} lies inside the bulk; m={m} is below m_c={m_c(eps0, q):.6f}")
    s = max(s, SQRT2)
    return -exponent_f_total(s, r, m, eps0, q) - rate_outside_bulk(s)


def sigma_eq_constrained(m: float, eps0: float, q: float) -> float:
    """Complexity exponent of all stationary points at energy eps0, on the branch selected by m_c."""
    _check_m(m)
    if m <= m_c(eps0, q):
        return sigma_eq_lower(m, eps0, q)
    return sigma_eq_upper(m, eps0, q)


def critical_line_exponent(mc: float, q: float) -> float:
    """Delta_0 = -ln(m_c)/2 - (1 - m_c)(1 + q^2 (1 - m_c))/2, the exponent along m = m_c."""
    _check_q(q)
    _check_m(mc)
    return -0.5 * math.log(mc) - 0.5 * (1.0 - mc) * (1.0 + q ** 2 * (1.0 - mc))


def lower_curve_endpoint(q: float) -> float:
    """
    Coupling m_0 < 1 where the lower curve meets the line m = m_c.

    Below m_0 the exponent along m = m_c is positive and eps_- leaves the
    line, decreasing without bound as m goes to zero.
    """
    _check_q(q)
    lo, hi = -(1.0 + q ** 2) - 10.0, math.log(0.5)
    return math.exp(brentq(lambda u: critical_line_exponent(math.exp(u), q), lo, hi, xtol=1e-14))


def warn_if_fractional(m: float, eps0: float, q: float) -> bool:
    """Emit FractionalProbabilityWarning when the mean count decays exponentially in N."""
    sigma = sigma_eq_constrained(m, eps0, q)
    if sigma < -1e-12:
        message = (f"mean number of stationary points decays like exp({sigma:.4g} N) at m={m}, eps0={eps0}; "
                   f"index probabilities lose their interpretation")
        logger.warning(message)
        warnings.warn(message, FractionalProbabilityWarning, stacklevel=2)
        return True
    return False


# ---------------------------------------------------------------------------
# Phase diagram
# ---------------------------------------------------------------------------

def _bracket(fn, start: float, direction: float) -> float:
    step = 1.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        point = start + direction * step
        if fn(point) < 0:
            return point
        step *= 2.0
    raise RootBracketError(f"no sign change between {start} and {start + direction * step}",
                           interval=(min(start, start + direction * step), max(start, start + direction * step)))


def curve_points(m: float, q: float) -> Tuple[float, float]:
    """(eps_-(m), eps_+(m)) for 0 < m <= 1."""
    _check_q(q)
    if not (0 < m <= 1):
        raise DomainError(f"phase curves are defined for 0 < m <= 1, got {m}")
    peak = eps_peak(m, q)
    if (m * m - 1.0) / 2.0 - math.log(m) <= 1e-15:
        return peak, peak

    def fn(eps0):
        return sigma_eq_constrained(m, eps0, q)

    lower = _bracket(fn, peak, -1.0)
    upper = _bracket(fn, peak, 1.0)
    logger.debug(f"Phase curve brackets at m={m}: [{lower}, {peak}] and [{peak}, {upper}]")
    return brentq(fn, lower, peak, xtol=ROOT_XTOL), brentq(fn, peak, upper, xtol=ROOT_XTOL)


def cone_lines(q: float) -> Tuple[float, float]:
    """Slopes of eps = delta (-3/(2q) -+ sqrt(3 + 2q^2)/q)."""
    _check_q(q)
    root = math.sqrt(3.0 + 2.0 * q ** 2) / q
    return -1.5 / q - root, -1.5 / q + root


def phase_curves(q: float, m_grid: Sequence[float]) -> PhaseDiagram:
    """
    Sample the two zero-complexity curves on a grid of couplings.

    Args:
        q: Correlation-shape parameter (> 1)
        m_grid: Couplings in (0, 1]

    Returns:
        PhaseDiagram with both curves and the fixed geometry of the diagram
    """
    _check_q(q)
    grid = np.asarray(m_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid > 1):
        raise DomainError("m grid must be non-empty and lie in (0, 1]")
    logger.info(f"Computing phase curves for q={q} on {grid.size} couplings")
    points = [curve_points(float(m), q) for m in grid]
    lower = np.array([p[0] for p in points])
    upper = np.array([p[1] for p in points])
    residual = max(abs(sigma_eq_constrained(float(m), float(e), q))
                   for m, lo, hi in zip(grid, lower, upper) for e in (lo, hi))
    return PhaseDiagram(q=q, m=grid, eps_minus=lower, eps_plus=upper, line_level=-0.5 / q,
                        critical_point=(1.0, -0.5 / q), threshold=eps_threshold(q), toppling_slope=q,
                        cone_slopes=cone_lines(q), lower_endpoint=lower_curve_endpoint(q),
                        metadata={'max_residual': residual})


# ---------------------------------------------------------------------------
# Toppling and complexity laws
# ---------------------------------------------------------------------------

def toppling_parameters(delta: float, eps: float, q: float) -> Tuple[float, float]:
    """
    Drift and scale of the constrained toppling law.

    Returns:
        Tuple (Delta, C) with Delta = a1/sqrt(2 a2) and U(kappa) = C kappa^(2/3)
    """
    _check_q(q)
    a1 = 2.0 * SQRT2 * q * (q * delta - eps) / (2.0 * q ** 2 - 1.0)
    a2 = (2.0 * q ** 2 + 3.0) / (2.0 * (2.0 * q ** 2 - 1.0))
    return a1 / math.sqrt(2.0 * a2), math.sqrt(2.0 * a2) * TOPPLING_C2


def main_text_toppling_constants(delta: float, eps: float, q: float) -> Dict[str, float]:
    """Summary-form constants c_q, Delta_q and kappa'_max, kept for comparison with toppling_parameters."""
    _check_q(q)
    c_q = math.sqrt((2.0 * q ** 2 + 3.0) / (2.0 * q ** 2 - 1.0)) * TOPPLING_C
    delta_q = (2.0 * SQRT2 * q ** 2 / math.sqrt((2.0 * q ** 2 - 1.0) * (q ** 2 + 2.0))) * (delta - eps / q)
    kappa = (-delta_q / (2.0 * c_q)) ** 1.5 if delta_q < 0 else 0.0
    return {'c_q': c_q, 'delta_q': delta_q, 'kappa_max': kappa}


def _check_kappa(kappa):
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0) or not np.all(np.isfinite(kappa)):
        raise DomainError("rescaled index must be finite and non-negative")
    return kappa


def toppling_cdf_constrained(delta: float, eps: float, q: float, kappa):
    """P(kappa) = int_0^{C kappa^(2/3)} sqrt(s) e^{-s^2/2 - Delta s} ds / (same to infinity)."""
    kappa = _check_kappa(kappa)
    drift, scale = toppling_parameters(delta, eps, q)
    values = sqrt_gauss_cdf(drift, scale * np.atleast_1d(kappa) ** (2.0 / 3.0))
    return float(values[0]) if kappa.ndim == 0 else values.reshape(kappa.shape)


def toppling_density_constrained(delta: float, eps: float, q: float, kappa):
    """dP/dkappa = (2/3) C^(3/2) e^{-U^2/2 - Delta U} / norm."""
    kappa = _check_kappa(kappa)
    drift, scale = toppling_parameters(delta, eps, q)
    u = scale * kappa ** (2.0 / 3.0)
    log_value = (math.log(2.0 / 3.0) + 1.5 * math.log(scale) - u ** 2 / 2.0 - drift * u
                 - sqrt_gauss_log_norm(drift))
    value = np.exp(log_value)
    return float(value) if value.ndim == 0 else value


def kappa_max_constrained(delta: float, eps: float, q: float) -> float:
    """(-Delta/C)^(3/2) when Delta < 0, else 0."""
    drift, scale = toppling_parameters(delta, eps, q)
    return (-drift / scale) ** 1.5 if drift < 0 else 0.0


def complexity_atom_constrained(m: float, eps0: float, q: float) -> float:
    """Location t(s_sp/sqrt2) of the index atom for 0 < m < m_c."""
    _check_m(m)
    if m >= m_c(eps0, q):
        raise DomainError(f"complexity law needs m < m_c={m_c(eps0, q):.6f}, got {m}")
    s, _, _ = saddle_points(m, eps0, q)
    return semicircle_cdf(s / SQRT2)


def complexity_cdf_constrained(m: float, eps0: float, q: float, kappa):
    """Step at the atom t(s_sp/sqrt2)."""
    atom = complexity_atom_constrained(m, eps0, q)
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0) or np.any(kappa > 1):
        raise DomainError("kappa must lie in [0, 1]")
    values = np.where(kappa >= atom, 1.0, 0.0)
    return float(values) if values.ndim == 0 else values


def constrained_distribution(region: Region, q: float, delta: Optional[float] = None,
                             eps: Optional[float] = None, m: Optional[float] = None,
                             eps0: Optional[float] = None, grid_points: int = 2001) -> IndexDistribution:
    """Closed-form index law in the toppling or complexity region of the fixed-energy model."""
    region = Region(region)
    meta: Dict[str, Any] = {'model': 'constrained', 'region': region.value, 'q': q}
    if region is Region.TOPPLING:
        if delta is None or eps is None:
            raise DomainError("toppling region needs delta and eps")
        kappa_max = kappa_max_constrained(delta, eps, q)
        kappa = np.linspace(0.0, sqrt_gauss_grid_upper(*toppling_parameters(delta, eps, q)), grid_points)
        meta.update({'delta': delta, 'eps': eps, 'kappa_max': kappa_max,
                     'regime': f"toppling(delta={delta},eps={eps},q={q})"})
        return IndexDistribution(kind=DistributionKind.CONTINUOUS, scale_exponent=Fraction(1, 4),
                                 support=kappa, prob=toppling_density_constrained(delta, eps, q, kappa),
                                 normalized=True, cdf=toppling_cdf_constrained(delta, eps, q, kappa),
                                 metadata=meta)
    if region is Region.COMPLEXITY:
        if m is None or eps0 is None:
            raise DomainError("complexity region needs m and eps0")
        atom = complexity_atom_constrained(m, eps0, q)
        kappa = np.linspace(0.0, 1.0, grid_points)
        meta.update({'m': m, 'eps0': eps0, 'kappa_max': atom,
                     'sigma_eq': sigma_eq_constrained(m, eps0, q),
                     'regime': f"complexity(m={m},eps0={eps0},q={q})"})
        return IndexDistribution(kind=DistributionKind.CONTINUOUS, scale_exponent=Fraction(1),
                                 support=kappa, prob=np.zeros_like(kappa), normalized=True,
                                 cdf=complexity_cdf_constrained(m, eps0, q, kappa), atoms=[(atom, 1.0)],
                                 metadata=meta)
    raise DomainError(f"fixed-energy closed forms cover the toppling and complexity regions, not {region.value}")


# ---------------------------------------------------------------------------
# Exact finite-N counts
# ---------------------------------------------------------------------------

def log_g_n(n: int, m: float, q: float) -> float:
    """log of sqrt(2/(pi N)) q/sqrt(q^2 - 1) (N m^2/2)^{N/2} / Gamma(N/2), energies in units with f(0) = 1."""
    return (0.5 * math.log(2.0 / (math.pi * n)) + math.log(q / math.sqrt(q ** 2 - 1.0))
            + 0.5 * n * math.log(n * m ** 2 / 2.0) - float(gammaln(n / 2.0)))


def _radial_log_integrand(u: np.ndarray, a0: np.ndarray, m: float, q: float, n: int) -> np.ndarray:
    # u = log R^2; dR/R = du/2
    y = np.exp(u)
    phi = m ** 2 * y / 2.0 - u / 2.0 + (a0 - m * y / 2.0) ** 2 / (2.0 * (q ** 2 - 1.0))
    return -n * phi - math.log(2.0)


def log_geometric_factor(s, m: float, eps0: float, q: float, n: int,
                         rtol: float = 1e-10, order: int = 20) -> np.ndarray:
    """
    log G_N(s; m, eps0) for an array of s.

    The radial integral is done in u = log R^2, where the integrand is
    unimodal with its peak at the positive root of a quadratic in R^2.
    """
    _check_m(m)
    _check_q(q)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    a0 = SQRT2 * s - m + q * eps0
    c = q ** 2 - 1.0
    b = m ** 2 * c - m * a0
    disc = np.sqrt(b * b + 2.0 * m ** 2 * c)
    with np.errstate(divide='ignore', invalid='ignore'):
        y_star = np.where(b >= 0, 2.0 * c / (b + disc), (disc - b) / m ** 2)
    u_star = np.log(y_star)
    width = 15.0 / np.sqrt(n * (0.5 + m ** 2 * y_star ** 2 / (4.0 * c)))
    lower = u_star - width - 100.0 / n
    upper = u_star + width
    peak = _radial_log_integrand(u_star, a0, m, q, n)
    for _ in range(8):
        low_open = _radial_log_integrand(lower, a0, m, q, n) > peak - 45.0
        high_open = _radial_log_integrand(upper, a0, m, q, n) > peak - 45.0
        if not (np.any(low_open) or np.any(high_open)):
            break
        lower = np.where(low_open, u_star - 2.0 * (u_star - lower), lower)
        upper = np.where(high_open, u_star + 2.0 * (upper - u_star), upper)
    x, w = gauss_legendre_nodes(order)
    previous = None
    panels = 8
    for _ in range(8):
        fractions = np.linspace(0.0, 1.0, panels + 1)
        a = lower[:, None] + (upper - lower)[:, None] * fractions[None, :-1]
        half = 0.5 * (upper - lower)[:, None] / panels
        nodes = (a + half)[:, :, None] + half[:, :, None] * x[None, None, :]
        terms = (_radial_log_integrand(nodes, a0[:, None, None], m, q, n)
                 + np.log(half)[:, :, None] + np.log(w)[None, None, :])
        flat = terms.reshape(len(s), -1)
        top = flat.max(axis=1)
        value = top + np.log(np.sum(np.exp(flat - top[:, None]), axis=1))
        if previous is not None and np.max(np.abs(value - previous)) <= rtol:
            break
        previous = value
        panels *= 2
    return value + log_g_n(n, m, q)


def exact_integrals_constrained(params: ConstrainedParams, source) -> Tuple[float, SourceIntegrals]:
    """Log prefactor and weight integrals including the geometric factor."""
    if source.n_matrix != params.n + 1:
        raise DomainError(f"density source describes GOE_{source.n_matrix}, counts at n={params.n} "
                          f"need GOE_{params.n + 1}")
    n, m, q, eps0 = params.n, params.m, params.q, params.eps0
    center = math.sqrt(2.0 * n) * m
    root_n = math.sqrt(n)

    def log_weight(lam):
        lam = np.asarray(lam, dtype=float)
        flat = lam.ravel() / root_n
        geometric = np.concatenate([log_geometric_factor(flat[i:i + GEOMETRIC_CHUNK], m, eps0, q, n)
                                    for i in range(0, flat.size, GEOMETRIC_CHUNK)] or [np.empty(0)])
        return -0.5 * (lam - center) ** 2 + geometric.reshape(lam.shape)

    log_prefactor = log_c_n(n) - n * math.log(m) + 0.5 * n * m ** 2
    return log_prefactor, source.integrate_all(log_weight)


def _estimate(params: ConstrainedParams, log_value: float, rel: float, integrals: SourceIntegrals,
              fractional: bool, **extra) -> CountEstimate:
    return CountEstimate(log_value, float(rel),
                         metadata={**integrals.metadata, **params.to_json(), 'fractional_warning': fractional,
                                   **extra})


def mean_nk_exact_constrained(params: ConstrainedParams, k: int, source) -> CountEstimate:
    """
    Exact mean density in energy of stationary points of index k.

    Args:
        params: Coupling, energy level, shape parameter and dimension
        k: Index in [0, n]
        source: Density source for GOE_{n+1}

    Returns:
        CountEstimate of <n_k(eps0)>
    """
    if int(k) != k or not 0 <= k <= params.n:
        raise DomainError(f"index k must lie in [0, {params.n}], got {k}")
    fractional = warn_if_fractional(params.m, params.eps0, params.q)
    log_prefactor, integrals = exact_integrals_constrained(params, source)
    return _estimate(params, log_prefactor + integrals.log_values[k], integrals.rel_stderr[k],
                     integrals, fractional, k=int(k))


def mean_cumulative_exact_constrained(params: ConstrainedParams, k: int, source) -> CountEstimate:
    if int(k) != k or not 0 <= k <= params.n:
        raise DomainError(f"index k must lie in [0, {params.n}], got {k}")
    fractional = warn_if_fractional(params.m, params.eps0, params.q)
    log_prefactor, integrals = exact_integrals_constrained(params, source)
    return _estimate(params, log_prefactor + integrals.log_cumulative[k], integrals.rel_stderr_cumulative[k],
                     integrals, fractional, k=int(k))


def mean_neq_exact_constrained(params: ConstrainedParams, source) -> CountEstimate:
    fractional = warn_if_fractional(params.m, params.eps0, params.q)
    log_prefactor, integrals = exact_integrals_constrained(params, source)
    return _estimate(params, log_prefactor + integrals.log_total, integrals.rel_stderr_total,
                     integrals, fractional)


def exact_index_distribution_constrained(params: ConstrainedParams, source) -> IndexDistribution:
    fractional = warn_if_fractional(params.m, params.eps0, params.q)
    log_prefactor, integrals = exact_integrals_constrained(params, source)
    return distribution_from_integrals(log_prefactor, integrals,
                                       {'model': 'constrained', **params.to_json(),
                                        'fractional_warning': fractional})
