"""
Real special functions behind the closed-form index distributions.

Airy functions are evaluated from the Maclaurin series on [-7, 6] and from
the Poincare asymptotic expansions (truncated at the smallest term)
outside that window. All public functions accept scalars or arrays:
a scalar input returns a float, an array input returns an ndarray.
Non-finite or out-of-domain inputs raise DomainError.
"""

# Standard library imports
import logging
from functools import lru_cache
from typing import Tuple, Union

# Third-party imports
import numpy as np
from scipy.special import gammaln, poch

# Local imports
from errors import DomainError
from quadrature import panel_nodes

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

AI0 = 0.355028053887817239     # Ai(0)
AIP0 = 0.258819403792806798    # -Ai'(0)

SERIES_UPPER = 6.0
SERIES_LOWER = -7.0
MAX_SERIES_TERMS = 80
MAX_ASYMPTOTIC_TERMS = 40

TAIL_SWITCH = 12.0
TAIL_PANEL = 0.5
TAIL_ORDER = 20

SQRT_PI = np.sqrt(np.pi)


def _as_finite_array(x, name: str = 'x') -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr, arr.ndim == 0


def _result(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values) if scalar else values


@lru_cache(maxsize=1)
def _asymptotic_coefficients() -> Tuple[np.ndarray, np.ndarray]:
    u = np.empty(MAX_ASYMPTOTIC_TERMS)
    v = np.empty(MAX_ASYMPTOTIC_TERMS)
    u[0] = v[0] = 1.0
    for k in range(1, MAX_ASYMPTOTIC_TERMS):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


def _truncated_sum(coeffs: np.ndarray, inv_zeta: np.ndarray, signs: np.ndarray,
                   powers: np.ndarray) -> np.ndarray:
    """Sum sign_j c_j zeta^{-p_j}, stopping each element at its smallest term."""
    total = np.zeros_like(inv_zeta)
    last = np.full_like(inv_zeta, np.inf)
    active = np.ones(inv_zeta.shape, dtype=bool)
    for c, s, p in zip(coeffs, signs, powers):
        term = c * inv_zeta ** p
        active &= np.abs(term) < last
        total = np.where(active, total + s * term, total)
        last = np.where(active, np.abs(term), last)
        if not active.any():
            break
    return total


def _series(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x3 = x ** 3
    f = np.ones_like(x)
    g = x.copy()
    fp = np.zeros_like(x)
    gp = np.ones_like(x)
    t = np.ones_like(x)
    s = x.copy()
    d = 0.5 * x ** 2
    e = np.ones_like(x)
    fp += d
    for k in range(1, MAX_SERIES_TERMS):
        t = t * x3 / ((3 * k - 1) * (3 * k))
        s = s * x3 / ((3 * k) * (3 * k + 1))
        e = e * x3 / ((3 * k) * (3 * k - 2))
        f += t
        g += s
        gp += e
        if k > 1:
            d = d * x3 / ((3 * k - 1) * (3 * k - 3))
            fp += d
        if np.all(np.abs(t) + np.abs(s) + np.abs(d) + np.abs(e) < 1e-18):
            break
    return AI0 * f - AIP0 * g, AI0 * fp - AIP0 * gp


def _asymptotic_positive(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    u, v = _asymptotic_coefficients()
    zeta = 2.0 / 3.0 * x ** 1.5
    inv = 1.0 / zeta
    k = np.arange(MAX_ASYMPTOTIC_TERMS)
    signs = (-1.0) ** k
    su = _truncated_sum(u, inv, signs, k)
    sv = _truncated_sum(v, inv, signs, k)
    damp = np.exp(-zeta) / (2.0 * SQRT_PI)
    return damp * x ** -0.25 * su, -damp * x ** 0.25 * sv


def _asymptotic_negative(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    u, v = _asymptotic_coefficients()
    z = -x
    zeta = 2.0 / 3.0 * z ** 1.5
    inv = 1.0 / zeta
    even = np.arange(0, MAX_ASYMPTOTIC_TERMS, 2)
    odd = np.arange(1, MAX_ASYMPTOTIC_TERMS, 2)
    signs_even = (-1.0) ** (even // 2)
    signs_odd = (-1.0) ** (odd // 2)
    phase = zeta - np.pi / 4
    cos_p, sin_p = np.cos(phase), np.sin(phase)
    ai = (cos_p * _truncated_sum(u[even], inv, signs_even, even)
          + sin_p * _truncated_sum(u[odd], inv, signs_odd, odd)) / (SQRT_PI * z ** 0.25)
    aip = (sin_p * _truncated_sum(v[even], inv, signs_even, even)
           - cos_p * _truncated_sum(v[odd], inv, signs_odd, odd)) * z ** 0.25 / SQRT_PI
    return ai, aip


def _airy_pair(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x = np.atleast_1d(x)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    mid = (x >= SERIES_LOWER) & (x <= SERIES_UPPER)
    high = x > SERIES_UPPER
    low = x < SERIES_LOWER
    if mid.any():
        ai[mid], aip[mid] = _series(x[mid])
    if high.any():
        ai[high], aip[high] = _asymptotic_positive(x[high])
    if low.any():
        ai[low], aip[low] = _asymptotic_negative(x[low])
    return ai, aip


def airy_ai(x: ArrayLike) -> ArrayLike:
    """Airy function Ai(x) for real x."""
    arr, scalar = _as_finite_array(x)
    ai, _ = _airy_pair(arr.ravel())
    return _result(ai.reshape(arr.shape), scalar)


def airy_ai_prime(x: ArrayLike) -> ArrayLike:
    """Derivative Ai'(x) for real x."""
    arr, scalar = _as_finite_array(x)
    _, aip = _airy_pair(arr.ravel())
    return _result(aip.reshape(arr.shape), scalar)


@lru_cache(maxsize=1)
def _tail_coefficients() -> np.ndarray:
    """a_n = sum_k u_k (k + 1/2)_{n-k}: 1, 41/72, 9241/10368, ..."""
    u, _ = _asymptotic_coefficients()
    return np.array([sum(u[k] * poch(k + 0.5, n - k) for k in range(n + 1))
                     for n in range(MAX_ASYMPTOTIC_TERMS)])


def _tail_asymptotic(x: np.ndarray) -> np.ndarray:
    zeta = 2.0 / 3.0 * x ** 1.5
    k = np.arange(MAX_ASYMPTOTIC_TERMS)
    correction = _truncated_sum(_tail_coefficients(), 1.0 / zeta, (-1.0) ** k, k)
    return np.exp(-zeta) / (2.0 * SQRT_PI * x ** 0.75) * correction


@lru_cache(maxsize=8)
def _tail_table(lower: float) -> Tuple[np.ndarray, np.ndarray]:
    """Panel edges on [lower, TAIL_SWITCH] and the integral of Ai from each edge to infinity."""
    n_panels = int(round((TAIL_SWITCH - lower) / TAIL_PANEL))
    edges = np.linspace(lower, TAIL_SWITCH, n_panels + 1)
    nodes, weights = panel_nodes(edges, TAIL_ORDER)
    ai, _ = _airy_pair(nodes.ravel())
    pieces = np.sum(weights * ai.reshape(nodes.shape), axis=1)
    from_edge = np.empty(n_panels + 1)
    from_edge[-1] = float(_tail_asymptotic(np.array([TAIL_SWITCH]))[0])
    from_edge[:-1] = from_edge[-1] + np.cumsum(pieces[::-1])[::-1]
    logger.debug(f"Built Airy tail table on [{lower}, {TAIL_SWITCH}] with {n_panels} panels")
    return edges, from_edge


def airy_ai_tail_integral(x: ArrayLike) -> ArrayLike:
    """
    Integral of Ai from x to infinity.

    Below the switch point the integral is the sum of cached panel
    integrals plus a partial panel; above it the asymptotic tail is used.

    Args:
        x: Lower limit(s)

    Returns:
        Value(s) in (0, 1) for the tested range, 1/3 at x = 0
    """
    arr, scalar = _as_finite_array(x)
    flat = arr.ravel()
    out = np.empty_like(flat)
    high = flat >= TAIL_SWITCH
    if high.any():
        out[high] = _tail_asymptotic(flat[high])
    low = ~high
    if low.any():
        xl = flat[low]
        lower = min(-45.0, TAIL_PANEL * np.floor(xl.min() / TAIL_PANEL))
        edges, from_edge = _tail_table(float(lower))
        idx = np.clip(np.searchsorted(edges, xl, side='right'), 1, len(edges) - 1)
        right = edges[idx]
        # partial panel [x, right]
        partial_edges = np.stack([xl, right], axis=1)
        half = 0.5 * (partial_edges[:, 1] - partial_edges[:, 0])[:, None]
        mid = 0.5 * (partial_edges[:, 1] + partial_edges[:, 0])[:, None]
        nodes, weights = panel_nodes(np.array([-1.0, 1.0]), TAIL_ORDER)
        pts = mid + half * nodes
        ai, _ = _airy_pair(pts.ravel())
        partial = np.sum(half * weights * ai.reshape(pts.shape), axis=1)
        out[low] = partial + from_edge[idx]
    return _result(out.reshape(arr.shape), scalar)


def rho_edge(lam: ArrayLike) -> ArrayLike:
    """
    GOE edge density Ai'^2 - lam*Ai^2 + (1/2)Ai(1 - int_lam^inf Ai).

    Rounding below zero far above the edge is clipped.
    """
    arr, scalar = _as_finite_array(lam, 'lambda')
    flat = arr.ravel()
    ai, aip = _airy_pair(flat)
    tail = airy_ai_tail_integral(flat)
    value = aip ** 2 - flat * ai ** 2 + 0.5 * ai * (1.0 - tail)
    return _result(np.maximum(value, 0.0).reshape(arr.shape), scalar)


def _check_unit_interval(arr: np.ndarray, name: str, lo: float = -1.0, hi: float = 1.0):
    if np.any(arr < lo) or np.any(arr > hi):
        raise DomainError(f"{name} must lie in [{lo}, {hi}]")


def rho_sc(lam: ArrayLike) -> ArrayLike:
    """Semicircle density (2/pi) sqrt(1 - lam^2) on [-1, 1]."""
    arr, scalar = _as_finite_array(lam, 'lambda')
    _check_unit_interval(arr, 'lambda')
    return _result(2.0 / np.pi * np.sqrt(1.0 - arr ** 2), scalar)


def semicircle_cdf(lam: ArrayLike) -> ArrayLike:
    """Semicircle mass above lam: (1/pi)(arccos lam - lam sqrt(1 - lam^2))."""
    arr, scalar = _as_finite_array(lam, 'lambda')
    _check_unit_interval(arr, 'lambda')
    return _result((np.arccos(arr) - arr * np.sqrt(1.0 - arr ** 2)) / np.pi, scalar)


def semicircle_quantile(x: ArrayLike, tol: float = 1e-13, max_iter: int = 200) -> ArrayLike:
    """
    Location Q_x with semicircle_cdf(Q_x) = x.

    Safeguarded Newton iteration: a Newton step that leaves the current
    bracket is replaced by bisection. The derivative of the cdf is -rho_sc.

    Args:
        x: Fraction(s) in [0, 1]
        tol: Residual tolerance on the cdf
        max_iter: Iteration cap

    Returns:
        Q_x in [-1, 1]; Q_0 = 1 and Q_1 = -1
    """
    arr, scalar = _as_finite_array(x)
    _check_unit_interval(arr, 'x', 0.0, 1.0)
    target = arr.ravel()
    lo = np.full_like(target, -1.0)
    hi = np.ones_like(target)
    q = np.cos(np.pi * target)
    done = (target == 0.0) | (target == 1.0)
    q = np.where(target == 0.0, 1.0, np.where(target == 1.0, -1.0, q))
    for _ in range(max_iter):
        if done.all():
            break
        qc = np.clip(q, -1.0, 1.0)
        residual = (np.arccos(qc) - qc * np.sqrt(1.0 - qc ** 2)) / np.pi - target
        done |= np.abs(residual) <= tol
        lo = np.where(residual > 0, np.maximum(lo, qc), lo)
        hi = np.where(residual <= 0, np.minimum(hi, qc), hi)
        slope = -2.0 / np.pi * np.sqrt(1.0 - qc ** 2)
        with np.errstate(divide='ignore', invalid='ignore'):
            newton = qc - residual / slope
        bisect = 0.5 * (lo + hi)
        good = np.isfinite(newton) & (newton > lo) & (newton < hi)
        q = np.where(done, qc, np.where(good, newton, bisect))
        done |= (hi - lo) < 1e-16
    return _result(q.reshape(arr.shape), scalar)


def log_gamma(x: ArrayLike) -> ArrayLike:
    """log Gamma(x) for x > 0."""
    arr, scalar = _as_finite_array(x)
    if np.any(arr <= 0):
        raise DomainError("log_gamma needs x > 0")
    return _result(gammaln(arr), scalar)
