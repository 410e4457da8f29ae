"""
SVG rendering of already computed index distributions and phase diagrams.

Nothing here evaluates a formula: every plotted number comes from the
object passed in.
"""

# Standard library imports
import logging
from pathlib import Path
from typing import Union

# Third-party imports
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Local imports
from export import resolve_output  # noqa: E402
from landscape import DistributionKind  # noqa: E402

logger = logging.getLogger(__name__)

# Keeps SVG output byte-stable across runs
plt.rcParams['svg.hashsalt'] = 'saddle-index'


def render_distribution(dist, path: Union[str, Path], title: str = '') -> Path:
    """
    Bars for discrete distributions, a line for densities, vertical markers for atoms.

    Args:
        dist: IndexDistribution
        path: Output SVG path
        title: Plot title (the regime tag when empty)

    Returns:
        The path written
    """
    path = resolve_output(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    if dist.kind is DistributionKind.DISCRETE:
        ax.bar(dist.support, dist.prob, width=0.8, color='tab:blue',
               yerr=dist.stderr if dist.stderr is not None else None)
        ax.set_xlabel('k')
        ax.set_ylabel(r'$p_k$')
    else:
        if np.any(dist.prob > 0):
            ax.plot(dist.support, dist.prob, color='tab:blue', label='density')
        if dist.cdf is not None:
            ax.plot(dist.support, dist.cdf, color='tab:gray', linestyle='--', label='cdf')
        for location, mass in dist.atoms:
            ax.axvline(location, color='tab:red', label=f'atom (mass {mass:g})')
        ax.set_xlabel(r'$\kappa$')
        ax.set_ylabel(r'$p(\kappa)$')
        ax.legend(loc='upper right', fontsize=9)
    ax.set_title(title or str(dist.metadata.get('regime', '')), fontsize=12)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path


def render_phase_diagram(diagram, path: Union[str, Path], delta_range: float = 2.0) -> Path:
    """
    Zero-complexity curves in the (m, eps0) plane, with the toppling boundary and cone lines as an inset.

    Args:
        diagram: PhaseDiagram
        path: Output SVG path
        delta_range: Half-width of the delta axis in the inset

    Returns:
        The path written
    """
    path = resolve_output(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(diagram.m, diagram.eps_minus, color='tab:blue', label=r'$\epsilon_-(m)$')
    ax.plot(diagram.m, diagram.eps_plus, color='tab:orange', label=r'$\epsilon_+(m)$')
    m_max = max(2.0, float(np.max(diagram.m)) + 1.0)
    ax.plot([1.0, m_max], [diagram.line_level, diagram.line_level], color='black', label='one minimum')
    ax.plot(*diagram.critical_point, marker='o', color='black')
    ax.axhline(diagram.threshold, color='tab:gray', linestyle=':', label=r'$\epsilon_{th}$')
    ax.set_xlabel('m')
    ax.set_ylabel(r'$\epsilon_0$')
    ax.set_title(f"q = {diagram.q:g}", fontsize=12)
    ax.legend(loc='lower right', fontsize=8)

    inset = ax.inset_axes([0.62, 0.62, 0.35, 0.33])
    delta = np.linspace(-delta_range, delta_range, 3)
    inset.plot(delta, diagram.toppling_slope * delta, color='black', linestyle=':')
    for slope in diagram.cone_slopes:
        inset.plot(delta[delta <= 0], slope * delta[delta <= 0], color='tab:green')
    inset.set_xlabel(r'$\delta$', fontsize=8)
    inset.set_ylabel(r'$\epsilon$', fontsize=8)
    inset.tick_params(labelsize=7)

    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path
