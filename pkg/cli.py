"""
Command-line front end.

Sub-commands:
    dist        index distribution of a model/region (closed form or exact finite n)
    phase       zero-complexity curves of the fixed-energy model
    table       numeric tables of the asymptotic formulas over parameter grids
    verify      Monte Carlo verification checks (JSON lines + summary table)
    goe-sample  binned GOE order-statistic or spectral densities

Numeric parameters accept a single value or a start:end:step sweep.
Exit codes: 0 success, 1 usage error, 2 computation error, 3 verification failure.
"""

# Standard library imports
import argparse
import itertools
import logging
import math
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

# Local imports
import config
import constrained
import landscape
import pspin
import verify
from errors import DomainError, SaddleIndexError
from export import (artifact_metadata, write_csv, write_density, write_distribution, write_json, write_jsonl,
                    write_phase_diagram)
from goe import Affine, BinSpec, GoeSampler, build_source, edge_order_densities
from goe import order_statistic_density, spectral_density
from render import render_distribution, render_phase_diagram
from sampling_status import sampling_status

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTATION = 2
EXIT_VERIFICATION = 3

MODELS = ('landscape', 'constrained', 'pspin')
LANDSCAPE_REGIMES = tuple(r.value for r in landscape.Region)
PSPIN_REGIMES = tuple(r.value for r in pspin.PSpinRegion)
SWEEP_PARAMS = ('m', 'delta', 'eps', 'eps0', 'q', 'beta', 'B', 'J', 'sigma', 'p', 'kappa')
EDGE_STATS = 6


class UsageError(Exception):
    """Invalid command line or parameter combination."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_sweep(text: str) -> List[float]:
    """'x' -> [x]; 'start:end:step' -> inclusive grid."""
    parts = text.split(':')
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"not a number or start:end:step sweep: '{text}'")
    if len(values) == 1:
        return values
    if len(values) != 3:
        raise UsageError(f"sweep must be start:end:step, got '{text}'")
    start, end, step = values
    if step <= 0 or end < start:
        raise UsageError(f"sweep needs step > 0 and end >= start, got '{text}'")
    count = int(math.floor((end - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got '{text}'")


@dataclass
class RunConfig:
    """Validated command configuration."""
    command: str
    model: Optional[str] = None
    regime: Optional[str] = None
    params: Dict[str, List[float]] = field(default_factory=dict)
    n: Optional[int] = None
    output: Optional[Path] = None
    fmt: str = 'csv'
    seed: int = config.SADDLE_SEED
    samples: int = config.SADDLE_SAMPLES
    threads: int = config.SADDLE_THREADS
    progress: bool = False
    command_line: str = ''
    options: Dict[str, Any] = field(default_factory=dict)

    def grid(self) -> List[Dict[str, float]]:
        """Cartesian product of every given parameter's values."""
        names = sorted(self.params)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.params[k] for k in names))]


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--seed', type=int, default=config.SADDLE_SEED, help='Root seed of all Monte Carlo paths')
    parser.add_argument('--samples', type=int, default=config.SADDLE_SAMPLES, help='Monte Carlo samples')
    parser.add_argument('--threads', type=int, default=config.SADDLE_THREADS, help='Worker threads')
    parser.add_argument('--out', type=str, default=None, help='Output file')
    parser.add_argument('--format', dest='fmt', choices=('csv', 'json', 'svg'), default='csv')
    parser.add_argument('--progress', action='store_true', help='Show progress bars')


def _add_model(parser: argparse.ArgumentParser, required: bool = True):
    parser.add_argument('--model', choices=MODELS, required=required)
    parser.add_argument('--regime', type=str, default=None,
                        help='landscape/constrained: simplicity|hierarchy|toppling|complexity; pspin: a|b|c|d')
    for name in SWEEP_PARAMS:
        parser.add_argument(f'--{name}', type=str, default=None, help=f'{name} (value or start:end:step)')
    parser.add_argument('--n', type=int, default=None, help='Dimension')
    parser.add_argument('--source', choices=('empirical', 'determinant', 'gaussian'), default=None,
                        help='Density source for exact integrals')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=config.TOOL_NAME, description='Index statistics of stationary points '
                                                          'of random landscapes')
    parser.add_argument('--version', action='version', version=f'{config.TOOL_NAME} {config.TOOL_VERSION}')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    dist = sub.add_parser('dist', help='Index distribution')
    _add_common(dist)
    _add_model(dist)
    dist.add_argument('--exact', action='store_true', help='Exact finite-n distribution instead of the law')
    dist.add_argument('--edge-n', type=int, default=1000, help='Matrix size of the edge histograms')

    phase = sub.add_parser('phase', help='Phase diagram of the fixed-energy model')
    _add_common(phase)
    phase.add_argument('--q', type=str, required=True, help='q (value or start:end:step)')
    phase.add_argument('--m-grid', type=str, default='0.02:1:0.02', help='Couplings start:end:step in (0, 1]')

    table = sub.add_parser('table', help='Numeric regime tables')
    _add_common(table)
    _add_model(table)

    check = sub.add_parser('verify', help='Verification checks')
    _add_common(check)
    check.add_argument('--check', choices=sorted(verify.CHECKS) + ['acceptance'], required=True)
    check.add_argument('--model', choices=MODELS, default=None)
    check.add_argument('--regime', type=str, default=None)
    for name in SWEEP_PARAMS:
        check.add_argument(f'--{name}', type=str, default=None)
    check.add_argument('--n', type=int, default=None)
    check.add_argument('--k', type=str, default=None, help='Comma-separated order indices')
    check.add_argument('--z', type=str, default=None, help='Evaluation points (value or sweep)')
    check.add_argument('--mu-c', type=float, default=1.0)
    check.add_argument('--n-list', type=str, default='10,20,40')
    check.add_argument('--branch', choices=('edge', 'bulk'), default='bulk')
    check.add_argument('--source', choices=('empirical', 'determinant', 'gaussian'), default=None)
    check.add_argument('--allow-inconclusive', action='store_true',
                       help='Exit 0 when checks are inconclusive rather than failed')

    goe = sub.add_parser('goe-sample', help='Binned GOE densities')
    _add_common(goe)
    goe.add_argument('--n', type=int, required=True)
    goe.add_argument('--k', type=int, default=None, help='Order index (all eigenvalues when omitted)')
    goe.add_argument('--edge', action='store_true', help='Bin edge-rescaled values')
    goe.add_argument('--bins', type=int, default=None, help='Number of bins')
    goe.add_argument('--lower', type=float, default=None)
    goe.add_argument('--upper', type=float, default=None)
    return parser


def make_config(args: argparse.Namespace, argv: Sequence[str]) -> RunConfig:
    """Turn parsed arguments into a RunConfig, validating sweeps."""
    params = {}
    for name in SWEEP_PARAMS:
        text = getattr(args, name, None)
        if text is not None:
            params[name] = parse_sweep(text)
    if args.samples < 1 or args.threads < 1:
        raise UsageError("--samples and --threads must be positive")
    options = {k: v for k, v in vars(args).items()
               if k not in SWEEP_PARAMS and k not in ('command', 'model', 'regime', 'n', 'out', 'fmt', 'seed',
                                                       'samples', 'threads', 'progress')}
    return RunConfig(command=args.command, model=getattr(args, 'model', None), regime=getattr(args, 'regime', None),
                     params=params, n=getattr(args, 'n', None), output=Path(args.out) if args.out else None,
                     fmt=args.fmt, seed=args.seed, samples=args.samples, threads=args.threads,
                     progress=args.progress, command_line=' '.join([config.TOOL_NAME, shlex.join(list(argv))]),
                     options=options)


def _output(cfg: RunConfig, stem: str, suffix: str = '') -> Path:
    if cfg.output is None:
        return Path(f"{stem}{suffix}.{cfg.fmt}")
    if suffix:
        return cfg.output.with_name(f"{cfg.output.stem}{suffix}{cfg.output.suffix}")
    return cfg.output


def _suffix(point: Dict[str, float], swept: Sequence[str]) -> str:
    return ''.join(f"_{k}={point[k]:g}" for k in swept)


# ---------------------------------------------------------------------------
# dist
# ---------------------------------------------------------------------------

def _b_value(cfg: RunConfig, point: Dict[str, float]) -> float:
    if 'B' in point:
        return point['B']
    if {'J', 'p'} <= set(point):
        return pspin.b_param(point['J'], point.get('sigma', 0.0), int(point['p']))
    raise UsageError("pspin needs --B or --J/--sigma/--p")


def build_distribution(cfg: RunConfig, point: Dict[str, float]) -> landscape.IndexDistribution:
    """Compute the IndexDistribution a dist invocation asks for at one parameter point."""
    exact = cfg.options.get('exact', False)
    edge_n = cfg.options.get('edge_n', 1000)
    source_kind = cfg.options.get('source') or 'empirical'

    def edges():
        return edge_order_densities(edge_n, EDGE_STATS, verify.EDGE_HISTOGRAM, cfg.samples, seed=cfg.seed,
                                    threads=cfg.threads, progress=cfg.progress)

    def source(n):
        return build_source(source_kind, n + 1, cfg.samples, seed=cfg.seed, threads=cfg.threads,
                            progress=cfg.progress)

    if cfg.model == 'landscape':
        if exact:
            if cfg.n is None or 'm' not in point:
                raise UsageError("--exact needs --m and --n")
            params = landscape.LandscapeParams(point['m'], cfg.n)
            return landscape.exact_index_distribution(params, source(cfg.n))
        regime = landscape.RegimeSpec(_regime(cfg, LANDSCAPE_REGIMES), point.get('delta'), point.get('m'))
        densities = edges() if regime.region is landscape.Region.HIERARCHY else None
        return landscape.regime_distribution(regime, n=cfg.n, edge_densities=densities)

    if cfg.model == 'constrained':
        if 'q' not in point:
            raise UsageError("the fixed-energy model needs --q")
        if exact:
            if cfg.n is None or 'm' not in point or 'eps0' not in point:
                raise UsageError("--exact needs --m, --eps0, --q and --n")
            params = constrained.ConstrainedParams(point['m'], point['eps0'], point['q'], cfg.n)
            return constrained.exact_index_distribution_constrained(params, source(cfg.n))
        region = landscape.Region(_regime(cfg, ('toppling', 'complexity')))
        return constrained.constrained_distribution(region, point['q'], delta=point.get('delta'),
                                                    eps=point.get('eps'), m=point.get('m'),
                                                    eps0=point.get('eps0'))

    if exact:
        if cfg.n is None:
            raise UsageError("--exact needs --n")
        b = _b_value(cfg, point)
        return pspin.exact_index_distribution_pspin(b, cfg.n, source(cfg.n))
    region = pspin.PSpinRegion(_regime(cfg, PSPIN_REGIMES))
    b = _b_value(cfg, point) if region in (pspin.PSpinRegion.A, pspin.PSpinRegion.D) else None
    regime = pspin.PSpinRegime(region, beta=point.get('beta'), b=b)
    densities = edges() if region is pspin.PSpinRegion.B else None
    return pspin.regime_distribution_pspin(regime, n=cfg.n, edge_densities=densities)


def _regime(cfg: RunConfig, allowed: Sequence[str]) -> str:
    if cfg.regime not in allowed:
        raise UsageError(f"--regime for {cfg.model} must be one of {', '.join(allowed)}, got {cfg.regime}")
    return cfg.regime


def cmd_dist(cfg: RunConfig) -> List[Path]:
    swept = [k for k, v in cfg.params.items() if len(v) > 1]
    written = []
    for point in cfg.grid():
        dist = build_distribution(cfg, point)
        tag = dist.metadata.get('regime', cfg.regime or 'exact')
        meta = artifact_metadata(cfg.command_line, cfg.seed, tag,
                                 {'model': cfg.model, 'n': cfg.n, **point})
        path = _output(cfg, f"dist_{cfg.model}_{cfg.regime or 'exact'}", _suffix(point, swept))
        if cfg.fmt == 'svg':
            written.append(render_distribution(dist, path))
        else:
            written.append(write_distribution(path, dist, meta, cfg.fmt))
    return written


# ---------------------------------------------------------------------------
# phase
# ---------------------------------------------------------------------------

def cmd_phase(cfg: RunConfig) -> List[Path]:
    m_grid = parse_sweep(cfg.options['m_grid'])
    written = []
    qs = cfg.params['q']
    for q in qs:
        diagram = constrained.phase_curves(q, m_grid)
        meta = artifact_metadata(cfg.command_line, None, f"phase(q={q:g})", {'model': 'constrained', 'q': q})
        path = _output(cfg, 'phase', f"_q={q:g}" if len(qs) > 1 else '')
        if cfg.fmt == 'svg':
            written.append(render_phase_diagram(diagram, path))
        elif cfg.fmt == 'json':
            written.append(write_json(path, {'phase_diagram': diagram}, meta))
        else:
            written.append(write_phase_diagram(path, diagram, meta))
    return written


# ---------------------------------------------------------------------------
# table
# ---------------------------------------------------------------------------

def _landscape_row(region: landscape.Region, point: Dict[str, float], n: Optional[int]) -> Dict[str, Any]:
    if region is landscape.Region.SIMPLICITY:
        landscape.RegimeSpec(region, m=point.get('m'))
        return {'m': point['m'], 'p0': landscape.pk_simplicity(0), 'neq': landscape.neq_simplicity()}
    if region is landscape.Region.HIERARCHY:
        delta = point['delta']
        landscape.RegimeSpec(region, delta=delta)
        return {'delta': delta, 'edge_laplace': landscape.edge_laplace(delta),
                'neq': landscape.neq_hierarchy(delta)}
    if region is landscape.Region.TOPPLING:
        delta = point['delta']
        row = {'delta': delta, 'kappa_max': landscape.kappa_max_toppling(delta)}
        if 'kappa' in point:
            row['cdf'] = landscape.toppling_cdf(delta, point['kappa'])
            row['density'] = landscape.toppling_density(delta, point['kappa'])
        if n is not None:
            row['neq'] = landscape.neq_toppling(delta, n)
        return row
    m = point['m']
    landscape.RegimeSpec(region, m=m)
    row = {'m': m, 'sigma_eq': landscape.sigma_eq(m), 'sigma_0': landscape.sigma_0(m),
           'kappa_max': landscape.kappa_max_complexity(m)}
    if n is not None:
        row['log_neq'] = landscape.neq_complexity(m, n)
    return row


def _constrained_row(region: landscape.Region, point: Dict[str, float]) -> Dict[str, Any]:
    q = point['q']
    if region is landscape.Region.TOPPLING:
        delta, eps = point['delta'], point['eps']
        drift, scale = constrained.toppling_parameters(delta, eps, q)
        summary = constrained.main_text_toppling_constants(delta, eps, q)
        row = {'q': q, 'delta': delta, 'eps': eps, 'drift': drift, 'scale': scale,
               'kappa_max': constrained.kappa_max_constrained(delta, eps, q),
               'delta_q': summary['delta_q'], 'c_q': summary['c_q']}
        if 'kappa' in point:
            row['cdf'] = constrained.toppling_cdf_constrained(delta, eps, q, point['kappa'])
        return row
    if region is landscape.Region.COMPLEXITY:
        m, eps0 = point['m'], point['eps0']
        mc = constrained.m_c(eps0, q)
        row = {'q': q, 'm': m, 'eps0': eps0, 'm_c': mc, 'sigma_eq': constrained.sigma_eq_constrained(m, eps0, q)}
        row['atom'] = constrained.complexity_atom_constrained(m, eps0, q) if m < mc else None
        return row
    raise UsageError("fixed-energy tables cover the toppling and complexity regions")


def _pspin_row(cfg: RunConfig, region: pspin.PSpinRegion, point: Dict[str, float]) -> Dict[str, Any]:
    n = cfg.n
    if region is pspin.PSpinRegion.A:
        b = _b_value(cfg, point)
        pspin.PSpinRegime(region, b=b)
        return {'B': b, 'p0': 0.5, 'neq': pspin.neq_region_a_pspin()}
    if region is pspin.PSpinRegion.B:
        beta = point['beta']
        pspin.PSpinRegime(region, beta=beta)
        return {'beta': beta, 'neq': pspin.neq_region_b_pspin(beta)}
    if region is pspin.PSpinRegion.C:
        beta = point['beta']
        row = {'beta': beta, 'normalization': pspin.region_c_normalization(beta)}
        if 'kappa' in point:
            row['density'] = pspin.density_region_c_pspin(beta, point['kappa'])
            row['cdf'] = pspin.cdf_region_c_pspin(beta, point['kappa'])
        if n is not None:
            row['neq'] = pspin.neq_region_c_pspin(beta, n)
        return row
    b = _b_value(cfg, point)
    pspin.PSpinRegime(region, b=b)
    row = {'B': b}
    if n is not None:
        row['log_neq'] = pspin.neq_region_d_pspin(b, n)
    return row


def cmd_table(cfg: RunConfig) -> List[Path]:
    if cfg.fmt == 'svg':
        raise UsageError("tables are written as csv or json")
    rows = []
    for point in cfg.grid():
        try:
            if cfg.model == 'landscape':
                rows.append(_landscape_row(landscape.Region(_regime(cfg, LANDSCAPE_REGIMES)), point, cfg.n))
            elif cfg.model == 'constrained':
                rows.append(_constrained_row(landscape.Region(_regime(cfg, ('toppling', 'complexity'))), point))
            else:
                rows.append(_pspin_row(cfg, pspin.PSpinRegion(_regime(cfg, PSPIN_REGIMES)), point))
        except KeyError as e:
            raise UsageError(f"missing parameter --{e.args[0]} for {cfg.model} {cfg.regime}")
    columns = list(dict.fromkeys(k for row in rows for k in row))
    meta = artifact_metadata(cfg.command_line, None, f"{cfg.model}-{cfg.regime}",
                             {'model': cfg.model, 'n': cfg.n})
    path = _output(cfg, f"table_{cfg.model}_{cfg.regime}")
    if cfg.fmt == 'json':
        return [write_json(path, {'columns': columns, 'rows': rows}, meta)]
    return [write_csv(path, columns, [[row.get(c) for c in columns] for row in rows], meta)]


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _convergence_job(cfg: RunConfig, n_list: List[int]) -> Dict[str, Any]:
    if cfg.model is None or cfg.regime is None:
        raise UsageError("--check convergence needs --model and --regime")
    point = {k: v[0] for k, v in cfg.params.items()}
    if cfg.model == 'landscape':
        regime = landscape.RegimeSpec(_regime(cfg, LANDSCAPE_REGIMES), point.get('delta'), point.get('m'))
    elif cfg.model == 'pspin':
        region = pspin.PSpinRegion(_regime(cfg, PSPIN_REGIMES))
        b = _b_value(cfg, point) if region in (pspin.PSpinRegion.A, pspin.PSpinRegion.D) else None
        regime = pspin.PSpinRegime(region, beta=point.get('beta'), b=b)
    else:
        regime = _regime(cfg, ('toppling', 'complexity'))
    return {'model': cfg.model, 'regime': regime, 'params': point, 'n_list': n_list,
            'n_samples': cfg.samples, 'seed': cfg.seed, 'source': cfg.options.get('source'),
            'threads': cfg.threads}


def verify_jobs(cfg: RunConfig) -> List[tuple]:
    """Translate a verify configuration into (check name, kwargs) jobs."""
    name = cfg.options['check']
    common = {'seed': cfg.seed, 'threads': cfg.threads}
    ks = _int_list(cfg.options['k']) if cfg.options.get('k') else None
    if name in ('relation', 'acceptance'):
        n = cfg.n or 4
        mu_c = cfg.options.get('mu_c', 1.0)
        if cfg.options.get('z') or ks:
            zs = parse_sweep(cfg.options['z']) if cfg.options.get('z') else [0.8 * math.sqrt(2.0) * mu_c]
            grid = [{'n': n, 'k': k, 'z': z, 'mu_c': mu_c} for k in (ks or [0]) for z in zs]
        else:
            grid = verify.relation_grid(n, mu_c)
        jobs = [('relation', {**g, 'n_samples': cfg.samples, **common}) for g in grid]
        if name == 'acceptance':
            jobs += [('gaussian', {'n': 1000, 'k': 250, 'n_samples': cfg.samples, 'branch': 'bulk', **common}),
                     ('edge-partition', {'n': 2000, 'n_stats': 4, 'n_samples': cfg.samples, **common})]
        return jobs
    if name == 'tw':
        return [('tw', {'n': cfg.n or 500, 'k': k, 'n_samples': cfg.samples, **common}) for k in (ks or [0])]
    if name == 'gaussian':
        n = cfg.n or 1000
        return [('gaussian', {'n': n, 'k': k, 'n_samples': cfg.samples, 'branch': cfg.options['branch'],
                              **common}) for k in (ks or [n // 4])]
    if name == 'edge-partition':
        return [('edge-partition', {'n': cfg.n or 2000, 'n_stats': 4, 'n_samples': cfg.samples, **common})]
    return [('convergence', _convergence_job(cfg, _int_list(cfg.options['n_list'])))]


def cmd_verify(cfg: RunConfig) -> int:
    jobs = verify_jobs(cfg)
    reports = verify.run_checks(jobs)
    path = cfg.output or Path(f"verify_{cfg.options['check']}.jsonl")
    write_jsonl(path, reports)
    print(verify.summary_table(reports))
    allowed = {verify.CheckStatus.PASS}
    if cfg.options.get('allow_inconclusive'):
        allowed.add(verify.CheckStatus.INCONCLUSIVE)
    return EXIT_OK if all(r.status in allowed for r in reports) else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# goe-sample
# ---------------------------------------------------------------------------

def cmd_goe_sample(cfg: RunConfig) -> List[Path]:
    if cfg.fmt == 'svg':
        raise UsageError("goe-sample writes csv or json")
    sampler = GoeSampler.for_size(cfg.n, seed=cfg.seed)
    transform = Affine.edge(cfg.n, sampler.variance_scale) if cfg.options.get('edge') else Affine()
    if cfg.options.get('edge'):
        lower, upper = -8.0, 4.0
    else:
        lower, upper = -sampler.edge - 1.0, sampler.edge + 1.0
    lower = cfg.options['lower'] if cfg.options.get('lower') is not None else lower
    upper = cfg.options['upper'] if cfg.options.get('upper') is not None else upper
    grid = BinSpec(lower, upper, n_bins=cfg.options.get('bins'))
    k = cfg.options.get('k')
    if k is None:
        density = spectral_density(sampler, grid, cfg.samples, transform=transform, threads=cfg.threads,
                                   progress=cfg.progress)
    else:
        density = order_statistic_density(sampler, k, grid, cfg.samples, transform=transform,
                                           threads=cfg.threads, progress=cfg.progress)
    meta = artifact_metadata(cfg.command_line, cfg.seed, f"goe(n={cfg.n})",
                             {'transform': transform.label, 'n_samples': cfg.samples})
    stem = f"goe_n={cfg.n}_k={'all' if k is None else k}"
    return [write_density(_output(cfg, stem), density, meta, cfg.fmt)]


COMMANDS = {
    'dist': cmd_dist,
    'phase': cmd_phase,
    'table': cmd_table,
    'goe-sample': cmd_goe_sample,
}


def main(argv: Sequence[str]) -> int:
    """
    Parse argv, run the command and return the process exit code.

    Errors in the command line or in parameter domains found before any
    computation give exit code 1; errors raised while computing give 2.
    """
    try:
        args = build_parser().parse_args(list(argv))
        cfg = make_config(args, argv)
        if cfg.command == 'phase':
            for q in cfg.params['q']:
                if not q > 1:
                    raise DomainError(f"q must exceed 1, got {q}")
    except (UsageError, DomainError) as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE

    logger.info(f"Running: {cfg.command_line}")
    sampling_status.reset_stats()
    try:
        if cfg.command == 'verify':
            code = cmd_verify(cfg)
        else:
            for path in COMMANDS[cfg.command](cfg):
                logger.info(f"Artifact: {path}")
            code = EXIT_OK
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except DomainError as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_USAGE
    except SaddleIndexError as e:
        logger.error(f"Computation failed: {e}")
        return EXIT_COMPUTATION
    finally:
        logger.info(f"Sampling summary: {sampling_status.get_status()}")
    return code
