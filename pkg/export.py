"""
Artifact writers: CSV with '# ' metadata headers, versioned JSON and JSON lines.

Every artifact carries the tool name and version, the schema version, the
reproducing command line, the seed and the regime tag.
"""

# Standard library imports
import csv
import dataclasses
import json
import logging
import math
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

# Third-party imports
import numpy as np

# Local imports
import config

logger = logging.getLogger(__name__)

HEADER_KEYS = ('tool', 'version', 'schema', 'command', 'seed', 'regime')


class ArtifactEncoder(json.JSONEncoder):
    def default(self, obj):
        if hasattr(obj, 'to_json'):
            return obj.to_json()
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, Fraction):
            return str(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, Path):
            return str(obj)
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
        return super().default(obj)


def _scrub(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _scrub(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_scrub(v) for v in value]
    return value


def dumps(obj: Any, **kwargs) -> str:
    """Strict JSON text: NaN and infinities become null."""
    plain = json.loads(json.dumps(obj, cls=ArtifactEncoder))
    return json.dumps(_scrub(plain), allow_nan=False, **kwargs)


def artifact_metadata(command: str, seed: Optional[int] = None, regime: Optional[str] = None,
                      params: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Standard metadata block for an artifact."""
    return {
        'tool': config.TOOL_NAME,
        'version': config.TOOL_VERSION,
        'schema': config.SCHEMA_VERSION,
        'command': command,
        'seed': seed,
        'regime': regime,
        **(params or {}),
    }


def resolve_output(path: Union[str, Path]) -> Path:
    """A bare file name goes under SADDLE_OUTPUT_DIR; parent directories are created."""
    path = Path(path)
    if path.parent == Path('.') and not path.is_absolute():
        path = Path(config.SADDLE_OUTPUT_DIR) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _header_value(value: Any) -> str:
    if isinstance(value, str):
        return value
    return dumps(value)


def header_lines(metadata: Dict[str, Any]) -> List[str]:
    """'# key: value' lines, standard keys first."""
    keys = [k for k in HEADER_KEYS if k in metadata] + sorted(k for k in metadata if k not in HEADER_KEYS)
    return [f"# {key}: {_header_value(metadata[key])}" for key in keys]


def write_csv(path: Union[str, Path], columns: Sequence[str], rows: Iterable[Sequence[Any]],
              metadata: Dict[str, Any]) -> Path:
    """
    Write a comma-separated table preceded by metadata header lines.

    Args:
        path: Output path (bare names go under the output directory)
        columns: Column names
        rows: Row values
        metadata: Header metadata

    Returns:
        The path written
    """
    path = resolve_output(path)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        for line in header_lines(metadata):
            handle.write(line + '\n')
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.info(f"Wrote {path}")
    return path


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if value is None:
        return ''
    return value


def read_csv(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a file written by write_csv into {'metadata': {...}, 'columns': [...], 'rows': [...]}."""
    metadata: Dict[str, Any] = {}
    body: List[str] = []
    with open(path, encoding='utf-8') as handle:
        for line in handle:
            if line.startswith('# '):
                key, _, value = line[2:].rstrip('\n').partition(': ')
                try:
                    metadata[key] = json.loads(value)
                except json.JSONDecodeError:
                    metadata[key] = value
            else:
                body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    return {'metadata': metadata, 'columns': columns, 'rows': [row for row in reader]}


def write_json(path: Union[str, Path], payload: Dict[str, Any], metadata: Dict[str, Any]) -> Path:
    """{"schema", "tool", "version", "metadata", **payload} with indentation."""
    path = resolve_output(path)
    document = {'schema': config.SCHEMA_VERSION, 'tool': config.TOOL_NAME, 'version': config.TOOL_VERSION,
                'metadata': metadata, **payload}
    path.write_text(dumps(document, indent=2) + '\n', encoding='utf-8')
    logger.info(f"Wrote {path}")
    return path


def write_jsonl(path: Union[str, Path], records: Iterable[Any]) -> Path:
    """One JSON object per line."""
    path = resolve_output(path)
    with open(path, 'w', encoding='utf-8') as handle:
        for record in records:
            handle.write(dumps(record) + '\n')
    logger.info(f"Wrote {path}")
    return path


def distribution_table(dist) -> Dict[str, Any]:
    """Columns and rows of an IndexDistribution; atoms go to the metadata as explicit records."""
    cdf = dist.cdf if dist.cdf is not None else [None] * len(dist.prob)
    rows = [(x, p, s, c) for (x, p, s), c in zip(dist.rows(), np.asarray(cdf, dtype=object).tolist())]
    return {'columns': ['index_or_kappa', 'prob_or_density', 'stderr', 'cdf'], 'rows': rows,
            'atoms': [{'atom_location': loc, 'mass': mass} for loc, mass in dist.atoms]}


def write_distribution(path: Union[str, Path], dist, metadata: Dict[str, Any], fmt: str = 'csv') -> Path:
    """Write an IndexDistribution as CSV or JSON."""
    meta = {**metadata, 'kind': dist.kind.value, 'scale_exponent': str(dist.scale_exponent),
            'normalized': dist.normalized, **dist.metadata}
    if fmt == 'json':
        return write_json(path, {'distribution': dist}, meta)
    table = distribution_table(dist)
    if table['atoms']:
        meta['atoms'] = table['atoms']
    return write_csv(path, table['columns'], table['rows'], meta)


def write_phase_diagram(path: Union[str, Path], diagram, metadata: Dict[str, Any], fmt: str = 'csv') -> Path:
    """Write a PhaseDiagram as CSV (curves, geometry in the header) or JSON."""
    if fmt == 'json':
        return write_json(path, {'phase_diagram': diagram}, metadata)
    meta = {**metadata, 'q': diagram.q, 'critical_point': list(diagram.critical_point),
            'threshold': diagram.threshold, 'line_level': diagram.line_level,
            'toppling_slope': diagram.toppling_slope, 'cone_slopes': list(diagram.cone_slopes),
            'lower_endpoint': diagram.lower_endpoint, **diagram.metadata}
    return write_csv(path, ['m', 'eps_minus', 'eps_plus'], diagram.rows(), meta)


def write_density(path: Union[str, Path], density, metadata: Dict[str, Any], fmt: str = 'csv') -> Path:
    """Write an EmpiricalDensity as CSV (bin_lo, bin_hi, density, stderr) or JSON."""
    meta = {**metadata, **density.metadata}
    if fmt == 'json':
        return write_json(path, {'density': density}, meta)
    return write_csv(path, ['bin_lo', 'bin_hi', 'density', 'stderr'], density.rows(), meta)
