"""
Unit tests for export.py and render.py modules.

Tests cover:
- JSON encoding of domain objects
- CSV headers and the CSV reader
- Distribution, phase-diagram and density writers
- SVG rendering
"""

import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import config
from constrained import phase_curves
from export import (
    ArtifactEncoder, artifact_metadata, header_lines, read_csv, resolve_output, write_csv,
    write_density, write_distribution, write_json, write_jsonl, write_phase_diagram,
)
from goe import EmpiricalDensity
from landscape import Region, RegimeSpec, regime_distribution
from render import render_distribution, render_phase_diagram


@pytest.fixture
def metadata():
    return artifact_metadata('saddle-index distribution --model landscape', seed=42, regime='simplicity(m=2.0)')


class TestEncoding:
    """Tests for ArtifactEncoder and metadata helpers."""

    @pytest.mark.unit
    def test_numpy_and_fractions(self):
        """Test encoding of numpy scalars, arrays, enums and fractions."""
        payload = {'a': np.float64(0.5), 'b': np.int64(3), 'c': np.array([1, 2]), 'd': Fraction(1, 4),
                   'e': Region.TOPPLING, 'f': np.bool_(True), 'g': Path('x/y')}
        decoded = json.loads(json.dumps(payload, cls=ArtifactEncoder))
        assert decoded == {'a': 0.5, 'b': 3, 'c': [1, 2], 'd': '1/4', 'e': 'toppling', 'f': True, 'g': 'x/y'}

    @pytest.mark.unit
    def test_to_json_objects(self):
        """Test that objects with to_json serialize through it."""
        decoded = json.loads(json.dumps(RegimeSpec('toppling', delta=-1.0), cls=ArtifactEncoder))
        assert decoded['region'] == 'toppling'

    @pytest.mark.unit
    def test_metadata_block(self, metadata):
        """Test the standard metadata keys."""
        assert metadata['tool'] == config.TOOL_NAME
        assert metadata['version'] == config.TOOL_VERSION
        assert metadata['schema'] == config.SCHEMA_VERSION
        assert metadata['seed'] == 42

    @pytest.mark.unit
    def test_header_order(self, metadata):
        """Test that standard keys lead and extra keys follow sorted."""
        lines = header_lines({**metadata, 'zeta': 1, 'alpha': [1, 2]})
        keys = [line[2:].split(':')[0] for line in lines]
        assert keys == ['tool', 'version', 'schema', 'command', 'seed', 'regime', 'alpha', 'zeta']


class TestWriters:
    """Tests for the artifact writers."""

    @pytest.mark.unit
    def test_bare_name_goes_to_output_dir(self, output_dir):
        """Test that bare names resolve under the output directory."""
        assert resolve_output('a.csv') == output_dir / 'a.csv'

    @pytest.mark.unit
    def test_nested_parent_created(self, tmp_path):
        """Test that parent directories are created."""
        path = resolve_output(tmp_path / 'deep' / 'dir' / 'a.csv')
        assert path.parent.is_dir()

    @pytest.mark.unit
    def test_csv_round_trip(self, output_dir, metadata):
        """Test that read_csv recovers headers, columns and rows."""
        path = write_csv('t.csv', ['x', 'y'], [(1, 0.25), (2, None)], metadata)
        table = read_csv(path)
        assert table['metadata']['seed'] == 42
        assert table['metadata']['command'] == metadata['command']
        assert table['columns'] == ['x', 'y']
        assert table['rows'] == [['1', '0.25'], ['2', '']]

    @pytest.mark.unit
    def test_json_document(self, output_dir, metadata):
        """Test the versioned JSON document."""
        path = write_json('d.json', {'value': np.float32(1.5)}, metadata)
        document = json.loads(path.read_text())
        assert document['schema'] == config.SCHEMA_VERSION
        assert document['metadata']['regime'] == 'simplicity(m=2.0)'
        assert document['value'] == 1.5

    @pytest.mark.unit
    def test_jsonl(self, output_dir):
        """Test one object per line."""
        path = write_jsonl('r.jsonl', [{'a': 1}, {'a': np.int32(2)}])
        lines = path.read_text().splitlines()
        assert [json.loads(line)['a'] for line in lines] == [1, 2]

    @pytest.mark.unit
    def test_jsonl_non_finite_become_null(self, output_dir):
        """Test that NaN and infinities, nested or numpy, are written as null."""
        record = {'a': float('nan'), 'b': [1.0, float('inf')], 'c': {'d': np.float64('-inf')},
                  'e': np.array([np.nan, 2.0])}
        path = write_jsonl('r.jsonl', [record])

        def reject(token):
            raise ValueError(token)

        decoded = json.loads(path.read_text(), parse_constant=reject)
        assert decoded == {'a': None, 'b': [1.0, None], 'c': {'d': None}, 'e': [None, 2.0]}

    @pytest.mark.unit
    def test_json_document_strict(self, output_dir, metadata):
        """Test that JSON documents never carry NaN tokens."""
        path = write_json('d.json', {'value': float('nan')}, {**metadata, 'spread': float('inf')})
        text = path.read_text()
        assert 'NaN' not in text and 'Infinity' not in text
        assert json.loads(text)['value'] is None

    @pytest.mark.unit
    def test_distribution_csv_with_atom(self, output_dir, metadata):
        """Test that atoms appear as explicit records in the header."""
        dist = regime_distribution(RegimeSpec('complexity', m=0.5), grid_points=11)
        table = read_csv(write_distribution('c.csv', dist, metadata))
        assert table['columns'] == ['index_or_kappa', 'prob_or_density', 'stderr', 'cdf']
        assert len(table['rows']) == 11
        atoms = table['metadata']['atoms']
        assert len(atoms) == 1 and atoms[0]['mass'] == 1.0
        assert table['metadata']['kind'] == 'continuous'

    @pytest.mark.unit
    def test_distribution_json(self, output_dir, metadata):
        """Test the JSON distribution document."""
        dist = regime_distribution(RegimeSpec('simplicity', m=2.0))
        document = json.loads(write_distribution('s.json', dist, metadata, fmt='json').read_text())
        assert document['distribution']['kind'] == 'discrete'
        assert document['distribution']['points'][0]['prob_or_density'] == 1.0

    @pytest.mark.unit
    def test_phase_diagram(self, output_dir, metadata):
        """Test the phase-diagram CSV and JSON."""
        diagram = phase_curves(2.0, [0.5, 1.0])
        table = read_csv(write_phase_diagram('p.csv', diagram, metadata))
        assert table['columns'] == ['m', 'eps_minus', 'eps_plus']
        assert table['metadata']['threshold'] == pytest.approx(-2.25)
        document = json.loads(write_phase_diagram('p.json', diagram, metadata, fmt='json').read_text())
        assert document['phase_diagram']['toppling_boundary'] == {'slope': 2.0}

    @pytest.mark.unit
    def test_density(self, output_dir, metadata):
        """Test the binned density CSV."""
        density = EmpiricalDensity(bin_edges=np.array([0.0, 1.0, 2.0]), counts=np.array([3, 1]), n_samples=4)
        table = read_csv(write_density('h.csv', density, metadata))
        assert table['columns'] == ['bin_lo', 'bin_hi', 'density', 'stderr']
        assert float(table['rows'][0][2]) == pytest.approx(0.75)


class TestRender:
    """Tests for SVG rendering."""

    @pytest.mark.unit
    def test_discrete(self, output_dir):
        """Test rendering a discrete distribution."""
        path = render_distribution(regime_distribution(RegimeSpec('simplicity', m=2.0)), 's.svg')
        assert path.read_text().lstrip().startswith('<?xml')

    @pytest.mark.unit
    def test_continuous_is_stable(self, output_dir):
        """Test that rendering the same density twice gives identical files."""
        dist = regime_distribution(RegimeSpec('toppling', delta=-1.0), grid_points=101)
        first = render_distribution(dist, 'a.svg').read_bytes()
        second = render_distribution(dist, 'b.svg').read_bytes()
        assert first == second

    @pytest.mark.unit
    def test_phase_diagram(self, output_dir):
        """Test rendering a phase diagram."""
        diagram = phase_curves(2.0, np.linspace(0.1, 1.0, 10))
        path = render_phase_diagram(diagram, 'phase.svg')
        assert path.exists() and path.stat().st_size > 0
