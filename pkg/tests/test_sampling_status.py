"""
Unit tests for sampling_status.py module.

Tests cover:
- Singleton behaviour
- Counter updates from several threads
- Snapshot contents and reset
"""

from concurrent.futures import ThreadPoolExecutor

import pytest

from sampling_status import SamplingStatus, sampling_status


class TestSamplingStatus:
    """Tests for the SamplingStatus singleton."""

    @pytest.mark.unit
    def test_singleton(self):
        """Test that every construction returns the global instance."""
        assert SamplingStatus() is sampling_status

    @pytest.mark.unit
    def test_block_counters(self):
        """Test that completed blocks accumulate samples."""
        sampling_status.block_started()
        sampling_status.block_completed(100)
        sampling_status.block_completed(28)
        stats = sampling_status.get_status()['stats']
        assert stats['blocks'] == 2
        assert stats['samples'] == 128

    @pytest.mark.unit
    def test_resample_and_failure(self):
        """Test the resample and failure counters."""
        sampling_status.resample()
        sampling_status.resample()
        sampling_status.failure()
        stats = sampling_status.get_status()['stats']
        assert stats['resamples'] == 2
        assert stats['failures'] == 1

    @pytest.mark.unit
    def test_concurrent_updates(self):
        """Test that updates from many threads are not lost."""
        def work(_):
            sampling_status.block_started()
            sampling_status.block_completed(3)

        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(work, range(400)))
        stats = sampling_status.get_status()['stats']
        assert stats['blocks'] == 400
        assert stats['samples'] == 1200

    @pytest.mark.unit
    def test_snapshot_before_start(self):
        """Test the snapshot of an idle session."""
        status = sampling_status.get_status()
        assert status['session_start_time'] is None
        assert status['samples_per_second'] == 0.0

    @pytest.mark.unit
    def test_reset(self):
        """Test that reset clears counters and the session start."""
        sampling_status.block_started()
        sampling_status.block_completed(5)
        sampling_status.reset_stats()
        status = sampling_status.get_status()
        assert all(v == 0 for v in status['stats'].values())
        assert status['session_start_time'] is None
