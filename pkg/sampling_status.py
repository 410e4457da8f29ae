"""
Thread-safe sampling counters for the Monte Carlo engine.

This module provides a singleton SamplingStatus that worker threads of the
GOE sampler update (blocks finished, samples drawn, eigen-solver resamples)
and that the CLI reads to log a run summary.
"""

import threading
from datetime import datetime
from typing import Optional, Dict, Any


class SamplingStatus:
    """
    Thread-safe singleton holding sampling statistics across threads.

    Updated by the sampling workers, read by the command layer.
    """

    _instance = None
    _lock = threading.Lock()

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
                    cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        """Initialize the counters (only once)."""
        if getattr(self, '_initialized', False):
            return

        self._initialized = True
        self._data_lock = threading.Lock()

        self.stats = {
            'samples': 0,
            'blocks': 0,
            'resamples': 0,
            'failures': 0,
        }
        self.session_start_time: Optional[datetime] = None

    def block_started(self):
        """Mark the session start on the first block."""
        with self._data_lock:
            if self.session_start_time is None:
                self.session_start_time = datetime.now()

    def block_completed(self, n_samples: int):
        """Record a finished block of samples."""
        with self._data_lock:
            self.stats['blocks'] += 1
            self.stats['samples'] += n_samples

    def resample(self):
        """Record a redraw after eigen-solver non-convergence."""
        with self._data_lock:
            self.stats['resamples'] += 1

    def failure(self):
        """Record a sample whose retry budget ran out."""
        with self._data_lock:
            self.stats['failures'] += 1

    def get_status(self) -> Dict[str, Any]:
        """
        Get a snapshot of the counters (thread-safe).

        Returns a dictionary with the counters, the session start and the
        sampling throughput in samples per second.
        """
        with self._data_lock:
            elapsed = 0.0
            if self.session_start_time is not None:
                elapsed = (datetime.now() - self.session_start_time).total_seconds()
            throughput = self.stats['samples'] / elapsed if elapsed > 0 else 0.0
            return {
                'stats': dict(self.stats),
                'session_start_time': (self.session_start_time.isoformat()
                                       if self.session_start_time else None),
                'elapsed_seconds': elapsed,
                'samples_per_second': throughput,
            }

    def reset_stats(self):
        """Reset all counters and the session start."""
        with self._data_lock:
            for key in self.stats:
                self.stats[key] = 0
            self.session_start_time = None


# Global instance
sampling_status = SamplingStatus()
