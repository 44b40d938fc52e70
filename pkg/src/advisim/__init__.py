"""Cooperative Q-learning on dynamic grids, with privacy-noised advice
sharing, stealth poisoning of the advice channel, and threshold anomaly
detection. See README.md for the tour.

The heavy lifting lives in :mod:`advisim.kernels` (compiled when numba is
available, plain Python under ``ADVISIM_NUMBA=0``); the object-level
modules (grid, learner, privacy, advice, attack, detector) wrap the same
primitives for direct use, and :mod:`advisim.harness` runs reproducible
campaigns over them.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config  # noqa: F401
