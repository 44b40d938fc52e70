"""Counter-based random streams.

All randomness flows through a vector of independent splitmix64 streams held
in one ``uint64`` array. Stream indices are assigned by role so that the
consumers never contend:

========================  =========================================
index                     role
========================  =========================================
``0``                     environment (placement, obstacle moves)
``1``                     setup (freeway placement, attacker draw)
``2 + i``                 agent *i*: action selection
``2 + n + i``             agent *i*: privacy noise when advising
``2 + 2n + i``            agent *i*: poisoning noise when attacking
``2 + 3n + i``            agent *i*: ask/give coins
========================  =========================================

Because each role owns its own counter, enabling privacy noise or turning an
agent into an attacker never changes the draws seen by anyone else, which
keeps paired arms directly comparable.

The generator primitives exist in two sources: a plain-Python version using
masked integer arithmetic, and a numba version using wrapping ``uint64``
arithmetic. They emit bit-identical streams; which one backs the public
names is decided by :mod:`advisim.accel`.
"""

import numpy as np

from .accel import NUMBA_ENABLED

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# 2**-53: maps the top 53 bits of a u64 onto [0, 1)
_INV53 = 1.0 / 9007199254740992.0

ENV_STREAM = 0
SETUP_STREAM = 1


def stream_count(n_agents: int) -> int:
    return 2 + 4 * n_agents


def policy_base(n_agents: int) -> int:
    return 2


def privacy_base(n_agents: int) -> int:
    return 2 + n_agents


def attack_base(n_agents: int) -> int:
    return 2 + 2 * n_agents


def protocol_base(n_agents: int) -> int:
    return 2 + 3 * n_agents


def mix64(z: int) -> int:
    """One splitmix64 finalizer round (pure Python, for seeding only)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def root_from_seed(seed: int) -> int:
    """Map a user seed to the 64-bit root all streams derive from."""
    return mix64((seed & _MASK) ^ 0x5851F42D4C957F2D)


def derive_streams(root: int, n_streams: int) -> np.ndarray:
    """Independent initial states, a pure function of (root, index)."""
    states = np.empty(n_streams, dtype=np.uint64)
    for j in range(n_streams):
        states[j] = mix64((root + (j + 1) * _GOLDEN) & _MASK)
    return states


# ---------------------------------------------------------------------------
# generator primitives (dual source, bit-identical)
# ---------------------------------------------------------------------------


def _py_next_u64(states, idx):
    s = (int(states[idx]) + _GOLDEN) & _MASK
    states[idx] = s
    z = ((s ^ (s >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _py_next_float(states, idx):
    return (_py_next_u64(states, idx) >> 11) * _INV53


def _py_next_below(states, idx, n):
    k = int(_py_next_float(states, idx) * n)
    if k >= n:
        k = n - 1
    return k


if NUMBA_ENABLED:
    import numba
    from numba import njit

    _NB_GOLDEN = np.uint64(_GOLDEN)
    _NB_MIX1 = np.uint64(_MIX1)
    _NB_MIX2 = np.uint64(_MIX2)
    _S30 = np.uint64(30)
    _S27 = np.uint64(27)
    _S31 = np.uint64(31)
    _S11 = np.uint64(11)

    @njit(cache=True)
    def next_u64(states, idx):
        s = states[idx] + _NB_GOLDEN
        states[idx] = s
        z = (s ^ (s >> _S30)) * _NB_MIX1
        z = (z ^ (z >> _S27)) * _NB_MIX2
        return z ^ (z >> _S31)

    @njit(cache=True)
    def next_float(states, idx):
        return float(next_u64(states, idx) >> _S11) * _INV53

    @njit(cache=True)
    def next_below(states, idx, n):
        k = int(next_float(states, idx) * n)
        if k >= n:
            k = n - 1
        return k

else:
    next_u64 = _py_next_u64
    next_float = _py_next_float
    next_below = _py_next_below


class Stream:
    """A view of one named substream over a shared state vector.

    Thin convenience wrapper for the object-level API; the episode kernel
    works on the raw state array directly with the same primitives.
    """

    __slots__ = ("states", "index")

    def __init__(self, states: np.ndarray, index: int = 0):
        self.states = states
        self.index = index

    @classmethod
    def from_seed(cls, seed: int, index: int = 0, n_streams: int = 1) -> "Stream":
        if index >= n_streams:
            n_streams = index + 1
        return cls(derive_streams(root_from_seed(seed), n_streams), index)

    def next_u64(self) -> int:
        return int(next_u64(self.states, self.index))

    def next_float(self) -> float:
        return float(next_float(self.states, self.index))

    def next_below(self, n: int) -> int:
        return int(next_below(self.states, self.index, n))

    def view(self, index: int) -> "Stream":
        """Another substream over the same state vector."""
        return Stream(self.states, index)
