"""Counter-based uniforms: every lattice site gets its own value, computed
from (seed, role, i, j) alone, so fields can be rebuilt piecewise, streamed,
or shifted without replaying a sequential generator.

The mixer is the SplitMix64 finalizer applied to a keyed combination of the
coordinates.
"""
import numpy as np
from numba import njit

ROLE_ENV = 1
ROLE_BOUNDARY = 2
ROLE_BULK = 3
ROLE_PATH = 4
ROLE_REPLICA = 5

_MASK = (1 << 64) - 1


@njit(cache=True)
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def stream_key(seed, role):
    """Key for one role (independent key spaces per role)."""
    return mix64(np.uint64(seed) ^ mix64(np.uint64(role) * np.uint64(0x9E3779B97F4A7C15)))


@njit(cache=True)
def site_bits(key, i, j):
    a = mix64(np.uint64(np.int64(i)) + np.uint64(0x632BE59BD9B4E019))
    b = mix64(np.uint64(np.int64(j)) ^ a)
    return mix64(key + b)


@njit(cache=True)
def site_uniform(key, i, j):
    """Uniform in the open interval (0, 1) with 53 random bits."""
    h = site_bits(key, i, j)
    return (np.float64(h >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16


@njit(cache=True)
def child_seed(seed, index):
    """Seed of replica `index` derived from an experiment seed."""
    return site_bits(stream_key(seed, ROLE_REPLICA), index, 0)


def as_seed(seed) -> np.uint64:
    """Accept any Python integer; wraps into 64 bits."""
    return np.uint64(int(seed) & _MASK)


def key_for(seed, role: int) -> np.uint64:
    """stream_key with the result pinned to uint64 for further jitted calls."""
    return np.uint64(stream_key(as_seed(seed), role))


@njit(cache=True)
def _fill(out, key, off_i, off_j):
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            out[i, j] = site_uniform(key, i + off_i, j + off_j)


def uniform_grid(seed, role: int, shape: tuple[int, int], offset: tuple[int, int] = (0, 0)) -> np.ndarray:
    out = np.empty(shape)
    _fill(out, key_for(seed, role), int(offset[0]), int(offset[1]))
    return out
