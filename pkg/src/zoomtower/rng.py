"""Deterministic random numbers based on SplitMix64.

All stochastic commands draw from this generator so that a run is
bit-reproducible from its seed alone.  The generator is counter-based,
which makes vectorized draws and deterministic per-worker splitting
trivial: worker k simply mixes (seed, k) into a fresh stream.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix(z):
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


class SplitMix64:
    """Counter-based SplitMix64 stream."""

    def __init__(self, seed):
        self._base = _U64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self._counter = 0

    def spawn(self, k):
        """Deterministic child stream for worker/index k."""
        child_seed = int(_mix(self._base + _GOLDEN * _U64(k + 1)))
        return SplitMix64(child_seed)

    def next_uint64(self, n=None):
        count = 1 if n is None else int(n)
        idx = np.arange(self._counter + 1, self._counter + count + 1, dtype=np.uint64)
        self._counter += count
        with np.errstate(over="ignore"):
            out = _mix(self._base + _GOLDEN * idx)
        return int(out[0]) if n is None else out

    def uniform(self, n=None, low=0.0, high=1.0):
        """Uniform doubles in [low, high) with 53-bit resolution."""
        raw = self.next_uint64(1 if n is None else n)
        vals = (np.asarray(raw, dtype=np.uint64) >> _U64(11)).astype(np.float64)
        vals *= 2.0**-53
        vals = low + (high - low) * vals
        return float(vals[0]) if n is None else vals

    def integers(self, upper, n=None):
        """Uniform ints in [0, upper) (modulo method; fine for upper << 2^64)."""
        raw = self.next_uint64(1 if n is None else n)
        vals = np.asarray(raw, dtype=np.uint64) % _U64(upper)
        return int(vals[0]) if n is None else vals.astype(np.int64)

    def choice_weighted(self, weights, n=None):
        """Indices drawn with the given (normalized) weight vector."""
        w = np.asarray(weights, dtype=np.float64)
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        u = self.uniform(1 if n is None else n)
        idx = np.searchsorted(cdf, np.atleast_1d(u), side="right")
        idx = np.minimum(idx, len(w) - 1)
        return int(idx[0]) if n is None else idx.astype(np.int64)
