"""Counter-based random number streams, one per particle.

A sampler with N particles owns N + 1 statistically independent streams:
stream ``i`` belongs to particle ``i`` and stream ``N`` is reserved for
sampler-global draws (resampling).  Streams are built on the Philox4x32-10
counter-based generator, keyed by the 64-bit master seed, with the stream
index placed in the high 64 bits of the 128-bit counter and a per-stream
draw counter in the low 64 bits.  Every output is therefore a pure function
of ``(seed, stream index, draw counter)``: a stream can be advanced from any
thread without touching any other stream, and replaying a run with the same
seed reproduces it exactly regardless of how work was scheduled.

The module-level ``@njit`` functions (:func:`u01`, :func:`std_normal`,
:func:`std_gamma` and their ``fill_*`` batch variants) are the raw sampler
primitives.  They operate on the shared draw-counter array and are intended
to be called from compiled particle kernels; the :class:`RngStream` handle
wraps the same primitives for ordinary Python code, so both paths consume
the identical stream.

Pinned algorithm choices (these determine the exact trajectory):

* one uniform consumes one Philox block (words 2 and 3 are discarded);
* doubles take 53 bits from words 0 and 1 of the block, giving [0, 1);
* normals use the Box-Muller cosine branch on ``1 - u`` (exactly two
  uniforms per draw);
* gammas use Marsaglia-Tsang squeeze rejection for shape >= 1 and the
  shape-boost ``G(a) = G(a + 1) * U^(1/a)`` below 1 (variable draw count).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, uint64

__all__ = [
    "RngStreamSet",
    "RngStream",
    "u01",
    "std_normal",
    "std_gamma",
    "fill_u01",
    "fill_std_normal",
    "fill_std_gamma",
]

_M32 = np.uint64(0xFFFFFFFF)
_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
# Philox4x32 round multipliers and Weyl key increments.
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = np.uint64(0x9E3779B9)
_PHILOX_W1 = np.uint64(0xBB67AE85)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53
_TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True, inline="always")
def _philox_block(c0, c1, c2, c3, k0, k1):
    """One Philox4x32-10 block: four 32-bit words from counter and key."""
    for _ in range(10):
        p0 = (_PHILOX_M0 * c0) & _M64
        p1 = (_PHILOX_M1 * c2) & _M64
        n0 = (p1 >> uint64(32)) ^ c1 ^ k0
        n1 = p1 & _M32
        n2 = (p0 >> uint64(32)) ^ c3 ^ k1
        n3 = p0 & _M32
        c0, c1, c2, c3 = n0, n1, n2, n3
        k0 = (k0 + _PHILOX_W0) & _M32
        k1 = (k1 + _PHILOX_W1) & _M32
    return c0, c1, c2, c3


@njit(cache=True, nogil=True, inline="always")
def u01(ctrs, i, k0, k1):
    """Next uniform in [0, 1) from stream ``i``, advancing its counter."""
    c = ctrs[i]
    ctrs[i] = c + uint64(1)
    si = uint64(i)
    w0, w1, _, _ = _philox_block(c & _M32, c >> uint64(32), si & _M32, si >> uint64(32), k0, k1)
    return ((w0 >> uint64(5)) * 67108864.0 + (w1 >> uint64(6))) * _INV53


@njit(cache=True, nogil=True, inline="always")
def std_normal(ctrs, i, k0, k1):
    """Next standard normal from stream ``i`` (Box-Muller cosine branch)."""
    u1 = u01(ctrs, i, k0, k1)
    u2 = u01(ctrs, i, k0, k1)
    # 1 - u1 lies in (0, 1], so the log is always finite.
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(_TWO_PI * u2)


@njit(cache=True, nogil=True)
def std_gamma(ctrs, i, k0, k1, shape):
    """Next standard gamma (scale 1) variate from stream ``i``.

    Marsaglia-Tsang for shape >= 1; shapes below 1 are boosted through
    ``G(a) = G(a + 1) * U^(1/a)``.
    """
    boost = 1.0
    a = shape
    if a < 1.0:
        u = 1.0 - u01(ctrs, i, k0, k1)
        boost = u ** (1.0 / a)
        a = a + 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = std_normal(ctrs, i, k0, k1)
        t = 1.0 + c * x
        if t <= 0.0:
            continue
        v = t * t * t
        u = 1.0 - u01(ctrs, i, k0, k1)
        if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
            return boost * d * v


@njit(cache=True, nogil=True)
def fill_u01(ctrs, i, k0, k1, out):
    for j in range(out.size):
        out[j] = u01(ctrs, i, k0, k1)


@njit(cache=True, nogil=True)
def fill_std_normal(ctrs, i, k0, k1, out):
    for j in range(out.size):
        out[j] = std_normal(ctrs, i, k0, k1)


@njit(cache=True, nogil=True)
def fill_std_gamma(ctrs, i, k0, k1, shape, out):
    for j in range(out.size):
        out[j] = std_gamma(ctrs, i, k0, k1, shape)


class RngStreamSet:
    """A set of independent, reproducible random streams.

    Parameters
    ----------
    size : int
        Number of streams.  A particle system of size N uses ``N + 1``:
        one per particle plus the sampler-global stream at index N.
    seed : int
        64-bit master seed.  Values outside [0, 2^64) are reduced mod 2^64.
    """

    def __init__(self, size, seed=0):
        size = int(size)
        if size < 1:
            raise ValueError(f"stream set needs at least one stream, got size={size}")
        seed = int(seed) % (1 << 64)
        self.size = size
        self.seed = seed
        self._k0 = np.uint64(seed & 0xFFFFFFFF)
        self._k1 = np.uint64(seed >> 32)
        self.counters = np.zeros(size, dtype=np.uint64)

    @property
    def key(self):
        """Philox key words (low, high) derived from the master seed."""
        return self._k0, self._k1

    def stream(self, i) -> "RngStream":
        i = int(i)
        if not 0 <= i < self.size:
            raise IndexError(f"stream index {i} out of range [0, {self.size})")
        return RngStream(self, i)


class RngStream:
    """Handle on one stream of an :class:`RngStreamSet`.

    A single stream must have one user at a time; distinct streams may be
    advanced concurrently from different threads.
    """

    __slots__ = ("_set", "index")

    def __init__(self, stream_set, index):
        self._set = stream_set
        self.index = index

    def uniform01(self, n=None):
        """Uniform draw(s) in [0, 1)."""
        s = self._set
        if n is None:
            return u01(s.counters, self.index, s._k0, s._k1)
        out = np.empty(int(n), dtype=np.float64)
        fill_u01(s.counters, self.index, s._k0, s._k1, out)
        return out

    def normal(self, mean=0.0, sd=1.0, n=None):
        """Normal draw(s) with the given mean and standard deviation."""
        if not sd > 0.0:
            raise ValueError(f"normal needs sd > 0, got sd={sd}")
        s = self._set
        if n is None:
            return mean + sd * std_normal(s.counters, self.index, s._k0, s._k1)
        out = np.empty(int(n), dtype=np.float64)
        fill_std_normal(s.counters, self.index, s._k0, s._k1, out)
        return mean + sd * out

    def gamma(self, shape, scale=1.0, n=None):
        """Gamma draw(s) with the given shape and scale."""
        if not (shape > 0.0 and scale > 0.0):
            raise ValueError(f"gamma needs shape > 0 and scale > 0, got shape={shape}, scale={scale}")
        s = self._set
        if n is None:
            return scale * std_gamma(s.counters, self.index, s._k0, s._k1, shape)
        out = np.empty(int(n), dtype=np.float64)
        fill_std_gamma(s.counters, self.index, s._k0, s._k1, shape, out)
        return scale * out
