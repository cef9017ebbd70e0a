"""Counter-based random streams for numba kernels.

Every stream is addressed by ``(seed, stream, iteration, index)`` and hashed
into a splitmix64 state, so a sample's randomness does not depend on which
worker thread produces it or in what order.
"""

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S32 = np.uint64(32)
_LOW32 = np.uint64(0xFFFFFFFF)
_INV53 = 1.0 / 9007199254740992.0

STREAM_DE = 1
STREAM_PATTERN = 2
STREAM_POOL = 3


@nb.njit(inline="always", cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(inline="always", cache=True)
def stream_state(seed, stream, iteration, index):
    s = mix64(np.uint64(seed) + _GOLDEN)
    s = mix64(s ^ (np.uint64(stream) * _M1))
    s = mix64(s ^ (np.uint64(iteration) * _M2))
    return mix64(s ^ (np.uint64(index) * _GOLDEN))


@nb.njit(inline="always", cache=True)
def next_u64(state):
    state = state + _GOLDEN
    return state, mix64(state)


@nb.njit(inline="always", cache=True)
def next_uniform(state):
    """Uniform double on [0, 1) with 53 random bits."""
    state, v = next_u64(state)
    return state, np.float64(v >> _S11) * _INV53


@nb.njit(inline="always", cache=True)
def next_index(state, n):
    """Uniform integer in [0, n) for n < 2**32 (multiply-shift, bias < n / 2**32)."""
    state, v = next_u64(state)
    return state, np.int64(((v >> _S32) * np.uint64(n)) >> _S32)


@nb.njit(inline="always", cache=True)
def next_index_pair(state, n):
    """Two uniform integers in [0, n) from the two 32-bit halves of one draw."""
    state, v = next_u64(state)
    lo = (v & _LOW32) * np.uint64(n)
    hi = (v >> _S32) * np.uint64(n)
    return state, np.int64(lo >> _S32), np.int64(hi >> _S32)


@nb.njit(cache=True)
def uniforms(seed, stream, iteration, index, n):
    """``n`` uniforms from one stream; used to test the generator itself."""
    st = stream_state(seed, stream, iteration, index)
    out = np.empty(n)
    for k in range(n):
        st, out[k] = next_uniform(st)
    return out
