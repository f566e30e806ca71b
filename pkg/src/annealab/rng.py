"""Deterministic random streams for the Monte Carlo kernels.

The sequential samplers use a hand-rolled xoshiro256** generator so that the
compiled and interpreted backends can produce bit-identical streams.  State is
a 4-element uint64 array, derived from a master seed plus a component label
through :class:`numpy.random.SeedSequence`, so adding a new consumer never
shifts the stream of an existing one.

Everything that is not consumed inside a kernel loop (instance generation,
permutations, message initialisation) goes through a regular numpy
``Generator`` obtained from :func:`generator_for`.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .backend import BACKEND, jit

_M64 = 0xFFFFFFFFFFFFFFFF

_U5 = np.uint64(5)
_U7 = np.uint64(7)
_U9 = np.uint64(9)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U19 = np.uint64(19)
_U45 = np.uint64(45)
_U57 = np.uint64(57)
_DOUBLE_SCALE = 2.0 ** -53


def stable_hash64(text: str) -> int:
    """Map a label to a 64-bit integer, stable across processes and runs.

    Uses the first eight bytes of sha256, so it does not depend on
    ``PYTHONHASHSEED``.
    """
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seed_sequence_for(master_seed: int, component: str, index: int = 0) -> np.random.SeedSequence:
    """SeedSequence for one named consumer of the master seed.

    The component label is hashed into the spawn key (split into 32-bit words,
    which SeedSequence handles natively), so distinct labels give statistically
    independent streams and the mapping is reproducible from the label alone.
    """
    key = stable_hash64(component)
    return np.random.SeedSequence(
        master_seed, spawn_key=(key & 0xFFFFFFFF, key >> 32, index)
    )


def generator_for(master_seed: int, component: str, index: int = 0) -> np.random.Generator:
    """numpy Generator (PCG64) for non-kernel randomness."""
    return np.random.Generator(np.random.PCG64(seed_sequence_for(master_seed, component, index)))


def state_for(master_seed: int, component: str, index: int = 0) -> np.ndarray:
    """Fresh xoshiro256** state (uint64[4]) for a kernel stream."""
    state = seed_sequence_for(master_seed, component, index).generate_state(4, np.uint64)
    if not state.any():  # probability 2**-256, but xoshiro must not start at zero
        state[0] = np.uint64(0x9E3779B97F4A7C15)
    return state


# --- xoshiro256** core, numba flavour ---------------------------------------
# uint64 scalars wrap natively under numba; every literal is cast explicitly
# because mixing uint64 with int64 would promote to float64.

def _next_uint64_nb(state):
    s1 = state[1]
    x = s1 * _U5
    result = ((x << _U7) | (x >> _U57)) * _U9
    t = s1 << _U17
    s2 = state[2] ^ state[0]
    s3 = state[3] ^ s1
    state[1] = s1 ^ s2
    state[0] = state[0] ^ s3
    state[2] = s2 ^ t
    state[3] = (s3 << _U45) | (s3 >> _U19)
    return result


def _next_double_nb(state):
    return (next_uint64(state) >> _U11) * _DOUBLE_SCALE


def _next_index_nb(state, n):
    # floor(u * n); selection bias is below n / 2**53, irrelevant at our sizes
    return int((next_uint64(state) >> _U11) * _DOUBLE_SCALE * n)


# --- same generator on Python integers ---------------------------------------
# numpy uint64 scalars emit overflow warnings, so the interpreted path works on
# masked Python ints instead; the two flavours are bit-identical (tested).

def _next_uint64_py(state):
    s1 = int(state[1])
    x = (s1 * 5) & _M64
    result = ((((x << 7) & _M64) | (x >> 57)) * 9) & _M64
    t = (s1 << 17) & _M64
    s2 = int(state[2]) ^ int(state[0])
    s3 = int(state[3]) ^ s1
    state[1] = s1 ^ s2
    state[0] = int(state[0]) ^ s3
    state[2] = s2 ^ t
    state[3] = ((s3 << 45) & _M64) | (s3 >> 19)
    return result


def _next_double_py(state):
    return (_next_uint64_py(state) >> 11) * _DOUBLE_SCALE


def _next_index_py(state, n):
    return int((_next_uint64_py(state) >> 11) * _DOUBLE_SCALE * n)


if BACKEND == "numba":
    next_uint64 = jit(inline="always")(_next_uint64_nb)
    next_double = jit(inline="always")(_next_double_nb)
    next_index = jit(inline="always")(_next_index_nb)
else:
    next_uint64 = _next_uint64_py
    next_double = _next_double_py
    next_index = _next_index_py
