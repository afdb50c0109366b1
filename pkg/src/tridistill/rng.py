"""Counter-based random streams.

Rendering and cache building need randomness that is (a) reproducible from a
single seed and (b) independent of how work is batched or parallelized.  A
stateful generator cannot give (b), so low-level sampling uses a stateless
splitmix64-style hash of (seed, stream, counter...) instead.  Stateful numpy
generators are still used where a plain seeded stream is enough (weight init,
scene construction); `child_seed` derives their seeds from the same hash.
"""

from __future__ import annotations

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix64(x: np.ndarray) -> np.ndarray:
    z = (x + _GOLDEN).astype(np.uint64)
    z ^= z >> _U64(30)
    z *= _MIX1
    z ^= z >> _U64(27)
    z *= _MIX2
    z ^= z >> _U64(31)
    return z


def _as_u64(value) -> np.ndarray:
    if isinstance(value, str):
        digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8).digest()
        return np.uint64(int.from_bytes(digest, "little"))
    arr = np.asarray(value)
    if arr.dtype.kind not in "iu":
        raise TypeError(f"stream terms must be ints or strings, got {arr.dtype}")
    # Two's-complement fold so negative python ints are accepted.
    return arr.astype(np.int64).view(np.uint64) if arr.dtype.kind == "i" else arr.astype(np.uint64)


def hash_u64(*terms) -> np.ndarray:
    """Fold arbitrary int/str terms (scalars or arrays, broadcastable) into uint64."""
    acc = _mix64(np.uint64(0x243F6A8885A308D3))
    for term in terms:
        acc = _mix64(np.bitwise_xor(acc, _as_u64(term)))
    return acc


def hash_uniform(*terms) -> np.ndarray:
    """Uniform float64 in [0, 1), a pure function of the terms."""
    bits = hash_u64(*terms)
    return (bits >> _U64(11)).astype(np.float64) * (2.0 ** -53)


def child_seed(*terms) -> int:
    """A derived seed for numpy/torch generators; stable across runs."""
    return int(hash_u64(*terms) >> _U64(1))  # keep below 2**63 for torch
