"""Brownian driving noise on nested dyadic grids.

A BrownianTree stores the increments of an m-dimensional Brownian motion at
the finest level L (2^L cells of width T * 2^-L). Any coarser level is
obtained by summing adjacent cells pairwise, so two Euler resolutions read
*the same* Brownian path: the level-l increment over a cell is, bit for bit,
the float sum of its two level-(l+1) children.

Randomness comes from the counter-based Philox generator keyed by
(seed, stream_id), so any path in a Monte Carlo batch can be regenerated
independently of the others and batches are reproducible under any degree
of parallelism.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ResourceError, UsageError

MAX_LEVEL = 24  # memory guard: 2^24 cells * 8 bytes = 128 MiB per coordinate

__all__ = [
    "BrownianTree",
    "sample_tree",
    "sample_increment_batch",
    "increments_at_level",
    "reduce_to_level",
    "dump_tree",
    "load_tree",
    "MAX_LEVEL",
]


@dataclass(frozen=True)
class BrownianTree:
    """Finest-level Brownian increments plus the identifying key."""

    m: int
    T: float
    level: int
    increments: np.ndarray  # shape (2^level, m), increment k ~ N(0, h_L I)
    seed: int
    stream_id: int

    @property
    def h(self) -> float:
        return self.T / (1 << self.level)


_U64 = (1 << 64) - 1


def _rng(seed: int, stream_id: int) -> np.random.Generator:
    key = np.array([seed & _U64, stream_id & _U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _raw_increments(m: int, T: float, level: int, seed: int, stream_id: int) -> np.ndarray:
    n = 1 << level
    scale = np.sqrt(T / n)
    return _rng(seed, stream_id).standard_normal((n, m)) * scale


def sample_tree(m: int, T: float, level: int, seed: int, stream_id: int = 0) -> BrownianTree:
    """Draw a Brownian tree; deterministic for fixed (seed, stream_id)."""
    if m < 1:
        raise UsageError(f"m must be >= 1, got {m}")
    if T <= 0:
        raise UsageError(f"T must be positive, got {T}")
    if level < 0:
        raise UsageError(f"level must be nonnegative, got {level}")
    if level > MAX_LEVEL:
        raise ResourceError(f"level {level} exceeds finest-level guard {MAX_LEVEL}")
    inc = _raw_increments(m, T, level, seed, stream_id)
    return BrownianTree(m=m, T=T, level=level, increments=inc, seed=seed, stream_id=stream_id)


def sample_increment_batch(
    m: int, T: float, level: int, seed: int, stream_ids
) -> np.ndarray:
    """Stack per-stream finest increments into a (P, 2^level, m) array.

    Row p is bitwise identical to sample_tree(m, T, level, seed, stream_ids[p]).
    """
    if level > MAX_LEVEL:
        raise ResourceError(f"level {level} exceeds finest-level guard {MAX_LEVEL}")
    rows = [_raw_increments(m, T, level, seed, int(s)) for s in stream_ids]
    return np.stack(rows, axis=0)


def reduce_to_level(increments: np.ndarray, from_level: int, to_level: int) -> np.ndarray:
    """Sum (..., 2^from, m) increments down to (..., 2^to, m) by pairwise halving.

    Halving preserves the exact float identity parent = left + right at each
    level, which is what couples two resolutions to one Brownian path.
    """
    if to_level > from_level:
        raise UsageError(f"cannot refine level {from_level} to finer level {to_level}")
    if to_level < 0:
        raise UsageError(f"level must be nonnegative, got {to_level}")
    out = increments
    for _ in range(from_level - to_level):
        out = out[..., 0::2, :] + out[..., 1::2, :]
    return out.copy() if out is increments else out


def increments_at_level(tree: BrownianTree, level: int) -> np.ndarray:
    """Increments of the stored path read on the coarser level-l grid."""
    if level > tree.level:
        raise UsageError(f"level {level} finer than stored level {tree.level}")
    return reduce_to_level(tree.increments, tree.level, level)


_HEADER = struct.Struct("<QdQQQ")  # m, T, level, seed, stream_id (little-endian)


def dump_tree(tree: BrownianTree) -> bytes:
    """Binary dump: header fields then increments as float64 LE, coordinate-major."""
    head = _HEADER.pack(tree.m, tree.T, tree.level, tree.seed & _U64, tree.stream_id & _U64)
    payload = np.ascontiguousarray(tree.increments.T, dtype="<f8").tobytes()
    return head + payload


def load_tree(data: bytes) -> BrownianTree:
    """Inverse of dump_tree."""
    if len(data) < _HEADER.size:
        raise UsageError("truncated tree dump")
    m, T, level, seed, stream_id = _HEADER.unpack_from(data)
    n = 1 << level
    expected = _HEADER.size + 8 * n * m
    if len(data) != expected:
        raise UsageError(f"tree dump has {len(data)} bytes, expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    inc = flat.reshape(m, n).T.copy()
    return BrownianTree(m=int(m), T=float(T), level=int(level), increments=inc,
                        seed=int(seed), stream_id=int(stream_id))
