"""Seeded, splittable random streams.

A stream is addressed by ``(seed, stream_id)``. Child streams get their id by
mixing the parent id with an integer key through splitmix64, so any component
(scene index, scheme, purpose) can own an independent stream without shared
state. Draws come from numpy's PCG64, which is platform independent.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def label_key(label: str) -> int:
    """Stable integer key for a string label (e.g. a scheme name)."""
    return zlib.crc32(label.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK and 0 <= self.stream_id <= _MASK):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def child(self, *keys) -> "RngStream":
        sid = self.stream_id
        for k in keys:
            if isinstance(k, str):
                k = label_key(k)
            sid = splitmix64(sid ^ splitmix64(int(k) & _MASK))
        return RngStream(self.seed, sid)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def int_seed(self) -> int:
        """A 32-bit seed derived from this stream, for APIs that take one."""
        return splitmix64(self.seed ^ splitmix64(self.stream_id)) & 0xFFFFFFFF
