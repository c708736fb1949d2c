"""Addressable normal-variate streams.

Every stream is identified by a :class:`StreamKey`.  The key is hashed into a
128-bit Philox key and the stream is read from counter zero, so any
(scenario, time step) substream can be opened directly without skipping
through the others.  This is what makes the engine's output independent of
how work is split between workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

# Shift applied to 53-bit uniforms so that they live in the open interval (0, 1).
_HALF_ULP = 2.0**-54


class Purpose(enum.IntEnum):
    OUTER = 0
    INNER = 1
    BASELINE = 2


@dataclass(frozen=True)
class StreamKey:
    seed: int
    purpose: Purpose
    time_index: int = 0
    scenario_index: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.time_index < 0 or self.scenario_index < 0:
            raise ValueError("time_index and scenario_index must be non-negative")
        object.__setattr__(self, "purpose", Purpose(self.purpose))

    def philox_key(self) -> np.ndarray:
        seq = np.random.SeedSequence(
            entropy=self.seed,
            spawn_key=(int(self.purpose), self.time_index, self.scenario_index),
        )
        return seq.generate_state(2, np.uint64)


class NormalStream:
    """Sequential reader of i.i.d. standard normals for one key.

    With ``antithetic=True`` the stream emits ``z0, -z0, z1, -z1, ...``.
    Reads are consistent under splitting: ``standard_normals(3)`` followed by
    ``standard_normals(2)`` returns the same five values as one read of 5.
    """

    def __init__(self, key: StreamKey, antithetic: bool = False):
        self.key = key
        self.antithetic = antithetic
        self._gen = np.random.Generator(np.random.Philox(key=key.philox_key()))
        self._position = 0
        self._pending: float | None = None

    @property
    def position(self) -> int:
        return self._position

    def _base(self, count: int) -> np.ndarray:
        return ndtri(self._gen.random(count) + _HALF_ULP)

    def standard_normals(self, count: int) -> np.ndarray:
        count = int(count)
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        if not self.antithetic:
            self._position += count
            return self._base(count)

        out = np.empty(count)
        start = 0
        if self._pending is not None:
            out[0] = -self._pending
            self._pending = None
            start = 1
        remaining = count - start
        if remaining > 0:
            n_base = (remaining + 1) // 2
            base = self._base(n_base)
            pairs = np.empty(2 * n_base)
            pairs[0::2] = base
            pairs[1::2] = -base
            out[start:] = pairs[:remaining]
            if remaining % 2:
                self._pending = float(base[-1])
        self._position += count
        return out

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        """``rows x cols`` block of variates filled in row-major order."""
        if rows * cols == 0:
            return np.empty((rows, cols))
        return self.standard_normals(rows * cols).reshape(rows, cols)


def open_stream(key: StreamKey, antithetic: bool = False) -> NormalStream:
    return NormalStream(key, antithetic=antithetic)


def standard_normals(stream: NormalStream, count: int) -> np.ndarray:
    return stream.standard_normals(count)
