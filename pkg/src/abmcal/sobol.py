"""Unscrambled Sobol sequence (Gray-code construction, Joe & Kuo direction numbers)."""
from __future__ import annotations

import numpy as np

from .params import ParameterSpace, DimensionError, clamp

BITS = 32

# (degree s, coefficients a, initial direction integers m_1..m_s) for
# dimensions 2..21 of new-joe-kuo-6.21201; dimension 1 is van der Corput.
_JOE_KUO = (
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
    (6, 19, (1, 1, 1, 15, 7, 5)),
    (6, 22, (1, 3, 1, 15, 13, 25)),
    (6, 25, (1, 1, 5, 5, 19, 61)),
    (7, 1, (1, 3, 7, 11, 23, 15, 103)),
    (7, 4, (1, 3, 7, 13, 13, 15, 69)),
)

MAX_DIM = len(_JOE_KUO) + 1


class UnsupportedDimension(ValueError):
    pass


def _direction_numbers(dim: int) -> np.ndarray:
    v = np.zeros((dim, BITS), dtype=np.uint64)
    v[0] = [1 << (BITS - 1 - i) for i in range(BITS)]
    for j in range(1, dim):
        s, a, m = _JOE_KUO[j - 1]
        row = [m[i] << (BITS - 1 - i) for i in range(s)]
        for i in range(s, BITS):
            x = row[i - s] ^ (row[i - s] >> s)
            for k in range(1, s):
                if (a >> (s - 1 - k)) & 1:
                    x ^= row[i - k]
            row.append(x)
        v[j] = row
    return v


class SobolSequence:
    """Stateful Sobol stream over ``[0, 1)^dim``.

    The all-zeros point at index 0 is skipped, so the first emitted point
    in one dimension is 0.5.
    """

    def __init__(self, dim: int):
        if not 1 <= dim <= MAX_DIM:
            raise UnsupportedDimension(f"Sobol table covers 1..{MAX_DIM} dimensions, got {dim}")
        self.dim = dim
        self._v = _direction_numbers(dim)
        self._x = np.zeros(dim, dtype=np.uint64)
        self.index = 0

    def _advance(self) -> None:
        # Gray code: flip the direction number of the lowest zero bit of index
        c = (~self.index & (self.index + 1)).bit_length() - 1
        if c >= BITS:
            raise OverflowError("Sobol sequence exhausted")
        self._x ^= self._v[:, c]
        self.index += 1

    def next_point(self) -> np.ndarray:
        self._advance()
        return self._x.astype(float) / 2.0**BITS

    def take(self, n: int) -> np.ndarray:
        """Next ``n`` points as an ``(n, dim)`` array."""
        out = np.empty((n, self.dim))
        for i in range(n):
            out[i] = self.next_point()
        return out

    def reserve(self, n: int) -> "SobolSequence":
        """Hand out a copy positioned at the current index and skip ``n`` points here.

        Lets a caller generate a block in another worker while this
        stream moves on.
        """
        block = SobolSequence.__new__(SobolSequence)
        block.dim, block._v, block._x, block.index = self.dim, self._v, self._x.copy(), self.index
        for _ in range(n):
            self._advance()
        return block


def sample_sobol(space: ParameterSpace, n: int, seq: SobolSequence) -> np.ndarray:
    """``n`` consecutive points mapped onto the box (integer-days rounded)."""
    if seq.dim != space.dim:
        raise DimensionError(f"sequence has dimension {seq.dim}, space has {space.dim}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return clamp(space, space.from_unit(seq.take(n)))
