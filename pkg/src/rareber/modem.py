"""Bits, Gray-mapped BPSK / square QAM, hard decisions and error metrics.

Words are 2-D uint8 arrays of shape (n_words, bits_per_word); a single word
may also be passed as a 1-D array.  Symbols are real for BPSK and complex for
QAM.  :func:`to_real` / :func:`from_real` flatten a symbol word to the real
noise coordinates the channel works in (BPSK: one per symbol, QAM: I and Q
interleaved).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .lowdisc import uniform_stream

__all__ = [
    "ModulationScheme",
    "bit_error_rate",
    "demodulate",
    "from_real",
    "get_scheme",
    "modulate",
    "random_bits",
    "to_real",
    "word_error_indicator",
]


def _gray(n: int) -> int:
    return n ^ (n >> 1)


@dataclass(frozen=True)
class ModulationScheme:
    """BPSK or square M-QAM with unit average symbol energy.

    For QAM the first half of each symbol's bits selects the in-phase level
    and the second half the quadrature level, each through a reflected Gray
    code.  Constellation index = the symbol's bit pattern read as an integer
    (MSB first).
    """

    kind: str
    order: int
    levels: np.ndarray = field(repr=False, compare=False)  # amplitude per axis, ordered by bit value
    constellation: np.ndarray = field(repr=False, compare=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def real_dims_per_symbol(self) -> int:
        return 1 if self.kind == "bpsk" else 2

    @property
    def min_distance(self) -> float:
        pts = self.constellation
        diff = np.abs(pts[:, None] - pts[None, :])
        return float(diff[diff > 0].min())


@lru_cache(maxsize=None)
def get_scheme(kind: str, order: int | None = None) -> ModulationScheme:
    """Build ``bpsk`` or ``qam`` (order 4, 16, 64) with Gray maps."""
    kind = kind.lower()
    if kind == "bpsk":
        if order not in (None, 2):
            raise ValueError("BPSK has order 2")
        levels = np.array([1.0, -1.0])  # bit 0 -> +1, bit 1 -> -1
        return ModulationScheme("bpsk", 2, levels, levels.copy())
    if kind != "qam":
        raise ValueError(f"unknown modulation {kind!r}")
    if order not in (4, 16, 64):
        raise ValueError(f"QAM order must be 4, 16 or 64, got {order!r}")
    side = int(round(np.sqrt(order)))
    scale = np.sqrt(2 * (order - 1) / 3)
    levels = np.empty(side)
    for position in range(side):
        levels[_gray(position)] = (2 * position - (side - 1)) / scale
    k = int(np.log2(side))
    idx = np.arange(order)
    constellation = levels[idx >> k] + 1j * levels[idx & (side - 1)]
    return ModulationScheme("qam", order, levels, constellation)


def random_bits(count: int, seed: int, start: int = 0) -> np.ndarray:
    """``count`` equiprobable bits from the seeded counter stream at offset ``start``."""
    if int(count) != count or count <= 0:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    return (uniform_stream(seed, start, int(count), tag=0xB175) < 0.5).astype(np.uint8)


def _bits_to_int(bits: np.ndarray, k: int) -> np.ndarray:
    groups = bits.reshape(*bits.shape[:-1], -1, k).astype(np.int64)
    weights = 1 << np.arange(k - 1, -1, -1)
    return groups @ weights


def modulate(word, scheme: ModulationScheme) -> np.ndarray:
    """Map bits to symbols; the last axis must be a multiple of bits-per-symbol."""
    bits = np.asarray(word)
    k = scheme.bits_per_symbol
    if bits.shape[-1] % k:
        raise ValueError(
            f"word length {bits.shape[-1]} is not a multiple of {k} bits per symbol"
        )
    return scheme.constellation[_bits_to_int(bits, k)]


def demodulate(received, scheme: ModulationScheme) -> np.ndarray:
    """Minimum-distance hard decision, ties to the lowest constellation index."""
    r = np.asarray(received)
    if scheme.kind == "bpsk":
        # levels[0] = +1 (bit 0), so a tie at 0 resolves to bit 0
        return (np.real(r) < 0).astype(np.uint8)
    side = len(scheme.levels)
    k = int(np.log2(side))
    # square grid is separable, and tied sets are products of per-axis ties
    i_bits = np.argmin(np.abs(np.real(r)[..., None] - scheme.levels), axis=-1)
    q_bits = np.argmin(np.abs(np.imag(r)[..., None] - scheme.levels), axis=-1)
    index = (i_bits << k) | q_bits
    shifts = np.arange(scheme.bits_per_symbol - 1, -1, -1)
    bits = (index[..., None] >> shifts) & 1
    return bits.reshape(*r.shape[:-1], -1).astype(np.uint8)


def to_real(symbols, scheme: ModulationScheme) -> np.ndarray:
    s = np.asarray(symbols)
    if scheme.kind == "bpsk":
        return np.real(s).astype(float)
    out = np.empty(s.shape[:-1] + (2 * s.shape[-1],))
    out[..., 0::2] = s.real
    out[..., 1::2] = s.imag
    return out


def from_real(y, scheme: ModulationScheme) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if scheme.kind == "bpsk":
        return y
    return y[..., 0::2] + 1j * y[..., 1::2]


def _check_pair(m, m_hat):
    m, m_hat = np.asarray(m), np.asarray(m_hat)
    if m.shape != m_hat.shape:
        raise ValueError(f"word shapes differ: {m.shape} vs {m_hat.shape}")
    return m, m_hat


def bit_error_rate(m, m_hat):
    """Fraction of differing bits; per word (last axis) for batches."""
    m, m_hat = _check_pair(m, m_hat)
    return np.mean(m != m_hat, axis=-1)


def word_error_indicator(m, m_hat):
    """1 if any bit of the word differs, else 0."""
    m, m_hat = _check_pair(m, m_hat)
    return np.any(m != m_hat, axis=-1).astype(np.int64)
