"""Rare-event problems the samplers can be fitted to.

A problem draws transmitted words from ``pi(X)`` and scores received
vectors.  Draws are pure functions of ``(seed, start, count)`` so that word
``i`` is the same no matter how the index range is split.
"""

from __future__ import annotations

import numpy as np

from .channel import sigma2_from_snr
from .lowdisc import _mix64
from .modem import (
    bit_error_rate,
    demodulate,
    from_real,
    get_scheme,
    modulate,
    random_bits,
    to_real,
    word_error_indicator,
)

__all__ = ["LinkProblem", "ThresholdProblem"]


class ThresholdProblem:
    """``P(Y_1 > threshold)`` for ``Y ~ N(0, sigma2 I_dim)``, one fixed codeword."""

    def __init__(self, threshold: float = 4.0, sigma2: float = 1.0, dim: int = 1):
        self.threshold = float(threshold)
        self.sigma2 = float(sigma2)
        self.noise_dim = int(dim)

    def __repr__(self):
        return f"ThresholdProblem(threshold={self.threshold}, sigma2={self.sigma2}, dim={self.noise_dim})"

    def draw(self, seed, start, count):
        x = np.zeros((count, self.noise_dim))
        return x, np.zeros(count, dtype=np.int64), None

    def loss(self, payload, y):
        return (np.asarray(y)[:, 0] > self.threshold).astype(float)

    def exact(self) -> float:
        from scipy.special import erfc

        return 0.5 * erfc(self.threshold / np.sqrt(2 * self.sigma2))


def _codeword_ids(bits: np.ndarray) -> np.ndarray:
    length = bits.shape[1]
    if length <= 63:
        weights = (1 << np.arange(length - 1, -1, -1)).astype(np.int64)
        return bits.astype(np.int64) @ weights
    # long words: fold 63-bit chunks through the mixer
    h = np.zeros(len(bits), dtype=np.uint64)
    for lo in range(0, length, 63):
        chunk = bits[:, lo:lo + 63].astype(np.int64)
        weights = (1 << np.arange(chunk.shape[1] - 1, -1, -1)).astype(np.int64)
        h = _mix64(h ^ (chunk @ weights).astype(np.uint64))
    return (h >> np.uint64(1)).astype(np.int64)


class LinkProblem:
    """Uncoded modulated link over AWGN (identity code: codeword = message).

    Parameters
    ----------
    modulation : "bpsk" or "qam"
    order : QAM order (4, 16, 64); ignored for BPSK
    snr_db : float
    bits_per_word : int, optional
        Defaults to one symbol per word.
    loss : "ber" or "wer"
    """

    def __init__(self, modulation="qam", order=16, snr_db=10.0, bits_per_word=None, loss="ber"):
        self.scheme = get_scheme(modulation, None if modulation == "bpsk" else order)
        k = self.scheme.bits_per_symbol
        self.bits_per_word = int(bits_per_word or k)
        if self.bits_per_word <= 0 or self.bits_per_word % k:
            raise ValueError(f"bits_per_word must be a positive multiple of {k}")
        if loss not in ("ber", "wer"):
            raise ValueError(f"loss must be 'ber' or 'wer', got {loss!r}")
        self.loss_kind = loss
        self.snr_db = float(snr_db)
        self.sigma2 = sigma2_from_snr(snr_db)
        self.noise_dim = self.bits_per_word // k * self.scheme.real_dims_per_symbol

    def __repr__(self):
        return (
            f"LinkProblem({self.scheme.kind!r}, order={self.scheme.order}, snr_db={self.snr_db}, "
            f"bits_per_word={self.bits_per_word}, loss={self.loss_kind!r})"
        )

    def draw(self, seed, start, count):
        L = self.bits_per_word
        bits = random_bits(count * L, seed, start=start * L).reshape(count, L)
        x = to_real(modulate(bits, self.scheme), self.scheme)
        return x, _codeword_ids(bits), bits

    def loss(self, bits, y):
        decided = demodulate(from_real(y, self.scheme), self.scheme)
        if self.loss_kind == "ber":
            return bit_error_rate(bits, decided)
        return word_error_indicator(bits, decided).astype(float)
