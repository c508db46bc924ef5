"""AWGN channel and Gaussian proposal weights.

All weights are log density ratios ``log pi(y|x) - log g(y|x)`` between the
target N(x, sigma2 I) and a shifted N(x + theta, sigma2 I) or inflated
N(x, c sigma2 I) proposal.  Residuals ``r = y - x`` may be a single vector of
shape (n,) or a batch of shape (N, n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelConfig",
    "Residual",
    "ScaleParams",
    "TiltParams",
    "apply_awgn",
    "log_weight_scale",
    "log_weight_tilt",
    "sigma2_from_snr",
]

DEFAULT_DELTA = 0.1


def sigma2_from_snr(snr_db: float) -> float:
    """Per-real-dimension noise variance ``0.5 * 10**(-snr_db/10)``."""
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    return 0.5 * 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    sigma2: float

    @classmethod
    def from_snr(cls, snr_db: float) -> "ChannelConfig":
        return cls(float(snr_db), sigma2_from_snr(snr_db))


@dataclass(frozen=True)
class TiltParams:
    theta: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if not np.all(np.isfinite(theta)):
            raise ValueError("tilt vector must be finite")
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class ScaleParams:
    c: float
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.c >= 1 + self.delta:
            raise ValueError(f"scale c={self.c} violates c >= 1 + delta = {1 + self.delta}")


@dataclass(frozen=True)
class Residual:
    """Residual ``y - x`` with its squared norm cached."""

    r: np.ndarray
    r2: np.ndarray | float

    @classmethod
    def of(cls, y, x) -> "Residual":
        r = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        return cls(r, np.einsum("...i,...i->...", r, r))


def apply_awgn(x, noise) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if x.shape != noise.shape:
        raise ValueError(f"signal shape {x.shape} does not match noise shape {noise.shape}")
    return x + noise


def _residual(res):
    return res.r if isinstance(res, Residual) else np.asarray(res, dtype=float)


def log_weight_tilt(res, theta, sigma2: float):
    """``(-2 r.theta + |theta|^2) / (2 sigma2)``."""
    r = _residual(res)
    theta = theta.theta if isinstance(theta, TiltParams) else np.asarray(theta, dtype=float)
    if r.shape[-1] != theta.shape[-1]:
        raise ValueError(f"residual dimension {r.shape[-1]} != tilt dimension {theta.shape[-1]}")
    return (-2.0 * (r @ theta) + theta @ theta) / (2.0 * sigma2)


def log_weight_scale(res, scale, sigma2: float, n: int | None = None):
    """``(n/2) ln c + (1/c - 1) |r|^2 / (2 sigma2)``.

    ``scale`` is a :class:`ScaleParams` or a bare ``c > 0``; ``n`` defaults to
    the residual's last dimension.
    """
    if isinstance(res, Residual):
        r2 = res.r2
        dim = res.r.shape[-1]
    else:
        r = np.asarray(res, dtype=float)
        r2 = np.einsum("...i,...i->...", r, r)
        dim = r.shape[-1]
    n = dim if n is None else n
    c = scale.c if isinstance(scale, ScaleParams) else float(scale)
    return 0.5 * n * np.log(c) + (1.0 / c - 1.0) * r2 / (2.0 * sigma2)
