"""Point estimators for error probabilities and their diagnostics.

Weights always arrive as logs.  Every self-normalized quantity is computed
after subtracting the maximum log-weight, so adding a constant to all
log-weights leaves results unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "AccumulatorSet",
    "DegenerateWeightsError",
    "EstimateReport",
    "NoErrorSamplesError",
    "WeightedSamples",
    "conditional_is_estimate",
    "effective_sample_size",
    "is_estimate_snis",
    "is_estimate_unnormalized",
    "mc_estimate",
    "pool_weighted",
]


class DegenerateWeightsError(ValueError):
    """Raised when every importance weight is zero (log-weight -inf)."""


class NoErrorSamplesError(ValueError):
    """No sample with positive loss; proposal updates are undefined."""


@dataclass(frozen=True)
class EstimateReport:
    p_hat: float
    std_err: float
    ess: float
    n_samples: int
    n_events: int = -1

    @property
    def rel_err_pred(self) -> float:
        """Predicted relative error ``1 / sqrt(p_hat * N)`` (inf when p_hat is 0)."""
        if self.p_hat <= 0:
            return float("inf")
        return 1.0 / np.sqrt(self.p_hat * self.n_samples)

    @property
    def zero_events(self) -> bool:
        return self.n_events == 0

    def as_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "std_err": self.std_err,
            "ess": self.ess,
            "n_samples": self.n_samples,
            "n_events": self.n_events,
        }


@dataclass
class WeightedSamples:
    """Columnar batch of weighted samples.

    ``residual`` holds ``y - x`` per sample, shape (N, n); ``log_w`` is the
    log-weight against the proposal that generated each sample.
    """

    loss: np.ndarray
    log_w: np.ndarray
    residual: np.ndarray
    codeword_id: np.ndarray = None
    proposal_id: np.ndarray = None
    r2: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.loss = np.asarray(self.loss, dtype=float)
        n = len(self.loss)
        self.log_w = np.broadcast_to(np.asarray(self.log_w, dtype=float), (n,)).copy()
        res = np.asarray(self.residual, dtype=float)
        self.residual = res.reshape(n, -1)
        if self.codeword_id is None:
            self.codeword_id = np.zeros(n, dtype=np.int64)
        if self.proposal_id is None:
            self.proposal_id = np.zeros(n, dtype=np.int64)
        self.codeword_id = np.asarray(self.codeword_id)
        self.proposal_id = np.asarray(self.proposal_id, dtype=np.int64)
        if self.r2 is None:
            self.r2 = np.einsum("ij,ij->i", self.residual, self.residual)
        if np.any((self.loss < 0) | (self.loss > 1)):
            raise ValueError("losses must lie in [0, 1]")

    def __len__(self):
        return len(self.loss)

    @property
    def dim(self) -> int:
        return self.residual.shape[1]

    def subset(self, mask) -> "WeightedSamples":
        return WeightedSamples(
            self.loss[mask], self.log_w[mask], self.residual[mask],
            self.codeword_id[mask], self.proposal_id[mask], self.r2[mask],
        )

    @classmethod
    def concatenate(cls, parts) -> "WeightedSamples":
        parts = list(parts)
        return cls(
            np.concatenate([p.loss for p in parts]),
            np.concatenate([p.log_w for p in parts]),
            np.concatenate([p.residual for p in parts]),
            np.concatenate([p.codeword_id for p in parts]),
            np.concatenate([p.proposal_id for p in parts]),
            np.concatenate([p.r2 for p in parts]),
        )


def _nonempty(x, what="input"):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError(f"{what} must be nonempty")
    return x


def mc_estimate(losses) -> EstimateReport:
    """Plain sample mean with standard error ``s / sqrt(N)``."""
    losses = _nonempty(losses, "losses").ravel()
    n = losses.size
    sd = losses.std(ddof=1) if n > 1 else 0.0
    return EstimateReport(
        float(losses.mean()), float(sd / np.sqrt(n)), float(n), n, int(np.count_nonzero(losses))
    )


def is_estimate_unnormalized(samples: WeightedSamples) -> EstimateReport:
    """Mean of ``loss * w``; needs exact (normalized) log-weights."""
    loss = _nonempty(samples.loss, "samples")
    terms = loss * np.exp(samples.log_w)
    n = terms.size
    sd = terms.std(ddof=1) if n > 1 else 0.0
    return EstimateReport(
        float(terms.mean()), float(sd / np.sqrt(n)),
        effective_sample_size(samples.log_w), n, int(np.count_nonzero(loss)),
    )


def _snis(loss, log_w):
    finite = np.isfinite(log_w)
    if not finite.any():
        raise DegenerateWeightsError("all importance weights are zero")
    w = np.exp(log_w - log_w[finite].max())
    total = w.sum()
    p = float(np.dot(w, loss) / total)
    se = float(np.sqrt(np.dot(w * w, (loss - p) ** 2)) / total)
    ess = float(total**2 / np.dot(w, w))
    return p, se, ess


def is_estimate_snis(samples: WeightedSamples) -> EstimateReport:
    """Self-normalized ``sum(w loss) / sum(w)`` with delta-method standard error."""
    loss = _nonempty(samples.loss, "samples")
    p, se, ess = _snis(loss, samples.log_w)
    return EstimateReport(p, se, ess, loss.size, int(np.count_nonzero(loss)))


def pool_weighted(samples: WeightedSamples) -> EstimateReport:
    """One self-normalized estimate over samples drawn from several proposals.

    Each sample must carry the log-weight against its own proposal.
    """
    return is_estimate_snis(samples)


def conditional_is_estimate(samples: WeightedSamples) -> EstimateReport:
    """Average of per-codeword self-normalized estimates.

    With a single group the result is :func:`is_estimate_snis`; otherwise the
    standard error is the spread of the group estimates over ``sqrt(S)``.
    """
    _nonempty(samples.loss, "samples")
    groups = np.unique(samples.codeword_id)
    if len(groups) == 1:
        return is_estimate_snis(samples)
    estimates, ess = [], 0.0
    for g in groups:
        mask = samples.codeword_id == g
        try:
            p, _, e = _snis(samples.loss[mask], samples.log_w[mask])
        except DegenerateWeightsError:
            raise DegenerateWeightsError(f"all weights are zero in codeword group {g}") from None
        estimates.append(p)
        ess += e
    estimates = np.asarray(estimates)
    s = len(estimates)
    return EstimateReport(
        float(estimates.mean()), float(estimates.std(ddof=1) / np.sqrt(s)), ess,
        len(samples), int(np.count_nonzero(samples.loss)),
    )


def effective_sample_size(log_weights) -> float:
    """``(sum w)^2 / sum w^2`` from log-weights."""
    lw = _nonempty(log_weights, "log_weights").ravel()
    if not np.isfinite(lw).any():
        raise DegenerateWeightsError("all importance weights are zero")
    return float(np.exp(2 * logsumexp(lw) - logsumexp(2 * lw)))


@dataclass(frozen=True)
class AccumulatorSet:
    """Mergeable sums for the pooled estimate and the one-step proposal updates.

    Sums of ``w`` are stored divided by ``exp(shift)``; sums of ``w**2``
    divided by ``exp(2 * shift)``.  ``shift`` is the largest log-weight seen.
    """

    n: int = 0
    n_events: int = 0
    shift: float = -np.inf
    sw: float = 0.0
    swl: float = 0.0
    sw2: float = 0.0
    sw2l: float = 0.0
    sw2l2: float = 0.0
    sw2l2r: np.ndarray | None = None
    sw2l2r2: float = 0.0

    @classmethod
    def from_samples(cls, samples: WeightedSamples) -> "AccumulatorSet":
        if len(samples) == 0:
            return cls()
        lw = samples.log_w
        finite = np.isfinite(lw)
        shift = lw[finite].max() if finite.any() else -np.inf
        w = np.exp(lw - shift) if finite.any() else np.zeros_like(lw)
        l = samples.loss
        w2 = w * w
        w2l2 = w2 * l * l
        return cls(
            n=len(samples),
            n_events=int(np.count_nonzero(l)),
            shift=float(shift),
            sw=float(w.sum()),
            swl=float(np.dot(w, l)),
            sw2=float(w2.sum()),
            sw2l=float(np.dot(w2, l)),
            sw2l2=float(w2l2.sum()),
            sw2l2r=w2l2 @ samples.residual,
            sw2l2r2=float(np.dot(w2l2, samples.r2)),
        )

    def merge(self, other: "AccumulatorSet") -> "AccumulatorSet":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        shift = max(self.shift, other.shift)
        if not np.isfinite(shift):
            return replace(self, n=self.n + other.n, n_events=self.n_events + other.n_events)
        a = np.exp(self.shift - shift)
        b = np.exp(other.shift - shift)
        r_self = self.sw2l2r if self.sw2l2r is not None else 0.0
        r_other = other.sw2l2r if other.sw2l2r is not None else 0.0
        return AccumulatorSet(
            n=self.n + other.n,
            n_events=self.n_events + other.n_events,
            shift=shift,
            sw=a * self.sw + b * other.sw,
            swl=a * self.swl + b * other.swl,
            sw2=a * a * self.sw2 + b * b * other.sw2,
            sw2l=a * a * self.sw2l + b * b * other.sw2l,
            sw2l2=a * a * self.sw2l2 + b * b * other.sw2l2,
            sw2l2r=a * a * r_self + b * b * r_other,
            sw2l2r2=a * a * self.sw2l2r2 + b * b * other.sw2l2r2,
        )

    def report(self) -> EstimateReport:
        """The self-normalized estimate these sums describe."""
        if self.n == 0:
            raise ValueError("empty accumulator")
        if not self.sw > 0:
            raise DegenerateWeightsError("all importance weights are zero")
        p = self.swl / self.sw
        # sum w^2 (l - p)^2 expanded; losses are in [0, 1] so l^2 <= l
        var_num = max(self.sw2l2 - 2 * p * self.sw2l + p * p * self.sw2, 0.0)
        return EstimateReport(
            float(p), float(np.sqrt(var_num) / self.sw), float(self.sw**2 / self.sw2),
            self.n, self.n_events,
        )

    def tilt_ratio(self) -> np.ndarray:
        """``sum w^2 l^2 r / sum w^2 l^2``: the tilt fixed-point map at the sampling proposal."""
        if not self.sw2l2 > 0:
            raise NoErrorSamplesError("no samples with positive loss")
        return self.sw2l2r / self.sw2l2

    def scale_ratio(self, n: int, sigma2: float) -> float:
        """``2 sum w^2 l^2 s / (n sum w^2 l^2)`` with ``s = |r|^2 / (2 sigma2)``."""
        if not self.sw2l2 > 0:
            raise NoErrorSamplesError("no samples with positive loss")
        return 2.0 * (self.sw2l2r2 / (2.0 * sigma2)) / (n * self.sw2l2)
