"""Adaptive Gaussian importance sampling.

The proposal family is either a mean shift ``N(x + theta, sigma2 I)`` or a
variance inflation ``N(x, c sigma2 I)`` of the AWGN target.  Parameters are
chosen to minimise the second moment of the IS estimator.  Given samples
``(r_i, l_i)`` with own log-weights ``lw_i`` (zero for target samples), the
second moment is estimated by

    M(theta) = mean(l^2 exp(lw) exp((-2 r.theta + |theta|^2) / (2 sigma2)))
    M(c)     = mean(l^2 exp(lw) c^(n/2) exp((1/c - 1) |r|^2 / (2 sigma2)))

and the stationary points satisfy the ratio equations solved by
:func:`update_theta_fixed_point` and :func:`update_c_fixed_point`.  The
``exp(lw)`` factor lets samples from any earlier proposal feed the update.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import logsumexp

from .channel import DEFAULT_DELTA, ScaleParams, TiltParams
from .estimators import (
    EstimateReport,
    NoErrorSamplesError,
    WeightedSamples,
    effective_sample_size,
    pool_weighted,
)
from .lowdisc import SequenceGenerator
from .normal_map import inv_normal_cdf

__all__ = [
    "AdaptiveResult",
    "ProposalState",
    "adaptive_loop",
    "grad_second_moment_scale",
    "grad_second_moment_tilt",
    "sample_block",
    "scale_ratio",
    "second_moment_scale",
    "second_moment_tilt",
    "tilt_ratio",
    "update_c_fixed_point",
    "update_theta_fixed_point",
    "write_run_log",
]

log = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


def _log_l2(loss):
    with np.errstate(divide="ignore"):
        return 2.0 * np.log(loss)


# --------------------------------------------------------------------------
# second-moment surrogates


def second_moment_tilt(samples: WeightedSamples, theta, sigma2: float) -> float:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    a = (
        _log_l2(samples.loss)
        + samples.log_w
        + (-2.0 * (samples.residual @ theta) + theta @ theta) / (2.0 * sigma2)
    )
    return float(np.exp(logsumexp(a) - np.log(len(samples))))


def grad_second_moment_tilt(samples: WeightedSamples, theta, sigma2: float) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    a = (
        _log_l2(samples.loss)
        + samples.log_w
        + (-2.0 * (samples.residual @ theta) + theta @ theta) / (2.0 * sigma2)
    )
    top = a.max()
    if not np.isfinite(top):
        return np.zeros_like(theta)
    w = np.exp(a - top)
    g = w @ (theta - samples.residual) / sigma2
    return g * np.exp(top) / len(samples)


def second_moment_scale(samples: WeightedSamples, c: float, sigma2: float, n: int | None = None) -> float:
    n = samples.dim if n is None else n
    s = samples.r2 / (2.0 * sigma2)
    a = _log_l2(samples.loss) + samples.log_w + 0.5 * n * np.log(c) + (1.0 / c - 1.0) * s
    return float(np.exp(logsumexp(a) - np.log(len(samples))))


def grad_second_moment_scale(samples: WeightedSamples, c: float, sigma2: float, n: int | None = None) -> float:
    n = samples.dim if n is None else n
    s = samples.r2 / (2.0 * sigma2)
    a = _log_l2(samples.loss) + samples.log_w + 0.5 * n * np.log(c) + (1.0 / c - 1.0) * s
    top = a.max()
    if not np.isfinite(top):
        return 0.0
    w = np.exp(a - top)
    g = np.dot(w, 0.5 * n / c - s / c**2)
    return float(g * np.exp(top) / len(samples))


# --------------------------------------------------------------------------
# fixed-point maps


def _events(samples: WeightedSamples) -> WeightedSamples:
    hit = samples.loss > 0
    if not hit.any():
        raise NoErrorSamplesError("no samples with positive loss")
    return samples.subset(hit)


def tilt_ratio(samples: WeightedSamples, theta, sigma2: float) -> np.ndarray:
    """Right-hand side of the optimal-tilt equation evaluated at ``theta``."""
    ev = _events(samples)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    a = _log_l2(ev.loss) + ev.log_w - (ev.residual @ theta) / sigma2
    w = np.exp(a - a.max())
    return w @ ev.residual / w.sum()


def scale_ratio(samples: WeightedSamples, c: float, sigma2: float, n: int | None = None) -> float:
    """Right-hand side of the stationary-scale equation evaluated at ``c``."""
    ev = _events(samples)
    n = ev.dim if n is None else n
    s = ev.r2 / (2.0 * sigma2)
    a = _log_l2(ev.loss) + ev.log_w + (1.0 / c - 1.0) * s
    w = np.exp(a - a.max())
    return float(2.0 * np.dot(w, s) / (n * w.sum()))


def update_theta_fixed_point(
    samples: WeightedSamples,
    theta_current,
    sigma2: float,
    alpha: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> TiltParams:
    """Solve ``theta = tilt_ratio(theta)`` by damped iteration from ``theta_current``.

    Raises :class:`NoErrorSamplesError` when no sample has positive loss.
    """
    ev = _events(samples)
    theta = np.atleast_1d(np.asarray(theta_current, dtype=float)).copy()
    for _ in range(max_iter):
        target = tilt_ratio(ev, theta, sigma2)
        step = target - theta
        if np.linalg.norm(step) < tol:
            theta = target
            break
        theta = theta + alpha * step
    else:
        log.debug("tilt fixed point hit max_iter=%d", max_iter)
    return TiltParams(theta)


def update_c_fixed_point(
    samples: WeightedSamples,
    c_current: float,
    sigma2: float,
    n: int | None = None,
    delta: float = DEFAULT_DELTA,
    alpha: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> ScaleParams:
    """Solve ``c = scale_ratio(c)`` by damped iteration, then clamp to ``c >= 1 + delta``.

    Iterates are kept at or above ``1 + delta``; if the stationary point lies
    below, the result is the clamp value.
    """
    ev = _events(samples)
    floor = 1.0 + delta
    c = max(float(c_current), floor)
    for _ in range(max_iter):
        target = scale_ratio(ev, c, sigma2, n)
        if abs(target - c) < tol * max(1.0, c) or (c == floor and target <= floor):
            c = target
            break
        c = max(floor, c + alpha * (target - c))
    else:
        log.debug("scale fixed point hit max_iter=%d", max_iter)
    return ScaleParams(max(floor, c), delta)


# --------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class ProposalState:
    """Proposal used for one iteration.

    Scale mode carries ``scale``.  Tilt mode carries a tilt per codeword id in
    ``tilts`` with ``default_tilt`` for ids not yet seen; a run whose first
    iteration is a scale pilot records ``mode="scale"`` for that iteration.
    """

    mode: str
    iteration: int
    scale: ScaleParams | None = None
    tilts: Mapping[int, np.ndarray] = field(default_factory=dict)
    default_tilt: np.ndarray | None = None

    @property
    def params(self):
        if self.mode == "scale":
            return self.scale
        if not self.tilts:
            return TiltParams(self.default_tilt)
        if len(self.tilts) == 1:
            return TiltParams(next(iter(self.tilts.values())))
        return {k: TiltParams(v) for k, v in self.tilts.items()}

    def tilt_rows(self, codeword_id: np.ndarray) -> np.ndarray:
        rows = np.empty((len(codeword_id), len(self.default_tilt)))
        rows[:] = self.default_tilt
        for cid, theta in self.tilts.items():
            rows[codeword_id == cid] = theta
        return rows

    def describe(self) -> dict:
        if self.mode == "scale":
            return {"c": self.scale.c, "delta": self.scale.delta}
        return {
            "default_theta": [float(t) for t in self.default_tilt],
            "theta": {str(k): [float(t) for t in v] for k, v in sorted(self.tilts.items())},
        }


def sample_block(problem, state: ProposalState, source: str, seed: int, start: int, count: int) -> WeightedSamples:
    """Draw words ``start .. start+count-1`` and their noise from ``state``'s proposal.

    The noise for word ``i`` is the point at cursor ``i`` of a ``source``
    generator pushed through the inverse normal CDF.
    """
    x, cid, payload = problem.draw(seed, start, count)
    n, sigma2 = problem.noise_dim, problem.sigma2
    z = inv_normal_cdf(SequenceGenerator(source, n, seed).points(start, count))
    if state.mode == "scale":
        c = state.scale.c
        eps = np.sqrt(c * sigma2) * z
        r2 = np.einsum("ij,ij->i", eps, eps)
        log_w = 0.5 * n * np.log(c) + (1.0 / c - 1.0) * r2 / (2.0 * sigma2)
    else:
        theta = state.tilt_rows(cid)
        eps = theta + np.sqrt(sigma2) * z
        r2 = np.einsum("ij,ij->i", eps, eps)
        log_w = (-2.0 * np.einsum("ij,ij->i", eps, theta) + np.einsum("ij,ij->i", theta, theta)) / (2.0 * sigma2)
    loss = problem.loss(payload, x + eps)
    return WeightedSamples(
        loss, log_w, eps, cid, np.full(count, state.iteration, dtype=np.int64), r2
    )


@dataclass
class AdaptiveResult:
    report: EstimateReport
    history: list[ProposalState]
    run_log: list[dict]
    samples: WeightedSamples

    @property
    def final_state(self) -> ProposalState:
        return self.history[-1]


def _next_state(state: ProposalState, mode: str, samples: WeightedSamples, sigma2: float, n: int,
                delta: float, alpha: float, tol: float, max_iter: int, widen_on_zero: bool) -> ProposalState:
    it = state.iteration + 1
    if mode == "scale":
        try:
            scale = update_c_fixed_point(samples, state.scale.c, sigma2, n, delta, alpha, tol, max_iter)
        except NoErrorSamplesError:
            c = state.scale.c + delta if widen_on_zero else state.scale.c
            scale = ScaleParams(c, delta)
        return ProposalState("scale", it, scale=scale)
    tilts = dict(state.tilts)
    hit = samples.loss > 0
    for cid in np.unique(samples.codeword_id[hit]):
        group = samples.subset(samples.codeword_id == cid)
        start = tilts.get(int(cid), state.default_tilt)
        tilts[int(cid)] = update_theta_fixed_point(group, start, sigma2, alpha, tol, max_iter).theta
    return ProposalState("tilt", it, tilts=tilts, default_tilt=state.default_tilt)


def adaptive_loop(
    problem,
    mode: str = "scale",
    n_iter: int = 3,
    n_samples_per_iter: int = 3000,
    init_scale: float | None = None,
    init_tilt=None,
    delta: float = DEFAULT_DELTA,
    point_source: str = "pseudo-random",
    seed: int = 0,
    alpha: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 200,
    widen_on_zero: bool = False,
    chunk_size: int = 1 << 16,
) -> AdaptiveResult:
    """Sample, weight and adapt for ``n_iter`` rounds, then pool every sample.

    ``mode="scale"`` starts from ``init_scale`` (default ``1 + delta``).
    ``mode="tilt"`` starts from ``init_tilt`` (default zero) or, when
    ``init_scale`` is given, from a first scale-proposal round whose samples
    seed the per-codeword tilts.  Each update uses all samples so far.
    Iterations without error events keep the current parameters.
    """
    if mode not in ("scale", "tilt"):
        raise ValueError(f"mode must be 'scale' or 'tilt', got {mode!r}")
    n, sigma2 = problem.noise_dim, problem.sigma2
    if mode == "scale" or init_scale is not None:
        c0 = 1.0 + delta if init_scale is None else max(float(init_scale), 1.0 + delta)
        state = ProposalState("scale", 0, scale=ScaleParams(c0, delta))
    else:
        theta0 = np.zeros(n) if init_tilt is None else np.broadcast_to(np.asarray(init_tilt, float), (n,)).copy()
        state = ProposalState("tilt", 0, default_tilt=theta0)

    parts: list[WeightedSamples] = []
    history: list[ProposalState] = []
    run_log: list[dict] = []
    cursor = 0
    for t in range(n_iter):
        history.append(state)
        block = WeightedSamples.concatenate(
            sample_block(problem, state, point_source, seed, s, min(chunk_size, cursor + n_samples_per_iter - s))
            for s in range(cursor, cursor + n_samples_per_iter, chunk_size)
        )
        cursor += n_samples_per_iter
        parts.append(block)
        events = int(np.count_nonzero(block.loss))
        run_log.append({
            "iteration": t,
            "mode": state.mode,
            "params": state.describe(),
            "n_samples": len(block),
            "error_events": events,
            "ess": effective_sample_size(block.log_w),
        })
        log.debug("iteration %d: %s events=%d", t, state.describe(), events)
        if t + 1 < n_iter:
            pooled = WeightedSamples.concatenate(parts)
            if state.mode == "scale" and mode == "tilt":
                state = ProposalState("tilt", state.iteration, default_tilt=np.zeros(n))
            state = _next_state(state, mode, pooled, sigma2, n, delta, alpha, tol, max_iter, widen_on_zero)

    samples = WeightedSamples.concatenate(parts)
    if not np.any(samples.loss > 0):
        report = EstimateReport(0.0, 0.0, effective_sample_size(samples.log_w), len(samples), 0)
    else:
        report = pool_weighted(samples)
    return AdaptiveResult(report, history, run_log, samples)


def write_run_log(records, path) -> None:
    """One JSON object per line."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
