"""Estimator-style front ends.

``fit(problem)`` runs the sampler and stores results in trailing-underscore
attributes; hyperparameters live in ``__init__`` so ``get_params``,
``set_params`` and ``sklearn.base.clone`` work as usual.

>>> from rareber import AdaptiveImportanceSampler, ThresholdProblem
>>> est = AdaptiveImportanceSampler(mode="scale", init_scale=4.0, seed=1)
>>> est.fit(ThresholdProblem(4.0)).report_.n_samples
9000
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _validation as v
from .adaptive import adaptive_loop
from .channel import DEFAULT_DELTA
from .estimators import AccumulatorSet, EstimateReport, mc_estimate
from .lowdisc import SequenceGenerator
from .normal_map import inv_normal_cdf

__all__ = ["AdaptiveImportanceSampler", "MonteCarloSampler"]


class MonteCarloSampler(BaseEstimator):
    """Plain (Q)MC estimate of the mean loss.

    Parameters
    ----------
    n_samples : int
        Words per pack.
    n_packs : int
        Number of packs; with more than one, ``std_err`` is the spread of the
        per-pack means.
    point_source : str
        Any :data:`rareber.lowdisc.KINDS`; this is the only thing that differs
        between MC, QMC and RQMC runs.
    seed : int
    chunk_size : int
        Words generated per vectorised block.
    """

    def __init__(self, n_samples=10_000, n_packs=1, point_source="pseudo-random", seed=0, chunk_size=1 << 16):
        self.n_samples = n_samples
        self.n_packs = n_packs
        self.point_source = point_source
        self.seed = seed
        self.chunk_size = chunk_size

    def _points(self, dim, start, count):
        return SequenceGenerator(self.point_source, dim, self.seed).points(start, count)

    def fit(self, problem, y=None):
        v.check_problem(problem)
        n = v.check_positive_int(self.n_samples, "n_samples")
        packs = v.check_positive_int(self.n_packs, "n_packs")
        v.check_point_source(self.point_source)
        chunk = v.check_positive_int(self.chunk_size, "chunk_size")
        total = n * packs
        sd = np.sqrt(problem.sigma2)
        losses = np.empty(total)
        for start in range(0, total, chunk):
            count = min(chunk, total - start)
            x, _, payload = problem.draw(self.seed, start, count)
            noise = sd * inv_normal_cdf(self._points(problem.noise_dim, start, count))
            losses[start:start + count] = problem.loss(payload, x + noise)
        self.losses_ = losses
        self.pack_means_ = losses.reshape(packs, n).mean(axis=1)
        report = mc_estimate(losses)
        if packs > 1:
            spread = self.pack_means_.std(ddof=1) / np.sqrt(packs)
            report = EstimateReport(report.p_hat, float(spread), report.ess, total, report.n_events)
        self.report_ = report
        return self

    def estimate(self) -> EstimateReport:
        check_is_fitted(self, "report_")
        return self.report_


class AdaptiveImportanceSampler(BaseEstimator):
    """Adaptive Gaussian importance sampling (tilt or scale proposals).

    Parameters
    ----------
    mode : {"scale", "tilt"}
    n_iter : int
        Adaptation rounds; samples from every round are pooled.
    n_samples_per_iter : int
    init_scale : float, optional
        Initial variance factor.  In tilt mode it makes the first round a
        scale-proposal pilot.
    init_tilt : array-like, optional
    delta : float
        Clamp margin, ``c >= 1 + delta``.
    point_source : str
        Point kind feeding the proposal noise.
    seed : int
    alpha, tol, max_iter :
        Damping, tolerance and iteration cap of the fixed-point solver.
    widen_on_zero : bool
        In scale mode, grow ``c`` by ``delta`` after a round with no errors.

    Attributes
    ----------
    report_ : EstimateReport
    history_ : list of ProposalState
    run_log_ : list of dict
    samples_ : WeightedSamples
    accumulator_ : AccumulatorSet
    """

    def __init__(
        self,
        mode="scale",
        n_iter=3,
        n_samples_per_iter=3000,
        init_scale=None,
        init_tilt=None,
        delta=DEFAULT_DELTA,
        point_source="pseudo-random",
        seed=0,
        alpha=0.5,
        tol=1e-8,
        max_iter=200,
        widen_on_zero=False,
    ):
        self.mode = mode
        self.n_iter = n_iter
        self.n_samples_per_iter = n_samples_per_iter
        self.init_scale = init_scale
        self.init_tilt = init_tilt
        self.delta = delta
        self.point_source = point_source
        self.seed = seed
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter
        self.widen_on_zero = widen_on_zero

    def fit(self, problem, y=None):
        v.check_problem(problem)
        v.check_choice(self.mode, "mode", ("scale", "tilt"))
        v.check_positive_int(self.n_iter, "n_iter")
        v.check_positive_int(self.n_samples_per_iter, "n_samples_per_iter")
        v.check_positive_float(self.delta, "delta")
        v.check_point_source(self.point_source)
        if self.init_scale is not None:
            v.check_positive_float(self.init_scale, "init_scale")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        result = adaptive_loop(
            problem,
            mode=self.mode,
            n_iter=self.n_iter,
            n_samples_per_iter=self.n_samples_per_iter,
            init_scale=self.init_scale,
            init_tilt=self.init_tilt,
            delta=self.delta,
            point_source=self.point_source,
            seed=self.seed,
            alpha=self.alpha,
            tol=self.tol,
            max_iter=self.max_iter,
            widen_on_zero=self.widen_on_zero,
        )
        self.report_ = result.report
        self.history_ = result.history
        self.run_log_ = result.run_log
        self.samples_ = result.samples
        self.accumulator_ = AccumulatorSet.from_samples(result.samples)
        self.proposal_ = result.final_state
        return self

    def estimate(self) -> EstimateReport:
        check_is_fitted(self, "report_")
        return self.report_
