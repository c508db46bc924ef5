"""Rare-event bit/word error rate estimation on AWGN links.

Monte Carlo, quasi-Monte Carlo (Halton, Sobol, scrambled Sobol) and adaptive
Gaussian importance sampling with mean-shift or variance-scaling proposals.
"""

from .adaptive import AdaptiveResult, ProposalState, adaptive_loop
from .channel import ChannelConfig, ScaleParams, TiltParams, sigma2_from_snr
from .estimators import (
    AccumulatorSet,
    DegenerateWeightsError,
    EstimateReport,
    NoErrorSamplesError,
    WeightedSamples,
)
from .lowdisc import SequenceGenerator
from .problems import LinkProblem, ThresholdProblem
from .sampler import AdaptiveImportanceSampler, MonteCarloSampler

__version__ = "0.1.0"

__all__ = [
    "AccumulatorSet",
    "AdaptiveImportanceSampler",
    "AdaptiveResult",
    "ChannelConfig",
    "DegenerateWeightsError",
    "EstimateReport",
    "LinkProblem",
    "MonteCarloSampler",
    "NoErrorSamplesError",
    "ProposalState",
    "ScaleParams",
    "SequenceGenerator",
    "ThresholdProblem",
    "TiltParams",
    "WeightedSamples",
    "adaptive_loop",
    "sigma2_from_snr",
]
