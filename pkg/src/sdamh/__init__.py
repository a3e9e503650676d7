"""Score-driven aggregated modified Hasbrouck (SDAMH) model family.

Joint modeling of mid-point returns and trade signs in trade time:
simulation, maximum-likelihood estimation, online filtering of time-varying
instantaneous impact, Monte-Carlo cumulative impulse responses, and
closed-form permanent-impact estimation for transaction-cost analysis.
"""

from ._kernels import BACKEND, available_backends
from .core import (AggregationSpec, ConditionalMeans, LagAggregates,
                   StaticParams, TickSeries, TradeEvent, VARIANTS,
                   aggregate_lags, conditional_means, inv_logit)
from .models import LogLikResult, ScoreStep, loglik, score_step, score_update
from .simulate import (ScenarioPath, ShockStream, antithetic_pair,
                       scenario_path, simulate)

__version__ = "0.1.0"

__all__ = [
    "AggregationSpec", "ConditionalMeans", "LagAggregates", "StaticParams",
    "TickSeries", "TradeEvent", "VARIANTS", "BACKEND",
    "aggregate_lags", "available_backends", "conditional_means", "inv_logit",
    "LogLikResult", "ScoreStep", "loglik", "score_step", "score_update",
    "ScenarioPath", "ShockStream", "antithetic_pair", "scenario_path",
    "simulate",
]
