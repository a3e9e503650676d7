"""Per-observation conditional densities, total log-likelihood, and the
score update for the time-varying instantaneous impact.

The observation density couples a Gaussian return equation with a Bernoulli
trade-sign equation on the logistic scale. For one effective trade,

    L_t = -1/2 log 2*pi - 1/2 log sigma2 - (r_t - mu1_t)^2 / (2 sigma2)
          + (1+x_t)/2 log pi_t + (1-x_t)/2 log(1 - pi_t).

The scaled score of L_t in the impact coefficient is s_t = x_t (r_t - mu1_t),
the raw score divided by the inverse Fisher information sigma2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import core
from ._kernels import kernels
from .core import (AggregationSpec, StaticParams, TickSeries,
                   LINEAR_VARIANTS, RAW_LAG_VARIANTS, SCORE_VARIANTS)
from .errors import LikelihoodDomainError, VariantError

#: trade-sign probabilities are clamped to [PI_CLIP, 1 - PI_CLIP] inside logs
PI_CLIP = 1e-12
#: fraction of clamped observations above which the likelihood is rejected
MAX_CLAMP_FRACTION = 1e-3

LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ScoreStep:
    """Score of one observation w.r.t. the impact coefficient.

    scaled_score = fisher_inv * score always; with unit trade signs the
    scaled score is just the return surprise carried onto the trade side.
    """

    score: float
    scaled_score: float
    fisher_inv: float


@dataclass
class LogLikResult:
    """Total and per-observation log-likelihood over the effective sample."""

    total: float
    per_obs: np.ndarray
    n_obs: int
    working_gaussian: bool = False
    n_clamped: int = 0


def score_step(b0_t: float, x_t: float, r_t: float, mu1_t: float,
               sigma2: float) -> ScoreStep:
    """Score and scaled score of the impact coefficient at one trade."""
    scaled = x_t * (r_t - mu1_t)
    return ScoreStep(score=scaled / sigma2, scaled_score=scaled, fisher_inv=sigma2)


def score_update(b0_t: float, x_t: float, r_t: float, mu1_t: float,
                 params: StaticParams) -> float:
    """Next impact value under the variant's score recursion.

    SDAMH-AR:  b_{0,t+1} = omega + beta*b_{0,t} + alpha*x_t*(r_t - mu1_t)
    SDAMH-INT: b_{0,t+1} = b_{0,t} + alpha*x_t*(r_t - mu1_t)
    """
    if params.variant not in SCORE_VARIANTS:
        raise VariantError(
            f"score_update needs a score-driven variant, got {params.variant}"
        )
    s = x_t * (r_t - mu1_t)
    if params.variant == "SDAMH-INT":
        return b0_t + params.alpha * s
    return params.omega + params.beta * b0_t + params.alpha * s


def effective_design(series: TickSeries, params: StaticParams,
                     spec: Optional[AggregationSpec] = None):
    """(r_eff, x_eff, design, cr, cx, warmup) for the variant's regressors.

    The effective sample always starts at trade L2 + 1 so likelihoods remain
    comparable across variants.
    """
    spec = spec or AggregationSpec()
    warmup = spec.L2
    r_eff = series.ret[warmup:]
    x_eff = series.sign[warmup:]
    if params.variant in RAW_LAG_VARIANTS:
        intercept = params.variant == "MH"
        design = core.raw_lag_design(series, params.p, warmup, intercept)
        cr = params.raw_ret_coefs() if intercept else params.raw_ret_coefs()[1:]
        cx = params.raw_trade_coefs() if intercept else params.raw_trade_coefs()[1:]
    else:
        design = core.lag_design(series, spec)
        cr = params.ret_coefs()
        cx = params.trade_coefs()
    return r_eff, x_eff, design, cr, cx, warmup


def _as_path(b0_path, n: int) -> np.ndarray:
    path = np.asarray(b0_path, dtype=float)
    if path.ndim == 0:
        return np.full(n, float(path))
    if len(path) != n:
        raise ValueError(f"b0_path length {len(path)} != effective sample {n}")
    return path


def loglik(series: TickSeries, params: StaticParams,
           b0_path: Union[float, np.ndarray, None] = None,
           spec: Optional[AggregationSpec] = None) -> LogLikResult:
    """Log-likelihood of a series under a given impact path.

    ``b0_path`` holds one impact value per effective observation; a scalar
    (default: params.b0) means a constant path, which is the only admissible
    shape for the static variants. For H/AH the trade equation is scored
    under a working Gaussian density so information criteria stay comparable;
    the result is flagged ``working_gaussian``.
    """
    r_eff, x_eff, design, cr, cx, warmup = effective_design(series, params, spec)
    n = len(r_eff)
    path = _as_path(params.b0 if b0_path is None else b0_path, n)
    state = design @ cr
    resid = r_eff - state - path * x_eff
    gauss = -0.5 * (LOG2PI + math.log(params.sigma2)) - resid * resid / (2.0 * params.sigma2)

    if params.variant in LINEAR_VARIANTS:
        s2x = params.sigma2_trade
        if s2x is None or not s2x > 0:
            raise ValueError("linear variants need a positive sigma2_trade for the "
                             "working-Gaussian trade likelihood")
        xresid = x_eff - design @ cx
        bern = -0.5 * (LOG2PI + math.log(s2x)) - xresid * xresid / (2.0 * s2x)
        per_obs = gauss + bern
        return LogLikResult(total=float(np.sum(per_obs)), per_obs=per_obs,
                            n_obs=n, working_gaussian=True)

    z = design @ cx
    az = np.abs(z)
    e = np.exp(-az)
    den = 1.0 + e
    p_big = 1.0 / den
    p_small = e / den
    pi = np.where(z >= 0.0, p_big, p_small)
    om_pi = np.where(z >= 0.0, p_small, p_big)
    p_obs = np.where(x_eff > 0.0, pi, om_pi)
    bad = p_obs < PI_CLIP
    n_clamped = int(np.count_nonzero(bad))
    if n_clamped > MAX_CLAMP_FRACTION * n:
        t_bad = warmup + 1 + int(np.argmax(bad))
        raise LikelihoodDomainError(
            f"trade-sign probability saturated on {n_clamped}/{n} observations "
            f"(first at trade {t_bad})", trade_index=t_bad)
    bern = np.log(np.maximum(p_obs, PI_CLIP))
    per_obs = gauss + bern
    return LogLikResult(total=float(np.sum(per_obs)), per_obs=per_obs,
                        n_obs=n, n_clamped=n_clamped)


def loglik_recursive_total(series: TickSeries, params: StaticParams,
                           b0_init: Optional[float] = None,
                           spec: Optional[AggregationSpec] = None) -> float:
    """Fast total log-likelihood with the impact path generated by the
    variant's own recursion (the MLE objective). Static variants keep a
    constant path because their alpha is zero."""
    if params.variant in LINEAR_VARIANTS:
        return loglik(series, params, spec=spec).total
    r_eff, x_eff, design, cr, cx, warmup = effective_design(series, params, spec)
    total, n_clamped, first_bad = kernels.loglik_fast(
        r_eff, x_eff, design, cr, cx, params.sigma2, params.omega, params.beta,
        params.alpha, params.b0 if b0_init is None else b0_init, PI_CLIP)
    if n_clamped > MAX_CLAMP_FRACTION * len(r_eff):
        t_bad = warmup + 1 + first_bad
        raise LikelihoodDomainError(
            f"trade-sign probability saturated on {n_clamped} observations "
            f"(first at trade {t_bad})", trade_index=t_bad)
    return total
