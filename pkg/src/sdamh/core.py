"""Domain types, lag aggregation, and conditional means shared by every model variant.

Trade time is the only clock: events are indexed by a strictly increasing
ordinal ``t`` starting at 1. The first ``L2`` trades of a series are a
warm-up region that feeds the lag aggregates but carries no model quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InsufficientHistoryError, VariantError

DEFAULT_L1 = 10
DEFAULT_L2 = 100

VARIANTS = ("H", "AH", "MH", "AMH", "SDAMH-AR", "SDAMH-INT")
#: variants whose trade equation is linear with additive noise (OLS estimation)
LINEAR_VARIANTS = ("H", "AH")
#: variants parameterized by p raw lags instead of the aggregated triple
RAW_LAG_VARIANTS = ("H", "MH")
#: variants with a score-driven instantaneous impact
SCORE_VARIANTS = ("SDAMH-AR", "SDAMH-INT")

DEFAULT_RAW_LAGS = 5


def inv_logit(z):
    """Numerically stable inverse logistic map Logit^-1(z) = 1 / (1 + e^-z).

    Evaluated in branch form so that |z| > 700 does not overflow. Accepts
    scalars or arrays; returns the matching type.
    """
    arr = np.asarray(z, dtype=float)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    if np.ndim(z) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TradeEvent:
    """One trade in trade time.

    ``ret`` is the mid-point return (q_t - q_{t-1}) / q_{t-1} and ``sign`` is
    +1 for buyer-initiated, -1 for seller-initiated trades. ``mid``,
    ``volume`` and ``timestamp`` are optional (timestamp in seconds since
    midnight, used only for physical-time binning).
    """

    index: int
    ret: float
    sign: int
    mid: Optional[float] = None
    volume: Optional[float] = None
    timestamp: Optional[float] = None

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be -1 or +1, got {self.sign}")
        if not math.isfinite(self.ret):
            raise ValueError(f"ret must be finite, got {self.ret}")
        if self.mid is not None and not self.mid > 0:
            raise ValueError(f"mid must be positive, got {self.mid}")
        if self.volume is not None and not self.volume > 0:
            raise ValueError(f"volume must be positive, got {self.volume}")


class TickSeries:
    """Ordered trade events stored column-wise.

    Optional columns (``mid``, ``volume``, ``timestamp``) are either absent
    (None) or float arrays with NaN marking missing entries.
    """

    __slots__ = ("ret", "sign", "index", "mid", "volume", "timestamp")

    def __init__(self, ret, sign, index=None, mid=None, volume=None, timestamp=None):
        ret = np.ascontiguousarray(ret, dtype=float)
        sign = np.ascontiguousarray(sign, dtype=float)
        if ret.ndim != 1 or sign.shape != ret.shape:
            raise ValueError("ret and sign must be 1-d arrays of equal length")
        if not np.all(np.isfinite(ret)):
            raise ValueError("returns must be finite")
        if not np.all(np.abs(sign) == 1.0):
            raise ValueError("signs must be exactly -1 or +1")
        if index is None:
            index = np.arange(1, len(ret) + 1, dtype=np.int64)
        else:
            index = np.ascontiguousarray(index, dtype=np.int64)
            if index.shape != ret.shape:
                raise ValueError("index must match ret length")
            if len(index) > 1 and not np.all(np.diff(index) > 0):
                raise ValueError("trade indices must be strictly increasing")
        for name, col in (("mid", mid), ("volume", volume)):
            if col is not None:
                col = np.asarray(col, dtype=float)
                good = col[~np.isnan(col)]
                if np.any(good <= 0):
                    raise ValueError(f"{name} values must be positive where present")
        self.ret = ret
        self.sign = sign
        self.index = index
        self.mid = None if mid is None else np.ascontiguousarray(mid, dtype=float)
        self.volume = None if volume is None else np.ascontiguousarray(volume, dtype=float)
        self.timestamp = None if timestamp is None else np.ascontiguousarray(timestamp, dtype=float)

    def __len__(self) -> int:
        return len(self.ret)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TickSeries):
            return NotImplemented

        def col_eq(a, b):
            if a is None or b is None:
                return (a is None) == (b is None)
            return a.shape == b.shape and np.array_equal(a, b, equal_nan=True)

        return all(
            col_eq(getattr(self, name), getattr(other, name))
            for name in ("ret", "sign", "index", "mid", "volume", "timestamp")
        )

    @classmethod
    def from_events(cls, events: Sequence[TradeEvent]) -> "TickSeries":
        events = list(events)
        if not events:
            raise ValueError("empty event list")

        def opt(getter):
            vals = [getter(e) for e in events]
            if all(v is None for v in vals):
                return None
            return np.array([np.nan if v is None else v for v in vals], dtype=float)

        return cls(
            ret=[e.ret for e in events],
            sign=[e.sign for e in events],
            index=[e.index for e in events],
            mid=opt(lambda e: e.mid),
            volume=opt(lambda e: e.volume),
            timestamp=opt(lambda e: e.timestamp),
        )

    def events(self) -> Iterator[TradeEvent]:
        for k in range(len(self)):
            def cell(col):
                if col is None:
                    return None
                v = col[k]
                return None if np.isnan(v) else float(v)

            yield TradeEvent(
                index=int(self.index[k]),
                ret=float(self.ret[k]),
                sign=int(self.sign[k]),
                mid=cell(self.mid),
                volume=cell(self.volume),
                timestamp=cell(self.timestamp),
            )

    def head(self, n: int) -> "TickSeries":
        """First n trades as a new series (keeps original ordinals)."""
        return self._slice(slice(0, n))

    def tail(self, n: int) -> "TickSeries":
        return self._slice(slice(len(self) - n, len(self)))

    def _slice(self, sl: slice) -> "TickSeries":
        def cut(col):
            return None if col is None else col[sl]

        return TickSeries(
            ret=self.ret[sl], sign=self.sign[sl], index=self.index[sl],
            mid=cut(self.mid), volume=cut(self.volume), timestamp=cut(self.timestamp),
        )


@dataclass(frozen=True)
class AggregationSpec:
    """Short (L1) and long (L2) lag-aggregation horizons, in trades."""

    L1: int = DEFAULT_L1
    L2: int = DEFAULT_L2

    def __post_init__(self):
        if not (2 <= self.L1 < self.L2):
            raise ValueError(f"need 2 <= L1 < L2, got L1={self.L1}, L2={self.L2}")


@dataclass(frozen=True)
class LagAggregates:
    """Lagged and horizon-averaged regressors available just before trade t.

    ``r_L1`` averages lags 2..L1 of the return, ``r_L2`` averages lags
    L1+1..L2; the sign aggregates are built the same way, so |x_L1| <= 1 and
    |x_L2| <= 1 always hold.
    """

    r_lag1: float
    r_L1: float
    r_L2: float
    x_lag1: float
    x_L1: float
    x_L2: float


@dataclass(frozen=True)
class StaticParams:
    """Constant coefficients of one model variant plus score-recursion settings.

    The aggregated variants (AH, AMH, SDAMH-*) use the 16 named coefficients.
    Raw-lag variants (H, MH) instead carry ``a_lags``/``b_lags``/``c_lags``/
    ``d_lags`` tuples of length p (b_lags excludes the contemporaneous b0,
    which lives in ``b0``). The H variant has no intercepts; its mu1/mu2 stay 0.

    ``b0`` is the static instantaneous impact. For score-driven variants it is
    the initial value b_{0,1} of the recursion
    b_{0,t+1} = omega + beta*b_{0,t} + alpha*x_t*(r_t - mu1_t); the integrated
    variant pins omega = 0 and beta = 1 exactly.

    ``sigma2_trade`` is the second residual variance reported by OLS for the
    linear variants (the cross-equation noise correlation is fixed at zero to
    keep the model identified).
    """

    mu1: float = 0.0
    mu2: float = 0.0
    a1: float = 0.0
    a10bar: float = 0.0
    a100bar: float = 0.0
    b0: float = 0.0
    b1: float = 0.0
    b10bar: float = 0.0
    b100bar: float = 0.0
    c1: float = 0.0
    c10bar: float = 0.0
    c100bar: float = 0.0
    d1: float = 0.0
    d10bar: float = 0.0
    d100bar: float = 0.0
    sigma2: float = 1.0
    omega: float = 0.0
    beta: float = 1.0
    alpha: float = 0.0
    variant: str = "AMH"
    sigma2_trade: Optional[float] = None
    a_lags: Optional[tuple] = None
    b_lags: Optional[tuple] = None
    c_lags: Optional[tuple] = None
    d_lags: Optional[tuple] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise VariantError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.variant == "SDAMH-INT" and (self.omega != 0.0 or self.beta != 1.0):
            raise ValueError("integrated variant requires omega = 0 and beta = 1 exactly")
        if self.variant not in SCORE_VARIANTS and self.alpha != 0.0:
            raise ValueError(f"alpha must be 0 for static variant {self.variant}")
        if self.variant in RAW_LAG_VARIANTS:
            lags = (self.a_lags, self.b_lags, self.c_lags, self.d_lags)
            if any(l is None for l in lags):
                raise ValueError(f"variant {self.variant} needs a_lags/b_lags/c_lags/d_lags")
            p = len(self.a_lags)
            if p < 1 or any(len(l) != p for l in lags):
                raise ValueError("raw lag coefficient tuples must share a common length p >= 1")
            object.__setattr__(self, "a_lags", tuple(float(v) for v in self.a_lags))
            object.__setattr__(self, "b_lags", tuple(float(v) for v in self.b_lags))
            object.__setattr__(self, "c_lags", tuple(float(v) for v in self.c_lags))
            object.__setattr__(self, "d_lags", tuple(float(v) for v in self.d_lags))

    @property
    def p(self) -> Optional[int]:
        """Raw lag order for H/MH, None for aggregated variants."""
        return None if self.a_lags is None else len(self.a_lags)

    def ret_coefs(self) -> np.ndarray:
        """Return-equation coefficients on [1, r_1, r_L1, r_L2, x_1, x_L1, x_L2].

        The contemporaneous impact b0 is excluded: it multiplies x_t and is
        the piece that varies in time for score-driven variants.
        """
        if self.variant in RAW_LAG_VARIANTS:
            raise VariantError(f"{self.variant} uses raw lags; call raw_ret_coefs()")
        return np.array([self.mu1, self.a1, self.a10bar, self.a100bar,
                         self.b1, self.b10bar, self.b100bar], dtype=float)

    def trade_coefs(self) -> np.ndarray:
        """Trade-equation coefficients on the same regressor layout."""
        if self.variant in RAW_LAG_VARIANTS:
            raise VariantError(f"{self.variant} uses raw lags; call raw_trade_coefs()")
        return np.array([self.mu2, self.c1, self.c10bar, self.c100bar,
                         self.d1, self.d10bar, self.d100bar], dtype=float)

    def raw_ret_coefs(self) -> np.ndarray:
        """[mu1, a_1..a_p, b_1..b_p] for raw-lag variants (no b0)."""
        return np.array([self.mu1, *self.a_lags, *self.b_lags], dtype=float)

    def raw_trade_coefs(self) -> np.ndarray:
        return np.array([self.mu2, *self.c_lags, *self.d_lags], dtype=float)

    def n_free_params(self) -> int:
        """Parameter count K used by information criteria."""
        if self.variant == "H":
            return 4 * self.p + 3  # a,b0..bp,c,d + two residual variances
        if self.variant == "MH":
            return 4 * self.p + 4  # adds mu1, mu2; single sigma2
        if self.variant == "AH":
            return 17
        if self.variant == "AMH":
            return 16
        if self.variant == "SDAMH-INT":
            return 17  # b0 plays the role of the initial state b_{0,1}
        return 19  # SDAMH-AR adds omega, beta

    def with_(self, **kw) -> "StaticParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class ConditionalMeans:
    """Conditional means at one trade: return mean, logit-scale trade mean,
    market state (return mean net of the contemporaneous trade), and the buy
    probability pi_t."""

    mu1_t: float
    mu2_t: float
    state_t: float
    pi_t: float


def aggregate_lags(series: TickSeries, spec: AggregationSpec, t: int) -> LagAggregates:
    """Lagged and aggregated regressors for trade ordinal t (1-based).

    Needs t >= L2 + 1 so that the deepest lag exists; t may run to T + 1,
    which yields the information set for a one-step-ahead forecast.
    """
    T = len(series)
    if t < spec.L2 + 1:
        raise InsufficientHistoryError(
            f"trade index {t} has insufficient history (need t >= {spec.L2 + 1})"
        )
    if t > T + 1:
        raise InsufficientHistoryError(f"trade index {t} beyond series end {T}")
    p = t - 1  # 0-based position of trade t
    r, x = series.ret, series.sign
    n1 = spec.L1 - 1
    n2 = spec.L2 - spec.L1
    return LagAggregates(
        r_lag1=float(r[p - 1]),
        r_L1=float(np.sum(r[p - spec.L1:p - 1]) / n1),
        r_L2=float(np.sum(r[p - spec.L2:p - spec.L1]) / n2),
        x_lag1=float(x[p - 1]),
        x_L1=float(np.sum(x[p - spec.L1:p - 1]) / n1),
        x_L2=float(np.sum(x[p - spec.L2:p - spec.L1]) / n2),
    )


def conditional_means(params: StaticParams, b0_t: float, lags: LagAggregates,
                      x_t: float) -> ConditionalMeans:
    """Evaluate mu1_t, mu2_t, the market state and pi_t at one trade.

    state_t excludes the contemporaneous term, so mu1_t = state_t + b0_t*x_t
    holds exactly as floating-point identity.
    """
    state = (params.mu1
             + params.a1 * lags.r_lag1 + params.a10bar * lags.r_L1 + params.a100bar * lags.r_L2
             + params.b1 * lags.x_lag1 + params.b10bar * lags.x_L1 + params.b100bar * lags.x_L2)
    mu1 = state + b0_t * x_t
    mu2 = (params.mu2
           + params.c1 * lags.r_lag1 + params.c10bar * lags.r_L1 + params.c100bar * lags.r_L2
           + params.d1 * lags.x_lag1 + params.d10bar * lags.x_L1 + params.d100bar * lags.x_L2)
    return ConditionalMeans(mu1_t=mu1, mu2_t=mu2, state_t=state, pi_t=inv_logit(mu2))


def lag_design(series: TickSeries, spec: AggregationSpec) -> np.ndarray:
    """Design matrix of aggregated regressors for every effective trade.

    Row k corresponds to trade t = L2 + 1 + k and holds
    [1, r_{t-1}, r^{(L1)}_t, r^{(L2)}_t, x_{t-1}, x^{(L1)}_t, x^{(L2)}_t].
    Both model equations consume these same seven columns.
    """
    T = len(series)
    if T < spec.L2 + 1:
        raise InsufficientHistoryError(
            f"series of length {T} too short for L2={spec.L2} aggregation"
        )
    r, x = series.ret, series.sign
    n_eff = T - spec.L2
    out = np.empty((n_eff, 7), dtype=float)
    out[:, 0] = 1.0
    csr = np.concatenate(([0.0], np.cumsum(r)))
    csx = np.concatenate(([0.0], np.cumsum(x)))
    pos = np.arange(spec.L2, T)  # 0-based positions of effective trades
    n1 = spec.L1 - 1
    n2 = spec.L2 - spec.L1
    out[:, 1] = r[pos - 1]
    out[:, 2] = (csr[pos - 1] - csr[pos - spec.L1]) / n1
    out[:, 3] = (csr[pos - spec.L1] - csr[pos - spec.L2]) / n2
    out[:, 4] = x[pos - 1]
    out[:, 5] = (csx[pos - 1] - csx[pos - spec.L1]) / n1
    out[:, 6] = (csx[pos - spec.L1] - csx[pos - spec.L2]) / n2
    return out


def raw_lag_design(series: TickSeries, p: int, warmup: int,
                   intercept: bool) -> np.ndarray:
    """Design matrix with p raw lags of r and x for every effective trade.

    Columns: [1 if intercept] + [r_{t-1}..r_{t-p}] + [x_{t-1}..x_{t-p}].
    Effective trades start after ``warmup`` observations (shared with the
    aggregated variants so likelihoods stay comparable).
    """
    T = len(series)
    if warmup < p:
        raise ValueError("warmup must cover the raw lag order")
    if T < warmup + 1:
        raise InsufficientHistoryError(f"series of length {T} too short for warmup {warmup}")
    r, x = series.ret, series.sign
    pos = np.arange(warmup, T)
    cols = []
    if intercept:
        cols.append(np.ones(len(pos)))
    for i in range(1, p + 1):
        cols.append(r[pos - i])
    for i in range(1, p + 1):
        cols.append(x[pos - i])
    return np.column_stack(cols)
