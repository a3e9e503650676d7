"""Estimation pipeline: random-restart initialization, likelihood
maximization, forward-backward initialization of the impact recursion,
filtering, and simulation-based confidence bands.

Free parameters are optimized in a transformed space: the innovation
variance in logs and the score loading (and the autoregressive beta) on the
logit scale, which enforces positivity and the unit interval without
constrained optimization. Estimates and standard errors are reported in
natural units.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from . import core, models
from ._kernels import kernels
from ._kernels.pykernels import _Ring, _logistic_pair
from .core import (AggregationSpec, StaticParams, TickSeries,
                   DEFAULT_RAW_LAGS, LINEAR_VARIANTS, RAW_LAG_VARIANTS,
                   SCORE_VARIANTS)
from .errors import InsufficientHistoryError, SdamhError, VariantError

DEFAULT_N_DRAWS = 100_000
GRAD_REL_STEP = 1e-6
HESS_REL_STEP = 1e-4
INIT_CHUNK = 256

#: uniform draw ranges per coefficient family used by the random-restart search
FAMILY_RANGES = {
    "mu": (-2.0, 2.0),
    "a": (-1.0, 0.0),
    "b": (0.0, 1.0),
    "c": (-4.0, 0.0),
    "d": (0.0, 1.0),
    "sigma": (0.0, 1.0),  # drawn as a standard deviation, stored squared
    "alpha": (0.0, 1.0),
    # the stationary score recursion is not covered by the published ranges;
    # these defaults bracket impact-sized intercepts and persistent dynamics
    "omega": (-0.01, 0.01),
    "beta": (0.5, 1.0),
}


def _family_of(name: str) -> str:
    if name in ("sigma2", "alpha", "omega", "beta"):
        return "sigma" if name == "sigma2" else name
    if name.startswith("mu"):
        return "mu"
    return name[0]


def free_param_names(variant: str, p: int = DEFAULT_RAW_LAGS) -> List[str]:
    """Names of the free parameters, in packing order."""
    if variant in ("AMH", "SDAMH-AR", "SDAMH-INT"):
        names = ["mu1", "a1", "a10bar", "a100bar", "b0", "b1", "b10bar",
                 "b100bar", "mu2", "c1", "c10bar", "c100bar", "d1", "d10bar",
                 "d100bar", "sigma2"]
        if variant in SCORE_VARIANTS:
            names.append("alpha")
        if variant == "SDAMH-AR":
            names.extend(["omega", "beta"])
        return names
    if variant == "MH":
        return (["mu1"] + [f"a_lag{i}" for i in range(1, p + 1)]
                + ["b0"] + [f"b_lag{i}" for i in range(1, p + 1)]
                + ["mu2"] + [f"c_lag{i}" for i in range(1, p + 1)]
                + [f"d_lag{i}" for i in range(1, p + 1)] + ["sigma2"])
    raise VariantError(f"variant {variant} is estimated by OLS, not MLE")


def _params_from_vector(vec: np.ndarray, names: Sequence[str], variant: str,
                        p: int = DEFAULT_RAW_LAGS) -> StaticParams:
    vals = dict(zip(names, (float(v) for v in vec)))
    if variant == "MH":
        return StaticParams(
            mu1=vals["mu1"], mu2=vals["mu2"], b0=vals["b0"],
            sigma2=vals["sigma2"], variant="MH",
            a_lags=tuple(vals[f"a_lag{i}"] for i in range(1, p + 1)),
            b_lags=tuple(vals[f"b_lag{i}"] for i in range(1, p + 1)),
            c_lags=tuple(vals[f"c_lag{i}"] for i in range(1, p + 1)),
            d_lags=tuple(vals[f"d_lag{i}"] for i in range(1, p + 1)),
        )
    kw = dict(variant=variant)
    for n in names:
        kw[n] = vals[n]
    if variant == "SDAMH-INT":
        kw["omega"], kw["beta"] = 0.0, 1.0
    return StaticParams(**kw)


def _vector_from_params(params: StaticParams, names: Sequence[str]) -> np.ndarray:
    out = []
    for n in names:
        if n.startswith(("a_lag", "b_lag", "c_lag", "d_lag")):
            fam, idx = n.split("lag")
            arr = getattr(params, f"{fam[0]}_lags")
            out.append(arr[int(idx) - 1])
        else:
            out.append(getattr(params, n))
    return np.array(out, dtype=float)


def _to_opt(vec: np.ndarray, names: Sequence[str]) -> np.ndarray:
    out = vec.copy()
    for i, n in enumerate(names):
        if n == "sigma2":
            out[i] = math.log(vec[i])
        elif n in ("alpha", "beta"):
            v = min(max(vec[i], 1e-10), 1.0 - 1e-10)
            out[i] = math.log(v / (1.0 - v))
    return out


def _from_opt(vec: np.ndarray, names: Sequence[str]) -> np.ndarray:
    out = vec.copy()
    for i, n in enumerate(names):
        if n == "sigma2":
            out[i] = math.exp(vec[i])
        elif n in ("alpha", "beta"):
            out[i] = core.inv_logit(vec[i])
    return out


def _natural_jacobian(vec_opt: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """d(natural)/d(optimizer) for the delta-method standard errors."""
    jac = np.ones_like(vec_opt)
    for i, n in enumerate(names):
        if n == "sigma2":
            jac[i] = math.exp(vec_opt[i])
        elif n in ("alpha", "beta"):
            p = core.inv_logit(vec_opt[i])
            jac[i] = p * (1.0 - p)
    return jac


@dataclass
class InitSearchSpec:
    """Random-restart search settings: draw count and per-parameter ranges.

    ``ranges`` overrides the family defaults by exact parameter name; the
    sigma family is drawn as a standard deviation and stored squared.
    """

    n_draws: int = DEFAULT_N_DRAWS
    ranges: Optional[Dict[str, Tuple[float, float]]] = None
    seed: int = 0

    def __post_init__(self):
        for name, (lo, hi) in (self.ranges or {}).items():
            if not lo < hi:
                raise ValueError(f"range for {name} must satisfy lo < hi, got ({lo}, {hi})")

    def range_for(self, name: str) -> Tuple[float, float]:
        if self.ranges and name in self.ranges:
            return self.ranges[name]
        return FAMILY_RANGES[_family_of(name)]

    def check_contains(self, params: StaticParams,
                       p: int = DEFAULT_RAW_LAGS) -> List[str]:
        """Warn (and list) parameters of a reference vector falling outside
        the search ranges; the search cannot start near such values."""
        names = free_param_names(params.variant, p)
        vec = _vector_from_params(params, names)
        offenders = []
        for n, v in zip(names, vec):
            lo, hi = self.range_for(n)
            if n == "sigma2":
                v = math.sqrt(v)
            if not (lo < v < hi):
                offenders.append(n)
        if offenders:
            warnings.warn(
                "reference parameters outside init-search ranges: "
                + ", ".join(offenders), UserWarning)
        return offenders


@dataclass
class FilterState:
    """Filtered impact path with per-observation scores and likelihood."""

    b0_path: np.ndarray
    scores: np.ndarray
    loglik: models.LogLikResult
    b0_init: float
    variant: str


@dataclass
class BandEstimate:
    """Pointwise confidence band for the filtered impact path."""

    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.95
    n_sim: int = 0
    diagonal_fallback: bool = False


@dataclass
class FitReport:
    """Outcome of one estimation: estimates, uncertainty, and diagnostics."""

    method: str
    variant: str
    converged: bool
    n_iter: int
    grad_norm: float
    loglik: float
    n_obs: int
    param_names: List[str]
    estimates: Dict[str, float]
    std_errors: Dict[str, float]
    opt_names: List[str] = field(default_factory=list)
    theta_opt: Optional[np.ndarray] = None
    cov_opt: Optional[np.ndarray] = None
    init_loglik: Optional[float] = None
    message: str = ""

    def to_json(self) -> str:
        doc = {
            "method": self.method,
            "variant": self.variant,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "grad_norm": self.grad_norm,
            "loglik": self.loglik,
            "n_obs": self.n_obs,
            "estimates": {k: self.estimates[k] for k in self.param_names},
            "std_errors": {k: self.std_errors.get(k, float("nan"))
                           for k in self.param_names},
            "message": self.message,
        }
        if self.init_loglik is not None:
            doc["init_loglik"] = self.init_loglik
        return json.dumps(doc, indent=2)


def _candidate_matrix(spec: InitSearchSpec, names: Sequence[str]) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    lo = np.empty(len(names))
    hi = np.empty(len(names))
    for i, n in enumerate(names):
        lo[i], hi[i] = spec.range_for(n)
    draws = lo + (hi - lo) * rng.random((spec.n_draws, len(names)))
    for i, n in enumerate(names):
        if n == "sigma2":
            draws[:, i] = draws[:, i] ** 2
    return draws


def init_search(series: TickSeries, spec: InitSearchSpec, variant: str,
                agg: Optional[AggregationSpec] = None,
                p: int = DEFAULT_RAW_LAGS) -> StaticParams:
    """Best-of-n uniform random restart for the likelihood maximization.

    Each candidate is scored with a constant impact path at its drawn b0, so
    the search cost is one likelihood sweep per draw regardless of variant.
    """
    if variant in LINEAR_VARIANTS:
        raise VariantError("linear variants are estimated by OLS and need no search")
    agg = agg or AggregationSpec()
    names = free_param_names(variant, p)
    draws = _candidate_matrix(spec, names)

    probe = _params_from_vector(draws[0], names, variant, p)
    r_eff, x_eff, design, _, _, _ = models.effective_design(series, probe, agg)
    n = len(r_eff)
    idx = {name: i for i, name in enumerate(names)}
    if variant == "MH":
        cr_cols = ["mu1"] + [f"a_lag{i}" for i in range(1, p + 1)] + [f"b_lag{i}" for i in range(1, p + 1)]
        cx_cols = ["mu2"] + [f"c_lag{i}" for i in range(1, p + 1)] + [f"d_lag{i}" for i in range(1, p + 1)]
    else:
        cr_cols = ["mu1", "a1", "a10bar", "a100bar", "b1", "b10bar", "b100bar"]
        cx_cols = ["mu2", "c1", "c10bar", "c100bar", "d1", "d10bar", "d100bar"]
    cr_ix = [idx[c] for c in cr_cols]
    cx_ix = [idx[c] for c in cx_cols]
    b0_ix = idx["b0"]
    s2_ix = idx["sigma2"]

    best_val = -np.inf
    best_row = -1
    for lo_i in range(0, len(draws), INIT_CHUNK):
        chunk = draws[lo_i:lo_i + INIT_CHUNK]
        states = design @ chunk[:, cr_ix].T
        resid = r_eff[:, None] - states - x_eff[:, None] * chunk[None, :, b0_ix]
        rss = np.einsum("ij,ij->j", resid, resid)
        s2 = chunk[:, s2_ix]
        gauss = -0.5 * n * (models.LOG2PI + np.log(s2)) - rss / (2.0 * s2)
        zmat = design @ chunk[:, cx_ix].T
        bern = -np.logaddexp(0.0, -(x_eff[:, None] * zmat)).sum(axis=0)
        tot = gauss + bern
        tot[~np.isfinite(tot)] = -np.inf
        j = int(np.argmax(tot))
        if tot[j] > best_val:
            best_val = float(tot[j])
            best_row = lo_i + j
    if not np.isfinite(best_val):
        raise SdamhError("init search failed: every candidate produced a "
                         "non-finite likelihood")
    return _params_from_vector(draws[best_row], names, variant, p)


def _constant_path_loglik(series: TickSeries, params: StaticParams,
                          agg: AggregationSpec) -> float:
    return models.loglik(series, params, b0_path=params.b0, spec=agg).total


def forward_backward_init(series: TickSeries, params: StaticParams,
                          f0: float = 0.0,
                          agg: Optional[AggregationSpec] = None) -> float:
    """Initial impact estimate from one forward and one backward pass.

    The forward recursion runs the integrated update seeded at ``f0``; the
    backward recursion runs the same update in reverse trade order seeded at
    the forward terminal value. Each pass feeds its own running value into
    the conditional mean. Returns the backward value at the first effective
    trade.
    """
    if params.variant != "SDAMH-INT":
        raise VariantError("forward-backward initialization applies to the "
                           "integrated variant")
    agg = agg or AggregationSpec()
    r_eff, x_eff, design, cr, _, _ = models.effective_design(series, params, agg)
    g = x_eff * (r_eff - design @ cr)
    a = params.alpha
    fwd = kernels.filter_path(g, 0.0, 1.0, a, f0)
    f_term = fwd[-1] + a * (g[-1] - fwd[-1])
    grev = g[::-1]
    bwd = kernels.filter_path(grev, 0.0, 1.0, a, f_term)
    return float(bwd[-1] + a * (grev[-1] - bwd[-1]))


def filter_series(series: TickSeries, params: StaticParams,
                  b0_init: Optional[float] = None,
                  agg: Optional[AggregationSpec] = None) -> FilterState:
    """Single sequential pass producing the filtered impact path.

    For static variants the path is constant at params.b0 (their score
    loading is zero), so the same recursion covers every variant.
    """
    agg = agg or AggregationSpec()
    b0 = params.b0 if b0_init is None else float(b0_init)
    if params.variant in LINEAR_VARIANTS or params.variant in RAW_LAG_VARIANTS:
        ll = models.loglik(series, params, b0_path=b0, spec=agg)
        r_eff, x_eff, design, cr, _, _ = models.effective_design(series, params, agg)
        scores = x_eff * (r_eff - design @ cr) - b0
        return FilterState(b0_path=np.full(ll.n_obs, b0), scores=scores,
                           loglik=ll, b0_init=b0, variant=params.variant)
    total, per_obs, path, scores, n_clamped, first_bad = kernels.filter_detail(
        series.ret, series.sign, agg.L1, agg.L2, params.ret_coefs(),
        params.trade_coefs(), params.sigma2, params.omega, params.beta,
        params.alpha, b0, models.PI_CLIP)
    n = len(per_obs)
    if n_clamped > models.MAX_CLAMP_FRACTION * n:
        from .errors import LikelihoodDomainError
        t_bad = agg.L2 + 1 + first_bad
        raise LikelihoodDomainError(
            f"trade-sign probability saturated on {n_clamped}/{n} observations "
            f"(first at trade {t_bad})", trade_index=t_bad)
    ll = models.LogLikResult(total=total, per_obs=per_obs, n_obs=n,
                             n_clamped=n_clamped)
    return FilterState(b0_path=path, scores=scores, loglik=ll, b0_init=b0,
                       variant=params.variant)


class OnlineFilter:
    """Trade-by-trade filter reproducing the batch pass bit for bit.

    Construct with at least L2 trades of history, then feed one trade at a
    time; each update returns (b0_used, score, loglik_term) for that trade.
    """

    def __init__(self, params: StaticParams, history: TickSeries,
                 b0_init: Optional[float] = None,
                 agg: Optional[AggregationSpec] = None):
        if params.variant in LINEAR_VARIANTS or params.variant in RAW_LAG_VARIANTS:
            raise VariantError("online filtering needs an aggregated logistic variant")
        agg = agg or AggregationSpec()
        if len(history) < agg.L2:
            raise InsufficientHistoryError(
                f"online filter needs at least L2={agg.L2} trades of history")
        self.agg = agg
        self.params = params
        hr = history.ret[-agg.L2:].tolist()
        hx = history.sign[-agg.L2:].tolist()
        self._ring = _Ring(hr, hx, agg.L1, agg.L2)
        self._cr = params.ret_coefs().tolist()
        self._cx = params.trade_coefs().tolist()
        self._gauss_const = -0.5 * (models.LOG2PI + math.log(params.sigma2))
        self._inv2s2 = 1.0 / (2.0 * params.sigma2)
        self.b0 = params.b0 if b0_init is None else float(b0_init)

    def update(self, ret: float, sign: float) -> Tuple[float, float, float]:
        c = self._cr
        d = self._cx
        r1, rl1, rl2, x1, xl1, xl2 = self._ring.lags()
        state = c[0] + c[1] * r1 + c[2] * rl1 + c[3] * rl2 + c[4] * x1 + c[5] * xl1 + c[6] * xl2
        zt = d[0] + d[1] * r1 + d[2] * rl1 + d[3] * rl2 + d[4] * x1 + d[5] * xl1 + d[6] * xl2
        g = sign * (ret - state)
        s = g - self.b0
        pi, om_pi = _logistic_pair(zt)
        p_obs = pi if sign > 0.0 else om_pi
        if p_obs < models.PI_CLIP:
            p_obs = models.PI_CLIP
        ll = self._gauss_const - s * s * self._inv2s2 + math.log(p_obs)
        b0_used = self.b0
        p = self.params
        self.b0 = p.omega + p.beta * self.b0 + p.alpha * s
        self._ring.push(float(ret), float(sign))
        return b0_used, s, ll


def _ols_equation(y: np.ndarray, X: np.ndarray):
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    n, k = X.shape
    rss = float(resid @ resid)
    sigma2_ml = rss / n
    dof = max(n - k, 1)
    xtx_inv = np.linalg.pinv(X.T @ X)
    se = np.sqrt(np.maximum(np.diag(xtx_inv) * rss / dof, 0.0))
    return coef, se, sigma2_ml, resid


def _fit_ols(series: TickSeries, variant: str, agg: AggregationSpec,
             p: int) -> Tuple[StaticParams, FitReport]:
    r_eff = series.ret[agg.L2:]
    x_eff = series.sign[agg.L2:]
    if variant == "H":
        D = core.raw_lag_design(series, p, agg.L2, intercept=False)
        Xr = np.column_stack([D[:, :p], x_eff, D[:, p:]])
        Xx = D
        names_r = [f"a_lag{i}" for i in range(1, p + 1)] + ["b0"] + [f"b_lag{i}" for i in range(1, p + 1)]
        names_x = [f"c_lag{i}" for i in range(1, p + 1)] + [f"d_lag{i}" for i in range(1, p + 1)]
    else:  # AH
        D = core.lag_design(series, agg)
        Xr = np.column_stack([D[:, :4], x_eff, D[:, 4:]])
        Xx = D
        names_r = ["mu1", "a1", "a10bar", "a100bar", "b0", "b1", "b10bar", "b100bar"]
        names_x = ["mu2", "c1", "c10bar", "c100bar", "d1", "d10bar", "d100bar"]
    coef_r, se_r, s2_r, _ = _ols_equation(r_eff, Xr)
    coef_x, se_x, s2_x, _ = _ols_equation(x_eff, Xx)
    est = dict(zip(names_r, coef_r))
    est.update(zip(names_x, coef_x))
    se = dict(zip(names_r, se_r))
    se.update(zip(names_x, se_x))
    if variant == "H":
        params = StaticParams(
            b0=est["b0"], sigma2=s2_r, sigma2_trade=s2_x, variant="H",
            a_lags=tuple(est[f"a_lag{i}"] for i in range(1, p + 1)),
            b_lags=tuple(est[f"b_lag{i}"] for i in range(1, p + 1)),
            c_lags=tuple(est[f"c_lag{i}"] for i in range(1, p + 1)),
            d_lags=tuple(est[f"d_lag{i}"] for i in range(1, p + 1)),
        )
    else:
        params = StaticParams(sigma2=s2_r, sigma2_trade=s2_x, variant="AH",
                              **{k: est[k] for k in names_r + names_x})
    est["sigma2"] = s2_r
    est["sigma2_trade"] = s2_x
    ll = models.loglik(series, params, b0_path=params.b0, spec=agg)
    names = names_r + names_x + ["sigma2", "sigma2_trade"]
    report = FitReport(
        method="ols", variant=variant, converged=True, n_iter=1,
        grad_norm=0.0, loglik=ll.total, n_obs=ll.n_obs, param_names=names,
        estimates=est, std_errors=se,
        message="per-equation OLS; likelihood is a working Gaussian in the "
                "trade equation")
    return params, report


def _central_gradient(fun, x: np.ndarray, rel_step: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(len(x)):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return g


def _hessian_from_grad(fun, x: np.ndarray, rel_step: float) -> np.ndarray:
    n = len(x)
    H = np.empty((n, n))
    for i in range(n):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        gp = _central_gradient(fun, xp, GRAD_REL_STEP)
        gm = _central_gradient(fun, xm, GRAD_REL_STEP)
        H[:, i] = (gp - gm) / (2.0 * h)
    return 0.5 * (H + H.T)


def fit(series: TickSeries, variant: str,
        spec: Optional[InitSearchSpec] = None,
        agg: Optional[AggregationSpec] = None,
        p: int = DEFAULT_RAW_LAGS,
        start: Optional[StaticParams] = None,
        maxiter: int = 600,
        compute_cov: bool = True) -> Tuple[StaticParams, FilterState, FitReport]:
    """Full estimation of one variant on one series.

    Linear variants are estimated by per-equation OLS. The others maximize
    the joint likelihood with BFGS over the transformed parameter space,
    starting from the best random draw (or from ``start`` when supplied);
    the integrated variant's initial impact is seeded by the
    forward-backward pass and then estimated jointly. Standard errors come
    from the inverse finite-difference Hessian at the optimum.
    """
    agg = agg or AggregationSpec()
    if len(series) < 2 * agg.L2:
        raise InsufficientHistoryError(
            f"fit needs at least 2*L2 = {2 * agg.L2} trades, got {len(series)}")
    if variant in LINEAR_VARIANTS:
        params, report = _fit_ols(series, variant, agg, p)
        state = filter_series(series, params, agg=agg)
        return params, state, report

    names = free_param_names(variant, p)
    if start is None:
        spec = spec or InitSearchSpec()
        start = init_search(series, spec, variant, agg, p)
    init_ll = models.loglik_recursive_total(series, start, spec=agg)
    if not np.isfinite(init_ll):
        raise SdamhError("non-finite likelihood at the starting point")
    if variant == "SDAMH-INT":
        b0_fb = forward_backward_init(series, start, f0=start.b0, agg=agg)
        start = start.with_(b0=b0_fb)
        init_ll = max(init_ll, models.loglik_recursive_total(series, start, spec=agg))

    r_eff, x_eff, design, _, _, _ = models.effective_design(series, start, agg)
    idx = {name: i for i, name in enumerate(names)}
    if variant == "MH":
        cr_cols = ["mu1"] + [f"a_lag{i}" for i in range(1, p + 1)] + [f"b_lag{i}" for i in range(1, p + 1)]
        cx_cols = ["mu2"] + [f"c_lag{i}" for i in range(1, p + 1)] + [f"d_lag{i}" for i in range(1, p + 1)]
    else:
        cr_cols = ["mu1", "a1", "a10bar", "a100bar", "b1", "b10bar", "b100bar"]
        cx_cols = ["mu2", "c1", "c10bar", "c100bar", "d1", "d10bar", "d100bar"]
    cr_ix = np.array([idx[c] for c in cr_cols])
    cx_ix = np.array([idx[c] for c in cx_cols])
    b0_ix = idx["b0"]
    s2_ix = idx["sigma2"]
    al_ix = idx.get("alpha")
    om_ix = idx.get("omega")
    be_ix = idx.get("beta")

    def neg_loglik_opt(vec_opt: np.ndarray) -> float:
        nat = _from_opt(vec_opt, names)
        sigma2 = nat[s2_ix]
        if not (np.isfinite(sigma2) and sigma2 > 0):
            return 1e100
        alpha = nat[al_ix] if al_ix is not None else 0.0
        omega = nat[om_ix] if om_ix is not None else 0.0
        beta = nat[be_ix] if be_ix is not None else 1.0
        total, n_clamped, _ = kernels.loglik_fast(
            r_eff, x_eff, design, nat[cr_ix], nat[cx_ix], sigma2,
            omega, beta, alpha, nat[b0_ix], models.PI_CLIP)
        if not np.isfinite(total) or n_clamped > models.MAX_CLAMP_FRACTION * len(r_eff):
            return 1e100
        return -total

    x0 = _to_opt(_vector_from_params(start, names), names)

    def jac(v):
        return _central_gradient(neg_loglik_opt, v, GRAD_REL_STEP)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(neg_loglik_opt, x0, jac=jac, method="BFGS",
                       options={"maxiter": maxiter, "gtol": 1e-7})
        # a fresh Hessian approximation often escapes precision-loss stalls
        if not res.success and res.nit < maxiter:
            res2 = minimize(neg_loglik_opt, res.x, jac=jac, method="BFGS",
                            options={"maxiter": maxiter - res.nit, "gtol": 1e-7})
            if res2.fun <= res.fun:
                res2.nit += res.nit
                res = res2
    theta_opt = res.x if np.isfinite(res.fun) and res.fun <= neg_loglik_opt(x0) else x0
    final_nat = _from_opt(theta_opt, names)
    params = _params_from_vector(final_nat, names, variant, p)
    final_ll = -neg_loglik_opt(theta_opt)
    grad_norm = float(np.max(np.abs(jac(theta_opt))))

    cov_opt = None
    se = {}
    if compute_cov:
        H = _hessian_from_grad(neg_loglik_opt, theta_opt, HESS_REL_STEP)
        try:
            cov_opt = np.linalg.inv(H)
        except np.linalg.LinAlgError:
            cov_opt = np.linalg.pinv(H)
        dnat = _natural_jacobian(theta_opt, names)
        var = np.diag(cov_opt) * dnat * dnat
        se = {n: (math.sqrt(v) if v > 0 else float("nan"))
              for n, v in zip(names, var)}

    report = FitReport(
        method="mle", variant=variant, converged=bool(res.success),
        n_iter=int(res.nit), grad_norm=grad_norm, loglik=final_ll,
        n_obs=len(r_eff), param_names=list(names),
        estimates={n: float(v) for n, v in zip(names, final_nat)},
        std_errors=se, opt_names=list(names), theta_opt=theta_opt,
        cov_opt=cov_opt, init_loglik=init_ll,
        message=res.message if isinstance(res.message, str) else "")
    state = filter_series(series, params, agg=agg)
    return params, state, report


def confidence_bands(series: TickSeries, params: StaticParams,
                     report: FitReport, n_sim: int = 200, level: float = 0.95,
                     seed: int = 0,
                     agg: Optional[AggregationSpec] = None) -> BandEstimate:
    """Pointwise confidence band for the filtered impact path.

    Draws parameter vectors from the Gaussian asymptotic distribution of the
    estimates (in the transformed space where it holds), re-filters the
    observed series under each, and returns level-quantile envelopes.
    """
    if report.cov_opt is None or report.theta_opt is None:
        raise ValueError("fit report carries no parameter covariance")
    agg = agg or AggregationSpec()
    names = report.opt_names
    cov = np.asarray(report.cov_opt, dtype=float)
    diagonal_fallback = False
    if np.any(np.diag(cov) < 0):
        diagonal_fallback = True
    else:
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            diagonal_fallback = True
    if diagonal_fallback:
        warnings.warn("parameter covariance not positive definite; sampling "
                      "from its diagonal", UserWarning)
        chol = np.diag(np.sqrt(np.maximum(np.diag(cov), 0.0)))

    rng = np.random.default_rng(seed)
    draws = report.theta_opt[None, :] + rng.standard_normal((n_sim, len(names))) @ chol.T

    r_eff = series.ret[agg.L2:]
    x_eff = series.sign[agg.L2:]
    paths = np.empty((n_sim, len(r_eff)))
    for i in range(n_sim):
        nat = _from_opt(draws[i], names)
        pi = _params_from_vector(nat, names, params.variant)
        r2, x2, design, cr, _, _ = models.effective_design(series, pi, agg)
        g = x2 * (r2 - design @ cr)
        paths[i] = kernels.filter_path(g, pi.omega, pi.beta, pi.alpha, pi.b0)
    lo_q = 100.0 * (1.0 - level) / 2.0
    lower = np.percentile(paths, lo_q, axis=0)
    upper = np.percentile(paths, 100.0 - lo_q, axis=0)
    return BandEstimate(lower=lower, upper=upper, level=level, n_sim=n_sim,
                        diagonal_fallback=diagonal_fallback)
