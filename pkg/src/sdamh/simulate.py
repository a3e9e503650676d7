"""Data-generating processes for every estimable variant, scenario paths for
the misspecified-dynamics study, and antithetic shock streams."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from ._kernels import kernels
from .core import AggregationSpec, StaticParams, TickSeries, LINEAR_VARIANTS, RAW_LAG_VARIANTS
from .errors import AntitheticError, VariantError

SCENARIO_KINDS = ("FastSine", "Step", "Ramp", "AR1", "ScoreDriven", "Constant")

#: AR(1) scenario defaults; sigma_u is a calibration choice, the mean-reverting
#: level c/(1-phi) = 0.5 matches the deterministic scenarios' midpoint.
AR1_C = 0.05
AR1_PHI = 0.9
AR1_SIGMA_U = 0.025


def _normalize_kind(kind: str) -> str:
    k = kind.replace("-", "").replace("_", "").replace(" ", "").lower()
    table = {"fastsine": "FastSine", "step": "Step", "ramp": "Ramp",
             "ar1": "AR1", "scoredriven": "ScoreDriven", "constant": "Constant"}
    if k not in table:
        raise ValueError(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
    return table[k]


@dataclass(frozen=True)
class ScenarioPath:
    """Impact path b0*_t imposed on the data-generating process.

    ``values[k]`` is the impact in force at simulation step k (0-based).
    ScoreDriven carries no preset values: the impact evolves by its own
    score recursion during simulation.
    """

    kind: str
    values: Optional[np.ndarray]
    params: dict


def scenario_path(kind: str, T: int, seed: Optional[int] = None,
                  c: float = AR1_C, phi: float = AR1_PHI,
                  sigma_u: float = AR1_SIGMA_U, level: float = 0.0) -> ScenarioPath:
    """Build one of the benchmark impact paths.

    FastSine: 0.5 + 0.5 sin(2 pi k / 200); Step: 1(k > 500);
    Ramp: (k mod 200)/200; AR1: b*_{k+1} = c + phi b*_k + u_k with Gaussian
    u_k, started at the stationary mean c/(1-phi).
    """
    kind = _normalize_kind(kind)
    if T < 1:
        raise ValueError("T must be >= 1")
    k = np.arange(T, dtype=float)
    if kind == "FastSine":
        vals = 0.5 + 0.5 * np.sin(2.0 * np.pi * k / 200.0)
        return ScenarioPath(kind, vals, {})
    if kind == "Step":
        vals = (k > 500).astype(float)
        return ScenarioPath(kind, vals, {})
    if kind == "Ramp":
        vals = np.mod(k, 200.0) / 200.0
        return ScenarioPath(kind, vals, {})
    if kind == "AR1":
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(T) * sigma_u
        vals = np.empty(T)
        b = c / (1.0 - phi)
        for i in range(T):
            vals[i] = b
            b = c + phi * b + u[i]
        return ScenarioPath(kind, vals, {"c": c, "phi": phi, "sigma_u": sigma_u})
    if kind == "Constant":
        return ScenarioPath(kind, np.full(T, float(level)), {"level": level})
    return ScenarioPath("ScoreDriven", None, {})


@dataclass(frozen=True)
class ShockStream:
    """Pre-drawn Gaussian return shocks and trade-sign uniforms.

    The antithetic partner of a stream negates the Gaussians and reflects the
    uniforms, pairing each path with its mirror image.
    """

    seed: int
    gaussians: np.ndarray
    uniforms: np.ndarray
    antithetic: bool = False

    @classmethod
    def generate(cls, seed: int, n: int) -> "ShockStream":
        rng = np.random.default_rng(seed)
        return cls(seed=seed, gaussians=rng.standard_normal(n),
                   uniforms=rng.random(n), antithetic=False)

    def __len__(self) -> int:
        return len(self.gaussians)


def antithetic_pair(shocks: ShockStream) -> ShockStream:
    """Mirrored stream: gaussians negated, uniforms reflected about 1/2."""
    if shocks.antithetic:
        raise AntitheticError("stream is already the antithetic member of its pair")
    return ShockStream(seed=shocks.seed, gaussians=-shocks.gaussians,
                       uniforms=1.0 - shocks.uniforms, antithetic=True)


def synthetic_warmup(L2: int) -> Tuple[np.ndarray, np.ndarray]:
    """Default pre-sample: zero returns, alternating signs ending at -1."""
    r = np.zeros(L2)
    x = np.where(np.arange(L2) % 2 == 0, 1.0, -1.0)
    return r, x


def simulate(params: StaticParams, T: int,
             scenario: Optional[ScenarioPath] = None,
             shocks: Optional[ShockStream] = None,
             seed: int = 0,
             warmup: Optional[TickSeries] = None,
             spec: Optional[AggregationSpec] = None,
             include_warmup: bool = False) -> Tuple[TickSeries, np.ndarray]:
    """Simulate T trades from a variant's data-generating process.

    Each step draws the sign x_t = +1 with probability pi_t (uniform < pi_t),
    then the return r_t = mu1_t + sigma * z_t; the impact either follows the
    scenario path or, for ScoreDriven, its own recursion started at params.b0.
    Returns the simulated series and the impact path actually used.

    H and AH have no proper trade-sign probability model, so simulating them
    as data-generating processes is rejected.
    """
    if params.variant in LINEAR_VARIANTS:
        raise VariantError(
            f"variant {params.variant} has a linear trade equation and is not "
            "simulated as a data-generating process")
    if T < 1:
        raise ValueError("T must be >= 1")
    spec = spec or AggregationSpec()
    if shocks is None:
        shocks = ShockStream.generate(seed, T)
    if len(shocks) < T:
        raise ValueError(f"shock stream of length {len(shocks)} shorter than T={T}")

    if warmup is None:
        warm_r, warm_x = synthetic_warmup(spec.L2)
    else:
        if len(warmup) < spec.L2:
            raise ValueError(f"warmup must supply at least L2={spec.L2} trades")
        warm_r = warmup.ret[-spec.L2:]
        warm_x = warmup.sign[-spec.L2:]

    z = shocks.gaussians[:T]
    u = shocks.uniforms[:T]
    sigma = float(np.sqrt(params.sigma2))

    if params.variant in RAW_LAG_VARIANTS:
        if scenario is not None and scenario.values is not None:
            raise VariantError("raw-lag variants only support a constant impact")
        r, x = kernels.simulate_raw(T, params.p, params.raw_ret_coefs(),
                                    params.raw_trade_coefs(), sigma, params.b0,
                                    warm_r, warm_x, z, u)
        b0_path = np.full(T, params.b0)
    else:
        sched = None
        if scenario is not None and scenario.values is not None:
            sched = np.asarray(scenario.values, dtype=float)
            if len(sched) < T:
                raise ValueError("scenario path shorter than T")
            sched = sched[:T]
        r, x, b0_path = kernels.simulate_agg(
            T, spec.L1, spec.L2, params.ret_coefs(), params.trade_coefs(),
            sigma, params.omega, params.beta, params.alpha, sched, params.b0,
            warm_r, warm_x, z, u)

    if include_warmup:
        r = np.concatenate([warm_r, r])
        x = np.concatenate([warm_x, x])
    return TickSeries(ret=r, sign=x), b0_path
