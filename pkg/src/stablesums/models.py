"""Stationary heavy-tailed series generators and partial-sum scaling.

All models share a two-sided Pareto innovation/marginal family with tail
index alpha in (0, 2), positive-tail weight p, and a scale.  Simulation is
deterministic given (spec, n, seed); recursive models start from the
stationary-mean state and discard a burn-in prefix.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numba import njit
from scipy.signal import lfilter
from scipy.special import ndtr

from ._util import Estimate, substream
from .cadlag import CadlagPath

__all__ = [
    "MarginalSpec",
    "IID",
    "MA",
    "GARCH11Squared",
    "StochVol",
    "IsolatedExtremes",
    "ModelSpec",
    "simulate_series",
    "normalizing_sequence",
    "centering_sequence",
    "build_partial_sum_path",
    "model_from_config",
    "model_to_config",
]

_DEFAULT_BURN_IN = 1000
_CALIBRATION_SEED = 868215  # fixed so (spec, n)-derived quantities are deterministic


@dataclass(frozen=True)
class MarginalSpec:
    """Two-sided Pareto: P(|Z| > x) = (x / scale)^(-alpha) for x >= scale,
    sign positive with probability p."""

    alpha: float
    p: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("alpha must lie in (0, 2)")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")
        if not (self.scale > 0.0):
            raise ValueError("scale must be positive")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def sf_abs(self, x):
        """P(|Z| > x)."""
        x = np.asarray(x, dtype=float)
        out = np.where(x <= self.scale, 1.0, (np.maximum(x, self.scale) / self.scale) ** -self.alpha)
        return float(out) if out.ndim == 0 else out

    def quantile_abs(self, level: float) -> float:
        """Quantile of |Z| at the given probability level."""
        if not (0.0 <= level < 1.0):
            raise ValueError("level must lie in [0, 1)")
        return self.scale * (1.0 - level) ** (-1.0 / self.alpha)

    def ppf(self, u):
        """Quantile function of Z itself (negative branch first)."""
        u = np.asarray(u, dtype=float)
        q = self.q
        with np.errstate(divide="ignore"):
            neg = -self.scale * np.power(np.maximum(u, 1e-300) / q, -1.0 / self.alpha) if q > 0 else np.nan
            pos = self.scale * np.power(np.maximum(1.0 - u, 1e-300) / self.p, -1.0 / self.alpha) if self.p > 0 else np.nan
        out = np.where(u < q, neg, pos)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.ppf(rng.random(size))

    def truncated_mean(self, c: float) -> float:
        """E[Z 1{|Z| <= c}], closed form."""
        if c < self.scale:
            return 0.0
        a, s = self.alpha, self.scale
        if a == 1.0:
            m_abs = s * np.log(c / s)
        else:
            m_abs = a * s**a * (c ** (1.0 - a) - s ** (1.0 - a)) / (1.0 - a)
        return (self.p - self.q) * m_abs


@dataclass(frozen=True)
class IID:
    marginal: MarginalSpec


@dataclass(frozen=True)
class MA:
    """Moving average X_n = sum_i c_i Z_{n-i} of two-sided Pareto innovations.

    Coefficients are nonnegative with c_0 > 0 and c_m > 0 and are normalized
    at construction so that sum_i c_i^alpha = 1, which makes the series tail
    match the innovation tail: n P(|X| > scale n^(1/alpha)) -> 1.
    """

    marginal: MarginalSpec
    coefficients: tuple

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a nonempty sequence")
        if np.any(c < 0) or c[0] <= 0 or c[-1] <= 0:
            raise ValueError("coefficients must be nonnegative with c_0 > 0 and c_m > 0")
        c = c / np.sum(c**self.marginal.alpha) ** (1.0 / self.marginal.alpha)
        object.__setattr__(self, "coefficients", tuple(float(v) for v in c))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def coeffs(self) -> np.ndarray:
        return np.asarray(self.coefficients)


@dataclass(frozen=True)
class GARCH11Squared:
    """Squared GARCH(1,1): the series is X_n^2 where X_n = sigma_n Z_n,
    Z_n standard normal, sigma_n^2 = alpha0 + (alpha1 Z_{n-1}^2 + beta1) sigma_{n-1}^2.

    Construction verifies the stationarity condition E log(alpha1 Z^2 + beta1) < 0
    by a fixed-seed Monte Carlo check.
    """

    alpha0: float
    alpha1: float
    beta1: float
    burn_in: int = _DEFAULT_BURN_IN

    def __post_init__(self):
        if self.alpha0 <= 0 or self.alpha1 < 0 or self.beta1 < 0:
            raise ValueError("need alpha0 > 0 and alpha1, beta1 >= 0")
        if self.alpha1 == 0:
            raise ValueError("alpha1 must be positive for a heavy-tailed squared series")
        rng = np.random.default_rng(_CALIBRATION_SEED)
        z2 = rng.standard_normal(200_000) ** 2
        logs = np.log(self.alpha1 * z2 + self.beta1)
        mean, se = logs.mean(), logs.std(ddof=1) / np.sqrt(logs.size)
        if mean + 3 * se >= 0:
            raise ValueError(
                f"stationarity check failed: E log(alpha1 Z^2 + beta1) = {mean:.4f} +- {se:.4f}"
            )

    def sigma0_sq(self) -> float:
        """Start state for the volatility recursion.

        The stationary mean alpha0 / (1 - alpha1 - beta1) is used when it is
        finite; otherwise a log-mean proxy keeps the start at a typical scale.
        The burn-in washes either choice out.
        """
        s = self.alpha1 + self.beta1
        if s < 1.0:
            return self.alpha0 / (1.0 - s)
        rng = np.random.default_rng(_CALIBRATION_SEED + 1)
        z2 = rng.standard_normal(100_000) ** 2
        growth = float(np.exp(np.mean(np.log(self.alpha1 * z2 + self.beta1))))
        return self.alpha0 / max(1.0 - growth, 1e-3)


@dataclass(frozen=True)
class StochVol:
    """X_n = sigma_n Z_n with log sigma a Gaussian AR(1) independent of the
    two-sided Pareto innovations Z; the volatility has moments of all
    orders, so the series tail follows the innovation tail."""

    marginal: MarginalSpec
    phi: float
    logvol_scale: float = 1.0
    burn_in: int = _DEFAULT_BURN_IN

    def __post_init__(self):
        if not (-1.0 < self.phi < 1.0):
            raise ValueError("phi must lie in (-1, 1)")
        if self.logvol_scale <= 0:
            raise ValueError("logvol_scale must be positive")


@dataclass(frozen=True)
class IsolatedExtremes:
    """Instantaneous transform of a Gaussian AR(1) to the target marginal.

    The probability-integral transform makes the marginal exactly two-sided
    Pareto while large values stay isolated (the tail process vanishes off
    lag zero)."""

    marginal: MarginalSpec
    phi: float
    burn_in: int = _DEFAULT_BURN_IN

    def __post_init__(self):
        if not (-1.0 < self.phi < 1.0):
            raise ValueError("phi must lie in (-1, 1)")


ModelSpec = Union[IID, MA, GARCH11Squared, StochVol, IsolatedExtremes]


@njit(cache=True)
def _garch_recursion(z, alpha0, alpha1, beta1, sigma0_sq):
    n = z.shape[0]
    x2 = np.empty(n)
    s2 = sigma0_sq
    x2[0] = s2 * z[0] * z[0]
    for k in range(1, n):
        s2 = alpha0 + (alpha1 * z[k - 1] * z[k - 1] + beta1) * s2
        x2[k] = s2 * z[k] * z[k]
    return x2


def simulate_series(spec: ModelSpec, n: int, seed) -> np.ndarray:
    """Simulate n stationary values of the model; deterministic in (spec, n, seed)."""
    if n <= 0:
        raise ValueError("n must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    if isinstance(spec, IID):
        return spec.marginal.sample(rng, n)
    if isinstance(spec, MA):
        z = spec.marginal.sample(rng, n + spec.order)
        return np.convolve(z, spec.coeffs, mode="valid")
    if isinstance(spec, GARCH11Squared):
        z = rng.standard_normal(n + spec.burn_in)
        x2 = _garch_recursion(z, spec.alpha0, spec.alpha1, spec.beta1, spec.sigma0_sq())
        return x2[spec.burn_in:]
    if isinstance(spec, StochVol):
        eps = rng.standard_normal(n + spec.burn_in)
        logvol = lfilter([spec.logvol_scale], [1.0, -spec.phi], eps)[spec.burn_in:]
        z = spec.marginal.sample(rng, n)
        return np.exp(logvol) * z
    if isinstance(spec, IsolatedExtremes):
        eps = rng.standard_normal(n + spec.burn_in)
        a = lfilter([1.0], [1.0, -spec.phi], eps)[spec.burn_in:]
        u = ndtr(a * np.sqrt(1.0 - spec.phi**2))
        return spec.marginal.ppf(u)
    raise TypeError(f"unknown model spec {type(spec).__name__}")


def _marginal_of(spec: ModelSpec) -> MarginalSpec | None:
    return getattr(spec, "marginal", None)


@functools.lru_cache(maxsize=64)
def _empirical_quantile_norm(spec: ModelSpec, n: int) -> float:
    length = max(1_000_000, 100 * n)
    x = simulate_series(spec, length, substream(_CALIBRATION_SEED, 2))
    return float(np.quantile(np.abs(x), 1.0 - 1.0 / n))


def normalizing_sequence(spec: ModelSpec, n: int) -> float:
    """a_n with n P(|X| > a_n) -> 1: exact where the marginal tail is exact
    (IID, MA with normalized coefficients, IsolatedExtremes), otherwise the
    empirical (1 - 1/n) quantile of |X| from a fixed-seed calibration run."""
    if n <= 0:
        raise ValueError("n must be positive")
    if isinstance(spec, (IID, IsolatedExtremes)):
        m = spec.marginal
        return m.scale * n ** (1.0 / m.alpha)
    if isinstance(spec, MA):
        m = spec.marginal
        return m.scale * n ** (1.0 / m.alpha)
    return _empirical_quantile_norm(spec, n)


def centering_sequence(spec: ModelSpec, n: int, a_n: float | None = None,
                       reps: int = 10**6, seed: int | None = None) -> Estimate:
    """b_n = E[X 1{|X| <= a_n}]: closed form for exact-Pareto marginals,
    otherwise a Monte Carlo mean over stationary draws with standard error."""
    if a_n is None:
        a_n = normalizing_sequence(spec, n)
    if isinstance(spec, (IID, IsolatedExtremes)):
        return Estimate(spec.marginal.truncated_mean(a_n), 0.0, method="exact")
    if reps < 1000:
        raise ValueError("centering Monte Carlo needs reps >= 1000")
    rng = substream(_CALIBRATION_SEED if seed is None else seed, 3)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = min(reps, 2_000_000)
    while done < reps:
        m = min(chunk, reps - done)
        x = simulate_series(spec, m, rng)
        y = np.where(np.abs(x) <= a_n, x, 0.0)
        total += float(y.sum())
        total_sq += float((y * y).sum())
        done += m
    mean = total / done
    var = max(total_sq / done - mean * mean, 0.0)
    return Estimate(mean, float(np.sqrt(var / done)), method="mc", reps=done, seed=seed)


def build_partial_sum_path(series, a_n: float, b_n: float) -> CadlagPath:
    """Step path t -> (S_{floor(nt)} - floor(nt) b_n) / a_n on [0, 1]."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("series must be a nonempty 1-d array")
    if not (np.isfinite(a_n) and a_n > 0):
        raise ValueError("a_n must be positive and finite")
    n = x.size
    times = np.arange(1, n + 1, dtype=float) / n
    return CadlagPath.from_jumps(0.0, times, (x - b_n) / a_n)


_MODEL_KEYS = {
    "iid": ("alpha", "p", "scale"),
    "ma": ("alpha", "p", "scale", "coefficients"),
    "garch11_squared": ("alpha0", "alpha1", "beta1"),
    "stochvol": ("alpha", "p", "scale", "phi", "logvol_scale"),
    "isolated_extremes": ("alpha", "p", "scale", "phi"),
}


def model_from_config(cfg: dict) -> ModelSpec:
    """Build a ModelSpec from a flat config mapping.

    Recognized keys: model, alpha, p, scale, coefficients, alpha0, alpha1,
    beta1, phi, logvol_scale, burn_in.
    """
    if "model" not in cfg:
        raise ValueError("config needs a 'model' key")
    kind = str(cfg["model"]).strip().lower()
    if kind not in _MODEL_KEYS:
        raise ValueError(f"unknown model '{kind}'; expected one of {sorted(_MODEL_KEYS)}")

    def marginal():
        if "alpha" not in cfg:
            raise ValueError("config needs 'alpha'")
        return MarginalSpec(float(cfg["alpha"]), float(cfg.get("p", 1.0)),
                            float(cfg.get("scale", 1.0)))

    burn = int(cfg.get("burn_in", _DEFAULT_BURN_IN))
    if kind == "iid":
        return IID(marginal())
    if kind == "ma":
        if "coefficients" not in cfg:
            raise ValueError("MA config needs 'coefficients'")
        coeffs = cfg["coefficients"]
        if isinstance(coeffs, str):
            coeffs = [float(v) for v in coeffs.split(",")]
        return MA(marginal(), tuple(float(v) for v in np.atleast_1d(coeffs)))
    if kind == "garch11_squared":
        for key in ("alpha0", "alpha1", "beta1"):
            if key not in cfg:
                raise ValueError(f"GARCH config needs '{key}'")
        return GARCH11Squared(float(cfg["alpha0"]), float(cfg["alpha1"]),
                              float(cfg["beta1"]), burn_in=burn)
    if kind == "stochvol":
        if "phi" not in cfg:
            raise ValueError("StochVol config needs 'phi'")
        return StochVol(marginal(), float(cfg["phi"]),
                        float(cfg.get("logvol_scale", 1.0)), burn_in=burn)
    if "phi" not in cfg:
        raise ValueError("IsolatedExtremes config needs 'phi'")
    return IsolatedExtremes(marginal(), float(cfg["phi"]), burn_in=burn)


def model_to_config(spec: ModelSpec) -> dict:
    """Flat mapping that rebuilds ``spec`` through model_from_config.

    MA coefficients are echoed post-normalization, so the round trip is
    stable even when the input coefficients were unnormalized.
    """
    if isinstance(spec, IID):
        m = spec.marginal
        return {"model": "iid", "alpha": m.alpha, "p": m.p, "scale": m.scale}
    if isinstance(spec, MA):
        m = spec.marginal
        return {"model": "ma", "alpha": m.alpha, "p": m.p, "scale": m.scale,
                "coefficients": list(spec.coefficients)}
    if isinstance(spec, GARCH11Squared):
        return {"model": "garch11_squared", "alpha0": spec.alpha0,
                "alpha1": spec.alpha1, "beta1": spec.beta1,
                "burn_in": spec.burn_in}
    if isinstance(spec, StochVol):
        m = spec.marginal
        return {"model": "stochvol", "alpha": m.alpha, "p": m.p, "scale": m.scale,
                "phi": spec.phi, "logvol_scale": spec.logvol_scale,
                "burn_in": spec.burn_in}
    if isinstance(spec, IsolatedExtremes):
        m = spec.marginal
        return {"model": "isolated_extremes", "alpha": m.alpha, "p": m.p,
                "scale": m.scale, "phi": spec.phi, "burn_in": spec.burn_in}
    raise TypeError(f"unsupported model type {type(spec).__name__}")
