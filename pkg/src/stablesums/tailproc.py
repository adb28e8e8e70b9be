"""Tail and spectral processes, cluster sampling, and limit-measure constants.

Conditionally on an extreme value at lag zero, a regularly varying series
looks like |Y_0| times a spectral pattern; the functions here sample such
tail windows for the analytic models, accept/reject them into cluster
processes (no earlier value exceeds 1), and turn cluster statistics into the
constants (c_plus, c_minus, b) of the limiting jump measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from ._util import Estimate, substream
from .models import (
    IID,
    MA,
    GARCH11Squared,
    IsolatedExtremes,
    MarginalSpec,
    ModelSpec,
    StochVol,
)

__all__ = [
    "TailWindow",
    "LevyTriple",
    "ClusterSampler",
    "tail_window_sampler",
    "sample_tail_window",
    "extremal_index_theoretical",
    "extremal_index_spectral_mc",
    "sample_cluster_process",
    "cluster_acceptance_rate",
    "cluster_tail_mass",
    "spectral_tail_constants",
    "theoretical_triple",
    "garch_tail_constant",
    "truncated_drift",
    "mu_truncated_mean",
]

_REJECTION_CAP = 10**6


@dataclass(frozen=True)
class TailWindow:
    """One realization of the tail process on lags -L..R.

    ``values`` are the Y_i; the spectral window divides out |Y_0|.
    """

    lags: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=int)
        vals = np.asarray(self.values, dtype=float)
        if lags.ndim != 1 or lags.shape != vals.shape:
            raise ValueError("lags and values must be 1-d arrays of equal length")
        if 0 not in lags:
            raise ValueError("window must contain lag 0")
        lags.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "values", vals)

    @property
    def anchor(self) -> float:
        return float(self.values[self.lags == 0][0])

    @property
    def spectral(self) -> np.ndarray:
        return self.values / abs(self.anchor)


@dataclass(frozen=True)
class LevyTriple:
    """Parameters of the limiting stable process: jump measure with density
    (c_plus on the right, c_minus on the left) alpha |x|^(-alpha-1), and
    drift b relative to the truncation 1{|x| <= 1}."""

    alpha: float
    c_plus: float
    c_minus: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("alpha must lie in (0, 2)")
        if self.c_plus < 0 or self.c_minus < 0:
            raise ValueError("tail weights must be nonnegative")

    @property
    def total_mass(self) -> float:
        return self.c_plus + self.c_minus

    def tail(self, x: float) -> float:
        """nu(x, infinity) for x > 0."""
        if x <= 0:
            raise ValueError("x must be positive")
        return self.c_plus * x ** (-self.alpha)

    def truncated_mean(self, u: float) -> float:
        """Integral of x over u < |x| <= 1 against the jump measure."""
        if not (0.0 < u):
            raise ValueError("u must be positive")
        if u >= 1.0:
            return 0.0
        a = self.alpha
        diff = self.c_plus - self.c_minus
        if a == 1.0:
            return diff * np.log(1.0 / u)
        return diff * a / (1.0 - a) * (1.0 - u ** (1.0 - a))


def mu_truncated_mean(marginal: MarginalSpec, u: float) -> float:
    """Integral of x over u < |x| <= 1 against the marginal tail measure
    (p on the right, q on the left) alpha |x|^(-alpha-1) dx."""
    if u <= 0:
        raise ValueError("u must be positive")
    if u >= 1.0:
        return 0.0
    a = marginal.alpha
    diff = marginal.p - marginal.q
    if a == 1.0:
        return diff * np.log(1.0 / u)
    return diff * a / (1.0 - a) * (1.0 - u ** (1.0 - a))


class ClusterSampler:
    """Samples tail-process windows Y_{-L..R} for a model with a known
    tail process; the workhorse behind cluster sampling and the Monte Carlo
    functionals below."""

    def __init__(self, alpha: float, p: float, lags: np.ndarray):
        self.alpha = float(alpha)
        self.p = float(p)
        self.lags = np.asarray(lags, dtype=int)
        if 0 not in self.lags:
            raise ValueError("window must contain lag 0")

    # subclasses implement: sample_values(size, rng) -> (size, len(lags)) array

    def sample_values(self, size: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _pareto_signed(self, size: int, rng: np.random.Generator) -> np.ndarray:
        mag = rng.random(size) ** (-1.0 / self.alpha)
        if self.p >= 1.0:
            return mag
        sign = np.where(rng.random(size) < self.p, 1.0, -1.0)
        return sign * mag


class _IsolatedSampler(ClusterSampler):
    """Tail process that vanishes off lag zero (IID and instantaneous
    transforms of short-memory Gaussian processes)."""

    def __init__(self, alpha: float, p: float, window: tuple[int, int] = (1, 1)):
        L, R = window
        super().__init__(alpha, p, np.arange(-int(L), int(R) + 1))

    def sample_values(self, size, rng):
        vals = np.zeros((size, self.lags.size))
        vals[:, self.lags == 0] = self._pareto_signed(size, rng)[:, None]
        return vals


class _MASampler(ClusterSampler):
    """Moving-average tail process: Y_n = (c_{n+K} / c_K) Y_0 with
    P(K = k) = c_k^alpha."""

    def __init__(self, spec: MA, window: tuple[int, int] | None = None):
        m = spec.order
        if window is None:
            window = (m, m)
        L, R = int(window[0]), int(window[1])
        if R < m or L < m:
            raise ValueError(f"window too short for MA({m}): need L, R >= {m}")
        super().__init__(spec.marginal.alpha, spec.marginal.p, np.arange(-L, R + 1))
        self.coeffs = spec.coeffs
        self.k_probs = self.coeffs**self.alpha
        self.k_probs = self.k_probs / self.k_probs.sum()

    def sample_values(self, size, rng):
        m = self.coeffs.size - 1
        k = rng.choice(m + 1, size=size, p=self.k_probs)
        y0 = self._pareto_signed(size, rng)
        # c_{lag + K} / c_K, with coefficients vanishing outside 0..m
        idx = k[:, None] + self.lags[None, :]
        valid = (idx >= 0) & (idx <= m)
        ratio = np.zeros((size, self.lags.size))
        c = self.coeffs
        denom = np.broadcast_to(c[k][:, None], idx.shape)
        ratio[valid] = c[idx[valid]] / denom[valid]
        return y0[:, None] * ratio


def tail_window_sampler(spec: ModelSpec, window: tuple[int, int] | None = None) -> ClusterSampler:
    """Tail-process sampler for models whose tail process is known in closed
    form; squared GARCH has none here, so it raises."""
    if isinstance(spec, MA):
        return _MASampler(spec, window)
    if isinstance(spec, IID):
        m = spec.marginal
        return _IsolatedSampler(m.alpha, m.p, window or (1, 1))
    if isinstance(spec, (StochVol, IsolatedExtremes)):
        m = spec.marginal
        return _IsolatedSampler(m.alpha, m.p, window or (1, 1))
    raise TypeError(
        f"no closed-form tail process for {type(spec).__name__}; "
        "estimate windows from data instead"
    )


def sample_tail_window(sampler: ClusterSampler, seed) -> TailWindow:
    """One tail-process window."""
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    vals = sampler.sample_values(1, rng)[0]
    return TailWindow(sampler.lags.copy(), vals)


def extremal_index_theoretical(spec: ModelSpec) -> float:
    """Closed-form extremal index: max_k c_k^alpha for MA, 1 for models with
    isolated extremes; squared GARCH raises (no closed form here)."""
    if isinstance(spec, MA):
        return float(np.max(spec.coeffs**spec.marginal.alpha))
    if isinstance(spec, (IID, StochVol, IsolatedExtremes)):
        return 1.0
    raise TypeError(f"no closed-form extremal index for {type(spec).__name__}")


def extremal_index_spectral_mc(sampler: ClusterSampler, reps: int = 100_000,
                               seed=0) -> Estimate:
    """Monte Carlo of E[sup_{i>=0} |Theta_i|^alpha - sup_{i>=1} |Theta_i|^alpha]."""
    rng = substream(seed, 11)
    vals = sampler.sample_values(reps, rng)
    theta = np.abs(vals / np.abs(vals[:, sampler.lags == 0]))
    a = sampler.alpha
    fwd0 = theta[:, sampler.lags >= 0] ** a
    fwd1 = theta[:, sampler.lags >= 1] ** a
    sup0 = fwd0.max(axis=1)
    sup1 = fwd1.max(axis=1) if fwd1.shape[1] else np.zeros(reps)
    diff = sup0 - sup1
    return Estimate(float(diff.mean()), float(diff.std(ddof=1) / np.sqrt(reps)),
                    method="mc", reps=reps, seed=seed)


def _accepted_mask(sampler: ClusterSampler, vals: np.ndarray) -> np.ndarray:
    back = sampler.lags <= -1
    if not back.any():
        return np.ones(vals.shape[0], dtype=bool)
    return np.abs(vals[:, back]).max(axis=1) <= 1.0


def sample_cluster_process(sampler: ClusterSampler, seed,
                           max_attempts: int = _REJECTION_CAP) -> np.ndarray:
    """Rejection-sample one cluster: a tail window conditioned on no
    exceedance of 1 before lag zero; returns its nonzero values.

    Raises RuntimeError when the cap is hit, surfacing pathological
    acceptance rates instead of spinning.
    """
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    attempts = 0
    batch = 64
    while attempts < max_attempts:
        m = min(batch, max_attempts - attempts)
        vals = sampler.sample_values(m, rng)
        ok = _accepted_mask(sampler, vals)
        attempts += m
        hits = np.flatnonzero(ok)
        if hits.size:
            row = vals[hits[0]]
            return row[row != 0.0]
    raise RuntimeError(
        f"cluster rejection sampling exceeded {max_attempts} attempts; "
        "acceptance rate is pathologically small"
    )


def cluster_acceptance_rate(sampler: ClusterSampler, attempts: int = 100_000,
                            seed=0) -> Estimate:
    """Fraction of proposed tail windows accepted as clusters; converges to
    the extremal index."""
    rng = substream(seed, 12)
    ok = _accepted_mask(sampler, sampler.sample_values(attempts, rng))
    k = int(ok.sum())
    phat = k / attempts
    se = float(np.sqrt(max(phat * (1 - phat), 1e-300) / attempts))
    return Estimate(phat, se, method="mc", reps=attempts, seed=seed)


def _forward_cluster_sums(sampler: ClusterSampler, vals: np.ndarray) -> np.ndarray:
    fwd = sampler.lags >= 0
    y = vals[:, fwd]
    return np.where(np.abs(y) > 1.0, y, 0.0).sum(axis=1)


def cluster_tail_mass(u: float, x: float, sampler: ClusterSampler,
                      reps: int = 100_000, seed=0) -> Estimate:
    """Monte Carlo of the truncated limit measure's upper tail at x:
    u^(-alpha) P(u * sum_{i>=0} Y_i 1{|Y_i| > 1} > x, no exceedance before lag 0).
    """
    if u <= 0:
        raise ValueError("u must be positive")
    if reps < 100:
        raise ValueError("needs reps >= 100")
    rng = substream(seed, 13)
    vals = sampler.sample_values(reps, rng)
    event = (_forward_cluster_sums(sampler, vals) * u > x) & _accepted_mask(sampler, vals)
    phat = float(event.mean())
    scale = u**-sampler.alpha
    se = scale * np.sqrt(max(phat * (1 - phat), 1e-300) / reps)
    return Estimate(scale * phat, float(se), method="mc", reps=reps, seed=seed)


def spectral_tail_constants(sampler: ClusterSampler, reps: int = 200_000,
                            seed=0) -> tuple[Estimate, Estimate]:
    """Monte Carlo of the spectral-sum formulas for (c_plus, c_minus):
    E[max(+-sum_i Theta_i, 0)^alpha; Theta_i = 0 for all i <= -1]."""
    rng = substream(seed, 14)
    vals = sampler.sample_values(reps, rng)
    theta = vals / np.abs(vals[:, sampler.lags == 0])
    back = sampler.lags <= -1
    flat = ~np.any(theta[:, back] != 0.0, axis=1) if back.any() else np.ones(reps, bool)
    s = theta[:, sampler.lags >= 0].sum(axis=1)
    a = sampler.alpha
    plus = np.where(flat, np.maximum(s, 0.0) ** a, 0.0)
    minus = np.where(flat, np.maximum(-s, 0.0) ** a, 0.0)
    mk = lambda arr: Estimate(float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(reps)),
                              method="mc", reps=reps, seed=seed)
    return mk(plus), mk(minus)


def theoretical_triple(spec: ModelSpec) -> LevyTriple:
    """Closed-form limit triple.

    IID and isolated-extremes models keep the marginal tail measure and need
    no drift; the moving average scales it by (sum c_i)^alpha and, away from
    alpha = 1, tilts the drift by the same factor.  Squared GARCH needs the
    Monte Carlo tail constant instead (see garch_tail_constant).
    """
    if isinstance(spec, (IID, StochVol, IsolatedExtremes)):
        m = spec.marginal
        return LevyTriple(m.alpha, m.p, m.q, 0.0)
    if isinstance(spec, MA):
        m = spec.marginal
        a = m.alpha
        if a == 1.0:
            raise ValueError("the MA drift has no closed form at alpha = 1")
        csum = float(np.sum(spec.coeffs)) ** a
        b = (m.p - m.q) * a / (1.0 - a) * (csum - 1.0)
        return LevyTriple(a, m.p * csum, m.q * csum, b)
    raise TypeError(f"no closed-form triple for {type(spec).__name__}")


def garch_tail_constant(alpha0: float, alpha1: float, beta1: float, alpha: float,
                        reps: int = 100_000, truncation: int = 1000,
                        seed=0) -> Estimate:
    """Positive tail weight of the squared-GARCH limit measure.

    Computes E[(Z^2 + T)^alpha - T^alpha] / E|Z|^(2 alpha) where T is the
    truncated series sum_{t>=1} Z_{t+1}^2 prod_{i<=t}(alpha1 Z_i^2 + beta1).
    The tail-index identity E[(alpha1 Z^2 + beta1)^alpha] = 1 is verified
    within Monte Carlo error before sampling.
    """
    spec = GARCH11Squared(alpha0, alpha1, beta1)  # validates stationarity
    if not (0.0 < alpha < 2.0):
        raise ValueError("alpha must lie in (0, 2)")
    rng = substream(seed, 15)
    probe = (alpha1 * rng.standard_normal(400_000) ** 2 + beta1) ** alpha
    mean, se = probe.mean(), probe.std(ddof=1) / np.sqrt(probe.size)
    if abs(mean - 1.0) > 4 * se + 1e-3:
        raise ValueError(
            f"tail-index identity fails: E[(a1 Z^2 + b1)^alpha] = {mean:.4f} +- {se:.4f}"
        )
    t_sum = np.zeros(reps)
    prod = np.ones(reps)
    z_next = rng.standard_normal(reps) ** 2  # Z_1^2
    for _ in range(truncation):
        prod = prod * (alpha1 * z_next + beta1)
        z_next = rng.standard_normal(reps) ** 2
        t_sum += z_next * prod
    z0 = rng.standard_normal(reps) ** 2
    numer = (z0 + t_sum) ** alpha - t_sum**alpha
    denom = 2.0**alpha * gamma_fn(alpha + 0.5) / np.sqrt(np.pi)
    est = numer / denom
    return Estimate(float(est.mean()), float(est.std(ddof=1) / np.sqrt(reps)),
                    method="mc", reps=reps, seed=seed)


def truncated_drift(u: float, marginal: MarginalSpec,
                    triple: LevyTriple | None = None,
                    sampler: ClusterSampler | None = None,
                    reps: int = 200_000, seed=0) -> Estimate:
    """Drift correction b_u: the truncated mean of the limit jump measure
    minus the truncated mean of the marginal tail measure, over u < |x| <= 1.

    Closed form when a triple is supplied; Monte Carlo over cluster sums when
    a tail sampler is supplied instead.
    """
    if not (0.0 < u < 1.0):
        raise ValueError("u must lie in (0, 1)")
    mu_part = mu_truncated_mean(marginal, u)
    if (triple is None) == (sampler is None):
        raise ValueError("supply exactly one of triple or sampler")
    if triple is not None:
        return Estimate(triple.truncated_mean(u) - mu_part, 0.0, method="exact")
    rng = substream(seed, 16)
    vals = sampler.sample_values(reps, rng)
    s = _forward_cluster_sums(sampler, vals) * u
    ok = _accepted_mask(sampler, vals)
    contrib = np.where(ok & (np.abs(s) > u) & (np.abs(s) <= 1.0), s, 0.0)
    scale = u**-sampler.alpha
    nu_part = scale * contrib
    value = float(nu_part.mean()) - mu_part
    se = float(nu_part.std(ddof=1) / np.sqrt(reps))
    return Estimate(value, se, method="mc", reps=reps, seed=seed)
