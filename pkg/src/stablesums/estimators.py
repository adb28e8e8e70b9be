"""Estimators and diagnostics computed from observed series.

Everything here is deterministic given (input series, parameters); the only
randomized diagnostic (block mixing) takes an explicit seed.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._util import Estimate, substream, wilson_interval
from .models import ModelSpec, normalizing_sequence, simulate_series

__all__ = [
    "BlockingScheme",
    "ThetaEstimate",
    "TailWindowSample",
    "blocks_estimator",
    "runs_estimator",
    "empirical_tail_process",
    "anticlustering_diagnostic",
    "small_step_diagnostic",
    "mixing_diagnostic",
    "read_series_csv",
    "write_series_csv",
]


@dataclass(frozen=True)
class BlockingScheme:
    """Block length r_n for a series of length n; k_n = n // r_n blocks.

    The asymptotics only require r_n -> infinity with r_n / n -> 0, so the
    growth exponent is a free parameter (default n^0.4).
    """

    n: int
    r_n: int

    def __post_init__(self):
        if not (1 <= self.r_n <= self.n):
            raise ValueError("need 1 <= r_n <= n")

    @classmethod
    def from_exponent(cls, n: int, exponent: float = 0.4) -> "BlockingScheme":
        if not (0.0 < exponent < 1.0):
            raise ValueError("exponent must lie in (0, 1)")
        return cls(n, max(1, int(n**exponent)))

    @property
    def k_n(self) -> int:
        return self.n // self.r_n


class ThetaEstimate(Estimate):
    """Extremal-index estimate with an approximate 95% interval and the
    exceedance count that produced it."""

    def __new__(cls, value, se, method, n_exceedances, interval):
        self = super().__new__(cls, value, se, method=method, reps=n_exceedances)
        self.interval = interval
        self.n_exceedances = n_exceedances
        return self


def _exceedances(series: np.ndarray, u_abs: float) -> np.ndarray:
    if u_abs <= 0:
        raise ValueError("threshold must be positive")
    return np.abs(series) > u_abs


def blocks_estimator(series, u_abs: float, scheme: BlockingScheme) -> ThetaEstimate:
    """Ratio of the block-maximum exceedance rate to r_n times the marginal
    exceedance rate, over the k_n complete blocks.

    The interval treats the marginal rate as fixed (it is estimated from
    r_n k_n points, far more than the block count).
    """
    x = np.asarray(series, dtype=float)
    if x.size != scheme.n:
        raise ValueError("scheme.n must match the series length")
    exc = _exceedances(x, u_abs)
    n_exc = int(exc.sum())
    if n_exc == 0:
        raise ValueError("no exceedances above the threshold")
    k, r = scheme.k_n, scheme.r_n
    block_hit = exc[: k * r].reshape(k, r).any(axis=1)
    hits = int(block_hit.sum())
    p_marg = n_exc / x.size
    denom = r * p_marg
    value = (hits / k) / denom
    lo, hi = wilson_interval(hits, k)
    se = float(np.sqrt(max(hits / k * (1 - hits / k), 1e-300) / k) / denom)
    return ThetaEstimate(value, se, "blocks", n_exc, (lo / denom, hi / denom))


def runs_estimator(series, u_abs: float, scheme: BlockingScheme) -> ThetaEstimate:
    """Fraction of exceedances followed by an exceedance-free run of length
    r_n, over anchors whose forward window fits in the sample."""
    x = np.asarray(series, dtype=float)
    if x.size != scheme.n:
        raise ValueError("scheme.n must match the series length")
    exc = _exceedances(x, u_abs)
    r = scheme.r_n
    anchors = np.flatnonzero(exc[: x.size - r])
    if anchors.size == 0:
        raise ValueError("no exceedances with a complete forward window")
    cum = np.concatenate(([0], np.cumsum(exc)))
    forward = cum[anchors + 1 + r] - cum[anchors + 1]
    clean = int((forward == 0).sum())
    value = clean / anchors.size
    lo, hi = wilson_interval(clean, int(anchors.size))
    se = float(np.sqrt(max(value * (1 - value), 1e-300) / anchors.size))
    return ThetaEstimate(value, se, "runs", int(anchors.size), (lo, hi))


@dataclass(frozen=True)
class TailWindowSample:
    """Windows of the series around its exceedances of a threshold.

    ``tail`` rows are X_{i-L..i+R} / threshold (so |row at lag 0| > 1);
    ``spectral`` rows divide by |X_i| instead (row at lag 0 is +-1).
    """

    lags: np.ndarray
    tail: np.ndarray
    spectral: np.ndarray
    anchor_indices: np.ndarray
    threshold: float

    @property
    def n_anchors(self) -> int:
        return int(self.anchor_indices.size)


def empirical_tail_process(series, threshold: float,
                           window: tuple[int, int] = (5, 5)) -> TailWindowSample:
    """Collect exceedance windows; needs at least 100 usable exceedances."""
    x = np.asarray(series, dtype=float)
    L, R = int(window[0]), int(window[1])
    if L < 0 or R < 0:
        raise ValueError("window lengths must be nonnegative")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    idx = np.flatnonzero(np.abs(x) > threshold)
    idx = idx[(idx >= L) & (idx < x.size - R)]
    if idx.size < 100:
        raise ValueError(
            f"only {idx.size} exceedances with complete windows; need at least 100"
        )
    win = np.lib.stride_tricks.sliding_window_view(x, L + R + 1)[idx - L]
    lags = np.arange(-L, R + 1)
    tail = win / threshold
    spectral = win / np.abs(x[idx])[:, None]
    return TailWindowSample(lags, tail, spectral, idx, float(threshold))


@dataclass(frozen=True)
class AnticlusterReport:
    condition: str
    u_abs: float
    r_n: int
    m_grid: tuple[int, ...]
    estimates: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...]
    n_anchors: int
    pair_sum: float | None = None

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "parameters": {"u_abs": self.u_abs, "r_n": self.r_n,
                           "n_anchors": self.n_anchors},
            "curve": {"m": list(self.m_grid), "estimate": list(self.estimates)},
            "intervals": [list(iv) for iv in self.intervals],
            **({"pair_sum": self.pair_sum} if self.pair_sum is not None else {}),
        }


def anticlustering_diagnostic(series, u_abs: float, scheme: BlockingScheme,
                              m_grid: Sequence[int] | None = None,
                              pair_sum: bool = False) -> AnticlusterReport:
    """P(another exceedance at distance m..r_n | exceedance), by m.

    A sequence decaying toward zero as m grows supports the anti-clustering
    hypothesis behind the blocking arguments.  ``pair_sum`` additionally
    reports n * sum_{i<=r_n} P(|X_0| > u, |X_i| > u).
    """
    x = np.asarray(series, dtype=float)
    if x.size != scheme.n:
        raise ValueError("scheme.n must match the series length")
    r = scheme.r_n
    if m_grid is None:
        grid = [m for m in (1, 2, 3, 5, 8, 13, 21, 34, 55) if m <= r]
    else:
        grid = sorted(set(int(m) for m in m_grid))
        if any(m < 1 or m > r for m in grid):
            raise ValueError("m_grid entries must lie in [1, r_n]")
    exc = _exceedances(x, u_abs)
    anchors = np.flatnonzero(exc[r: x.size - r]) + r
    if anchors.size == 0:
        raise ValueError("no exceedances with complete two-sided windows")
    cum = np.concatenate(([0], np.cumsum(exc)))
    outer = cum[anchors + r + 1] - cum[anchors - r]
    ests, ivs = [], []
    for m in grid:
        inner = cum[anchors + m] - cum[anchors - m + 1]
        hits = int(((outer - inner) > 0).sum())
        ests.append(hits / anchors.size)
        ivs.append(wilson_interval(hits, int(anchors.size)))
    ps = None
    if pair_sum:
        total = 0.0
        for i in range(1, r + 1):
            total += float((exc[:-i] & exc[i:]).mean())
        ps = float(x.size * total)
    return AnticlusterReport("anticlustering", float(u_abs), r, tuple(grid),
                             tuple(ests), tuple(ivs), int(anchors.size), ps)


@dataclass(frozen=True)
class SmallStepReport:
    condition: str
    u_grid: tuple[float, ...]
    delta: float
    frequencies: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...]
    centering: str
    n_replicates: int

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "parameters": {"delta": self.delta, "centering": self.centering,
                           "n_replicates": self.n_replicates},
            "curve": {"u": list(self.u_grid), "frequency": list(self.frequencies)},
            "intervals": [list(iv) for iv in self.intervals],
        }


def small_step_diagnostic(replicates: Sequence[np.ndarray] | np.ndarray, a_n: float,
                          u_grid: Sequence[float], delta: float,
                          centering: Callable[[float], float] | None = None,
                          ) -> SmallStepReport:
    """Fraction of replicates whose centered small-jump partial-sum maximum
    exceeds delta, per truncation level u.

    The sums keep only jumps with |X|/a_n <= u, centered by the exact mean
    when ``centering`` is given (mapping u to E[X 1{|X| <= u a_n}] / a_n) and
    by the pooled ensemble mean otherwise.  Needs at least 200 replicates.
    """
    reps = np.asarray(replicates, dtype=float)
    if reps.ndim != 2:
        raise ValueError("replicates must form a (replicate, time) matrix")
    if reps.shape[0] < 200:
        raise ValueError("needs at least 200 replicates")
    if delta <= 0 or a_n <= 0:
        raise ValueError("delta and a_n must be positive")
    scaled = reps / a_n
    freqs, ivs = [], []
    for u in u_grid:
        if u <= 0:
            raise ValueError("u_grid entries must be positive")
        small = np.where(np.abs(scaled) <= u, scaled, 0.0)
        c_u = centering(u) if centering is not None else float(small.mean())
        dev = np.abs(np.cumsum(small - c_u, axis=1)).max(axis=1)
        k = int((dev > delta).sum())
        freqs.append(k / reps.shape[0])
        ivs.append(wilson_interval(k, reps.shape[0]))
    return SmallStepReport("small_step", tuple(float(u) for u in u_grid), float(delta),
                           tuple(freqs), tuple(ivs),
                           "exact" if centering is not None else "pooled",
                           int(reps.shape[0]))


def _tent(x: np.ndarray, center: float, halfwidth: float) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(x - center) / halfwidth)


def default_mixing_functions(u: float = 0.5) -> list[Callable]:
    """Three time-weighted tents in |x|, supported away from zero."""
    centers = (2 * u, 3 * u, 5 * u)

    def make(c):
        def f(t, x):
            return t * _tent(np.abs(x), c, u / 2 + c / 4)
        return f

    return [make(c) for c in centers]


@dataclass(frozen=True)
class MixingReport:
    condition: str
    n: int
    r_n: int
    reps: int
    seed: int
    diffs: tuple[float, ...]
    ses: tuple[float, ...]
    full_terms: tuple[float, ...]
    block_terms: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "parameters": {"n": self.n, "r_n": self.r_n, "reps": self.reps,
                           "seed": self.seed},
            "curve": {"function": list(range(len(self.diffs))),
                      "difference": list(self.diffs)},
            "intervals": [[d - 1.96 * s, d + 1.96 * s]
                          for d, s in zip(self.diffs, self.ses)],
            "full_terms": list(self.full_terms),
            "block_terms": list(self.block_terms),
        }


def mixing_diagnostic(spec: ModelSpec, n: int, scheme: BlockingScheme,
                      fns: Sequence[Callable] | None = None, reps: int = 200,
                      seed: int = 0, a_n: float | None = None,
                      simulate: Callable | None = None) -> MixingReport:
    """Monte Carlo gap between the joint Laplace functional of the scaled
    series and the product of its frozen-time block marginals.

    Near-zero gaps support the block-independence (mixing) hypothesis; a
    series with long-range dependence shows an order-one gap.  ``simulate``
    may override the model sampler (signature (length, rng) -> array).
    """
    if fns is None:
        fns = default_mixing_functions()
    if reps < 50:
        raise ValueError("needs reps >= 50")
    if a_n is None:
        a_n = normalizing_sequence(spec, n)
    sim = simulate if simulate is not None else (
        lambda length, rng: simulate_series(spec, length, rng))
    r, k = scheme.r_n, scheme.k_n
    block_times = np.arange(1, k + 1) * r / n
    # Freeze each point's time weight at its block's right endpoint on both
    # sides, so the gap measures dependence across blocks and nothing else
    # (for an IID series both sides have the same expectation exactly).
    times_full = np.repeat(block_times, r)
    full_vals = np.empty((reps, len(fns)))
    for rep in range(reps):
        x = np.asarray(sim(n, substream(seed, 21, rep)), dtype=float)[: k * r] / a_n
        for j, f in enumerate(fns):
            full_vals[rep, j] = np.exp(-float(np.sum(f(times_full, x))))
    # One replicate of the product side = product over k blocks that are
    # simulated independently of each other, so its mean is unbiased for the
    # product of block expectations (sharing one block sample across the k
    # factors would bias the product through correlated estimation noise).
    prod_vals = np.ones((reps, len(fns)))
    for rep in range(reps):
        for kk in range(k):
            x = np.asarray(sim(r, substream(seed, 22, rep, kk)), dtype=float) / a_n
            for j, f in enumerate(fns):
                prod_vals[rep, j] *= np.exp(-float(np.sum(f(block_times[kk], x))))
    diffs, ses, fulls, blocks = [], [], [], []
    for j in range(len(fns)):
        m1 = full_vals[:, j].mean()
        s1 = full_vals[:, j].std(ddof=1) / np.sqrt(reps)
        m2 = prod_vals[:, j].mean()
        s2 = prod_vals[:, j].std(ddof=1) / np.sqrt(reps)
        diffs.append(float(m1 - m2))
        ses.append(float(np.sqrt(s1**2 + s2**2)))
        fulls.append(float(m1))
        blocks.append(float(m2))
    return MixingReport("mixing", n, r, reps, seed, tuple(diffs), tuple(ses),
                        tuple(fulls), tuple(blocks))


def write_series_csv(series, file) -> None:
    own = isinstance(file, (str, os.PathLike))
    fh = open(file, "w", newline="") if own else file
    try:
        w = csv.writer(fh)
        w.writerow(["value"])
        for v in np.asarray(series, dtype=float):
            w.writerow([repr(float(v))])
    finally:
        if own:
            fh.close()


def read_series_csv(file) -> np.ndarray:
    own = isinstance(file, (str, os.PathLike))
    fh = open(file, "r", newline="") if own else file
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    if not rows or rows[0][:1] != ["value"]:
        raise ValueError("expected header 'value'")
    vals = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not row[0].strip():
            continue
        try:
            vals.append(float(row[0]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not vals:
        raise ValueError("no data rows")
    return np.asarray(vals)
