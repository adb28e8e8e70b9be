"""Small shared helpers: Monte Carlo estimates, RNG substreams, intervals."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np


class Estimate(NamedTuple):
    """A point estimate with its Monte Carlo standard error.

    ``se`` is 0.0 for closed-form values.  ``method`` records how the number
    was produced (``"exact"``, ``"mc"``, ...) and ``reps``/``seed`` echo the
    sampling effort so reports stay reproducible.
    """

    value: float
    se: float = 0.0
    method: str = "exact"
    reps: int = 0
    seed: int | None = None

    def within(self, target: float, n_se: float = 3.0, atol: float = 0.0) -> bool:
        """True if ``target`` lies within ``n_se`` standard errors (plus atol)."""
        return abs(self.value - target) <= n_se * self.se + atol


def substream(seed, *ids: int) -> np.random.Generator:
    """Deterministic child generator for (seed, *ids).

    Replicate ``r`` of a run with master seed ``s`` always uses
    ``substream(s, r)`` regardless of scheduling, so results do not depend
    on worker count.
    """
    if seed is None:
        raise ValueError("substream requires an explicit seed")
    base = list(np.atleast_1d(np.asarray(seed, dtype=np.uint64)))
    return np.random.default_rng([int(x) for x in base] + [int(i) for i in ids])


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("wilson_interval needs trials >= 1")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def mc_mean(samples: np.ndarray, method: str = "mc", seed: int | None = None) -> Estimate:
    """Sample mean with standard error of the mean."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        raise ValueError("mc_mean needs at least 2 samples")
    se = float(samples.std(ddof=1) / np.sqrt(n))
    return Estimate(float(samples.mean()), se, method=method, reps=n, seed=seed)


def as_float_array(x: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional array")
    return arr
