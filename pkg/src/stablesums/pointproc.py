"""Point measures on [0,1] x (R minus 0) and the truncated summation map.

The summation map adds up, in time order, the marks whose magnitude exceeds
a threshold u, producing a step path.  Its continuity domain excludes
measures with atoms on the time boundary or exactly on the threshold lines,
and measures whose same-time atoms disagree in sign.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .cadlag import CadlagPath

__all__ = [
    "PointMeasure",
    "MeasureFormatError",
    "DomainReport",
    "build_time_space_measure",
    "summation_functional",
    "continuity_domain",
    "read_measure_csv",
    "write_measure_csv",
    "measure_to_json",
    "measure_from_json",
]


class MeasureFormatError(ValueError):
    """Raised when serialized measure data violates the time,mark contract."""


@dataclass(frozen=True)
class PointMeasure:
    """A finite point measure with atoms (time, mark), time in [0,1], mark != 0.

    Atom order is preserved as given; it has no effect on sums but keeps
    serialization round-trips exact.
    """

    times: np.ndarray
    marks: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        x = np.atleast_1d(np.asarray(self.marks, dtype=float))
        if t.ndim != 1 or t.shape != x.shape:
            raise ValueError("times and marks must be 1-d arrays of equal length")
        if t.size and (np.any(t < 0.0) or np.any(t > 1.0)):
            raise ValueError("atom times must lie in [0, 1]")
        if not (np.isfinite(t).all() and np.isfinite(x).all()):
            raise ValueError("atoms must be finite")
        if np.any(x == 0.0):
            raise ValueError("marks must be nonzero")
        t.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "marks", x)

    @property
    def n_atoms(self) -> int:
        return int(self.times.size)

    def restrict(self, u: float) -> "PointMeasure":
        """Sub-measure of atoms with |mark| > u."""
        keep = np.abs(self.marks) > u
        return PointMeasure(self.times[keep], self.marks[keep])

    def __eq__(self, other):
        if not isinstance(other, PointMeasure):
            return NotImplemented
        return (
            self.times.shape == other.times.shape
            and bool(np.all(self.times == other.times))
            and bool(np.all(self.marks == other.marks))
        )

    def __hash__(self):
        return hash((self.times.tobytes(), self.marks.tobytes()))


def build_time_space_measure(series, a_n: float) -> PointMeasure:
    """Measure with atoms (i/n, X_i/a_n) for i = 1..n, zero marks skipped."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("series must be a nonempty 1-d array")
    if not (np.isfinite(a_n) and a_n > 0):
        raise ValueError("a_n must be positive and finite")
    n = x.size
    times = np.arange(1, n + 1, dtype=float) / n
    marks = x / a_n
    keep = marks != 0.0
    return PointMeasure(times[keep], marks[keep])


def summation_functional(measure: PointMeasure, u: float) -> CadlagPath:
    """Running sum of marks with |mark| > u, as a step path on [0, 1].

    Atoms sharing a time merge into a single jump; atoms at time zero are
    absorbed into the initial value.
    """
    if not (np.isfinite(u) and u > 0):
        raise ValueError("threshold u must be positive and finite")
    keep = np.abs(measure.marks) > u
    t, x = measure.times[keep], measure.marks[keep]
    initial = float(x[t == 0.0].sum())
    pos = t > 0.0
    t, x = t[pos], x[pos]
    if t.size == 0:
        return CadlagPath(initial)
    order = np.argsort(t, kind="stable")
    t, x = t[order], x[order]
    uniq, inv = np.unique(t, return_inverse=True)
    sizes = np.bincount(inv, weights=x)
    return CadlagPath.from_jumps(initial, uniq, sizes)


@dataclass(frozen=True)
class DomainReport:
    """Continuity-domain membership of a measure for the summation map.

    ``boundary_ok`` is False when some atom sits at time 0 or 1 with
    |mark| > u, or some mark equals +-u exactly.  ``signs_ok`` is False when
    two atoms share a time with opposite mark signs.  ``witnesses`` lists the
    offending atoms.
    """

    boundary_ok: bool
    signs_ok: bool
    witnesses: tuple[tuple[float, float], ...]

    @property
    def in_domain(self) -> bool:
        return self.boundary_ok and self.signs_ok


def continuity_domain(measure: PointMeasure, u: float) -> DomainReport:
    """Check the two continuity conditions for the summation map at level u."""
    if not (np.isfinite(u) and u > 0):
        raise ValueError("threshold u must be positive and finite")
    t, x = measure.times, measure.marks
    witnesses: list[tuple[float, float]] = []

    on_time_edge = ((t == 0.0) | (t == 1.0)) & (np.abs(x) > u)
    on_threshold = np.abs(x) == u
    bad1 = on_time_edge | on_threshold
    boundary_ok = not bool(bad1.any())
    witnesses.extend((float(a), float(b)) for a, b in zip(t[bad1], x[bad1]))

    signs_ok = True
    if t.size > 1:
        order = np.argsort(t, kind="stable")
        ts, xs = t[order], x[order]
        start = 0
        for k in range(1, ts.size + 1):
            if k == ts.size or ts[k] != ts[start]:
                group = xs[start:k]
                if group.size > 1 and group.min() < 0.0 < group.max():
                    signs_ok = False
                    witnesses.extend(
                        (float(ts[start]), float(b)) for b in group
                    )
                start = k
    return DomainReport(boundary_ok, signs_ok, tuple(witnesses))


def write_measure_csv(measure: PointMeasure, file) -> None:
    own = isinstance(file, (str, os.PathLike))
    fh = open(file, "w", newline="") if own else file
    try:
        w = csv.writer(fh)
        w.writerow(["time", "mark"])
        for t, x in zip(measure.times, measure.marks):
            w.writerow([repr(float(t)), repr(float(x))])
    finally:
        if own:
            fh.close()


def read_measure_csv(file) -> PointMeasure:
    own = isinstance(file, (str, os.PathLike))
    fh = open(file, "r", newline="") if own else file
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    if not rows or [c.strip().lower() for c in rows[0][:2]] != ["time", "mark"]:
        raise MeasureFormatError("expected header 'time,mark'")
    ts, xs = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < 2:
            raise MeasureFormatError(f"line {lineno}: expected two columns")
        try:
            ts.append(float(row[0]))
            xs.append(float(row[1]))
        except ValueError as exc:
            raise MeasureFormatError(f"line {lineno}: {exc}") from None
    try:
        return PointMeasure(np.asarray(ts), np.asarray(xs))
    except ValueError as exc:
        raise MeasureFormatError(str(exc)) from None


def measure_to_json(measure: PointMeasure) -> str:
    atoms = [[float(t), float(x)] for t, x in zip(measure.times, measure.marks)]
    return json.dumps(atoms)


def measure_from_json(text: str) -> PointMeasure:
    try:
        atoms = json.loads(text)
        arr = np.asarray(atoms, dtype=float)
    except (json.JSONDecodeError, ValueError) as exc:
        raise MeasureFormatError(str(exc)) from None
    if arr.size == 0:
        return PointMeasure(np.empty(0), np.empty(0))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise MeasureFormatError("expected a list of [time, mark] pairs")
    try:
        return PointMeasure(arr[:, 0], arr[:, 1])
    except ValueError as exc:
        raise MeasureFormatError(str(exc)) from None
