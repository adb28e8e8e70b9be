"""Right-continuous step paths on [0, 1] and path distances.

The path distance of interest here is the M1 distance: the infimum over
monotone parametrizations of the completed graphs of the larger of the time
and space discrepancies.  For polygonal completed graphs this is a Frechet
distance under the max(time, space) ground metric, computed exactly by a
free-space reachability decision combined with bisection.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "CadlagPath",
    "CompletedGraph",
    "PathFormatError",
    "completed_graph",
    "uniform_distance",
    "l1_distance",
    "m1_distance",
    "read_path_csv",
    "write_path_csv",
]


class PathFormatError(ValueError):
    """Raised when serialized path data violates the t,value contract."""


@dataclass(frozen=True)
class CadlagPath:
    """A cadlag step path on [0, 1].

    ``initial_value`` is the value on [0, first jump).  ``jump_times`` are
    strictly increasing times in (0, 1]; ``jump_values`` are the values
    assumed from each jump time onward.  Jumps of size zero are dropped at
    construction, so two paths are equal as functions iff their fields match.
    """

    initial_value: float
    jump_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    jump_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        t = np.asarray(self.jump_times, dtype=float)
        v = np.asarray(self.jump_values, dtype=float)
        x0 = float(self.initial_value)
        if t.ndim != 1 or v.ndim != 1 or t.shape != v.shape:
            raise ValueError("jump_times and jump_values must be 1-d arrays of equal length")
        if not np.isfinite(x0) or not (np.isfinite(t).all() and np.isfinite(v).all()):
            raise ValueError("path data must be finite")
        if t.size:
            if np.any(np.diff(t) <= 0):
                raise ValueError("jump_times must be strictly increasing")
            if t[0] <= 0.0 or t[-1] > 1.0:
                raise ValueError("jump_times must lie in (0, 1]")
            levels = np.concatenate(([x0], v))
            keep = np.diff(levels) != 0.0
            t, v = t[keep], v[keep]
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "initial_value", x0)
        object.__setattr__(self, "jump_times", t)
        object.__setattr__(self, "jump_values", v)

    @classmethod
    def from_jumps(cls, initial_value: float, times, sizes) -> "CadlagPath":
        """Build a path from jump sizes (values are cumulative sums)."""
        times = np.asarray(times, dtype=float)
        sizes = np.asarray(sizes, dtype=float)
        values = float(initial_value) + np.cumsum(sizes)
        return cls(initial_value, times, values)

    @property
    def levels(self) -> np.ndarray:
        """Values on the successive constancy intervals, starting at t=0."""
        return np.concatenate(([self.initial_value], self.jump_values))

    @property
    def jump_sizes(self) -> np.ndarray:
        return np.diff(self.levels)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
            raise ValueError("evaluation times must lie in [0, 1]")
        idx = np.searchsorted(self.jump_times, t_arr, side="right")
        out = self.levels[idx]
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def left_limit(self, t):
        """Value just before t; at t=0 this is the initial value."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
            raise ValueError("evaluation times must lie in [0, 1]")
        idx = np.searchsorted(self.jump_times, t_arr, side="left")
        out = self.levels[idx]
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def __eq__(self, other):
        if not isinstance(other, CadlagPath):
            return NotImplemented
        return (
            self.initial_value == other.initial_value
            and self.jump_times.shape == other.jump_times.shape
            and bool(np.all(self.jump_times == other.jump_times))
            and bool(np.all(self.jump_values == other.jump_values))
        )

    def __hash__(self):
        return hash((self.initial_value, self.jump_times.tobytes(), self.jump_values.tobytes()))


@dataclass(frozen=True)
class CompletedGraph:
    """Polyline through the completed graph of a step path.

    Points are (time, space) rows.  Segments alternate between horizontal
    (constancy intervals) and vertical (jumps, traversed from the left limit
    to the new value); the first point is (0, x(0)) and the last has time 1.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("completed graph needs at least two (time, space) points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def completed_graph(path: CadlagPath) -> CompletedGraph:
    """Completed graph of a step path as an alternating H/V polyline."""
    pts = [(0.0, path.initial_value)]
    level = path.initial_value
    for t, v in zip(path.jump_times, path.jump_values):
        pts.append((t, level))
        pts.append((t, v))
        level = v
    if not path.jump_times.size or path.jump_times[-1] < 1.0:
        pts.append((1.0, level))
    return CompletedGraph(np.asarray(pts, dtype=float))


def _merged_breakpoints(a: CadlagPath, b: CadlagPath) -> np.ndarray:
    return np.union1d(
        np.concatenate(([0.0], a.jump_times)), np.concatenate(([0.0], b.jump_times))
    )


def uniform_distance(a: CadlagPath, b: CadlagPath) -> float:
    """sup_t |a(t) - b(t)|, exact for step paths."""
    ts = _merged_breakpoints(a, b)
    return float(np.max(np.abs(a(ts) - b(ts))))


def l1_distance(a: CadlagPath, b: CadlagPath) -> float:
    """Integral of |a(t) - b(t)| over [0, 1], exact for step paths."""
    ts = _merged_breakpoints(a, b)
    widths = np.diff(np.concatenate((ts, [1.0])))
    return float(np.sum(np.abs(a(ts) - b(ts)) * widths))


_SLACK = 1e-12


@njit(cache=True)
def _edge_interval(c1, d1, c2, d2, eps):
    """Solve max(|c1 + d1*s|, |c2 + d2*s|) <= eps for s in [0, 1].

    Returns (lo, hi); empty is signalled by lo > hi.
    """
    lo, hi = 0.0, 1.0
    for c, d in ((c1, d1), (c2, d2)):
        if abs(d) < 1e-300:
            if abs(c) > eps:
                return 1.0, 0.0
        else:
            a = (-eps - c) / d
            b = (eps - c) / d
            if a > b:
                a, b = b, a
            if a > lo:
                lo = a
            if b < hi:
                hi = b
    if lo > hi + _SLACK:
        return 1.0, 0.0
    return lo, min(hi, 1.0)


@njit(cache=True)
def _frechet_feasible(pt, px, qt, qx, eps):
    """Decide whether the polylines P, Q are within Frechet distance eps
    under the ground cost max(|dt|, |dx|).

    Standard free-space reachability: each cell's free set is convex, so a
    monotone path exists iff the interval propagation below reaches the
    upper-right corner.  Left/right/bottom/top boundary slides are handled
    explicitly.
    """
    n = pt.shape[0] - 1  # segments of P
    m = qt.shape[0] - 1  # segments of Q
    if max(abs(pt[0] - qt[0]), abs(px[0] - qx[0])) > eps + _SLACK:
        return False
    if max(abs(pt[n] - qt[m]), abs(px[n] - qx[m])) > eps + _SLACK:
        return False

    # L[j] = reachable interval (in Q-segment-j parameter) on the edge at
    # P-vertex i, for the current column i; starts with the left boundary.
    L_lo = np.empty(m)
    L_hi = np.empty(m)
    alive = True
    for j in range(m):
        lo, hi = _edge_interval(qt[j] - pt[0], qt[j + 1] - qt[j],
                                qx[j] - px[0], qx[j + 1] - qx[j], eps)
        if alive and lo <= _SLACK and lo <= hi:
            L_lo[j] = 0.0
            L_hi[j] = hi
            if hi < 1.0 - _SLACK:
                alive = False
        else:
            L_lo[j] = 1.0
            L_hi[j] = 0.0
            alive = False

    bottom_alive = True
    top_lo = 1.0
    top_hi = 0.0
    for i in range(n):
        dpt = pt[i + 1] - pt[i]
        dpx = px[i + 1] - px[i]
        # Entry on the bottom edge of cell (i, 0) via the bottom boundary.
        blo, bhi = _edge_interval(pt[i] - qt[0], dpt, px[i] - qx[0], dpx, eps)
        if bottom_alive and blo <= _SLACK and blo <= bhi:
            B_lo, B_hi = 0.0, bhi
            if bhi < 1.0 - _SLACK:
                bottom_alive = False
        else:
            B_lo, B_hi = 1.0, 0.0
            bottom_alive = False

        for j in range(m):
            dqt = qt[j + 1] - qt[j]
            dqx = qx[j + 1] - qx[j]
            left_nonempty = L_lo[j] <= L_hi[j]
            bottom_nonempty = B_lo <= B_hi

            # Right edge of cell (i, j): at P-vertex i+1 along Q-segment j.
            rlo, rhi = _edge_interval(qt[j] - pt[i + 1], dqt,
                                      qx[j] - px[i + 1], dqx, eps)
            if rlo <= rhi:
                if bottom_nonempty:
                    L_lo[j], L_hi[j] = rlo, rhi
                elif left_nonempty:
                    lo2 = max(rlo, L_lo[j])
                    if lo2 <= rhi + _SLACK:
                        L_lo[j], L_hi[j] = min(lo2, rhi), rhi
                    else:
                        L_lo[j], L_hi[j] = 1.0, 0.0
                else:
                    L_lo[j], L_hi[j] = 1.0, 0.0
            else:
                L_lo[j], L_hi[j] = 1.0, 0.0

            # Top edge of cell (i, j): along P-segment i at Q-vertex j+1.
            tlo, thi = _edge_interval(pt[i] - qt[j + 1], dpt,
                                      px[i] - qx[j + 1], dpx, eps)
            if tlo <= thi:
                if left_nonempty:
                    B_lo, B_hi = tlo, thi
                elif bottom_nonempty:
                    lo2 = max(tlo, B_lo)
                    if lo2 <= thi + _SLACK:
                        B_lo, B_hi = min(lo2, thi), thi
                    else:
                        B_lo, B_hi = 1.0, 0.0
                else:
                    B_lo, B_hi = 1.0, 0.0
            else:
                B_lo, B_hi = 1.0, 0.0

        # After the column: (B_lo, B_hi) is the reachable part of the top
        # boundary edge above cell (i, m-1), entered from the interior.  A
        # path may also slide along the top boundary from the previous column.
        tlo, thi = _edge_interval(pt[i] - qt[m], dpt, px[i] - qx[m], dpx, eps)
        if tlo <= thi and top_lo <= top_hi and top_hi >= 1.0 - _SLACK and tlo <= _SLACK:
            if B_lo > B_hi or tlo < B_lo:
                B_lo, B_hi = tlo, thi
        top_lo, top_hi = B_lo, B_hi

    # Slide up the right boundary (P-vertex n) where possible.
    for j in range(1, m):
        if L_lo[j - 1] <= L_hi[j - 1] and L_hi[j - 1] >= 1.0 - _SLACK:
            lo, hi = _edge_interval(qt[j] - pt[n], qt[j + 1] - qt[j],
                                    qx[j] - px[n], qx[j + 1] - qx[j], eps)
            if lo <= hi and lo <= _SLACK and (L_lo[j] > L_hi[j] or lo < L_lo[j]):
                L_lo[j], L_hi[j] = 0.0, hi

    if L_lo[m - 1] <= L_hi[m - 1] and L_hi[m - 1] >= 1.0 - _SLACK:
        return True
    if top_lo <= top_hi and top_hi >= 1.0 - _SLACK:
        return True
    return False


def _graph_key(g: CompletedGraph):
    return (g.points.shape[0], tuple(g.points.ravel()))


def m1_distance(a: CadlagPath, b: CadlagPath, tol: float = 1e-6) -> float:
    """M1 distance between two step paths, within ``tol`` of the true value.

    The returned value never undershoots the true distance, so domination
    bounds of the form m1 <= other_metric carry over with a ``tol`` margin.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if a == b:
        return 0.0
    ga, gb = completed_graph(a), completed_graph(b)
    if _graph_key(gb) < _graph_key(ga):
        ga, gb = gb, ga
    P, Q = ga.points, gb.points
    lo = max(abs(P[0, 1] - Q[0, 1]), abs(P[-1, 1] - Q[-1, 1]))
    hi = uniform_distance(a, b)
    if hi <= lo + tol:
        return hi
    pt, px = np.ascontiguousarray(P[:, 0]), np.ascontiguousarray(P[:, 1])
    qt, qx = np.ascontiguousarray(Q[:, 0]), np.ascontiguousarray(Q[:, 1])
    if not _frechet_feasible(pt, px, qt, qx, hi):
        # The uniform distance always dominates; numerical slack only.
        hi = hi + tol
        if not _frechet_feasible(pt, px, qt, qx, hi):
            raise RuntimeError("M1 bisection lost its upper bound; this is a bug")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _frechet_feasible(pt, px, qt, qx, mid):
            hi = mid
        else:
            lo = mid
    return hi


def write_path_csv(path: CadlagPath, file) -> None:
    """Write ``t,value`` rows; the t=0 row carries the initial value."""
    own = isinstance(file, (str, os.PathLike))
    fh = open(file, "w", newline="") if own else file
    try:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        w.writerow(["0.0", repr(path.initial_value)])
        for t, v in zip(path.jump_times, path.jump_values):
            w.writerow([repr(float(t)), repr(float(v))])
    finally:
        if own:
            fh.close()


def read_path_csv(file) -> CadlagPath:
    """Read a ``t,value`` file; rows may be unsorted, duplicate times are an error."""
    own = isinstance(file, (str, os.PathLike))
    fh = open(file, "r", newline="") if own else file
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    if not rows or [c.strip().lower() for c in rows[0][:2]] != ["t", "value"]:
        raise PathFormatError("expected header 't,value'")
    ts, vs = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < 2:
            raise PathFormatError(f"line {lineno}: expected two columns")
        try:
            ts.append(float(row[0]))
            vs.append(float(row[1]))
        except ValueError as exc:
            raise PathFormatError(f"line {lineno}: {exc}") from None
    t = np.asarray(ts)
    v = np.asarray(vs)
    if t.size == 0:
        raise PathFormatError("no data rows")
    order = np.argsort(t, kind="stable")
    t, v = t[order], v[order]
    if np.any(np.diff(t) == 0.0):
        raise PathFormatError("duplicate times")
    if t[0] != 0.0:
        raise PathFormatError("missing t=0 row for the initial value")
    return CadlagPath(v[0], t[1:], v[1:])
