"""Step paths and the M1 path distance.

The M1 implementation is checked against an independent oracle: a
brute-force discrete Frechet distance over densely sampled completed
graphs, which overestimates the continuous value by at most the sampling
resolution.  Closed-form cases pin exact values.
"""

import io

import numpy as np
import pytest
from numba import njit

from stablesums.cadlag import (
    CadlagPath,
    PathFormatError,
    completed_graph,
    l1_distance,
    m1_distance,
    read_path_csv,
    uniform_distance,
    write_path_csv,
)

TOL = 1e-6


# ---------------------------------------------------------------------------
# independent oracle: discrete Frechet distance on densified completed graphs
# ---------------------------------------------------------------------------

@njit(cache=True)
def _discrete_frechet(pt, px, qt, qx):
    n = pt.shape[0]
    m = qt.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for j in range(m):
        c = max(abs(pt[0] - qt[j]), abs(px[0] - qx[j]))
        prev[j] = c if j == 0 else max(prev[j - 1], c)
    for i in range(1, n):
        for j in range(m):
            c = max(abs(pt[i] - qt[j]), abs(px[i] - qx[j]))
            if j == 0:
                best = prev[0]
            else:
                best = min(prev[j], prev[j - 1], cur[j - 1])
            cur[j] = max(c, best)
        prev, cur = cur, prev
    return prev[m - 1]


def _candidate_coords(own_level, other_t, other_x):
    """Critical positions along a segment at fixed transverse coordinate:
    alignments with the other curve's vertices and L-infinity balance points."""
    cands = set(other_t)
    for a in other_t:
        for b in other_x:
            r = abs(own_level - b)
            cands.add(a + r)
            cands.add(a - r)
    ot = sorted(other_t)
    for i in range(len(ot)):
        for j in range(i + 1, len(ot)):
            cands.add(0.5 * (ot[i] + ot[j]))
    return cands


def _densify(points, other_t, other_x, fill=60):
    out = []
    for k in range(points.shape[0] - 1):
        (t0, x0), (t1, x1) = points[k], points[k + 1]
        out.append((t0, x0))
        if t0 == t1:  # vertical segment: parametrize by space
            lo, hi = min(x0, x1), max(x0, x1)
            cands = _candidate_coords(t0, other_x, other_t)
            cands.update(np.linspace(lo, hi, fill))
            cs = sorted(c for c in cands if lo < c < hi)
            if x0 > x1:
                cs = cs[::-1]
            out.extend((t0, x) for x in cs)
        else:  # horizontal
            cands = _candidate_coords(x0, other_t, other_x)
            cands.update(np.linspace(t0, t1, fill))
            out.extend((t, x0) for t in sorted(c for c in cands if t0 < c < t1))
    out.append(tuple(points[-1]))
    arr = np.asarray(out)
    return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


def oracle_m1(a: CadlagPath, b: CadlagPath, fill: int = 60) -> float:
    P = completed_graph(a).points
    Q = completed_graph(b).points
    pt, px = _densify(P, list(Q[:, 0]), list(Q[:, 1]), fill)
    qt, qx = _densify(Q, list(P[:, 0]), list(P[:, 1]), fill)
    return float(_discrete_frechet(pt, px, qt, qx))


def random_path(rng: np.random.Generator, max_jumps: int = 3) -> CadlagPath:
    k = int(rng.integers(0, max_jumps + 1))
    times = np.sort(rng.uniform(0.01, 1.0, size=k))
    while np.any(np.diff(times) <= 0):
        times = np.sort(rng.uniform(0.01, 1.0, size=k))
    vals = rng.uniform(-1, 1, size=k)
    return CadlagPath(rng.uniform(-1, 1), times, vals)


# ---------------------------------------------------------------------------
# path semantics
# ---------------------------------------------------------------------------

def test_evaluation_and_left_limits():
    p = CadlagPath(1.0, [0.25, 0.5], [2.0, -1.0])
    assert p(0.0) == 1.0
    assert p(0.25) == 2.0  # right-continuous at the jump
    assert p.left_limit(0.25) == 1.0
    assert p(0.49) == 2.0
    assert p(0.5) == -1.0
    assert p.left_limit(0.5) == 2.0
    assert p(1.0) == -1.0
    np.testing.assert_array_equal(p(np.array([0.0, 0.3, 0.9])), [1.0, 2.0, -1.0])
    np.testing.assert_array_equal(p.levels, [1.0, 2.0, -1.0])
    np.testing.assert_array_equal(p.jump_sizes, [1.0, -3.0])


def test_zero_size_jumps_are_dropped():
    p = CadlagPath(1.0, [0.2, 0.4, 0.6], [1.0, 3.0, 3.0])
    np.testing.assert_array_equal(p.jump_times, [0.4])
    np.testing.assert_array_equal(p.jump_values, [3.0])
    assert p == CadlagPath(1.0, [0.4], [3.0])
    assert hash(p) == hash(CadlagPath(1.0, [0.4], [3.0]))


def test_from_jumps_accumulates_sizes():
    p = CadlagPath.from_jumps(0.5, [0.3, 0.8], [1.0, -2.0])
    np.testing.assert_allclose(p.jump_values, [1.5, -0.5])
    np.testing.assert_allclose(p.jump_sizes, [1.0, -2.0])


def test_construction_errors():
    with pytest.raises(ValueError):
        CadlagPath(0.0, [0.5, 0.5], [1.0, 2.0])  # not strictly increasing
    with pytest.raises(ValueError):
        CadlagPath(0.0, [0.0], [1.0])  # time 0 not allowed as a jump
    with pytest.raises(ValueError):
        CadlagPath(0.0, [1.1], [1.0])  # beyond the interval
    with pytest.raises(ValueError):
        CadlagPath(np.nan, [], [])
    with pytest.raises(ValueError):
        CadlagPath(0.0, [0.5], [np.inf])
    with pytest.raises(ValueError):
        CadlagPath(0.0, [0.3], [1.0, 2.0])  # shape mismatch
    p = CadlagPath(0.0, [0.5], [1.0])
    with pytest.raises(ValueError):
        p(1.5)
    with pytest.raises(ValueError):
        p.left_limit(-0.1)


def test_completed_graph_alternates_segments():
    p = CadlagPath(0.0, [0.5], [1.0])
    pts = completed_graph(p).points
    np.testing.assert_array_equal(
        pts, [[0.0, 0.0], [0.5, 0.0], [0.5, 1.0], [1.0, 1.0]])
    flat = CadlagPath(2.0)
    np.testing.assert_array_equal(
        completed_graph(flat).points, [[0.0, 2.0], [1.0, 2.0]])


# ---------------------------------------------------------------------------
# uniform and L1 distances (exact for step paths)
# ---------------------------------------------------------------------------

def test_uniform_and_l1_hand_case():
    a = CadlagPath(0.0, [0.5], [1.0])
    b = CadlagPath(0.0, [0.25], [0.5])
    # |a-b|: 0 on [0,.25), .5 on [.25,.5), .5 on [.5,1]
    assert uniform_distance(a, b) == 0.5
    np.testing.assert_allclose(l1_distance(a, b), 0.5 * 0.75)
    assert uniform_distance(a, a) == 0.0
    assert l1_distance(a, a) == 0.0


# ---------------------------------------------------------------------------
# M1 distance: closed forms
# ---------------------------------------------------------------------------

def test_m1_identical_paths():
    a = CadlagPath(0.3, [0.2, 0.7], [1.0, -0.5])
    assert m1_distance(a, a) == 0.0


def test_m1_time_shifted_jumps():
    # two unit jumps at distance 0.3: matching costs min(shift, size)
    a = CadlagPath(0.0, [0.4], [1.0])
    b = CadlagPath(0.0, [0.7], [1.0])
    assert abs(m1_distance(a, b, tol=1e-7) - 0.3) < 1e-6
    # when the shift exceeds the size, the space gap binds instead
    c = CadlagPath(0.0, [0.1], [0.2])
    d = CadlagPath(0.0, [0.9], [0.2])
    assert abs(m1_distance(c, d, tol=1e-7) - 0.2) < 1e-6


def test_m1_same_time_different_sizes():
    a = CadlagPath(0.0, [0.4], [1.0])
    b = CadlagPath(0.0, [0.4], [0.8])
    assert abs(m1_distance(a, b, tol=1e-7) - 0.2) < 1e-6


def test_m1_sees_oscillation_uniformly():
    # an up-down spike cannot be absorbed by reparametrization
    a = CadlagPath(0.0, [0.5, 0.500001], [1.0, 0.0])
    b = CadlagPath(0.0)
    assert abs(m1_distance(a, b, tol=1e-7) - 1.0) < 1e-4


def test_m1_shelf_sequence_converges_but_uniform_does_not():
    # x_n pauses at level 1/2 for a window of width 1/n before completing the
    # jump; M1 sees only the time gap, the uniform distance stays at 1/2.
    x = CadlagPath(0.0, [0.5], [1.0])
    for n in (4, 8, 16):
        xn = CadlagPath(0.0, [0.5 - 1.0 / n, 0.5], [0.5, 1.0])
        d = m1_distance(xn, x, tol=1e-7)
        assert abs(d - 1.0 / n) < 1e-6
        assert uniform_distance(xn, x) == 0.5


def test_m1_tol_validation():
    a = CadlagPath(0.0, [0.4], [1.0])
    with pytest.raises(ValueError):
        m1_distance(a, a, tol=0.0)


# ---------------------------------------------------------------------------
# M1 distance: metric axioms, domination, oracle agreement
# ---------------------------------------------------------------------------

def test_m1_axioms_and_domination_random_pairs():
    rng = np.random.default_rng(411)
    paths = [random_path(rng) for _ in range(40)]
    for i in range(0, len(paths) - 2, 1):
        a, b, c = paths[i], paths[i + 1], paths[i + 2]
        dab = m1_distance(a, b, tol=TOL)
        dba = m1_distance(b, a, tol=TOL)
        dac = m1_distance(a, c, tol=TOL)
        dbc = m1_distance(b, c, tol=TOL)
        assert dab >= 0.0
        assert abs(dab - dba) <= TOL
        assert dac <= dab + dbc + 3 * TOL
        assert dab <= uniform_distance(a, b) + TOL


def test_m1_positive_for_distinct_paths():
    rng = np.random.default_rng(412)
    for _ in range(20):
        a = random_path(rng)
        b = random_path(rng)
        if a == b:
            continue
        assert m1_distance(a, b, tol=TOL) > 0.0


def test_m1_agrees_with_discrete_frechet_oracle():
    rng = np.random.default_rng(20260815)
    worst = 0.0
    for _ in range(120):
        a = random_path(rng)
        b = random_path(rng)
        d_fast = m1_distance(a, b, tol=1e-7)
        d_oracle = oracle_m1(a, b)
        worst = max(worst, abs(d_fast - d_oracle))
    assert worst < 1e-3


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_path_csv_round_trip(tmp_path):
    p = CadlagPath(-0.25, [0.1, 0.55, 1.0], [1.0 / 3.0, -2.0, 0.125])
    f = tmp_path / "path.csv"
    write_path_csv(p, f)
    assert read_path_csv(f) == p
    # also through file objects
    buf = io.StringIO()
    write_path_csv(p, buf)
    buf.seek(0)
    assert read_path_csv(buf) == p


def test_path_csv_accepts_unsorted_rows():
    text = "t,value\n0.5,2.0\n0.0,1.0\n"
    assert read_path_csv(io.StringIO(text)) == CadlagPath(1.0, [0.5], [2.0])


@pytest.mark.parametrize("text", [
    "time,value\n0.0,1.0\n",          # wrong header
    "t,value\n",                       # no rows
    "t,value\n0.1,1.0\n",             # missing t=0 row
    "t,value\n0.0,1.0\n0.5,2.0\n0.5,3.0\n",  # duplicate times
    "t,value\n0.0,one\n",             # non-numeric
    "t,value\n0.0\n",                 # missing column
])
def test_path_csv_rejects_malformed(text):
    with pytest.raises(PathFormatError):
        read_path_csv(io.StringIO(text))
