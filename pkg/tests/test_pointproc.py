"""Point measures, the truncated summation map, and its continuity domain."""

import io

import numpy as np
import pytest

from stablesums.cadlag import CadlagPath, m1_distance
from stablesums.pointproc import (
    MeasureFormatError,
    PointMeasure,
    build_time_space_measure,
    continuity_domain,
    measure_from_json,
    measure_to_json,
    read_measure_csv,
    summation_functional,
    write_measure_csv,
)


def test_measure_validation():
    with pytest.raises(ValueError):
        PointMeasure([0.5], [0.0])  # zero mark
    with pytest.raises(ValueError):
        PointMeasure([1.5], [1.0])  # time outside [0, 1]
    with pytest.raises(ValueError):
        PointMeasure([0.5], [np.inf])
    with pytest.raises(ValueError):
        PointMeasure([0.5, 0.6], [1.0])  # shape mismatch
    m = PointMeasure([0.5, 0.2], [1.0, -2.0])
    assert m.n_atoms == 2
    # atom order is preserved as given
    np.testing.assert_array_equal(m.times, [0.5, 0.2])


def test_restrict_keeps_large_marks():
    m = PointMeasure([0.1, 0.2, 0.3], [0.5, -2.0, 1.0])
    r = m.restrict(0.8)
    np.testing.assert_array_equal(r.times, [0.2, 0.3])
    np.testing.assert_array_equal(r.marks, [-2.0, 1.0])


def test_build_time_space_measure():
    x = np.array([3.0, 0.0, -1.5, 6.0])
    m = build_time_space_measure(x, a_n=3.0)
    np.testing.assert_allclose(m.times, [0.25, 0.75, 1.0])  # zero mark skipped
    np.testing.assert_allclose(m.marks, [1.0, -0.5, 2.0])
    with pytest.raises(ValueError):
        build_time_space_measure([], 1.0)
    with pytest.raises(ValueError):
        build_time_space_measure(x, 0.0)


def test_summation_hand_example():
    m = PointMeasure([0.2, 0.2, 0.6, 0.9], [2.0, 0.5, -3.0, 0.05])
    path = summation_functional(m, u=0.1)
    # same-time atoms merge; the 0.05 mark falls below the threshold
    assert path == CadlagPath.from_jumps(0.0, [0.2, 0.6], [2.5, -3.0])
    path2 = summation_functional(m, u=1.0)
    assert path2 == CadlagPath.from_jumps(0.0, [0.2, 0.6], [2.0, -3.0])
    assert path2(1.0) == -1.0


def test_summation_absorbs_time_zero_atoms():
    m = PointMeasure([0.0, 0.4], [5.0, 1.0])
    path = summation_functional(m, u=0.5)
    assert path.initial_value == 5.0
    assert path(0.0) == 5.0
    assert path(1.0) == 6.0


def test_summation_empty_and_validation():
    m = PointMeasure([0.5], [0.2])
    assert summation_functional(m, u=1.0) == CadlagPath(0.0)
    with pytest.raises(ValueError):
        summation_functional(m, u=0.0)
    with pytest.raises(ValueError):
        summation_functional(m, u=np.inf)


def test_domain_report_boundary_violations():
    u = 1.0
    ok = PointMeasure([0.5, 0.7], [2.0, 0.3])
    rep = continuity_domain(ok, u)
    assert rep.in_domain and rep.boundary_ok and rep.signs_ok
    assert rep.witnesses == ()

    at_end = continuity_domain(PointMeasure([1.0], [2.0]), u)
    assert not at_end.boundary_ok
    assert at_end.witnesses == ((1.0, 2.0),)

    at_start = continuity_domain(PointMeasure([0.0], [-3.0]), u)
    assert not at_start.boundary_ok

    # an atom exactly on the threshold line breaks continuity anywhere in time
    on_line = continuity_domain(PointMeasure([0.5], [-1.0]), u)
    assert not on_line.boundary_ok
    # small atoms at the time boundary are harmless
    small_edge = continuity_domain(PointMeasure([1.0], [0.5]), u)
    assert small_edge.in_domain


def test_domain_report_sign_conflicts():
    u = 0.1
    bad = PointMeasure([0.3, 0.3, 0.8], [1.0, -2.0, 1.0])
    rep = continuity_domain(bad, u)
    assert rep.boundary_ok
    assert not rep.signs_ok
    assert set(rep.witnesses) == {(0.3, 1.0), (0.3, -2.0)}
    # same time, same sign is fine
    good = continuity_domain(PointMeasure([0.3, 0.3], [1.0, 2.0]), u)
    assert good.in_domain


def _random_domain_measure(rng: np.random.Generator, u: float, delta: float):
    """A measure in the continuity domain at level u whose atoms keep a
    margin of 2*delta from the threshold and 3*delta from each other in time."""
    k = int(rng.integers(1, 11))
    while True:
        times = np.sort(rng.uniform(0.05, 0.95, size=k))
        if k == 1 or np.min(np.diff(times)) > 3 * delta:
            break
    above = rng.random(k) < 0.7
    mags = np.where(above,
                    rng.uniform(u + 2 * delta, 3.0, size=k),
                    rng.uniform(2 * delta, u - 2 * delta, size=k))
    signs = np.where(rng.random(k) < 0.5, 1.0, -1.0)
    return PointMeasure(times, mags * signs)


def test_summation_is_m1_continuous_on_its_domain():
    # perturbing every atom by at most delta in time and in mark moves the
    # summed path by at most (number of atoms) * delta in the M1 distance
    rng = np.random.default_rng(515)
    u, delta = 1.0, 1e-3
    for _ in range(60):
        m = _random_domain_measure(rng, u, delta)
        assert continuity_domain(m, u).in_domain
        k = m.n_atoms
        t2 = m.times + rng.uniform(-delta, delta, size=k)
        x2 = m.marks + rng.uniform(-delta, delta, size=k)
        m2 = PointMeasure(t2, x2)
        assert continuity_domain(m2, u).in_domain
        d = m1_distance(summation_functional(m, u), summation_functional(m2, u),
                        tol=1e-9)
        assert d <= k * delta + 1e-6


def test_measure_csv_round_trip(tmp_path):
    m = PointMeasure([0.0, 0.25, 1.0], [1.0 / 3.0, -2.5, 0.125])
    f = tmp_path / "measure.csv"
    write_measure_csv(m, f)
    assert read_measure_csv(f) == m


@pytest.mark.parametrize("text", [
    "t,mark\n0.5,1.0\n",     # wrong header
    "time,mark\n0.5\n",      # missing column
    "time,mark\n0.5,zero\n",  # non-numeric
    "time,mark\n0.5,0.0\n",  # zero mark violates the contract
    "time,mark\n1.5,1.0\n",  # time outside [0, 1]
])
def test_measure_csv_rejects_malformed(text):
    with pytest.raises(MeasureFormatError):
        read_measure_csv(io.StringIO(text))


def test_measure_json_round_trip():
    m = PointMeasure([0.1, 0.9], [-1.25, 3.0])
    assert measure_from_json(measure_to_json(m)) == m
    empty = PointMeasure(np.empty(0), np.empty(0))
    assert measure_from_json(measure_to_json(empty)) == empty
    with pytest.raises(MeasureFormatError):
        measure_from_json("not json")
    with pytest.raises(MeasureFormatError):
        measure_from_json("[[0.5, 1.0, 2.0]]")
    with pytest.raises(MeasureFormatError):
        measure_from_json("[[0.5, 0.0]]")
