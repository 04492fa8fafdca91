import numpy as np
import pytest

from pathqv import (
    BVDriver,
    DomainError,
    DyadicGrid,
    QVCurve,
    SampledPath,
    build_x,
    grid_points,
    preset,
    stieltjes_integral,
    successor,
)
from pathqv.dyadic import csv_text


def test_grid_points_exact():
    g = DyadicGrid(3)
    assert g.npoints == 9
    pts = g.points()
    assert pts[0] == 0.0 and pts[-1] == 1.0
    assert np.all(np.diff(pts) > 0)
    # level-n grid is a subset of the level-m grid for m >= n
    fine = grid_points(7)
    assert np.all(np.isin(pts, fine))


def test_successor_examples():
    assert successor(0.5, 2) == 0.75
    assert successor(1.0, 5) == 1.0
    assert successor(0.25, 3) == 0.375


def test_successor_off_grid_rejected():
    with pytest.raises(DomainError):
        successor(0.3, 3)
    with pytest.raises(DomainError):
        successor(1.5, 3)


def test_successor_order_preserving():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 10))
        k1, k2 = sorted(rng.integers(0, 2**n, size=2))
        s1, s2 = k1 * 2.0**-n, k2 * 2.0**-n
        if s1 < s2:
            assert successor(s1, n) <= successor(s2, n)
    assert successor(1.0, 4) == successor(successor(1.0, 4), 4)


def test_path_length_validation():
    with pytest.raises(DomainError):
        SampledPath(3, np.zeros(8))
    with pytest.raises(DomainError):
        SampledPath(2, [0.0, 1.0, np.inf, 0.0, 0.0])


def test_restrict_identity_function():
    p = SampledPath.from_function(lambda t: t, 3)
    r = p.restrict(1)
    assert list(r.values) == [0.0, 0.5, 1.0]
    assert p.restrict(3) is p


def test_restrict_matches_direct_read():
    x = build_x(preset("fig1-left"), 12)
    r = x.restrict(8)
    stride = 2 ** (12 - 8)
    assert np.array_equal(r.values, x.values[::stride])


def test_restrict_finer_rejected():
    p = SampledPath.from_function(lambda t: t, 2)
    with pytest.raises(DomainError):
        p.restrict(5)


def test_value_at_interpolates():
    p = SampledPath(1, [0.0, 1.0, 0.0])
    assert p.value_at(0.25) == 0.5
    assert p.value_at(0.5) == 1.0
    with pytest.raises(DomainError):
        p.value_at(1.5)


def test_stieltjes_constant_integrand_telescopes():
    x = build_x(preset("fig1-left"), 10)
    driver = BVDriver(x)
    ones = SampledPath(10, np.ones(2**10 + 1))
    for t in (0.25, 0.5, 1.0):
        want = x.value_at(t) - x.value_at(0.0)
        assert stieltjes_integral(ones, driver, t) == pytest.approx(want, abs=1e-14)


def test_stieltjes_left_sum_value():
    # integral of s ds over [0,1]: left sum = 1/2 - 2^-13, within one mesh of 1/2
    n = 12
    ident = SampledPath.from_function(lambda t: t, n)
    val = stieltjes_integral(ident, BVDriver(ident), 1.0)
    assert abs(val - 0.5) <= 2.0**-n
    assert val == pytest.approx(0.5 - 2.0 ** -(n + 1), abs=1e-15)


def test_stieltjes_bounded_by_variation():
    x = build_x(preset("fig2-left"), 9)
    driver = BVDriver(x)
    c = 3.7
    g = SampledPath(9, np.full(2**9 + 1, c))
    val = stieltjes_integral(g, driver, 1.0)
    assert abs(val) <= abs(c) * driver.total_variation + 1e-12


def test_stieltjes_additive_over_intervals():
    x = build_x(preset("fig1-right"), 12)
    driver = BVDriver(x)
    g = SampledPath.from_function(lambda t: np.cos(3 * t), 12)
    a = stieltjes_integral(g, driver, 0.375)
    b = stieltjes_integral(g, driver, 1.0)
    # sum over [0, t) plus [t, u) equals sum over [0, u)
    tail = float(np.sum(g.values[1536:-1] * np.diff(driver.path.values[1536:])))
    assert a + tail == pytest.approx(b, abs=1e-12)


def test_stieltjes_level_mismatch():
    g = SampledPath.from_function(lambda t: t, 3)
    driver = BVDriver(SampledPath.from_function(lambda t: t, 4))
    with pytest.raises(DomainError):
        stieltjes_integral(g, driver, 0.5)
    with pytest.raises(DomainError):
        stieltjes_integral(g, BVDriver(g), 0.3)


def test_bv_driver_total_variation():
    p = SampledPath(2, [0.0, 1.0, -1.0, 0.5, 0.5])
    assert BVDriver(p).total_variation == pytest.approx(1 + 2 + 1.5 + 0)
    assert BVDriver.identity(5).total_variation == pytest.approx(1.0)


def test_qv_curve_monotone_and_first_value():
    x = build_x(preset("fig2-left"), 10)
    curve = QVCurve.from_path(x, 8)
    assert np.all(np.diff(curve.values) >= 0)
    first_inc = x.restrict(8).values[1] - x.restrict(8).values[0]
    assert curve.values[0] == pytest.approx(first_inc**2, rel=1e-12)
    # masses reproduce the per-cell squared increments (up to cumsum rounding)
    sq = np.diff(x.restrict(8).values) ** 2
    assert np.allclose(curve.masses()[:-1], sq, atol=1e-15)
    assert curve.masses()[-1] == 0.0


def test_qv_curve_rejects_decreasing():
    with pytest.raises(DomainError):
        QVCurve(1, [0.0, 1.0, 0.5])


def test_csv_round_trip_bit_exact(tmp_path):
    x = build_x(preset("fig1-left"), 8)
    f = tmp_path / "x.csv"
    x.to_csv(f)
    back = SampledPath.from_csv(f)
    assert back.level == x.level
    assert np.array_equal(back.values, x.values)
    # serialization itself is deterministic
    assert csv_text(x) == csv_text(SampledPath(8, x.values))


def test_json_round_trip(tmp_path):
    x = build_x(preset("fig2-right"), 6)
    f = tmp_path / "x.json"
    x.to_json(f)
    back = SampledPath.from_file(str(f))
    assert back.level == 6
    assert np.array_equal(back.values, x.values)


def test_csv_malformed_rejected(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("wrong,header\n0,0\n")
    with pytest.raises(DomainError):
        SampledPath.from_csv(f)
    g = tmp_path / "count.csv"
    g.write_text("t,value\n" + "\n".join(f"{i},{i}" for i in range(4)))
    with pytest.raises(DomainError):
        SampledPath.from_csv(g)
