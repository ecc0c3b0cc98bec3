import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from natstate import (Grid, Interval, TimeFunction, make_timefunction,
                      read_timefunction, restrict, shift_left, shift_right,
                      splice, write_timefunction)
from natstate.calculus import SmoothInput


def test_zero_function_tail_lookup():
    g = Grid(0.5, -4, 4)
    f = make_timefunction(g, np.zeros(8), 0.0)
    assert np.all(f.value(-10.0) == 0.0)
    assert f.is_zero()


def test_constructor_validation():
    g = Grid(0.5, -4, 4)
    with pytest.raises(ValueError):
        make_timefunction(g, np.zeros(7), 0.0)
    with pytest.raises(ValueError):
        make_timefunction(g, np.full(8, np.nan), 0.0)
    with pytest.raises(ValueError):
        Grid(0.5, 3, 3)
    with pytest.raises(ValueError):
        g.index_of(0.26)


def test_trapezoid_branch_values():
    # Piecewise shape: 0, rising ramp, plateau at 1, falling ramp, 0.
    g = Grid(0.001, -2000, 12000)
    u = SmoothInput.trapezoid().sample(g)
    assert u.value(-1.5) == 0.0
    assert u.value(-0.5) == pytest.approx(0.5)
    assert u.value(5.0) == 1.0
    assert u.value(10.5) == pytest.approx(0.5)
    assert u.value(11.8) == 0.0
    assert u.tail_value[0] == 0.0


def test_constant_tail_member():
    g = Grid(0.5, -4, 4)
    one = make_timefunction(g, np.ones(8), 1.0)
    assert one.value(-99.0) == 1.0
    assert one.value(2.0) == 1.0


def test_shift_identity_and_group_law(rough):
    assert shift_left(rough, 0.0).samples_equal(rough)
    a = shift_left(shift_left(rough, 0.3), 0.45)
    b = shift_left(rough, 0.75)
    assert a.samples_equal(b)
    assert shift_right(rough, 0.3).grid.i0 == rough.grid.i0 + 6


def test_shift_of_constant_is_itself():
    g = Grid(0.5, -4, 4)
    c = make_timefunction(g, 3.0 * np.ones(8), 3.0)
    s = shift_left(c, 1.0)
    for t in (-1.0, 0.0, 1.0):
        assert s.value(t) == c.value(t) == 3.0


def test_shifted_trapezoid_breakpoints():
    # Left-shifting by h moves every breakpoint down by h.
    h = 0.5
    g = Grid(0.001, -3000, 12000)
    u = SmoothInput.trapezoid().sample(g)
    lu = shift_left(u, h)
    for t in (-1.0 - h, -h, 10.0 - h, 11.0 - h):
        assert lu.value(t) == pytest.approx(u.value(t + h))
    assert lu.value(-h) == pytest.approx(1.0)
    assert lu.value(11.0 - h) == 0.0


def test_splice_self_identity(rough):
    for s in (-1.0, 0.0, 0.85):
        sp = splice(rough, rough, s)
        assert sp.samples_equal(rough)


def test_splice_values_and_tail(grid, rng):
    past = TimeFunction(grid, np.ones((grid.n, 1)), np.array([1.0]))
    fut = TimeFunction(grid, np.zeros((grid.n, 1)), np.array([0.0]))
    sp = splice(past, fut, 0.0)
    assert sp.value(-0.5) == 1.0 and sp.value(-50.0) == 1.0
    assert sp.value(0.0) == 1.0  # the splice instant belongs to the past
    assert sp.value(0.05) == 0.0
    assert sp.tail_value[0] == 1.0


def test_splice_associativity(grid, rng):
    f = TimeFunction(grid, rng.standard_normal((grid.n, 1)), np.array([0.3]))
    g2 = TimeFunction(grid, rng.standard_normal((grid.n, 1)), np.array([-1.0]))
    h = TimeFunction(grid, rng.standard_normal((grid.n, 1)), np.array([2.0]))
    r, s = -0.5, 0.5
    a = splice(splice(f, g2, r), h, s)
    b = splice(f, splice(g2, h, s), r)
    assert a.samples_equal(b)


def test_splice_errors(grid):
    f = TimeFunction(grid, np.ones((grid.n, 1)), np.array([0.0]))
    other = TimeFunction(Grid(0.1, -10, 10), np.ones((20, 1)), np.array([0.0]))
    with pytest.raises(ValueError):
        splice(f, other, 0.0)


def test_restrict_zero_and_window(grid, rough):
    z = TimeFunction(grid, np.zeros((grid.n, 1)), np.zeros(1))
    assert restrict(z, Interval(-1.0, 1.0)).is_zero()
    r = restrict(rough, Interval(0.0, 1.0))
    assert r.value(0.5) == rough.value(0.5)
    assert r.value(-0.5) == 0.0 and r.value(1.5) == 0.0
    assert r.tail_value[0] == 0.0


def test_restrict_keeps_past_with_tail(grid, rough):
    r = restrict(rough, Interval.upto(0.0))
    assert r.value(-0.5) == rough.value(-0.5)
    assert r.tail_value[0] == rough.tail_value[0]
    assert r.value(1.0) == 0.0


def test_with_window_extends_past_not_future(rough):
    g = rough.grid
    wide = rough.with_window(g.i0 - 10, g.i1)
    assert np.all(wide.samples[:10] == rough.tail_value)
    with pytest.raises(ValueError):
        rough.with_window(g.i0, g.i1 + 1)


def test_serialization_bit_exact(tmp_path, rough):
    path = str(tmp_path / "fn.csv")
    write_timefunction(rough, path)
    back = read_timefunction(path)
    assert back.grid == rough.grid
    assert np.array_equal(back.samples, rough.samples)
    assert np.array_equal(back.tail_value, rough.tail_value)
    # CSV itself is readable, with metadata on the first line.
    lines = open(path).read().splitlines()
    assert lines[0].startswith("#") and "dt=" in lines[0]
    assert lines[1] == "t,x1"


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=-20, max_value=20),
       st.integers(min_value=-20, max_value=20))
def test_shift_group_law_property(a, b):
    g = Grid(0.1, -25, 25)
    vals = np.sin(np.arange(g.n, dtype=float))[:, None]
    f = TimeFunction(g, vals, np.array([0.25]))
    lhs = shift_left(shift_left(f, a * g.dt), b * g.dt)
    rhs = shift_left(f, (a + b) * g.dt)
    assert lhs.grid == rhs.grid
    assert np.array_equal(lhs.samples, rhs.samples)
