import numpy as np
import pytest
from hypothesis import given, strategies as st

from cplab.core import Cube, GridDomain, GridFunction
from cplab.errors import ParameterError
from cplab.maximal import (grid_widths, local_sharp, maximal, maximal_indicator, maximal_values, mchi_check,
                           sharp)
from cplab.core import oscillation

from conftest import grid_functions
from oracles import continuum_mchi_brute, maximal_brute, sharp_brute


def test_indicator_example_third():
    dom = GridDomain(2, 0)
    f = GridFunction.indicator(dom, Cube(0.0, 1.0))
    res = maximal(f)
    assert res.values.values[2] == pytest.approx(1 / 3)
    assert res.argmax_cube(2) == dom.cube(0, 3)


@given(grid_functions(K=st.integers(0, 2), L=st.integers(0, 3)))
def test_maximal_matches_brute_force(f):
    res = maximal(f)
    assert np.allclose(res.values.values, maximal_brute(f.values), rtol=1e-12, atol=1e-12)
    assert np.allclose(maximal_values(f.values), res.values.values, rtol=1e-12, atol=1e-12)
    dy = maximal(f, "dyadic").values.values
    assert np.allclose(dy, maximal_brute(f.values, dyadic=True), rtol=1e-12, atol=1e-12)
    assert np.all(dy <= res.values.values * (1 + 1e-12) + 1e-15)
    a = np.abs(f.values)
    for i in range(f.domain.n):
        s, e = res.starts[i], res.stops[i]
        assert s <= i < e
        assert a[s:e].mean() == pytest.approx(res.values.values[i], rel=1e-12, abs=1e-12)


def test_constant_function():
    f = GridFunction.constant(GridDomain(1, 2), -2.0)
    assert np.allclose(maximal(f).values.values, 2.0)


@given(grid_functions(K=st.integers(1, 3), L=st.integers(0, 3), positive=True))
def test_fast_widths_within_two_thirds(f):
    exact = maximal_values(f.values)
    fast = maximal_values(f.values, widths="fast")
    assert np.all(fast <= exact * (1 + 1e-12))
    assert np.all(fast >= (2 / 3) * exact * (1 - 1e-12))
    assert set(grid_widths(8, "fast")) == {1, 2, 3, 4, 6, 8}


def test_continuum_indicator_example():
    dom = GridDomain(2, 0)
    m = maximal_indicator(Cube(0.0, 1.0), dom)
    assert m.values[2] == pytest.approx(0.4) and m.values[0] == 1.0


@given(st.integers(0, 2), st.integers(0, 3), st.data())
def test_indicator_closed_forms(K, L, data):
    dom = GridDomain(K, L)
    s = data.draw(st.integers(0, dom.n - 1))
    e = data.draw(st.integers(s + 1, dom.n))
    Q = dom.cube(s, e)
    grid = maximal_indicator(Q, dom, "grid").values
    chi = np.zeros(dom.n)
    chi[s:e] = 1
    assert np.allclose(grid, maximal_brute(chi), rtol=1e-12)
    cont = maximal_indicator(Q, dom, "continuum").values
    i = data.draw(st.integers(0, dom.n - 1))
    x = dom.midpoints[i]
    assert cont[i] == pytest.approx(continuum_mchi_brute(Q.left, Q.right, x, dom.edges), rel=1e-10)
    assert np.all(cont >= grid * (1 - 1e-12)) and np.all(cont <= 3 * grid * (1 + 1e-12))


def test_sharp_examples():
    dom = GridDomain(1, 0)
    f = GridFunction.indicator(dom, Cube(0.0, 1.0))
    assert np.allclose(sharp(f).values, 0.5)
    dom = GridDomain(1, 2)
    g = GridFunction.indicator(dom, Cube(0.0, 1.0))
    assert np.allclose(sharp(g).values, 0.5)
    assert np.allclose(sharp(GridFunction.constant(dom, 4.0)).values, 0)


@given(grid_functions(K=st.integers(0, 2), L=st.integers(0, 2)), st.floats(-5, 5))
def test_sharp_oracle_and_shift(f, c):
    s = sharp(f).values
    assert np.allclose(s, sharp_brute(f.values), rtol=1e-10, atol=1e-12)
    assert np.allclose(sharp(f + c).values, s, rtol=1e-9, atol=1e-9)
    dy = sharp(f, "dyadic").values
    assert np.all(dy <= s + 1e-12)


@given(grid_functions(K=st.integers(0, 2), L=st.integers(0, 2)), st.sampled_from([0.125, 0.25, 0.5]))
def test_local_sharp(f, lam):
    ls = local_sharp(f, lam).values
    assert np.all(ls <= 2 / lam * sharp(f).values + 1e-12)
    # oracle: direct max of oscillation over all cubes containing each cell
    n = f.domain.n
    ref = np.zeros(n)
    for s in range(n):
        for e in range(s + 1, n + 1):
            ref[s:e] = np.maximum(ref[s:e], oscillation(f, f.domain.cube(s, e), lam))
    assert np.allclose(ls, ref, rtol=1e-12, atol=1e-12)
    assert np.allclose(local_sharp(GridFunction.constant(f.domain, 2.0), lam).values, 0)


def test_mchi_examples():
    dom = GridDomain(3, 0)
    f = GridFunction.indicator(dom, Cube(0.0, 1.0))
    ratio, _ = mchi_check(f, 0.5)
    assert ratio <= 1
    assert mchi_check(f, 2.0) == (0.0, 0)
    with pytest.raises(ParameterError):
        mchi_check(f, 0)
