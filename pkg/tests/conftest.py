import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from cplab.core import GridDomain, GridFunction

settings.register_profile("cplab", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cplab")


@st.composite
def grid_functions(draw, K=st.integers(0, 2), L=st.integers(0, 3), positive=False, levels=None):
    dom = GridDomain(draw(K), draw(L))
    if levels is not None:
        vals = draw(st.lists(st.sampled_from(levels), min_size=dom.n, max_size=dom.n))
    else:
        elem = st.floats(0.0 if positive else -10.0, 10.0, allow_nan=False, allow_infinity=False)
        vals = draw(st.lists(elem, min_size=dom.n, max_size=dom.n))
    v = np.array(vals, dtype=float)
    if positive and not v.any():
        v[0] = 1.0
    return GridFunction(dom, v)


@st.composite
def dyadic_cubes(draw, dom):
    level = draw(st.integers(0, dom.max_level))
    return dom.dyadic(level, draw(st.integers(0, (1 << level) - 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
