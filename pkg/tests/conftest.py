"""Shared fixtures and hypothesis strategies for the test suite."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from tlsmc.config import TWO_PI, PriorRanges
from tlsmc.physics import G1, G2, N_FIELDS, T1Q, T2D1, T2D2, WD1, WD2, ParticleVector

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def prior():
    return PriorRanges()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- strategies ---------------------------------------------------------

def _finite(lo, hi):
    return st.floats(min_value=lo, max_value=hi, allow_nan=False, allow_infinity=False)


# Draw ranges deliberately wider than the default prior so properties are not
# accidental consequences of its particular numbers.
_g = _finite(0.05, 10.0)
_wd = _finite(-500.0, 500.0)
_t2d = _finite(1e-3, 2.0)
_t1q = _finite(0.5, 200.0)


@st.composite
def particle_vectors(draw, n_defects=None):
    k = draw(st.sampled_from((0, 1, 2))) if n_defects is None else n_defects
    x = ParticleVector(t1q=draw(_t1q))
    if k >= 1:
        x = ParticleVector(g1=draw(_g), wd1=draw(_wd), t2d1=draw(_t2d), t1q=x.t1q)
    if k == 2:
        ga, gb = sorted((x.g1, draw(_g)), reverse=True)
        x = ParticleVector(ga, gb, x.wd1, draw(_wd), x.t2d1, draw(_t2d), x.t1q)
    return x


@st.composite
def position_arrays(draw, min_size=2, max_size=30):
    n = draw(st.integers(min_size, max_size))
    vecs = draw(st.lists(particle_vectors(), min_size=n, max_size=n))
    return np.array([v.to_array() for v in vecs])


@st.composite
def weight_arrays(draw, n):
    raw = draw(
        st.lists(st.floats(1e-6, 1.0, allow_nan=False), min_size=n, max_size=n)
    )
    w = np.asarray(raw)
    return w / w.sum()
