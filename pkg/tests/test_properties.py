"""Property-based checks of the scale-invariance laws."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nlspc import (Field, build_grid, count_nodal_domains, nehari_scale,
                   potential_values, pure_power)

SPEC = build_grid(2, 1, (3.0, 4.0), (9, 11))
V = potential_values(SPEC)
QUARTIC = pure_power(4.0)
BASE = Field(SPEC, np.random.default_rng(99).standard_normal(SPEC.shape))


@given(a=st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=30, deadline=None)
def test_nehari_scale_covariance(a):
    t1 = nehari_scale(BASE, QUARTIC, V)
    ta = nehari_scale(Field(SPEC, a * BASE.values, validate=False), QUARTIC, V)
    assert abs(ta - t1 / a) <= 1e-8 * (t1 / a)


@given(a=st.floats(min_value=1e-3, max_value=1e3),
       tau=st.floats(min_value=1e-3, max_value=1.0))
@settings(max_examples=30, deadline=None)
def test_nodal_count_scaling_invariance(a, tau):
    base = count_nodal_domains(BASE, tau)
    scaled = count_nodal_domains(Field(SPEC, a * BASE.values, validate=False),
                                 a * tau)
    assert (base.positive_domains, base.negative_domains) == \
        (scaled.positive_domains, scaled.negative_domains)


@given(p=st.floats(min_value=2.5, max_value=5.5))
@settings(max_examples=20, deadline=None)
def test_projected_energy_is_positive(p):
    model = pure_power(p)
    t = nehari_scale(BASE, model, V)
    from nlspc import energy
    proj = Field(SPEC, t * BASE.values, validate=False)
    bd = energy(proj, model, V)
    assert bd.total > 0
    assert abs(bd.total - (0.5 - 1.0 / p) * bd.h_norm_sq) \
        <= 1e-10 * abs(bd.total)
