import math

import numpy as np
import pytest

from bomber import ConfigurationError, DomainError, ModelParams
from bomber import kernel
from bomber.grid import Grid, Mode
from bomber.solver import complements_at, conditional_value, optimize_allocation, policy_arrays, policy_at, solve

from conftest import SMALL


def test_zero_ammunition_is_exponential(small_field):
    v = small_field.v
    assert np.max(np.abs(small_field.P[0] - np.exp(-v * SMALL.t))) < 1e-8


def test_field_shape_and_ranges(small_field):
    f = small_field
    x = SMALL.x[:, None]
    assert f.K.shape == (SMALL.nx, SMALL.nt)
    assert np.all(f.K >= 0) and np.all(f.K <= x + 1e-12)
    assert np.all((f.P >= 0) & (f.P <= 1)) and np.all(f.H <= 1)
    assert np.all(np.diff(f.P, axis=0) >= -1e-15)   # more ammunition never hurts
    assert np.all(np.diff(f.P, axis=1) <= 1e-15)    # more time never helps
    assert np.all(f.H >= f.P * (1 - f.v) - 1e-15)
    assert np.all(f.H <= np.minimum(1 - f.v * np.exp(-x), f.P) + 1e-10)


def test_first_node_spends_everything(field_v1):
    # with one unit of time and a sliver of ammunition, firing it all is optimal
    i = 1
    assert np.allclose(field_v1.K[i, 1:], SMALL.x[i])


def test_allocation_matches_stored(field_v1):
    n = 40
    for x in (0.5, 2.0, 5.0):
        c = optimize_allocation(x, field_v1.P[:, n], SMALL, field_v1.params)
        i = SMALL.x_index(x)
        assert c.k_star == field_v1.K[i, n]
        assert c.h_star == pytest.approx(field_v1.H[i, n], abs=1e-15)


def test_conditional_value(field_v1):
    p = field_v1.params
    P = field_v1.P[:, 30]
    assert conditional_value(2.0, 0.0, P, SMALL, p) == 0.0   # v = 1: an unanswered enemy always kills
    h = conditional_value(2.0, 2.0, P, SMALL, p)
    assert h == pytest.approx((1 - math.exp(-2.0)) * P[0])
    with pytest.raises(DomainError):
        conditional_value(2.0, 2.5, P, SMALL, p)


@pytest.mark.skipif("compiled" not in kernel.SWEEPS, reason="extension not built")
def test_backends_agree():
    p = ModelParams(0.6)
    g = Grid(4.0, 81, 1.0, 41)
    a = solve(p, g, backend="compiled", threads=1)
    b = solve(p, g, backend="python", threads=1)
    assert np.max(np.abs(a.P_comp - b.P_comp)) < 1e-12
    assert np.max(np.abs(a.K - b.K)) < 1e-6


def test_unknown_backend():
    with pytest.raises(ConfigurationError):
        solve(ModelParams(1.0), Grid(1.0, 11, 0.1, 3), backend="gpu")


def test_thread_count_does_not_change_result():
    p = ModelParams(0.8)
    g = Grid(5.0, 101, 1.0, 51)
    a, b = solve(p, g, threads=1), solve(p, g, threads=3)
    assert a.P_comp.tobytes() == b.P_comp.tobytes()
    assert a.K.tobytes() == b.K.tobytes()


def test_grid_guards():
    with pytest.raises(ConfigurationError):
        Grid(5.0, 101, 10.0, 11)
    with pytest.raises(ConfigurationError):
        Grid(5.0, 1, 1.0, 11)
    g = Grid(5.0, 101, 1.0, 51)
    assert g.refined().nx == 201 and g.refined().dx == pytest.approx(g.dx / 2)


def test_discrete_mode_fires_whole_units():
    g = Grid(4.0, 81, 1.0, 21)
    f = solve(ModelParams(0.7), g, Mode.discrete(0.5))
    units = f.K / 0.5
    assert np.allclose(units, np.round(units), atol=1e-12)
    # continuous allocations do at least as well
    c = solve(ModelParams(0.7), g)
    assert np.all(c.P >= f.P - 1e-12)


def test_mode_labels():
    for m in (Mode.continuous(), Mode.continuous(False), Mode.discrete(0.25)):
        assert Mode.from_label(m.label) == m
    with pytest.raises(ConfigurationError):
        Mode.from_label("sometimes")


def test_policy_queries(field_v1):
    i, n = 40, 50
    x, t = SMALL.x[i], SMALL.t[n]
    pt = policy_at(field_v1, x, t)
    assert pt.k == field_v1.K[i, n] and pt.p == pytest.approx(field_v1.P[i, n], abs=1e-15)
    pc, hc = complements_at(field_v1, x, t)
    assert pc == pytest.approx(field_v1.P_comp[i, n], rel=1e-12)
    assert hc == pytest.approx(field_v1.H_comp[i, n], rel=1e-12)
    k, p, h = policy_arrays(field_v1, np.array([0.05, 3.33]), np.array([0.5, 1.91]))
    assert k.shape == (2,) and np.all(k <= [0.05, 3.33])
    with pytest.raises(DomainError):
        policy_at(field_v1, 7.0, 0.5)
    with pytest.raises(DomainError):
        policy_at(field_v1, 1.0, -0.1)
