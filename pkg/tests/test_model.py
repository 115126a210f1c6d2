import math

import mpmath
import numpy as np
import pytest

from bomber import DomainError, ModelParams
from bomber.model import (TheoremCase, Verdict, check_split_inequalities, classify_spend_it_all,
                          crude_bound_argmax, crude_bound_objective, inner_boundary, spend_all_boundary,
                          spend_all_value, survival_upper_bound, survive_prob, theorem_case,
                          two_stage_argmax, two_stage_objective, two_stage_value)


@pytest.mark.parametrize("v", [0.0, -0.1, 1.0000001, float("nan")])
def test_params_reject_bad_v(v):
    with pytest.raises(DomainError):
        ModelParams(v)


def test_params_u_roundtrip():
    p = ModelParams.from_u(0.25)
    assert p.v == 0.75 and p.u == 0.25


def test_survive_prob():
    p = ModelParams(0.5)
    assert survive_prob(0.0, p) == 0.5
    assert survive_prob(math.log(2), p) == pytest.approx(0.75)
    with pytest.raises(DomainError):
        survive_prob(-1.0, p)


def _f_mp(t, u):
    t, u = mpmath.mpf(t), mpmath.mpf(u)
    if u == 0:
        return mpmath.log(1 + 1 / t)
    return mpmath.log(1 + u / (mpmath.exp(t * u) - 1))


def test_outer_edge_known_value():
    f = spend_all_boundary(2.0, ModelParams.from_u(0.5))
    assert f == pytest.approx(0.25541, abs=1e-5)
    assert f == pytest.approx(float(_f_mp(2, 0.5)), rel=1e-14)


@pytest.mark.parametrize("t", [1e-6, 0.01, 0.3, 1.0, 4.0, 50.0, 1e4])
@pytest.mark.parametrize("u", [0.0, 1e-12, 1e-6, 0.25, 0.5, 0.8, 0.999])
def test_outer_edge_matches_high_precision(t, u):
    mpmath.mp.dps = 40
    assert spend_all_boundary(t, ModelParams.from_u(u)) == pytest.approx(float(_f_mp(t, u)), rel=1e-12)


def test_outer_edge_continuous_in_u():
    t = 1.7
    assert spend_all_boundary(t, ModelParams.from_u(1e-11)) == pytest.approx(
        spend_all_boundary(t, ModelParams(1.0)), rel=1e-9)


@pytest.mark.parametrize("v", [1.0, 0.5, 0.2])
def test_outer_edge_decreasing(v):
    f = [spend_all_boundary(t, ModelParams(v)) for t in np.linspace(0.05, 10, 200)]
    assert np.all(np.diff(f) < 0)


def test_inner_edge():
    p = ModelParams(1.0)
    assert inner_boundary(0.7, p) == spend_all_boundary(0.7, p)
    with pytest.raises(DomainError):
        inner_boundary(0.0, p)


def test_cases():
    assert theorem_case(1.0, ModelParams(1.0)) is TheoremCase.I
    assert theorem_case(0.1, ModelParams.from_u(0.6)) is TheoremCase.III
    p = ModelParams.from_u(0.25)
    edge = math.log(1.5) / 0.25
    assert theorem_case(edge * 0.99, p) is TheoremCase.IV
    assert theorem_case(edge, p) is TheoremCase.II


def test_classify():
    p = ModelParams(1.0)
    f = spend_all_boundary(0.5, p)
    assert classify_spend_it_all(f * 0.99, 0.5, p).verdict is Verdict.SPEND_ALL
    assert classify_spend_it_all(f * 1.01, 0.5, p).verdict is Verdict.INTERIOR_SPEND
    q = ModelParams.from_u(0.25)
    f, g = spend_all_boundary(0.3, q), inner_boundary(0.3, q)
    mid = 0.5 * (f + g)
    assert classify_spend_it_all(mid, 0.3, q).verdict is Verdict.INDETERMINATE_BAND
    assert classify_spend_it_all(mid, 0.3, q, exact_mode=True).verdict is Verdict.SPEND_ALL
    assert Verdict.SPEND_ALL.value == "SpendAll"
    with pytest.raises(DomainError):
        classify_spend_it_all(0.0, 0.3, q)


def test_crude_argmax_known_value():
    p = ModelParams(1.0)
    y = crude_bound_argmax(2.0, 1.0, p)
    grid = np.linspace(0, 2, 200001)
    assert y == pytest.approx(grid[np.argmax(crude_bound_objective(grid, 2.0, 1.0, p))], abs=1e-5)
    assert y == pytest.approx(math.log((-1 + math.sqrt(1 + 4 * math.e ** 2)) / 2), rel=1e-14)
    assert y == pytest.approx(0.8171, abs=1e-4)


def test_two_stage_argmax_and_value():
    p = ModelParams(0.6)
    A = 0.8
    y = two_stage_argmax(3.0, A, p)
    grid = np.linspace(-2, 5, 700001)
    assert y == pytest.approx(grid[np.argmax(two_stage_objective(grid, 3.0, A, p))], abs=2e-5)
    with pytest.raises(DomainError):
        two_stage_argmax(3.0, 0.0, p)


@pytest.mark.parametrize("v", [1.0, 0.4])
def test_two_stage_all_now_is_spend_all(v):
    p = ModelParams(v)
    assert two_stage_value(2.5, 2.5, 0.9, p) == pytest.approx(spend_all_value(2.5, 0.9, p), rel=1e-14)


def test_value_bounds():
    p = ModelParams(0.7)
    assert survival_upper_bound(0.0, 2.0, p) == pytest.approx(math.exp(-1.4))
    assert spend_all_value(0.0, 2.0, p) == pytest.approx(0.3 * math.exp(-1.4))
    with pytest.raises(DomainError):
        two_stage_value(3.0, 2.0, 1.0, p)


@pytest.mark.parametrize("v", [1.0, 0.5, 0.1])
def test_split_inequalities(v):
    rep = check_split_inequalities(2000, seed=3, params=ModelParams(v))
    assert rep.passed
    if v == 1.0:
        assert rep.series_violations == 0 and rep.worst_series_margin == -math.inf
