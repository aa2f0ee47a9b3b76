import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lqgkpz import kpz
from lqgkpz.errors import OutOfRangeAlpha, OutOfRangeDim, OutOfRangeZeta
from lqgkpz.params import GAMMA_PURE_GRAVITY, coupling_params

P = coupling_params(GAMMA_PURE_GRAVITY)
S6 = math.sqrt(6)

params_st = st.builds(
    coupling_params,
    st.floats(0.05, 1.95),
    st.floats(2.05, 6.0),
)


# hand-evaluated values at gamma = sqrt(8/3): xi = 1/sqrt6, Q = 5/sqrt6
def test_frozen_values():
    assert kpz.euclidean_from_quantum(2.0, P) == pytest.approx(4 / 3, abs=1e-12)
    assert kpz.quantum_from_euclidean(1.0, P) == pytest.approx((5 / S6 - math.sqrt(25 / 6 - 2)) * S6, abs=1e-12)
    # 1.394449 plugs back to Euclidean dimension 1; 1.468871 would give 1.0443
    assert kpz.quantum_from_euclidean(1.0, P) == pytest.approx(1.394449, abs=1e-6)
    assert kpz.quantum_from_euclidean(math.log(4) / math.log(3), P) == pytest.approx(1.860305, abs=1e-6)
    assert kpz.thick_point_quantum_dim(2.0, 0.0, P) == pytest.approx(2.4, abs=1e-12)
    assert kpz.thick_point_quantum_dim(2.0, 1.0, P) == pytest.approx(1.5 * S6 / (5 / S6 - 1), abs=1e-12)
    assert kpz.optimal_alpha(1.0, P) == pytest.approx(5 / S6 - math.sqrt(13 / 6), abs=1e-12)
    assert kpz.worstcase_quantum_upper(0.5, P) == pytest.approx(0.5 * S6 / (5 / S6 - math.sqrt(3)), abs=1e-12)
    assert kpz.worstcase_quantum_upper(0.5, P) == pytest.approx(3.961132, abs=1e-6)  # not 3.961072
    assert kpz.worstcase_euclidean_upper(1.0, P) == pytest.approx((4 + math.sqrt(15)) / 6, abs=1e-12)
    assert kpz.worstcase_euclidean_upper(2.0, P) == pytest.approx((3 + 2 * math.sqrt(2)) / 3, abs=1e-12)
    lo, hi = kpz.holder_bounds(1.0, P)
    assert lo == pytest.approx(S6 / (5 / S6 + 2), abs=1e-12)
    assert hi == pytest.approx(S6 / (5 / S6 - 2), abs=1e-9)
    assert (round(lo, 6), round(hi, 6)) == (0.606123, 59.393877)
    assert kpz.holder_bounds(2.0, P)[0] == pytest.approx(1.212246, abs=1e-6)
    # xi = 1/3, Q = 5/2: (1/3)(13/6 + sqrt(22/9))
    g = (13 / 6 + math.sqrt(22 / 9)) / 3
    assert kpz.geodesic_dim_bound(coupling_params(1.0, 3.0)) == pytest.approx(g, abs=1e-12)
    assert g == pytest.approx(1.243380, abs=1e-6)
    assert kpz.optimal_alpha(1.0, P) == pytest.approx(0.569281, abs=1e-6)
    assert kpz.thick_point_quantum_dim(2.0, 1.0, P) == pytest.approx(3.528706, abs=1e-6)


def test_trivial_endpoints():
    for p in (P, coupling_params(0.5, 2.3), coupling_params(1.5, 5.0)):
        assert kpz.euclidean_from_quantum(p.d_gamma, p) == pytest.approx(2.0, abs=1e-12)
        assert kpz.euclidean_from_quantum(0.0, p) == 0.0
        assert kpz.quantum_from_euclidean(0.0, p) == 0.0
        assert kpz.optimal_alpha(2.0, p) == pytest.approx(p.gamma, abs=1e-12)
        assert kpz.thick_point_quantum_dim(2.0, p.gamma, p) == pytest.approx(p.d_gamma, abs=1e-9)
        t = 2.0 - p.gamma**2 / 2
        assert kpz.worstcase_quantum_upper(t, p) == pytest.approx(p.d_gamma, abs=1e-9)
        assert kpz.worstcase_quantum_upper(t - 1e-9, p) == pytest.approx(p.d_gamma, abs=1e-6)
        s = 2.0 / (p.xi * p.q)
        assert kpz.worstcase_euclidean_upper(min(s, p.d_gamma), p) == pytest.approx(2.0, abs=1e-9)
        assert kpz.geodesic_dim_bound(p) < 2.0
        assert kpz.geodesic_dim_bound(p) == pytest.approx(kpz.worstcase_euclidean_upper(1.0, p), abs=1e-12)


def test_thick_euclidean():
    assert kpz.thick_point_euclidean_dim(2.0, 2.0) == 0.0
    assert kpz.thick_point_euclidean_dim(1.5, 0.0) == 1.5
    assert kpz.thick_point_euclidean_dim(1.0, 2.0) == 0.0
    assert kpz.thick_point_quantum_dim(0.1, 1.0, P) == 0.0


def test_domain_errors():
    with pytest.raises(OutOfRangeDim):
        kpz.euclidean_from_quantum(4.1, P)
    with pytest.raises(OutOfRangeDim):
        kpz.quantum_from_euclidean(-0.1, P)
    with pytest.raises(OutOfRangeDim):
        kpz.worstcase_quantum_upper(2.5, P)
    with pytest.raises(OutOfRangeAlpha):
        kpz.thick_point_euclidean_dim(1.0, 2.1)
    with pytest.raises(OutOfRangeZeta):
        kpz.thickness_bounds(1.0, 1.0)
    with pytest.raises(OutOfRangeDim):
        kpz.quantum_from_euclidean(float("nan"), P)


def test_thickness_bounds():
    assert kpz.thickness_bounds(0.7, 0.0) == (0.7, 0.7)
    m, M = kpz.thickness_bounds(1.0, 0.1)
    assert (m, M) == (pytest.approx(-0.057683, abs=1e-6), pytest.approx(2.037683, abs=1e-6))
    for a in (-1.5, 0.0, 0.4, 2.0):
        m, M = kpz.thickness_bounds(a, 0.3)
        m2, M2 = kpz.thickness_bounds(-a, 0.3)
        assert m <= M
        assert m2 == pytest.approx(-M, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(params_st, st.floats(0.0, 1.0))
def test_round_trip(p, u):
    s = u * p.d_gamma
    assert abs(kpz.quantum_from_euclidean(kpz.euclidean_from_quantum(s, p), p) - s) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(0.0, 2.0))
def test_bound_ordering(p, d0):
    kq = kpz.quantum_from_euclidean(d0, p)
    wq = kpz.worstcase_quantum_upper(d0, p)
    lo, hi = kpz.holder_bounds(d0, p)
    assert kq <= wq + 1e-12
    assert wq <= hi + 1e-12
    assert lo <= kq + 1e-12


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(0.0, 1.0))
def test_euclidean_bound_ordering(p, u):
    s = u * p.d_gamma
    assert kpz.euclidean_from_quantum(s, p) <= kpz.worstcase_euclidean_upper(s, p) + 1e-12


@settings(max_examples=100, deadline=None)
@given(params_st, st.floats(0.0, 1.0))
def test_optimality_witnesses(p, u):
    a = p.gamma + u * (2.0 - p.gamma)
    e = kpz.thick_point_euclidean_dim(2.0, a)
    assert kpz.worstcase_quantum_upper(e, p) == pytest.approx(kpz.thick_point_quantum_dim(2.0, a, p), abs=1e-9)
    b = -2.0 * u
    q = kpz.thick_point_quantum_dim(2.0, b, p)
    assert kpz.worstcase_euclidean_upper(q, p) == pytest.approx(kpz.thick_point_euclidean_dim(2.0, b), abs=1e-9)


@pytest.mark.parametrize("d0", [0.3, 1.0, 1.26186, 1.9])
def test_optimal_alpha_is_argmax(d0):
    alphas = np.round(np.arange(-2.0, 2.0 + 1e-9, 1e-4), 10)
    vals = np.array([kpz.thick_point_quantum_dim(d0, a, P) for a in alphas])
    best = alphas[np.argmax(vals)]
    assert abs(best - kpz.optimal_alpha(d0, P)) <= 1e-4
    assert vals.max() == pytest.approx(kpz.quantum_from_euclidean(d0, P), abs=1e-7)


def test_worstcase_monotone():
    d0 = np.linspace(0, 2, 20001)
    q = [kpz.worstcase_quantum_upper(x, P) for x in d0]
    s = np.linspace(0, 4, 20001)
    e = [kpz.worstcase_euclidean_upper(x, P) for x in s]
    assert np.all(np.diff(q) >= -1e-12) and np.all(np.diff(e) >= -1e-12)
    assert max(np.abs(np.diff(q))) < 0.01 and max(np.abs(np.diff(e))) < 0.01


def test_count_exponents():
    # e(s) at s = xi Q is 2 + zeta; at the edge of the empty regime it is zeta
    assert kpz.square_count_exponent(P.xi * P.q, 0.3, P) == pytest.approx(2.3)
    assert kpz.square_count_exponent(P.xi * (P.q - 2), 0.0, P) == pytest.approx(0.0, abs=1e-12)
    assert kpz.tiling_count_exponent(1 / (P.xi * (P.q + 2)), 0.0, P) == pytest.approx(0.0, abs=1e-12)
