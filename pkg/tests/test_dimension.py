import math
from fractions import Fraction

import numpy as np
import pytest

from lqgkpz import dimension as dim
from lqgkpz import gff, kpz, lfpp
from lqgkpz.errors import (
    BadPartition, EmptySet, NoSignChange, OutOfDomain, OutOfRangeS, OutOfRangeT, ThresholdTooLarge, TooFewScales,
)
from lqgkpz.params import GAMMA_PURE_GRAVITY, coupling_params

from oracles import all_pairs

P = coupling_params(GAMMA_PURE_GRAVITY)
CANTOR = math.log(4) / math.log(3)


@pytest.fixture(scope="module")
def zero256():
    return lfpp.build_metric(gff.zero_field(256), P)


@pytest.fixture(scope="module")
def dgff128():
    return lfpp.normalize_crossing(lfpp.build_metric(gff.sample_dgff(128, 3), P), 1, 0)


def test_fractal_set_invariants():
    with pytest.raises(EmptySet):
        dim.FractalSet(np.zeros((0, 2)), 64)
    with pytest.raises(OutOfDomain):
        dim.FractalSet([[0, 0]], 64)
    fs = dim.FractalSet([[20, 20], [20, 20], [30, 31]], 64)
    assert len(fs) == 2 and fs.mask().sum() == 2
    assert len(dim.full_window_set(64)) == 32 * 32
    assert len(dim.segment_set(64)) == 32


def test_ols():
    x = np.arange(5.0)
    slope, icpt, se, r2 = dim.ols(x, 3 * x + 1)
    assert (slope, icpt, r2) == (pytest.approx(3), pytest.approx(1), pytest.approx(1))
    assert se == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("n", [64, 256, 1024])
def test_box_dimension_exact_sets(n):
    full = dim.box_dimension(dim.full_window_set(n))
    seg = dim.box_dimension(dim.segment_set(n))
    assert full.exponent == pytest.approx(2.0, abs=1e-12)
    assert seg.exponent == pytest.approx(1.0, abs=1e-12)
    assert full.r_squared == pytest.approx(1.0) and not full.flagged
    # counts are exactly 4^k / 4 and 2^k / 2
    assert full.counts_or_sums == [4.0**k / 4 for k in full.scales]


def test_box_dimension_reproduces_from_counts():
    est = dim.box_dimension(dim.cantor_dust_set(256))
    slope = dim.ols(est.scales, np.log2(est.counts_or_sums))[0]
    assert slope == pytest.approx(est.exponent, abs=1e-12)
    assert 0.0 <= est.r_squared <= 1.0


def cantor_cells_exact(length, depth):
    """Half-open cells [i, i+1) of [0, length) meeting the middle-thirds set, in exact arithmetic."""
    pieces = [(Fraction(0), Fraction(1))]
    for _ in range(depth):
        pieces = [q for a, b in pieces for q in ((a, a + (b - a) / 3), (b - (b - a) / 3, b))]
    keep = set()
    for a, b in pieces:
        lo, hi = math.floor(a * length), math.floor(b * length)
        keep.update(range(lo, min(hi, length - 1) + 1))
    return sorted(keep)


@pytest.mark.parametrize("length", [27, 81, 128, 243])
def test_cantor_cells_against_exact_arithmetic(length):
    cells, depth = dim._cantor_cells(length, 1 / 3)
    assert 3.0**-depth * length < 1.0 - 1e-9 < 3.0 ** -(depth - 1) * length
    assert list(cells) == cantor_cells_exact(length, depth + 2)


@pytest.mark.parametrize("n", [256, 1024])
def test_box_dimension_cantor(n):
    est = dim.box_dimension(dim.cantor_dust_set(n))
    assert est.exponent == pytest.approx(CANTOR, abs=0.05)
    assert est.extras["offsets"] == "all"


def test_offset_averaging_matches_sampled_offsets():
    fs = dim.cantor_dust_set(128)
    side = 128 >> 4
    exact = dim._mean_box_count(fs.points, 128, 4, "all")
    brute = np.mean([len(dim.occupied_squares(fs.points, 128, 4, t)) for t in dim.grid_offsets(side, "all")])
    assert exact == pytest.approx(brute, rel=1e-12)
    assert dim.grid_offsets(8, 4) == [(a, b) for a in (0, 2, 4, 6) for b in (0, 2, 4, 6)]


def test_box_dimension_errors():
    fs = dim.segment_set(64)
    with pytest.raises(TooFewScales):
        dim.box_dimension(fs, [3, 4])
    with pytest.raises(ValueError):
        dim.box_dimension(fs, [3, 4, 9])


def test_monotone_under_inclusion():
    n = 256
    a = dim.segment_set(n)
    b = dim.FractalSet(np.concatenate([a.points, dim.segment_set(n, row=n // 2 + 7).points]), n)
    c = dim.cantor_dust_set(n)
    full = dim.full_window_set(n)
    assert dim.box_dimension(a).exponent <= dim.box_dimension(b).exponent + 0.05
    assert dim.box_dimension(c).exponent <= dim.box_dimension(full).exponent + 0.05


def test_quantum_diameter_zero_field(zero256):
    g = zero256
    assert dim.quantum_diameter(g, (10, 11, 10, 11)) == 0.0
    for k in (2, 5, 9, 20):
        d, exact = dim.quantum_diameter_status(g, (40, 40 + k, 60, 60 + k))
        assert d == pytest.approx((k - 1) * math.sqrt(2) / 256, rel=1e-12)
        assert exact == (k * k <= 32)
    with pytest.raises(OutOfDomain):
        dim.quantum_diameter(g, (250, 260, 0, 4))
    with pytest.raises(ValueError):
        dim.quantum_diameter(g, (0, 4, 0, 4), method="fast")


@pytest.mark.parametrize("seed", range(3))
def test_quantum_diameter_against_all_pairs(seed):
    rng = np.random.default_rng(seed)
    g = lfpp.build_metric(gff.field_from_array(2 * rng.standard_normal((12, 12))), P)
    ref = all_pairs(g.vertex_weight, g.scale)
    for block in [(2, 7, 3, 8), (0, 5, 0, 5), (4, 10, 1, 12)]:
        i0, i1, j0, j1 = block
        idx = [i * 12 + j for i in range(i0, i1) for j in range(j0, j1)]
        want = ref[np.ix_(idx, idx)].max()
        assert dim.quantum_diameter(g, block, "exact") == pytest.approx(want, rel=1e-12)
        # the sweep is a lower bound on the true diameter
        assert dim.quantum_diameter(g, block, "sweep") <= want * (1 + 1e-12)


def test_sweep_close_to_exact(dgff128):
    blocks = [(a, a + 9, b, b + 9) for a in range(32, 96, 16) for b in range(32, 96, 16)]
    ex, _ = dim.block_diameters(dgff128, blocks, "exact")
    sw, flags = dim.block_diameters(dgff128, blocks, "sweep")
    assert not flags.any()
    assert np.all(sw <= ex * (1 + 1e-12))
    assert np.median(sw / ex) > 0.98


def test_quantum_dimension_zero_field(zero256):
    for fs in (dim.segment_set(256), dim.full_window_set(256)):
        q = dim.quantum_dimension(fs, zero256)
        b = dim.box_dimension(fs)
        assert q.exponent == pytest.approx(b.exponent, abs=0.05)
        assert q.kind == "quantum"
    with pytest.raises(NoSignChange):
        dim.quantum_dimension(dim.full_window_set(256), zero256, ell_grid=[2.5, 3.0])
    with pytest.raises(ValueError):
        dim.quantum_dimension(dim.segment_set(256), zero256, ell_grid=[2.0, 1.0])


def test_worst_case_ordering(dgff128):
    for fs in (dim.segment_set(128), dim.full_window_set(128)):
        b = dim.box_dimension(fs, [2, 3, 4, 5]).exponent
        q = dim.quantum_dimension(fs, dgff128, [2, 3, 4, 5]).exponent
        assert q <= kpz.worstcase_quantum_upper(min(b, 2.0), P) + 0.3
        assert b <= kpz.worstcase_euclidean_upper(min(q, P.d_gamma), P) + 0.3


def test_dyadic_strata(zero256, dgff128):
    st = dim.dyadic_strata(zero256, 4, [0.5, 0.8, 1.0, 1.5])
    assert st.total == 64 and sum(st.counts) + st.above + st.below == st.total
    assert max(st.counts + [st.above, st.below]) == st.total
    st = dim.dyadic_strata(dgff128, 4, [0.2, 0.5, 0.8, 1.2])
    assert sum(st.counts) + st.above + st.below == st.total == 64
    assert len(st.as_rows()) == 5
    with pytest.raises(BadPartition):
        dim.dyadic_strata(dgff128, 4, [0.5, 0.4])


def test_square_count_profile(dgff128):
    rows = dim.square_count_profile(dgff128, [3, 4, 5], [0.2, 0.5, 0.8], 0.3, P)
    assert len(rows) == 9
    r = rows[2]
    assert r.bound == pytest.approx(2.0 ** (kpz.square_count_exponent(0.8, 0.3, P) * 3))
    assert dim.pass_fraction(rows) >= 0.9
    with pytest.raises(OutOfRangeS):
        dim.square_count_profile(dgff128, [3], [0.9], 0.3, P)
    assert P.xi * (P.q - 2) == pytest.approx(0.016837, abs=1e-6)


def test_quantum_tiling_zero_field():
    g = lfpp.normalize_crossing(lfpp.build_metric(gff.zero_field(128), P), 1, 0)
    with pytest.raises(ThresholdTooLarge):
        dim.quantum_tiling(g, 0)
    t = dim.quantum_tiling(g, 4)
    assert len(set(t.levels())) == 1
    assert dim.tiling_is_wellformed(g, t)
    assert dim.tiling_containment_check(g, t, 50, 0).holds


def test_quantum_tiling_on_field(dgff128):
    built = 0
    for m in (2, 3, 4):
        try:
            t = dim.quantum_tiling(dgff128, m)
        except Exception:
            continue
        built += 1
        assert dim.tiling_is_wellformed(dgff128, t)
        rep = dim.tiling_containment_check(dgff128, t, 100, m)
        assert rep.holds and rep.checked == 100
    assert built >= 1
    rows = dim.tiling_count_profile(dgff128, [2], [0.3, 0.7, 1.1], 0.3, P)
    assert len(rows) == 3
    assert 1 / (P.xi * (P.q + 2)) == pytest.approx(0.606123, abs=1e-6)
    with pytest.raises(OutOfRangeT):
        dim.tiling_count_profile(dgff128, [2], [1.3], 0.3, P)


def test_annulus_distance_zero_field():
    g = lfpp.build_metric(gff.zero_field(64), P)
    # level 3: side 8; the nearest ring vertex is 8 axis steps away
    assert dim.annulus_distance(g, 3, 3, 3) == pytest.approx(8 / 64, rel=1e-12)


def test_ball_diameter_moments_small():
    rep = dim.ball_diameter_moments(P, 128, [2.0**-5, 2.0**-4, 2.0**-3], 4, 0)
    assert rep.predicted == pytest.approx(P.xi * P.q - P.xi**2 / 2)
    assert len(rep.mean_moment) == 3 and np.all(np.diff(rep.mean_moment) > 0)
