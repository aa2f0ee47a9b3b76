import math
import struct

import numpy as np
import pytest
import scipy.sparse.linalg as sla
from scipy.stats import norm

from lqgkpz import gff
from lqgkpz.errors import (
    BadLadder, InvalidSize, OutOfDomain, OutOfRangeAlpha, OutOfRangeRho, OutOfRangeZeta, RadiusTooSmall,
)


def exact_circle_variance(n, z, r):
    """Variance of the annulus mean from one sparse solve of the Laplace equation."""
    off = gff.annulus_offsets(r, n)
    c = np.zeros(n * n)
    c[(z[0] + off[:, 0]) * n + z[1] + off[:, 1]] = 1.0 / len(off)
    return float(c @ sla.spsolve(gff.grid_laplacian(n), c))


@pytest.mark.parametrize("n", [8, 15, 100, 16384])
def test_size_checked(n):
    with pytest.raises(InvalidSize):
        gff.sample_dgff(n, 0)


def test_deterministic():
    a, b = gff.sample_dgff(64, 123), gff.sample_dgff(64, 123)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, gff.sample_dgff(64, 124).values)
    assert not a.values.flags.writeable


def test_green_function_is_inverse_laplacian():
    n = 16
    col = gff.green_function_column(n, (5, 9))
    lap = gff.grid_laplacian(n)
    e = lap @ col.ravel()
    target = np.zeros(n * n)
    target[5 * n + 9] = 1.0
    assert np.allclose(e, target, atol=1e-12)
    # covariance decays toward the zero boundary
    col = gff.green_function_column(32, (16, 16))
    assert col[0].max() < col[16, 16] / 5
    assert col[16, 0] < col[16, 8] < col[16, 16]


def test_covariance_matches_green_function():
    n, samples = 16, 4000
    vals = np.stack([gff.sample_dgff(n, s).values for s in range(samples)])
    rng = np.random.default_rng(1)
    for _ in range(6):
        u, v = rng.integers(0, n, 2), rng.integers(0, n, 2)
        x, y = vals[:, u[0], u[1]], vals[:, v[0], v[1]]
        prod = x * y
        se = prod.std() / math.sqrt(samples)
        g = gff.green_function_column(n, tuple(u))[v[0], v[1]]
        assert abs(prod.mean() - g) <= 4 * se
    centre = vals[:, n // 2, n // 2]
    assert abs(centre.mean()) <= 4 * centre.std() / math.sqrt(samples)


def test_centre_variance_grows_like_log():
    # Var h(centre) = log n + O(1) under the 2 pi normalisation
    var = [gff.green_function_column(n, (n // 2, n // 2))[n // 2, n // 2] for n in (32, 64, 128)]
    assert np.diff(var) == pytest.approx([math.log(2)] * 2, abs=0.025)


def test_file_round_trip(tmp_path):
    f = gff.sample_dgff(32, 2**40 + 7)
    path = tmp_path / "f.lqgf"
    gff.save_field(f, path)
    raw = path.read_bytes()
    assert raw[:4] == b"LQGF"
    assert struct.unpack_from("<HIQH", raw, 4) == (1, 32, 2**40 + 7, gff.NORM_TAG)
    assert len(raw) == 4 + 2 + 4 + 8 + 2 + 32 * 32 * 8
    g = gff.load_field(path)
    assert np.array_equal(f.values, g.values) and g.seed == f.seed
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        gff.load_field(path)


def test_circle_average_basics():
    n = 64
    c = gff.constant_field(n, 2.5)
    for r in (2 / n, 0.1, 0.25):
        assert gff.circle_average(c, (32, 32), r).value == pytest.approx(2.5, abs=1e-12)
    x = gff.field_from_array(np.repeat(((np.arange(n) + 0.5) / n)[:, None], n, 1))
    got = gff.circle_average(x, (32, 20), 0.2).value
    assert abs(got - x.point((32, 20))[0]) <= 1 / (2 * n)
    with pytest.raises(RadiusTooSmall):
        gff.circle_average(c, (32, 32), 1 / n)
    with pytest.raises(OutOfDomain):
        gff.circle_average(c, (3, 32), 0.1)
    for r in (2 / n, 0.1, 0.3):
        assert len(gff.annulus_offsets(r, n)) > 0


def test_circle_average_map_agrees_with_pointwise():
    f = gff.sample_dgff(64, 3)
    m = gff.circle_average_map(f, 0.125)
    for z in [(20, 20), (32, 40), (45, 30)]:
        assert m[z] == pytest.approx(gff.circle_average(f, z, 0.125).value, abs=1e-12)
    assert np.isnan(m[0, 0])


def test_exact_circle_variance_slope():
    n = 256
    radii = [2.0**-k for k in range(3, 8)]
    var = [exact_circle_variance(n, (n // 2, n // 2), r) for r in radii]
    slope = np.polyfit(np.log(1 / np.array(radii)), var, 1)[0]
    assert slope == pytest.approx(0.971099, abs=1e-4)  # frozen oracle value


def test_thick_hit_fraction_matches_gaussian_tail():
    n, samples, alpha, zeta = 128, 2000, 1.0, 0.2
    z = (n // 2, n // 2)
    radii = [2.0**-k for k in range(3, 7)]
    L = np.log(1 / np.array(radii))
    vals = np.array([[gff.circle_average(gff.sample_dgff(n, s), z, r).value for r in radii]
                     for s in range(samples)])
    frac = np.mean(np.abs(vals / L - alpha) <= zeta, axis=0)
    sd = np.sqrt([exact_circle_variance(n, z, r) for r in radii])
    oracle = norm.cdf((alpha + zeta) * L / sd) - norm.cdf((alpha - zeta) * L / sd)
    se = np.sqrt(oracle * (1 - oracle) / samples)
    assert np.all(np.abs(frac - oracle) <= 3.5 * se)
    slope = np.polyfit(np.log(radii), np.log(frac), 1)[0]
    assert abs(slope - 0.5) <= 0.2


def test_thick_points_trivial_cases():
    n = 64
    zero = gff.zero_field(n)
    ladder = [0.125, 0.0625]
    assert len(gff.thick_points(zero, 2.0, 0.1, ladder)) == 0
    tp = gff.thick_points(zero, 0.0, 0.05, ladder)
    assert np.array_equal(tp.points, gff.eligible_vertices(n, ladder))
    assert tp.eps_bar == 0.125
    with pytest.raises(OutOfRangeAlpha):
        gff.thick_points(zero, 2.5, 0.1)
    with pytest.raises(OutOfRangeZeta):
        gff.thick_points(zero, 0.0, 1.0)
    for bad in ([0.1], [0.0625, 0.125], [0.5], [1 / 128], []):
        with pytest.raises(BadLadder):
            gff.thick_points(zero, 0.0, 0.1, bad)


def test_default_ladder():
    assert gff.default_ladder(1024) == [2.0**-k for k in range(3, 9)]
    assert gff.default_ladder(64) == [2.0**-k for k in range(3, 6)]


def test_thick_points_nesting():
    f = gff.sample_dgff(128, 5)
    short, long = [0.125, 0.0625], [0.125, 0.0625, 0.03125]
    for alpha in (-0.5, 0.0, 0.8):
        a = {tuple(p) for p in gff.thick_points(f, alpha, 0.3, short).points}
        b = {tuple(p) for p in gff.thick_points(f, alpha, 0.3, long).points}
        c = {tuple(p) for p in gff.thick_points(f, alpha, 0.5, long).points}
        assert b <= a and b <= c
    tp = gff.thick_points(f, 0.5, 0.3, long)
    for z in tp.points[:: max(1, len(tp) // 20)]:
        for r in long:
            ratio = gff.circle_average(f, z, r).value / math.log(1 / r)
            assert 0.2 - 1e-12 <= ratio <= 0.8 + 1e-12


def test_continuity_check():
    c = gff.constant_field(64, 1.0)
    rep = gff.circle_average_continuity_check(c, 0.1, 50, 0)
    assert rep.max_ratio == pytest.approx(0.0, abs=1e-12) and rep.flag
    with pytest.raises(OutOfRangeRho):
        gff.circle_average_continuity_check(c, 0.5, 10, 0)
    f = gff.sample_dgff(256, 0)
    rep = gff.circle_average_continuity_check(f, 0.04, 400, 1)
    assert rep.pairs == 400 and np.isfinite(rep.max_ratio)
    z = (128, 128)
    assert gff.continuity_ratio(f, z, z, 0.1, 1e-9) == pytest.approx(0.0, abs=1e-6)
