"""Discrete Gaussian free field on [0,1]^2 with zero boundary values.

Vertex ``(i, j)`` of an ``n x n`` field sits at ``((i + 1/2)/n, (j + 1/2)/n)``;
the first index is the x coordinate.  The field vanishes on the ring of
vertices just outside the grid.

Normalization: with ``L`` the graph Laplacian of the grid (degree 4,
Dirichlet outside) the covariance is ``2*pi * L^{-1}``.  That is the
Green's function of ``L / (2*pi)``, the scaling under which circle averages
have variance ``log(1/r) + O(1)``, matching the continuum GFF.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
import scipy.fft
import scipy.sparse
import scipy.sparse.linalg
from scipy.signal import fftconvolve

from .errors import (
    BadLadder,
    InvalidSize,
    OutOfDomain,
    OutOfRangeAlpha,
    OutOfRangeRho,
    OutOfRangeZeta,
    RadiusTooSmall,
)

# Covariance is LAPLACIAN_SCALE^{-1} * L^{-1}; recorded in the file header as NORM_TAG.
LAPLACIAN_SCALE = 1.0 / (2.0 * math.pi)
NORM_TAG = 1

FILE_MAGIC = b"LQGF"
FILE_VERSION = 1
_HEADER = struct.Struct("<4sHIQH")

MIN_N = 16
MAX_N = 8192


@dataclass(frozen=True, eq=False)
class Field:
    n: int
    values: np.ndarray
    seed: int
    boundary: str = "zero_boundary"
    kind: str = "dgff"  # "dgff" fields can be resampled; "custom" ones cannot

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.n, self.n):
            raise InvalidSize(f"values must be {self.n}x{self.n}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    def point(self, z) -> tuple[float, float]:
        i, j = z
        return (i + 0.5) / self.n, (j + 0.5) / self.n

    def __add__(self, other: np.ndarray) -> "Field":
        return Field(self.n, self.values + np.asarray(other), self.seed, kind="custom")


@dataclass(frozen=True)
class CircleAverage:
    center: tuple[int, int]
    radius: float
    value: float


@dataclass(frozen=True, eq=False)
class ThickPointSet:
    alpha: float
    zeta: float
    eps_ladder: tuple[float, ...]
    points: np.ndarray  # (k, 2) integer vertex indices, lexicographically sorted

    def __len__(self) -> int:
        return len(self.points)

    @property
    def eps_bar(self) -> float:
        return max(self.eps_ladder)


def _check_size(n: int) -> int:
    n = int(n)
    if n < MIN_N or n > MAX_N or n & (n - 1):
        raise InvalidSize(f"n must be a power of two in [{MIN_N}, {MAX_N}], got {n}")
    return n


def laplacian_eigenvalues(n: int) -> np.ndarray:
    """Eigenvalues of ``L / (2 pi)`` on the sine modes, indexed ``[p-1, q-1]``."""
    k = np.arange(1, n + 1)
    lam1 = 2.0 - 2.0 * np.cos(np.pi * k / (n + 1))
    return LAPLACIAN_SCALE * (lam1[:, None] + lam1[None, :])


def sample_dgff(n: int, seed: int) -> Field:
    """Exact sample of the zero-boundary DGFF, deterministic in ``seed``.

    Standard normals are drawn from a Philox (counter-based) stream in
    row-major mode order, divided by the square root of the mode's
    eigenvalue and mapped back with the orthonormal DST-I.
    """
    n = _check_size(n)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    coeffs = rng.standard_normal((n, n))
    coeffs /= np.sqrt(laplacian_eigenvalues(n))
    values = scipy.fft.idstn(coeffs, type=1, norm="ortho")
    return Field(n, values, int(seed))


def zero_field(n: int) -> Field:
    return Field(int(n), np.zeros((n, n)), 0, kind="custom")


def constant_field(n: int, c: float) -> Field:
    return Field(int(n), np.full((n, n), float(c)), 0, kind="custom")


def field_from_array(values, seed: int = 0) -> Field:
    values = np.asarray(values, dtype=np.float64)
    return Field(values.shape[0], values, seed, kind="custom")


def grid_laplacian(n: int) -> scipy.sparse.csr_matrix:
    """Sparse ``L / (2 pi)`` with Dirichlet boundary, row-major vertex order."""
    one = scipy.sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n))
    eye = scipy.sparse.identity(n)
    lap = scipy.sparse.kron(one, eye) + scipy.sparse.kron(eye, one)
    return (LAPLACIAN_SCALE * lap).tocsc()


def green_function_column(n: int, vertex) -> np.ndarray:
    """Covariance of every vertex with ``vertex``, by a sparse linear solve."""
    i, j = vertex
    rhs = np.zeros(n * n)
    rhs[i * n + j] = 1.0
    col = scipy.sparse.linalg.spsolve(grid_laplacian(n), rhs)
    return col.reshape(n, n)


# --- field file I/O ---------------------------------------------------------

def save_field(fld: Field, path) -> None:
    header = _HEADER.pack(FILE_MAGIC, FILE_VERSION, fld.n, fld.seed & (2**64 - 1), NORM_TAG)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(fld.values.astype("<f8").tobytes(order="C"))


def load_field(path) -> Field:
    data = Path(path).read_bytes()
    magic, version, n, seed, norm = _HEADER.unpack_from(data, 0)
    if magic != FILE_MAGIC:
        raise ValueError(f"{path}: not a field file (magic {magic!r})")
    if version != FILE_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if norm != NORM_TAG:
        raise ValueError(f"{path}: unknown normalization tag {norm}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != n * n:
        raise ValueError(f"{path}: expected {n * n} values, found {body.size}")
    return Field(n, body.reshape(n, n).astype(np.float64), seed)


# --- circle averages --------------------------------------------------------

def annulus_offsets(r: float, n: int) -> np.ndarray:
    """Integer offsets whose distance lies within half a cell of ``r * n``."""
    rad = r * n
    reach = int(math.floor(rad + 0.5))
    d = np.arange(-reach, reach + 1)
    di, dj = np.meshgrid(d, d, indexing="ij")
    mask = np.abs(np.hypot(di, dj) - rad) <= 0.5
    return np.stack([di[mask], dj[mask]], axis=1)


def _eligible_range(r: float, n: int) -> tuple[int, int]:
    """Index range ``[lo, hi)`` of vertices whose ball B_{r+1/n} fits in the square."""
    # (i + 1/2)/n - r - 1/n >= 0  and  (i + 1/2)/n + r + 1/n <= 1
    margin = r * n + 0.5
    lo = int(math.ceil(margin - 1e-9))
    hi = int(math.floor(n - 1 - margin + 1e-9)) + 1
    return lo, max(hi, lo)


def _check_radius(r: float, n: int) -> None:
    if r < 2.0 / n - 1e-15:
        raise RadiusTooSmall(f"radius {r} is below 2/n = {2.0 / n}")


def circle_average(fld: Field, z, r: float) -> CircleAverage:
    """Mean of the field over the one-cell-wide annulus of radius ``r`` about ``z``."""
    n = fld.n
    _check_radius(r, n)
    i, j = int(z[0]), int(z[1])
    lo, hi = _eligible_range(r, n)
    if not (lo <= i < hi and lo <= j < hi):
        raise OutOfDomain(f"ball of radius {r} about {z} leaves the unit square")
    off = annulus_offsets(r, n)
    value = float(fld.values[i + off[:, 0], j + off[:, 1]].mean())
    return CircleAverage((i, j), float(r), value)


def circle_average_map(fld: Field, r: float) -> np.ndarray:
    """Circle averages at every vertex; NaN where the ball leaves the square."""
    n = fld.n
    _check_radius(r, n)
    off = annulus_offsets(r, n)
    reach = int(np.abs(off).max())
    kernel = np.zeros((2 * reach + 1, 2 * reach + 1))
    kernel[off[:, 0] + reach, off[:, 1] + reach] = 1.0 / len(off)
    # correlation == convolution with the flipped kernel
    avg = fftconvolve(fld.values, kernel[::-1, ::-1], mode="same")
    out = np.full((n, n), np.nan)
    lo, hi = _eligible_range(r, n)
    out[lo:hi, lo:hi] = avg[lo:hi, lo:hi]
    return out


def default_ladder(n: int) -> list[float]:
    """Dyadic radii from 2^-3 down to max(2/n, 2^-8)."""
    floor = max(2.0 / n, 2.0**-8)
    ladder = []
    k = 3
    while 2.0**-k >= floor - 1e-15:
        ladder.append(2.0**-k)
        k += 1
    return ladder


def _check_ladder(eps_ladder, n: int) -> tuple[float, ...]:
    ladder = tuple(float(e) for e in eps_ladder)
    if not ladder:
        raise BadLadder("ladder is empty")
    for e in ladder:
        k = -math.log2(e)
        if abs(k - round(k)) > 1e-12:
            raise BadLadder(f"ladder radius {e} is not dyadic")
    if any(a <= b for a, b in zip(ladder, ladder[1:])):
        raise BadLadder("ladder must be strictly decreasing")
    if ladder[-1] < 2.0 / n - 1e-15:
        raise BadLadder(f"smallest radius {ladder[-1]} is below 2/n")
    if ladder[0] >= 0.5:
        raise BadLadder("largest radius must be below 1/2")
    return ladder


def thick_points(fld: Field, alpha: float, zeta: float, eps_ladder=None) -> ThickPointSet:
    """Vertices whose normalized circle averages stay in ``[alpha-zeta, alpha+zeta]``
    at every radius of ``eps_ladder``.

    Only vertices where every circle fits inside the square are eligible.
    """
    if not -2.0 <= alpha <= 2.0:
        raise OutOfRangeAlpha(f"alpha must lie in [-2, 2], got {alpha}")
    if not 0.0 < zeta < 1.0:
        raise OutOfRangeZeta(f"zeta must lie in (0, 1), got {zeta}")
    ladder = _check_ladder(default_ladder(fld.n) if eps_ladder is None else eps_ladder, fld.n)
    keep = np.ones((fld.n, fld.n), dtype=bool)
    for eps in ladder:
        ratio = circle_average_map(fld, eps) / math.log(1.0 / eps)
        with np.errstate(invalid="ignore"):
            keep &= (ratio >= alpha - zeta) & (ratio <= alpha + zeta)
    pts = np.argwhere(keep)
    return ThickPointSet(float(alpha), float(zeta), ladder, pts)


def eligible_vertices(n: int, eps_ladder) -> np.ndarray:
    """Vertices at which every radius of the ladder can be evaluated."""
    lo, hi = _eligible_range(max(eps_ladder), n)
    idx = np.arange(lo, hi)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    return np.stack([ii.ravel(), jj.ravel()], axis=1)


# --- circle-average continuity --------------------------------------------

@dataclass
class ContinuityReport:
    rho: float
    max_ratio: float
    flag: bool
    pairs: int
    radii: list = dc_field(default_factory=list)
    max_ratio_by_radius: dict = dc_field(default_factory=dict)


def _continuity_scale(r: float, rho: float) -> float:
    return 3.0 * math.sqrt(10.0 * rho) * math.log(1.0 / r)


def continuity_ratio(fld: Field, z, w, r: float, rho: float) -> float:
    """``|h_r(w) - h_{r^(1-rho)}(z)|`` in units of ``3 sqrt(10 rho) log(1/r)``."""
    if not 0.0 < rho < 0.5:
        raise OutOfRangeRho(f"rho must lie in (0, 1/2), got {rho}")
    a = circle_average(fld, w, r).value
    b = circle_average(fld, z, r ** (1.0 - rho)).value
    return abs(a - b) / _continuity_scale(r, rho)


def circle_average_continuity_check(
    fld: Field,
    rho: float,
    sample_pairs: int,
    seed: int,
    radii=None,
) -> ContinuityReport:
    """Empirical check of the modulus of continuity of the circle-average process.

    Pairs ``(z, w)`` with ``|z - w| <= 2r`` are drawn uniformly; the report
    carries the largest observed ratio and ``flag = max_ratio <= 1``.
    """
    if not 0.0 < rho < 0.5:
        raise OutOfRangeRho(f"rho must lie in (0, 1/2), got {rho}")
    n = fld.n
    if radii is None:
        radii = [2.0**-k for k in range(3, 8) if 2.0**-k >= 2.0 / n]
    rng = np.random.default_rng(seed)
    per_radius = np.array_split(np.arange(sample_pairs), len(radii))
    best = {}
    for r, chunk in zip(radii, per_radius):
        m = len(chunk)
        if m == 0:
            continue
        big = r ** (1.0 - rho)
        h_small = circle_average_map(fld, r)
        h_big = circle_average_map(fld, big)
        lo, hi = _eligible_range(big, n)
        if hi - lo < 1:
            raise OutOfDomain(f"radius {big} does not fit in the grid")
        reach = 2.0 * r * n
        z = rng.integers(lo, hi, size=(m, 2))
        # uniform offsets in the disc of radius 2r, rejected until w is eligible
        w = np.empty_like(z)
        todo = np.arange(m)
        while todo.size:
            rad = reach * np.sqrt(rng.random(todo.size))
            ang = 2 * np.pi * rng.random(todo.size)
            cand = z[todo] + np.rint(np.stack([rad * np.cos(ang), rad * np.sin(ang)], 1)).astype(int)
            cand_ok = np.all((cand >= 0) & (cand < n), axis=1)
            vals = np.full(todo.size, np.nan)
            vals[cand_ok] = h_small[cand[cand_ok, 0], cand[cand_ok, 1]]
            ok = np.isfinite(vals) & (np.hypot(*(cand - z[todo]).T) <= reach + 1e-9)
            w[todo[ok]] = cand[ok]
            todo = todo[~ok]
        diff = np.abs(h_small[w[:, 0], w[:, 1]] - h_big[z[:, 0], z[:, 1]])
        best[r] = float(diff.max() / _continuity_scale(r, rho))
    max_ratio = max(best.values()) if best else 0.0
    return ContinuityReport(rho, max_ratio, max_ratio <= 1.0, int(sample_pairs), list(radii), best)
