"""Euclidean and quantum dimension estimators and the dyadic-square machinery.

Dyadic squares are addressed as ``(level, a, b)``: the square
``[a, a+1] x [b, b+1] * 2^-level`` of the unit square.  On an ``n``-grid
its half-open vertex block is ``[a s, (a+1) s) x [b s, (b+1) s)`` with
``s = n / 2^level``; the closed block adds one vertex row and column so
that extreme vertices are exactly ``s`` cells apart.

All experiments live in the centred window ``[1/4, 3/4]^2``, which is
the union of the four level-2 dyadic squares around the centre.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage
from scipy.optimize import bisect
from scipy.special import logsumexp

from . import _kernels as K
from .errors import (
    BadPartition,
    EmptySet,
    NoSignChange,
    OutOfDomain,
    OutOfRangeS,
    OutOfRangeT,
    ResolutionExhausted,
    ThresholdTooLarge,
    TooFewScales,
)
from .kpz import square_count_exponent, tiling_count_exponent
from .lfpp import QuantumMetricGrid
from .params import LqgParams

# Blocks with at most this many vertices get exact all-pairs diameters;
# larger ones use the multi-sweep estimate.
EXACT_MAX_VERTICES = 32

_LOG2 = math.log(2.0)


# --- sets ---------------------------------------------------------------------

def window_range(n: int) -> tuple[int, int]:
    """Vertex index range ``[lo, hi)`` of the centred half-window."""
    return n // 4, 3 * n // 4


def in_window(points, n: int) -> np.ndarray:
    lo, hi = window_range(n)
    pts = np.asarray(points)
    return np.all((pts >= lo) & (pts < hi), axis=1)


@dataclass(frozen=True, eq=False)
class FractalSet:
    points: np.ndarray  # (k, 2) unique vertex indices
    n: int
    recipe: dict = dc_field(default_factory=lambda: {"kind": "custom"})

    def __post_init__(self):
        pts = np.unique(np.asarray(self.points, dtype=np.int64).reshape(-1, 2), axis=0)
        if len(pts) == 0:
            raise EmptySet("fractal set is empty")
        if not in_window(pts, self.n).all():
            raise OutOfDomain("fractal set leaves the centred experiment window")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def mask(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        m[self.points[:, 0], self.points[:, 1]] = True
        return m


def clip_to_window(points, n: int) -> np.ndarray:
    pts = np.asarray(points).reshape(-1, 2)
    return pts[in_window(pts, n)]


def full_window_set(n: int) -> FractalSet:
    lo, hi = window_range(n)
    idx = np.arange(lo, hi)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    return FractalSet(np.stack([ii.ravel(), jj.ravel()], 1), n, {"kind": "full_square"})


def segment_set(n: int, row: int | None = None) -> FractalSet:
    """Horizontal segment (varying x) across the window."""
    lo, hi = window_range(n)
    row = n // 2 if row is None else int(row)
    i = np.arange(lo, hi)
    return FractalSet(np.stack([i, np.full_like(i, row)], 1), n, {"kind": "segment", "row": row})


def _cantor_cells(length: int, ratio: float) -> np.ndarray:
    """Cells ``[i, i+1)`` of ``[0, length)`` meeting the scaled middle-gap Cantor set.

    Pieces are refined until narrower than one cell; a cell is kept when it
    meets a closed piece, so aligned box counts equal those of the
    continuum set.
    """
    left = np.array([0.0])
    width = 1.0
    depth = 0
    while width * length > 1.0 - 1e-9:  # guard against 3^-k * 3^k rounding below 1
        left = np.concatenate([left, left + (1.0 - ratio) * width])
        width *= ratio
        depth += 1
    # endpoints on cell boundaries belong to the cell on their right
    lo = np.floor(left * length + 1e-9).astype(np.int64)
    hi = np.minimum(np.floor((left + width) * length + 1e-9).astype(np.int64), length - 1)
    keep = np.zeros(length + 1, dtype=np.int64)
    np.add.at(keep, lo, 1)
    np.add.at(keep, hi + 1, -1)
    return np.flatnonzero(np.cumsum(keep)[:length] > 0), depth


def cantor_dust_set(n: int, ratio: float = 1.0 / 3.0) -> FractalSet:
    """Product of two middle-gap Cantor sets spanning the window, refined to
    grid resolution.

    The triadic structure is incommensurate with dyadic boxes, so the
    recipe asks box counting to average over all grid offsets.
    """
    lo, hi = window_range(n)
    cells, depth = _cantor_cells(hi - lo, ratio)
    idx = cells + lo
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    return FractalSet(
        np.stack([ii.ravel(), jj.ravel()], 1), n,
        {"kind": "cantor_dust", "ratio": ratio, "depth": depth, "offsets": "all", "quantum_offsets": 4},
    )


def thick_point_set(tps, n: int) -> FractalSet:
    pts = clip_to_window(tps.points, n)
    return FractalSet(pts, n, {"kind": "thick_points", "alpha": tps.alpha, "zeta": tps.zeta})


def geodesic_set(path, n: int, u=None, v=None) -> FractalSet:
    verts = getattr(path, "vertices", path)
    recipe = {"kind": "geodesic"}
    if u is not None:
        recipe.update(u=list(map(int, u)), v=list(map(int, v)))
    return FractalSet(clip_to_window(verts, n), n, recipe)


def ball_boundary_set(points, n: int, z=None, s=None) -> FractalSet:
    recipe = {"kind": "ball_boundary"}
    if z is not None:
        recipe.update(z=list(map(int, z)), s=float(s))
    return FractalSet(clip_to_window(points, n), n, recipe)


# --- regression -----------------------------------------------------------------

def ols(x, y) -> tuple[float, float, float, float]:
    """Least-squares line; returns ``(slope, intercept, slope_stderr, r_squared)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    sse = float(np.sum(resid**2))
    sst = float(np.sum((y - ym) ** 2))
    dof = len(x) - 2
    stderr = math.sqrt(sse / dof / sxx) if dof > 0 else float("nan")
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    return slope, intercept, stderr, min(max(r2, 0.0), 1.0)


@dataclass
class DimensionEstimate:
    exponent: float
    stderr: float
    r_squared: float
    scales: list
    counts_or_sums: list
    kind: str = "box"
    extras: dict = dc_field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        """Poor straight-line fit (R^2 below 0.9)."""
        return self.r_squared < 0.9

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "exponent": self.exponent,
            "stderr": self.stderr,
            "r_squared": self.r_squared,
            "flagged": self.flagged,
            "scales": list(self.scales),
            "counts_or_sums": [float(c) for c in self.counts_or_sums],
        }


# --- box counting -------------------------------------------------------------

def default_levels(n: int, coarsest: int = 3) -> list[int]:
    """Dyadic levels from ``coarsest`` down to boxes of 2x2 vertices."""
    finest = int(math.log2(n)) - 1
    return list(range(coarsest, finest + 1))


def _check_levels(levels, n: int) -> list[int]:
    levels = sorted(int(k) for k in levels)
    if len(levels) < 3:
        raise TooFewScales(f"need at least 3 levels, got {len(levels)}")
    top = int(math.log2(n))
    if levels[0] < 0 or levels[-1] > top:
        raise ValueError(f"levels must lie in [0, {top}]")
    return levels


def occupied_squares(points, n: int, level: int, offset=(0, 0)) -> np.ndarray:
    """Distinct ``(a, b)`` indices of level-``level`` squares holding a point.

    With a nonzero ``offset`` the square grid is shifted so that square
    ``(a, b)`` covers vertices ``[a s - t_i, (a+1) s - t_i)`` and likewise in j.
    """
    side = n >> level
    return np.unique((np.asarray(points) + np.asarray(offset)) // side, axis=0)


def grid_offsets(side: int, offsets) -> list[tuple[int, int]]:
    """Offset pairs used to average box counts at a given box side.

    ``offsets`` is 1 (aligned grid only), an integer ``k`` (a k x k
    sample of evenly spaced shifts) or ``"all"``.
    """
    if offsets == "all":
        shifts = list(range(side))
    else:
        k = int(offsets)
        if k < 1:
            raise ValueError("offsets must be a positive integer or 'all'")
        shifts = sorted({int(round(q * side / k)) % side for q in range(k)})
    return [(a, b) for a in shifts for b in shifts]


def _mean_box_count(points, n: int, level: int, offsets) -> float:
    side = n >> level
    if offsets == "all":
        # averaging over every shift counts the set dilated by a side x side box
        mask = np.zeros((n + 2 * side, n + 2 * side), dtype=bool)
        pts = np.asarray(points) + side
        mask[pts[:, 0], pts[:, 1]] = True
        grown = ndimage.maximum_filter1d(mask, side, axis=0)
        grown = ndimage.maximum_filter1d(grown, side, axis=1)
        return float(grown.sum()) / side**2
    if offsets == 1:
        return float(len(occupied_squares(points, n, level)))
    return float(np.mean([len(occupied_squares(points, n, level, t)) for t in grid_offsets(side, offsets)]))


def _resolve_offsets(fs: FractalSet, offsets):
    return fs.recipe.get("offsets", 1) if offsets is None else offsets


def box_dimension(fs: FractalSet, levels=None, offsets=None) -> DimensionEstimate:
    """Slope of log2(occupied square count) against the dyadic level.

    ``offsets`` selects grid-origin averaging (see :func:`grid_offsets`);
    by default the set's recipe decides, falling back to the aligned grid.
    """
    if len(fs.points) == 0:
        raise EmptySet("fractal set is empty")
    levels = _check_levels(default_levels(fs.n) if levels is None else levels, fs.n)
    offsets = _resolve_offsets(fs, offsets)
    counts = [_mean_box_count(fs.points, fs.n, k, offsets) for k in levels]
    slope, _, stderr, r2 = ols(levels, np.log2(counts))
    return DimensionEstimate(slope, stderr, r2, levels, counts, "box", {"offsets": offsets})


# --- quantum diameters ---------------------------------------------------------

def square_block(n: int, level: int, a: int, b: int, closed: bool = False) -> tuple[int, int, int, int]:
    """Vertex ranges ``(i0, i1, j0, j1)`` (half-open) of a dyadic square."""
    side = n >> level
    extra = 1 if closed else 0
    i0, j0 = a * side, b * side
    return i0, min(i0 + side + extra, n), j0, min(j0 + side + extra, n)


def _dilate(block, r: int, n: int) -> tuple[int, int, int, int]:
    i0, i1, j0, j1 = block
    return max(i0 - r, 0), min(i1 + r, n), max(j0 - r, 0), min(j1 + r, n)


def _check_block(grid: QuantumMetricGrid, block) -> tuple[int, int, int, int]:
    i0, i1, j0, j1 = (int(x) for x in block)
    if not (0 <= i0 < i1 <= grid.n and 0 <= j0 < j1 <= grid.n):
        raise OutOfDomain(f"square {tuple(block)} is not inside the {grid.n}x{grid.n} grid")
    return i0, i1, j0, j1


def _is_exact(block, method: str) -> bool:
    if method not in ("auto", "exact", "sweep"):
        raise ValueError(f"unknown method {method!r}")
    i0, i1, j0, j1 = block
    size = (i1 - i0) * (j1 - j0)
    return size == 1 or method == "exact" or (method == "auto" and size <= EXACT_MAX_VERTICES)


def block_diameters(grid: QuantumMetricGrid, blocks, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Quantum diameters of vertex blocks ``(i0, i1, j0, j1)`` (half-open)
    and a flag per block telling whether the value is exact.

    ``method="exact"`` maximizes over all vertex pairs; ``"sweep"`` runs
    searches from the corners and edge midpoints plus a double sweep and
    returns a close lower estimate; ``"auto"`` is exact for blocks of at
    most ``EXACT_MAX_VERTICES`` vertices.  Distances are unrestricted
    shortest paths on the whole grid.
    """
    blocks = [_check_block(grid, blk) for blk in blocks]
    exact = np.array([_is_exact(blk, method) for blk in blocks], dtype=bool)
    out = np.empty(len(blocks))
    arr = np.array(blocks, dtype=np.int64).reshape(-1, 4)
    w = grid.vertex_weight
    if exact.any():
        out[exact] = K.exact_diameters(w, grid.scale, arr[exact])
    if (~exact).any():
        out[~exact] = K.sweep_diameters(w, grid.scale, arr[~exact])
    return out, exact


def quantum_diameter(grid: QuantumMetricGrid, square, method: str = "auto") -> float:
    """Largest metric distance between two vertices of the block ``square``;
    see :func:`block_diameters` for the methods."""
    return float(block_diameters(grid, [square], method)[0][0])


def quantum_diameter_status(grid: QuantumMetricGrid, square, method: str = "auto") -> tuple[float, bool]:
    """Like :func:`quantum_diameter` but also reports whether the value is exact."""
    d, ex = block_diameters(grid, [square], method)
    return float(d[0]), bool(ex[0])


def level_diameters(grid: QuantumMetricGrid, level: int, squares, method: str = "auto") -> np.ndarray:
    """Quantum diameters of the closed level-``level`` squares listed in ``squares``."""
    n = grid.n
    return block_diameters(grid, [square_block(n, level, a, b, closed=True) for a, b in squares], method)[0]


def window_squares(n: int, level: int) -> np.ndarray:
    """All level-``level`` dyadic squares inside the window (level >= 2)."""
    if level < 2:
        raise ValueError("the window is a union of level-2 squares; level must be >= 2")
    m = 1 << level
    idx = np.arange(m // 4, 3 * m // 4)
    aa, bb = np.meshgrid(idx, idx, indexing="ij")
    return np.stack([aa.ravel(), bb.ravel()], 1)


# --- quantum dimension -----------------------------------------------------------

def _log2_partition(diams: np.ndarray, ell: float) -> float:
    return float(logsumexp(ell * np.log(diams)) / _LOG2)


def _partition_slope(levels, diams_by_level, ell: float, shift_corr=None):
    sums = [_log2_partition(d, ell) for d in diams_by_level]
    if shift_corr is not None:
        sums = list(np.asarray(sums) - shift_corr)
    return ols(levels, sums), sums


def cover_blocks(points, n: int, level: int, offset=(0, 0)) -> list[tuple[int, int, int, int]]:
    """Closed vertex blocks of the (shifted) level-``level`` squares meeting ``points``."""
    side = n >> level
    ti, tj = offset
    out = []
    for a, b in occupied_squares(points, n, level, offset):
        i0, j0 = int(a) * side - ti, int(b) * side - tj
        out.append((max(i0, 0), min(i0 + side + 1, n), max(j0, 0), min(j0 + side + 1, n)))
    return out


def quantum_dimension(
    fs: FractalSet,
    grid: QuantumMetricGrid,
    levels=None,
    ell_grid=None,
    method: str = "auto",
    diameters: dict | None = None,
    offsets=None,
) -> DimensionEstimate:
    """Critical exponent of the covering sums ``sum_S diam(S)^ell``.

    For each level the sum runs over the closed dyadic squares that meet
    the set.  The exponent of growth in the level decreases in ``ell``;
    the estimate is the ``ell`` where it crosses zero, bracketed on
    ``ell_grid`` and refined by bisection.  ``diameters`` is a cache
    ``{block: diam}`` filled in place.  ``offsets`` averages the sums over
    shifted square grids as in :func:`box_dimension`; the default comes
    from the recipe key ``"quantum_offsets"`` (aligned if absent), since
    every shifted square needs its own diameter.
    """
    if fs.n != grid.n:
        raise ValueError("set and grid resolutions differ")
    levels = _check_levels(default_levels(fs.n) if levels is None else levels, fs.n)
    ell_grid = np.arange(0.25, 10.01, 0.25) if ell_grid is None else np.asarray(ell_grid, float)
    if np.any(ell_grid <= 0) or np.any(np.diff(ell_grid) <= 0):
        raise ValueError("ell_grid must be positive and increasing")
    if offsets is None:
        offsets = fs.recipe.get("quantum_offsets", 1)
    cache = {} if diameters is None else diameters
    diams_by_level = []
    n_shifts = []
    for k in levels:
        shifts = grid_offsets(fs.n >> k, offsets)
        blocks = [blk for t in shifts for blk in cover_blocks(fs.points, fs.n, k, t)]
        todo = list(dict.fromkeys(blk for blk in blocks if blk not in cache))
        if todo:
            cache.update(zip(todo, block_diameters(grid, todo, method)[0]))
        d = np.array([cache[blk] for blk in blocks])
        if np.any(d <= 0):
            raise ValueError(f"level {k}: squares with zero diameter (resolution too fine)")
        diams_by_level.append(d)
        n_shifts.append(len(shifts))
    shift_corr = np.log2(n_shifts)

    def slope(ell):
        return _partition_slope(levels, diams_by_level, ell, shift_corr)[0][0]

    slopes = np.array([slope(e) for e in ell_grid])
    sign_change = np.flatnonzero((slopes[:-1] > 0) & (slopes[1:] <= 0))
    if sign_change.size == 0:
        raise NoSignChange(
            f"covering exponent does not change sign on ell in [{ell_grid[0]}, {ell_grid[-1]}]"
        )
    k0 = sign_change[0]
    lo, hi = float(ell_grid[k0]), float(ell_grid[k0 + 1])
    crit = hi if slopes[k0 + 1] == 0 else bisect(slope, lo, hi, xtol=1e-10)

    (s0, _, se0, _), sums = _partition_slope(levels, diams_by_level, crit, shift_corr)
    h = 1e-4
    dslope = (slope(crit + h) - slope(crit - h)) / (2 * h)
    stderr = se0 / abs(dslope) if dslope else float("nan")
    counts = [len(d) / m for d, m in zip(diams_by_level, n_shifts)]
    # fit quality: scatter of the critical sums relative to the spread of the counts
    resid = np.asarray(sums) - np.mean(sums) - s0 * (np.asarray(levels) - np.mean(levels))
    sst = float(np.sum((np.log2(counts) - np.mean(np.log2(counts))) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 1.0
    return DimensionEstimate(
        float(crit), float(stderr), min(max(r2, 0.0), 1.0), levels, sums, "quantum",
        {"offsets": offsets, "counts": counts, "ell_grid": ell_grid.tolist(), "slopes": slopes.tolist()},
    )


# --- dyadic strata and square counts ----------------------------------------------

@dataclass
class StrataCounts:
    level: int
    s_partition: list
    counts: list  # counts[k-1] = #{diam in [2^-s_k n, 2^-s_{k-1} n)}
    below: int  # diam < 2^-s_K n
    above: int  # diam >= 2^-s_0 n
    total: int

    def as_rows(self) -> list[dict]:
        rows = [{"s_lo": None, "s_hi": self.s_partition[0], "count": self.above}]
        for k, c in enumerate(self.counts, start=1):
            rows.append({"s_lo": self.s_partition[k - 1], "s_hi": self.s_partition[k], "count": c})
        rows.append({"s_lo": self.s_partition[-1], "s_hi": None, "count": self.below})
        return rows


def _window_level_diameters(grid, level, method, cache):
    squares = window_squares(grid.n, level)
    if cache is not None and level in cache:
        return cache[level]
    d = level_diameters(grid, level, [tuple(s) for s in squares], method)
    if cache is not None:
        cache[level] = d
    return d


def dyadic_strata(grid: QuantumMetricGrid, level: int, s_partition, method: str = "auto",
                  cache: dict | None = None) -> StrataCounts:
    """Sort the window's level-``level`` squares by quantum diameter into
    the strata ``[2^-(s_k level), 2^-(s_{k-1} level))`` plus two overflow bins."""
    s = np.asarray(s_partition, dtype=float)
    if s.size < 2 or np.any(np.diff(s) <= 0):
        raise BadPartition("s_partition must be strictly increasing with at least two entries")
    d = _window_level_diameters(grid, level, method, cache)
    edges = 2.0 ** (-s * level)  # decreasing
    above = int(np.sum(d >= edges[0]))
    below = int(np.sum(d < edges[-1]))
    counts = [int(np.sum((d >= edges[k]) & (d < edges[k - 1]))) for k in range(1, s.size)]
    return StrataCounts(level, s.tolist(), counts, below, above, int(d.size))


@dataclass
class CountRow:
    scale: int  # level n (squares) or quantum index m (tiles)
    param: float  # s or t
    count: int
    bound: float
    empty_regime: bool
    ok: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def square_count_profile(grid: QuantumMetricGrid, levels, s_values, zeta: float, p: LqgParams,
                         method: str = "auto", cache: dict | None = None) -> list[CountRow]:
    """Count window squares with ``diam > 2^(-s n)`` against ``2^((2 - (xiQ - s)^2/(2 xi^2) + zeta) n)``.

    Rows with ``s < xi (Q - 2)`` are flagged as the regime where the count
    should be zero.
    """
    for s in s_values:
        if not 0.0 < s < p.xi * p.q:
            raise OutOfRangeS(f"s must lie in (0, xi Q = {p.xi * p.q}), got {s}")
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    rows = []
    for level in levels:
        d = _window_level_diameters(grid, level, method, cache)
        for s in s_values:
            count = int(np.sum(d > 2.0 ** (-s * level)))
            bound = 2.0 ** (square_count_exponent(s, zeta, p) * level)
            rows.append(CountRow(level, float(s), count, bound, s < p.xi * (p.q - 2.0), count <= bound))
    return rows


# --- quantum tiling --------------------------------------------------------------

def annulus_distance(grid: QuantumMetricGrid, level: int, a: int, b: int) -> float:
    """Distance from a dyadic square to the vertex ring at L-infinity distance |S|.

    Ring vertices off the grid are dropped; an empty ring gives +inf.
    """
    n = grid.n
    block = square_block(n, level, a, b)
    side = n >> level
    win = _dilate(block, side, n)
    wi0, wi1, wj0, wj1 = win
    i0, i1, j0, j1 = block
    ii = np.arange(wi0, wi1)[:, None]
    jj = np.arange(wj0, wj1)[None, :]
    dx = np.maximum(np.maximum(i0 - ii, ii - (i1 - 1)), 0)
    dy = np.maximum(np.maximum(j0 - jj, jj - (j1 - 1)), 0)
    ring = np.maximum(dx, dy) == side
    if not ring.any():
        return math.inf
    bi, bj = np.meshgrid(np.arange(i0, i1) - wi0, np.arange(j0, j1) - wj0, indexing="ij")
    sources = np.stack([bi.ravel(), bj.ravel()], 1)
    return grid.distance_to_targets(sources, ring, window=win)


@dataclass
class Tile:
    level: int
    a: int
    b: int
    annulus_distance: float
    parent_distance: float

    @property
    def side(self) -> float:
        return 2.0**-self.level


@dataclass
class QuantumTiling:
    m: int
    threshold: float
    squares: list  # of Tile

    def __len__(self) -> int:
        return len(self.squares)

    def levels(self) -> np.ndarray:
        return np.array([t.level for t in self.squares])


def quantum_tiling(grid: QuantumMetricGrid, m: int) -> QuantumTiling:
    """Dyadic tiling of the window by the squares whose annulus distance is
    at most ``2^-m`` while their parent's exceeds it."""
    n = grid.n
    threshold = 2.0**-m
    memo: dict = {}

    def cond(level, a, b):
        key = (level, a, b)
        if key not in memo:
            memo[key] = annulus_distance(grid, level, a, b)
        return memo[key]

    stack = []
    for a, b in window_squares(n, 2)[::-1]:
        parent = cond(1, a // 2, b // 2)
        if parent <= threshold:
            raise ThresholdTooLarge(
                f"2^-{m} exceeds the annulus distance of level-1 square ({a // 2}, {b // 2})"
            )
        stack.append((2, int(a), int(b), parent))
    tiles = []
    top = int(math.log2(n))
    while stack:
        level, a, b, parent = stack.pop()
        here = cond(level, a, b)
        if here <= threshold:
            tiles.append(Tile(level, a, b, here, parent))
            continue
        if level >= top:
            raise ResolutionExhausted(
                f"single-vertex square ({a}, {b}) still has annulus distance {here:.3g} > 2^-{m}"
            )
        for da, db in ((1, 1), (1, 0), (0, 1), (0, 0)):
            stack.append((level + 1, 2 * a + da, 2 * b + db, here))
    tiles.sort(key=lambda t: (t.level, t.a, t.b))
    return QuantumTiling(int(m), threshold, tiles)


def tiling_is_wellformed(grid: QuantumMetricGrid, tiling: QuantumTiling) -> bool:
    """Interior-disjoint cover of the window, with both threshold conditions."""
    n = grid.n
    cover = np.zeros((n, n), dtype=np.int32)
    for t in tiling.squares:
        i0, i1, j0, j1 = square_block(n, t.level, t.a, t.b)
        cover[i0:i1, j0:j1] += 1
        if not (t.annulus_distance <= tiling.threshold < t.parent_distance):
            return False
        if annulus_distance(grid, t.level, t.a, t.b) != t.annulus_distance:
            return False
        if annulus_distance(grid, t.level - 1, t.a // 2, t.b // 2) != t.parent_distance:
            return False
    lo, hi = window_range(n)
    inside = np.zeros((n, n), dtype=bool)
    inside[lo:hi, lo:hi] = True
    return bool(np.all(cover[inside] == 1) and np.all(cover[~inside] == 0))


@dataclass
class ContainmentReport:
    checked: int
    violations: int

    @property
    def holds(self) -> bool:
        return self.violations == 0


def tiling_containment_check(grid: QuantumMetricGrid, tiling: QuantumTiling, samples: int,
                             seed: int) -> ContainmentReport:
    """Every set of diameter at most ``2^-m`` meeting a tile stays within
    L-infinity distance ``4|S|`` of it.

    For a sampled tile and vertex ``x`` in it, the union of all such sets
    through ``x`` is the metric ball of radius ``2^-m`` about ``x``; the
    check is run on that ball, which covers every admissible set at once.
    """
    n = grid.n
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(samples):
        t = tiling.squares[rng.integers(len(tiling.squares))]
        block = square_block(n, t.level, t.a, t.b)
        i0, i1, j0, j1 = block
        side = n >> t.level
        x = (int(rng.integers(i0, i1)), int(rng.integers(j0, j1)))
        win = _dilate(block, 4 * side + 1, n)
        wi0, wi1, wj0, wj1 = win
        dist = grid.distances_from([(x[0] - wi0, x[1] - wj0)], limit=tiling.threshold, window=win)
        reached = np.argwhere(dist <= tiling.threshold) + [wi0, wj0]
        dx = np.maximum(np.maximum(i0 - reached[:, 0], reached[:, 0] - (i1 - 1)), 0)
        dy = np.maximum(np.maximum(j0 - reached[:, 1], reached[:, 1] - (j1 - 1)), 0)
        if np.any(np.maximum(dx, dy) > 4 * side):
            violations += 1
    return ContainmentReport(int(samples), violations)


def tiling_count_profile(grid: QuantumMetricGrid, m_values, t_values, zeta: float, p: LqgParams,
                         tilings: dict | None = None) -> list[CountRow]:
    """Count tiles of ``R_m`` with side above ``2^(-t m)`` against
    ``2^((2t - (1 - t xi Q)^2 / (2 xi^2 t) + zeta) m)``.

    Rows with ``t < 1 / (xi (Q + 2))`` are flagged as the empty regime.
    """
    for t in t_values:
        if not 0.0 < t < 1.0 / (p.xi * p.q):
            raise OutOfRangeT(f"t must lie in (0, 1/(xi Q) = {1.0 / (p.xi * p.q)}), got {t}")
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    tilings = {} if tilings is None else tilings
    rows = []
    for m in m_values:
        if m not in tilings:
            tilings[m] = quantum_tiling(grid, m)
        sides = np.array([t.side for t in tilings[m].squares])
        for t in t_values:
            count = int(np.sum(sides > 2.0 ** (-t * m)))
            bound = 2.0 ** (tiling_count_exponent(t, zeta, p) * m)
            empty = t < 1.0 / (p.xi * (p.q + 2.0))
            rows.append(CountRow(int(m), float(t), count, bound, empty, count <= bound))
    return rows


def pass_fraction(rows) -> float:
    return float(np.mean([r.ok for r in rows])) if rows else 1.0


# --- diameter moments --------------------------------------------------------------

@dataclass
class MomentReport:
    moment: float
    radii: list
    mean_moment: list
    slope: float
    stderr: float
    predicted: float
    fields: int

    def passes(self, tol: float = 0.2) -> bool:
        return abs(self.slope - self.predicted) <= tol


def ball_diameter_moments(p: LqgParams, n: int, radii, fields: int, seed: int,
                          moment: float = 1.0, method: str = "sweep") -> MomentReport:
    """Log-log slope of ``E[diam(B_r(z))^moment]`` in ``r`` at the grid centre.

    ``B_r(z)`` is discretised as the closed square of half-side ``r``
    around the centre vertex, which changes the diameter by a bounded
    factor only.  The global normalisation cancels from the slope, so
    grids are left unnormalised.  Prediction:
    ``xi Q moment - xi^2 moment^2 / 2``.
    """
    from .gff import sample_dgff
    from .lfpp import build_metric, derived_seed

    radii = sorted(float(r) for r in radii)
    half = [int(round(r * n)) for r in radii]
    if len(radii) < 3:
        raise TooFewScales("need at least three radii")
    if min(half) < 1 or max(half) >= n // 2:
        raise ValueError("radii must span at least one cell and stay inside the grid")
    c = n // 2
    acc = np.zeros(len(radii))
    for k in range(fields):
        grid = build_metric(sample_dgff(n, derived_seed(seed, k)), p)
        for q, h in enumerate(half):
            acc[q] += quantum_diameter(grid, (c - h, c + h + 1, c - h, c + h + 1), method) ** moment
    mean = acc / fields
    slope, _, stderr, _ = ols(np.log(radii), np.log(mean))
    predicted = p.xi * p.q * moment - 0.5 * p.xi**2 * moment**2
    return MomentReport(moment, radii, mean.tolist(), float(slope), float(stderr), predicted, fields)
