"""Liouville first-passage percolation: the grid approximation of the LQG metric.

Each vertex carries the weight ``exp(xi * h(v))``; an edge between
8-neighbours costs ``norm_factor * spacing * |step| * (w(u) + w(v)) / 2``.
Every query is an exact shortest-path computation on that graph.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse
from scipy import ndimage
from scipy.sparse.csgraph import dijkstra as cs_dijkstra

from . import _kernels as K
from .errors import VertexOutsideRegion
from .gff import Field, circle_average_map, annulus_offsets, sample_dgff
from .params import LqgParams

# Relative tolerance for recognising tight edges when tracing geodesics.
_TIGHT_RTOL = 1e-12


def derived_seed(seed: int, index: int) -> int:
    """Deterministic child seed, independent across ``index``."""
    ss = np.random.SeedSequence([int(seed) & (2**63 - 1), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass(frozen=True, eq=False)
class QuantumMetricGrid:
    field: Field
    params: LqgParams
    vertex_weight: np.ndarray
    spacing: float
    norm_factor: float = 1.0

    @property
    def n(self) -> int:
        return self.field.n

    @property
    def scale(self) -> float:
        """Length of an axis edge between two unit-weight vertices."""
        return self.norm_factor * self.spacing

    def edge_weight(self, u, v) -> float:
        di, dj = abs(u[0] - v[0]), abs(u[1] - v[1])
        if max(di, dj) != 1:
            raise ValueError(f"{u} and {v} are not grid neighbours")
        step = math.sqrt(2.0) if di and dj else 1.0
        w = self.vertex_weight
        return self.scale * step * 0.5 * (w[u[0], u[1]] + w[v[0], v[1]])

    def distances_from(self, sources, *, region=None, limit=math.inf, window=None) -> np.ndarray:
        """Distance field from a set of sources.

        ``region`` restricts paths to a boolean vertex mask; ``window`` is
        ``(i0, i1, j0, j1)`` and restricts the search to that sub-rectangle,
        in which case the returned array has the window's shape and
        ``sources`` are in window coordinates.
        """
        src = np.atleast_2d(np.asarray(sources, dtype=np.int64))
        w = self.vertex_weight
        allowed = K._EMPTY_MASK if region is None else np.asarray(region, dtype=bool)
        if window is not None:
            i0, i1, j0, j1 = window
            w = w[i0:i1, j0:j1]
            if region is not None:
                allowed = allowed[i0:i1, j0:j1]
        dist = np.full(w.shape, np.inf)
        K.dijkstra(w, self.scale, src, allowed, float(limit), K._EMPTY_MASK, dist)
        return dist

    def distance_to_targets(self, sources, targets, *, region=None, window=None) -> float:
        """Distance from a source set to the nearest vertex of a target mask."""
        src = np.atleast_2d(np.asarray(sources, dtype=np.int64))
        w = self.vertex_weight
        allowed = K._EMPTY_MASK if region is None else np.asarray(region, dtype=bool)
        targets = np.asarray(targets, dtype=bool)
        if window is not None:
            i0, i1, j0, j1 = window
            w = w[i0:i1, j0:j1]
            if region is not None:
                allowed = allowed[i0:i1, j0:j1]
        if not targets.any():
            return math.inf
        dist = np.full(w.shape, np.inf)
        return float(K.dijkstra(w, self.scale, src, allowed, math.inf, targets, dist))

    def with_norm_factor(self, norm_factor: float) -> "QuantumMetricGrid":
        return QuantumMetricGrid(self.field, self.params, self.vertex_weight, self.spacing, float(norm_factor))


def build_metric(fld: Field, params: LqgParams, norm_factor: float = 1.0) -> QuantumMetricGrid:
    weights = np.exp(params.xi * fld.values)
    weights.setflags(write=False)
    return QuantumMetricGrid(fld, params, weights, fld.spacing, float(norm_factor))


def to_csgraph(grid: QuantumMetricGrid, edge_factor=None) -> scipy.sparse.csr_matrix:
    """Explicit sparse adjacency matrix of the 8-neighbour graph.

    ``edge_factor(i, j, a, b)``, vectorized over index arrays, may rescale
    each directed edge; by default edges carry their metric weight.
    """
    n = grid.n
    w = grid.vertex_weight
    rows, cols, vals = [], [], []
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for di, dj, step in zip(K.DI, K.DJ, K.STEP):
        a, b = ii + di, jj + dj
        ok = (a >= 0) & (a < n) & (b >= 0) & (b < n)
        i, j, a, b = ii[ok], jj[ok], a[ok], b[ok]
        if edge_factor is None:
            weight = grid.scale * step * 0.5 * (w[i, j] + w[a, b])
        else:
            weight = edge_factor(i, j, a, b) * step
        rows.append(i * n + j)
        cols.append(a * n + b)
        vals.append(weight)
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))


def distance(grid: QuantumMetricGrid, u, v) -> float:
    """Exact graph distance between two vertices."""
    if tuple(u) == tuple(v):
        return 0.0
    target = np.zeros((grid.n, grid.n), dtype=bool)
    target[v[0], v[1]] = True
    return grid.distance_to_targets([u], target)


def weyl_scaling_check(grid: QuantumMetricGrid, f, u, v) -> tuple[float, float]:
    """Compare the metric of ``h + f`` with the ``exp(xi f)``-reweighted metric of ``h``.

    ``lhs`` rebuilds the grid from ``h + f``.  ``rhs`` reweights every edge
    of the original graph: each half-edge keeps its metric length and is
    multiplied by ``exp(xi f)`` at its own endpoint, i.e. the length
    functional ``int exp(xi f) dD`` with ``f`` constant on each half-edge.
    The two agree up to rounding.
    """
    f = np.asarray(f, dtype=np.float64)
    xi = grid.params.xi
    shifted = build_metric(grid.field + f, grid.params, grid.norm_factor)
    lhs = distance(shifted, u, v)

    w = grid.vertex_weight
    ef = np.exp(xi * f)

    def factor(i, j, a, b):
        return grid.scale * 0.5 * (w[i, j] * ef[i, j] + w[a, b] * ef[a, b])

    graph = to_csgraph(grid, factor)
    n = grid.n
    rhs = float(cs_dijkstra(graph, indices=u[0] * n + u[1])[v[0] * n + v[1]])
    return lhs, rhs


def _region_mask(grid: QuantumMetricGrid, region) -> np.ndarray:
    region = np.asarray(region)
    if region.dtype == bool and region.shape == (grid.n, grid.n):
        return region
    mask = np.zeros((grid.n, grid.n), dtype=bool)
    pts = np.atleast_2d(region).astype(int)
    mask[pts[:, 0], pts[:, 1]] = True
    return mask


def internal_distance(grid: QuantumMetricGrid, u, v, region) -> float:
    """Shortest-path distance using only vertices of ``region``; inf if disconnected."""
    mask = _region_mask(grid, region)
    for x in (u, v):
        if not mask[x[0], x[1]]:
            raise VertexOutsideRegion(f"vertex {tuple(x)} is not in the region")
    if tuple(u) == tuple(v):
        return 0.0
    target = np.zeros_like(mask)
    target[v[0], v[1]] = True
    return grid.distance_to_targets([u], target, region=mask)


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    vertices: np.ndarray  # (k, 2)
    length: float

    def __len__(self) -> int:
        return len(self.vertices)


def path_length(grid: QuantumMetricGrid, vertices) -> float:
    vertices = np.asarray(vertices)
    return float(sum(grid.edge_weight(a, b) for a, b in zip(vertices[:-1], vertices[1:])))


def geodesic(grid: QuantumMetricGrid, u, v) -> GeodesicPath:
    """A shortest path from ``u`` to ``v``.

    Ties are broken by tracing back from ``v`` and always stepping to the
    lexicographically smallest tight predecessor.
    """
    if tuple(u) == tuple(v):
        raise ValueError("geodesic endpoints must differ")
    n = grid.n
    target = np.zeros((n, n), dtype=bool)
    target[v[0], v[1]] = True
    dist = np.full((n, n), np.inf)
    K.dijkstra(grid.vertex_weight, grid.scale, np.array([u], dtype=np.int64),
               K._EMPTY_MASK, math.inf, target, dist)
    path = K.backtrack(grid.vertex_weight, grid.scale, dist, int(v[0]), int(v[1]), _TIGHT_RTOL)
    return GeodesicPath(path, path_length(grid, path))


@dataclass(frozen=True, eq=False)
class MetricBall:
    center: tuple
    radius: float
    members: np.ndarray  # boolean mask
    labels: np.ndarray  # 0 on members, k + 1 on the k-th complementary component
    boundary_components: list = dc_field(default_factory=list)  # (k, 2) vertex arrays
    outer_index: int = 0  # the component reaching off the grid comes first

    def component_mask(self, k: int) -> np.ndarray:
        return self.labels == k + 1


_FOUR = ndimage.generate_binary_structure(2, 1)


def metric_ball(grid: QuantumMetricGrid, z, s: float) -> MetricBall:
    """Metric ball of radius ``s`` with its complementary components and their boundaries.

    Complementary components are 4-connected; everything off the grid is
    one extra outer component.  The boundary of a component is the set of
    ball vertices 4-adjacent to it.
    """
    if not s > 0:
        raise ValueError("ball radius must be positive")
    n = grid.n
    dist = grid.distances_from([z], limit=s)
    members = dist <= s
    comp = np.pad(~members, 1, constant_values=True)
    labels, count = ndimage.label(comp, structure=_FOUR)
    outer = labels[0, 0]
    inner = labels[1:-1, 1:-1]
    # (ball vertex, label of a 4-adjacent complementary vertex) pairs
    pairs = []
    for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        nb = labels[1 + di:n + 1 + di, 1 + dj:n + 1 + dj]
        hit = members & (nb > 0)
        ii, jj = np.nonzero(hit)
        pairs.append(np.stack([nb[ii, jj], ii * n + jj], 1))
    pairs = np.unique(np.concatenate(pairs), axis=0)
    starts = np.searchsorted(pairs[:, 0], np.arange(count + 2))
    order = [outer] + [lab for lab in range(1, count + 1) if lab != outer]
    relabel = np.zeros(count + 1, dtype=np.int64)
    relabel[order] = np.arange(1, count + 1)
    boundaries = []
    for lab in order:
        flat = pairs[starts[lab]:starts[lab + 1], 1]
        boundaries.append(np.stack([flat // n, flat % n], 1))
    return MetricBall(tuple(z), float(s), members, relabel[inner], boundaries, 0)


def crossing_distance(grid: QuantumMetricGrid) -> float:
    """Distance between the left (x smallest) and right sides of the square."""
    n = grid.n
    sources = np.stack([np.zeros(n, dtype=np.int64), np.arange(n)], axis=1)
    target = np.zeros((n, n), dtype=bool)
    target[n - 1, :] = True
    return grid.distance_to_targets(sources, target)


def normalize_crossing(grid: QuantumMetricGrid, samples: int, seed: int) -> QuantumMetricGrid:
    """Rescale so the median left-right crossing distance is 1.

    DGFF-backed grids resample ``samples`` fields with seeds derived from
    ``seed``; grids on custom fields reuse their own field.  The median is
    taken at the grid's current ``norm_factor`` so repeated calls compose.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    fld = grid.field
    crossings = []
    for k in range(samples):
        if fld.kind == "dgff":
            other = build_metric(sample_dgff(fld.n, derived_seed(seed, k)), grid.params, grid.norm_factor)
        else:
            other = grid
        crossings.append(crossing_distance(other))
    median = float(np.median(crossings))
    return grid.with_norm_factor(grid.norm_factor / median)


# --- empirical regularity checks -------------------------------------------

@dataclass
class AnnulusReport:
    zeta: float
    radii: list
    violation_fraction: list
    samples_per_radius: int

    def passes(self, threshold: float = 0.05, smallest: int = 2) -> bool:
        return all(f <= threshold for f in self.violation_fraction[-smallest:])


def annulus_crossing(grid: QuantumMetricGrid, z, r: float) -> float:
    """Distance between the discrete circles of radii r/2 and r about ``z``."""
    n = grid.n
    inner = annulus_offsets(r / 2, n) + np.asarray(z)
    outer = annulus_offsets(r, n) + np.asarray(z)
    reach = int(np.abs(outer - np.asarray(z)).max()) + 1
    i0, j0 = max(z[0] - reach, 0), max(z[1] - reach, 0)
    i1, j1 = min(z[0] + reach + 1, n), min(z[1] + reach + 1, n)
    target = np.zeros((i1 - i0, j1 - j0), dtype=bool)
    target[outer[:, 0] - i0, outer[:, 1] - j0] = True
    return grid.distance_to_targets(inner - [i0, j0], target, window=(i0, i1, j0, j1))


def annulus_bound_check(grid: QuantumMetricGrid, radii, zeta: float, samples: int, seed: int) -> AnnulusReport:
    """Fraction of sampled centres where the annulus crossing falls below
    ``r^(xi Q + zeta) exp(xi h_r(z))``, per radius."""
    p = grid.params
    rng = np.random.default_rng(seed)
    fractions = []
    for r in radii:
        hr = circle_average_map(grid.field, r)
        ok = np.argwhere(np.isfinite(hr))
        picks = ok[rng.integers(0, len(ok), size=samples)]
        bad = 0
        for z in picks:
            bound = r ** (p.xi * p.q + zeta) * math.exp(p.xi * hr[z[0], z[1]])
            if annulus_crossing(grid, tuple(z), r) < bound:
                bad += 1
        fractions.append(bad / samples)
    return AnnulusReport(zeta, list(radii), fractions, samples)
