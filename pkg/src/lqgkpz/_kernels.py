"""Compiled shortest-path kernels on the implicit 8-neighbour grid graph.

Edge ``(u, v)`` weighs ``scale * step * (w[u] + w[v]) / 2`` with ``step``
equal to 1 for axis moves and sqrt(2) for diagonal moves.  Kernels work
on any 2-D weight array, so callers pass window views to keep searches
local.
"""
import math

import numpy as np
from numba import njit

SQRT2 = math.sqrt(2.0)

DI = np.array([-1, -1, -1, 0, 0, 1, 1, 1], dtype=np.int64)
DJ = np.array([-1, 0, 1, -1, 1, -1, 0, 1], dtype=np.int64)
STEP = np.array([SQRT2, 1.0, SQRT2, 1.0, 1.0, SQRT2, 1.0, SQRT2])

_EMPTY_MASK = np.zeros((0, 0), dtype=np.bool_)


@njit(cache=True, inline="always")
def _sift_up(heap, pos, key, h):
    v = heap[h]
    kv = key[v]
    while h > 0:
        parent = (h - 1) >> 1
        u = heap[parent]
        if key[u] <= kv:
            break
        heap[h] = u
        pos[u] = h
        h = parent
    heap[h] = v
    pos[v] = h


@njit(cache=True, inline="always")
def _pop_min(heap, pos, key, size):
    """Remove and return the top of an indexed heap; returns (vertex, new size)."""
    top = heap[0]
    pos[top] = -1
    size -= 1
    if size == 0:
        return top, 0
    v = heap[size]
    kv = key[v]
    h = 0
    while True:
        child = 2 * h + 1
        if child >= size:
            break
        if child + 1 < size and key[heap[child + 1]] < key[heap[child]]:
            child += 1
        u = heap[child]
        if key[u] >= kv:
            break
        heap[h] = u
        pos[u] = h
        h = child
    heap[h] = v
    pos[v] = h
    return top, size


@njit(cache=True, inline="always")
def _decrease(heap, pos, key, size, v, val):
    """Lower ``key[v]`` to ``val``, inserting ``v`` if absent; returns new size."""
    key[v] = val
    h = pos[v]
    if h < 0:
        heap[size] = v
        pos[v] = size
        _sift_up(heap, pos, key, size)
        return size + 1
    _sift_up(heap, pos, key, h)
    return size


@njit(cache=True)
def dijkstra(w, scale, sources, allowed, limit, targets, dist):
    """Multi-source search filling ``dist`` in place (must start as +inf).

    ``allowed`` and ``targets`` are boolean masks, or 0x0 arrays for "none".
    The search stops at the first settled target (returning its distance)
    or once the frontier exceeds ``limit``; otherwise it returns +inf.
    """
    n0, n1 = w.shape
    use_allowed = allowed.shape[0] > 0
    use_targets = targets.shape[0] > 0
    flat = dist.reshape(n0 * n1)
    heap = np.empty(n0 * n1, np.int64)
    pos = np.full(n0 * n1, -1, np.int64)
    size = 0
    for s in range(sources.shape[0]):
        i = sources[s, 0]
        j = sources[s, 1]
        if use_allowed and not allowed[i, j]:
            continue
        if flat[i * n1 + j] > 0.0:
            size = _decrease(heap, pos, flat, size, i * n1 + j, 0.0)
    while size > 0:
        idx, size = _pop_min(heap, pos, flat, size)
        d = flat[idx]
        if d > limit:
            break
        i = idx // n1
        j = idx - i * n1
        if use_targets and targets[i, j]:
            return d
        wu = w[i, j]
        for k in range(8):
            a = i + DI[k]
            b = j + DJ[k]
            if a < 0 or a >= n0 or b < 0 or b >= n1:
                continue
            if use_allowed and not allowed[a, b]:
                continue
            nd = d + scale * STEP[k] * 0.5 * (wu + w[a, b])
            v = a * n1 + b
            if nd < flat[v]:
                size = _decrease(heap, pos, flat, size, v, nd)
    return np.inf


@njit(cache=True)
def backtrack(w, scale, dist, ti, tj, rtol):
    """Walk from ``(ti, tj)`` back to a source along tight edges.

    Among tight predecessors the lexicographically smallest vertex wins.
    Returns the path (source first) as a (k, 2) array.
    """
    n0, n1 = w.shape
    out_i = [ti]
    out_j = [tj]
    i, j = ti, tj
    while dist[i, j] > 0.0:
        best_a = -1
        best_b = -1
        here = dist[i, j]
        tol = rtol * here
        for k in range(8):
            a = i + DI[k]
            b = j + DJ[k]
            if a < 0 or a >= n0 or b < 0 or b >= n1:
                continue
            da = dist[a, b]
            if not da < here:
                continue
            edge = scale * STEP[k] * 0.5 * (w[i, j] + w[a, b])
            if abs(da + edge - here) <= tol:
                if best_a < 0 or a < best_a or (a == best_a and b < best_b):
                    best_a = a
                    best_b = b
        if best_a < 0:
            break  # unreachable when dist came from dijkstra
        i, j = best_a, best_b
        out_i.append(i)
        out_j.append(j)
    k = len(out_i)
    path = np.empty((k, 2), np.int64)
    for t in range(k):
        path[t, 0] = out_i[k - 1 - t]
        path[t, 1] = out_j[k - 1 - t]
    return path


@njit(cache=True)
def max_over_mask(dist, mask):
    """Largest entry of ``dist`` on ``mask`` and its location."""
    best = -1.0
    bi = -1
    bj = -1
    for i in range(dist.shape[0]):
        for j in range(dist.shape[1]):
            if mask[i, j] and dist[i, j] > best:
                best = dist[i, j]
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def block_max(dist, i0, i1, j0, j1):
    best = -1.0
    bi = i0
    bj = j0
    for i in range(i0, i1):
        for j in range(j0, j1):
            if dist[i, j] > best:
                best = dist[i, j]
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def _eccentricities(w, scale, sources, i0, i1, j0, j1, guard, ordered, dist, done, touched, heap, pos, out):
    """Early-stopping searches from each source until the block is settled.

    With ``ordered`` each source must lie in the block and only block
    vertices after it in row-major order count, which still covers every
    pair once.

    ``guard`` flags the (top, bottom, left, right) edges of ``w`` that are
    window cuts rather than grid boundary.  If a vertex on a guarded edge
    is settled before the block is done, a shorter path might leave the
    window, and the function returns False.
    """
    n0, n1 = w.shape
    bw = j1 - j0
    total = (i1 - i0) * bw
    ok = True
    for s in range(sources.shape[0]):
        rank = -1
        if ordered:
            rank = (sources[s, 0] - i0) * bw + (sources[s, 1] - j0)
        need = total - rank - 1
        out[s, 0] = 0.0
        out[s, 1] = sources[s, 0]
        out[s, 2] = sources[s, 1]
        if need == 0:
            continue
        src = sources[s, 0] * n1 + sources[s, 1]
        touched[0] = src
        nt = 1
        size = _decrease(heap, pos, dist, 0, src, 0.0)
        got = 0
        best = -1.0
        bi = sources[s, 0]
        bj = sources[s, 1]
        while size > 0:
            idx, size = _pop_min(heap, pos, dist, size)
            d = dist[idx]
            done[idx] = True
            i = idx // n1
            j = idx - i * n1
            if i0 <= i < i1 and j0 <= j < j1 and (i - i0) * bw + (j - j0) > rank:
                got += 1
                if d > best:
                    best = d
                    bi = i
                    bj = j
                if got == need:
                    break
            if (guard[0] and i == 0) or (guard[1] and i == n0 - 1) \
                    or (guard[2] and j == 0) or (guard[3] and j == n1 - 1):
                ok = False
                break
            wu = w[i, j]
            for k in range(8):
                a = i + DI[k]
                b = j + DJ[k]
                if a < 0 or a >= n0 or b < 0 or b >= n1:
                    continue
                v = a * n1 + b
                if done[v]:
                    continue
                nd = d + scale * STEP[k] * 0.5 * (wu + w[a, b])
                if nd < dist[v]:
                    if dist[v] == np.inf:
                        touched[nt] = v
                        nt += 1
                    size = _decrease(heap, pos, dist, size, v, nd)
        out[s, 0] = best
        out[s, 1] = bi
        out[s, 2] = bj
        for t in range(nt):
            v = touched[t]
            dist[v] = np.inf
            done[v] = False
        for t in range(size):
            pos[heap[t]] = -1
        if not ok:
            return False
    return True


_NO_GUARD = np.zeros(4, np.bool_)


@njit(cache=True)
def block_eccentricities(w, scale, sources, i0, i1, j0, j1):
    """For each source, the largest distance to a vertex of the block
    ``[i0, i1) x [j0, j1)`` and where it is attained.

    Searches run on the whole of ``w`` and stop as soon as every block
    vertex is settled.  Returns a (k, 3) array of ``(value, i, j)``.
    """
    nv = w.shape[0] * w.shape[1]
    out = np.empty((sources.shape[0], 3))
    _eccentricities(w, scale, sources, i0, i1, j0, j1, _NO_GUARD, False, np.full(nv, np.inf),
                    np.zeros(nv, np.bool_), np.empty(nv, np.int64), np.empty(nv, np.int64),
                    np.full(nv, -1, np.int64), out)
    return out


@njit(cache=True)
def _windowed(w, scale, src, blk, pad, certify, ordered, ws_dist, ws_done, ws_touched, ws_heap, ws_pos, out):
    """Run searches for one block (global coordinates) inside the block
    dilated by ``pad``.  With ``certify`` the window doubles until the
    result equals the unrestricted one; ``out`` rows come back in global
    coordinates."""
    n0, n1 = w.shape
    i0, i1, j0, j1 = blk[0], blk[1], blk[2], blk[3]
    guard = np.zeros(4, np.bool_)
    loc = np.empty_like(src)
    while True:
        a0 = max(i0 - pad, 0)
        a1 = min(i1 + pad, n0)
        b0 = max(j0 - pad, 0)
        b1 = min(j1 + pad, n1)
        guard[0] = certify and a0 > 0
        guard[1] = certify and a1 < n0
        guard[2] = certify and b0 > 0
        guard[3] = certify and b1 < n1
        for t in range(src.shape[0]):
            loc[t, 0] = src[t, 0] - a0
            loc[t, 1] = src[t, 1] - b0
        if _eccentricities(w[a0:a1, b0:b1], scale, loc, i0 - a0, i1 - a0, j0 - b0, j1 - b0, guard,
                           ordered, ws_dist, ws_done, ws_touched, ws_heap, ws_pos, out):
            for t in range(src.shape[0]):
                out[t, 1] += a0
                out[t, 2] += b0
            return
        pad *= 2


@njit(cache=True)
def exact_diameters(w, scale, blocks):
    """All-pairs diameters of the vertex blocks ``(i0, i1, j0, j1)``.

    One early-stopping search per block vertex inside a certified window,
    with a workspace shared across blocks.
    """
    nv = w.shape[0] * w.shape[1]
    dist = np.full(nv, np.inf)
    done = np.zeros(nv, np.bool_)
    touched = np.empty(nv, np.int64)
    heap = np.empty(nv, np.int64)
    pos = np.full(nv, -1, np.int64)
    res = np.empty(blocks.shape[0])
    for q in range(blocks.shape[0]):
        i0, i1, j0, j1 = blocks[q, 0], blocks[q, 1], blocks[q, 2], blocks[q, 3]
        src = np.empty(((i1 - i0) * (j1 - j0), 2), np.int64)
        t = 0
        for i in range(i0, i1):
            for j in range(j0, j1):
                src[t, 0] = i
                src[t, 1] = j
                t += 1
        out = np.empty((src.shape[0], 3))
        _windowed(w, scale, src, blocks[q], max(i1 - i0, j1 - j0), True, True, dist, done, touched, heap, pos, out)
        best = 0.0
        for t in range(out.shape[0]):
            if out[t, 0] > best:
                best = out[t, 0]
        res[q] = best
    return res


@njit(cache=True)
def sweep_diameters(w, scale, blocks):
    """Estimates of block diameters from searches started at the four
    corners and four edge midpoints, followed by a double sweep from the
    farthest vertex found.  Searches are confined to the block dilated by
    its own side."""
    nv = w.shape[0] * w.shape[1]
    dist = np.full(nv, np.inf)
    done = np.zeros(nv, np.bool_)
    touched = np.empty(nv, np.int64)
    heap = np.empty(nv, np.int64)
    pos = np.full(nv, -1, np.int64)
    res = np.empty(blocks.shape[0])
    src = np.empty((8, 2), np.int64)
    one = np.empty((1, 2), np.int64)
    out = np.empty((8, 3))
    for q in range(blocks.shape[0]):
        i0, i1, j0, j1 = blocks[q, 0], blocks[q, 1], blocks[q, 2], blocks[q, 3]
        pad = max(i1 - i0, j1 - j0)
        im = (i0 + i1 - 1) // 2
        jm = (j0 + j1 - 1) // 2
        src[0, 0], src[0, 1] = i0, j0
        src[1, 0], src[1, 1] = i0, j1 - 1
        src[2, 0], src[2, 1] = i1 - 1, j0
        src[3, 0], src[3, 1] = i1 - 1, j1 - 1
        src[4, 0], src[4, 1] = i0, jm
        src[5, 0], src[5, 1] = i1 - 1, jm
        src[6, 0], src[6, 1] = im, j0
        src[7, 0], src[7, 1] = im, j1 - 1
        _windowed(w, scale, src, blocks[q], pad, False, False, dist, done, touched, heap, pos, out)
        best = -1.0
        fi = i0
        fj = j0
        for t in range(8):
            if out[t, 0] > best:
                best = out[t, 0]
                fi = int(out[t, 1])
                fj = int(out[t, 2])
        for _ in range(2):
            one[0, 0] = fi
            one[0, 1] = fj
            _windowed(w, scale, one, blocks[q], pad, False, False, dist, done, touched, heap, pos, out)
            ni = int(out[0, 1])
            nj = int(out[0, 2])
            if out[0, 0] <= best and ni == fi and nj == fj:
                break
            if out[0, 0] > best:
                best = out[0, 0]
            fi = ni
            fj = nj
        res[q] = best
    return res
