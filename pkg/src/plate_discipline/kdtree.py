"""Exact k-nearest-neighbor search with deterministic tie order.

A bucketed k-d tree over float64 points. Neighbors are ranked by the key
``(squared distance, id)``, so equal distances come back in ascending id
order and the result set is a function of the point set alone, not of
insertion order or tree shape.

Squared distances are accumulated dimension by dimension, in index order,
as ``acc += (x[j] - q[j]) ** 2``. Node lower bounds use the same operand
order, which keeps them valid lower bounds after rounding, so pruning never
drops a point that a linear scan would return.
"""

from __future__ import annotations

import warnings

import numba
import numpy as np
from numba import njit, prange
from numba.core.errors import NumbaWarning

from .errors import InsufficientDataError, ParameterError

LEAF_SIZE = 32

# numba probes an old system TBB on first parallel call; it falls back to OpenMP
warnings.filterwarnings("ignore", message="The TBB threading layer", category=NumbaWarning)


class KDTree:
    """k-d tree over ``points`` with integer ``ids`` for tie-breaking.

    Query results are positions into the arrays passed to the constructor.
    """

    def __init__(self, points, ids=None, leaf_size: int = LEAF_SIZE):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2:
            raise ParameterError("points must be a 2-D array")
        n = len(points)
        if ids is None:
            ids = np.arange(n, dtype=np.int64)
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ParameterError("ids must have one entry per point")
        if n and len(np.unique(ids)) != n:
            raise ParameterError("ids must be unique")
        if not np.isfinite(points).all():
            raise ParameterError("points must be finite")
        self.n, self.dim = points.shape
        self.leaf_size = max(1, int(leaf_size))
        self._build(points, ids)

    def _build(self, points, ids):
        order = np.argsort(ids, kind="stable")
        starts, ends, lefts, rights, los, his = [], [], [], [], [], []
        max_depth = 0
        # (node index, start, end, depth); children are appended after parents
        stack = [(0, 0, self.n, 0)] if self.n else []
        starts.append(0)
        ends.append(self.n)
        lefts.append(-1)
        rights.append(-1)
        los.append(np.zeros(self.dim))
        his.append(np.zeros(self.dim))
        while stack:
            node, start, end, depth = stack.pop()
            max_depth = max(max_depth, depth)
            seg = points[order[start:end]]
            lo = seg.min(axis=0)
            hi = seg.max(axis=0)
            los[node] = lo
            his[node] = hi
            spread = hi - lo
            if end - start <= self.leaf_size or not (spread > 0).any():
                continue
            axis = int(np.argmax(spread))
            idx = order[start:end]
            perm = np.lexsort((ids[idx], points[idx, axis]))
            order[start:end] = idx[perm]
            mid = (start + end) // 2
            for child_start, child_end, side in ((start, mid, 0), (mid, end, 1)):
                child = len(starts)
                starts.append(child_start)
                ends.append(child_end)
                lefts.append(-1)
                rights.append(-1)
                los.append(None)
                his.append(None)
                if side == 0:
                    lefts[node] = child
                else:
                    rights[node] = child
                stack.append((child, child_start, child_end, depth + 1))
        self.order = order
        self.tree_points = np.ascontiguousarray(points[order])
        self.tree_ids = np.ascontiguousarray(ids[order])
        self.node_start = np.asarray(starts, dtype=np.int64)
        self.node_end = np.asarray(ends, dtype=np.int64)
        self.node_left = np.asarray(lefts, dtype=np.int64)
        self.node_right = np.asarray(rights, dtype=np.int64)
        self.node_lo = np.ascontiguousarray(np.vstack(los)) if los else np.zeros((1, self.dim))
        self.node_hi = np.ascontiguousarray(np.vstack(his)) if his else np.zeros((1, self.dim))
        self.max_depth = max_depth

    def query(self, queries, k: int):
        """k nearest points for each query row.

        Returns ``(distances, positions)``, each of shape ``(m, k)``, sorted
        by ``(distance, id)``. Distances are Euclidean.
        """
        sq, pos = self.query_squared(queries, k)
        return np.sqrt(sq), pos

    def query_squared(self, queries, k: int):
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        if queries.ndim == 1:
            queries = queries[None, :]
        if queries.ndim != 2 or queries.shape[1] != self.dim:
            raise ParameterError(f"queries must have {self.dim} columns")
        k = int(k)
        if k < 1:
            raise ParameterError("k must be at least 1")
        if k > self.n:
            raise InsufficientDataError(f"k = {k} exceeds the {self.n} indexed points")
        if not np.isfinite(queries).all():
            raise ParameterError("queries must be finite")
        m = len(queries)
        out_d = np.empty((m, k), dtype=np.float64)
        out_p = np.empty((m, k), dtype=np.int64)
        if m:
            _query_batch(
                queries, k, self.tree_points, self.tree_ids, self.order,
                self.node_start, self.node_end, self.node_left, self.node_right,
                self.node_lo, self.node_hi, 2 * self.max_depth + 4, out_d, out_p,
            )
        return out_d, out_p


@njit(cache=True, inline="always")
def _after(d1, s1, d2, s2):
    return d1 > d2 or (d1 == d2 and s1 > s2)


@njit(cache=True)
def _sift_down(hd, hs, hp, size, i):
    while True:
        left = 2 * i + 1
        if left >= size:
            return
        big = left
        right = left + 1
        if right < size and _after(hd[right], hs[right], hd[left], hs[left]):
            big = right
        if _after(hd[big], hs[big], hd[i], hs[i]):
            hd[i], hd[big] = hd[big], hd[i]
            hs[i], hs[big] = hs[big], hs[i]
            hp[i], hp[big] = hp[big], hp[i]
            i = big
        else:
            return


@njit(cache=True)
def _sift_up(hd, hs, hp, i):
    while i > 0:
        parent = (i - 1) // 2
        if _after(hd[i], hs[i], hd[parent], hs[parent]):
            hd[i], hd[parent] = hd[parent], hd[i]
            hs[i], hs[parent] = hs[parent], hs[i]
            hp[i], hp[parent] = hp[parent], hp[i]
            i = parent
        else:
            return


@njit(cache=True)
def _box_lower_bound(q, lo, hi):
    acc = 0.0
    for j in range(q.shape[0]):
        if q[j] < lo[j]:
            t = lo[j] - q[j]
            acc += t * t
        elif q[j] > hi[j]:
            t = hi[j] - q[j]
            acc += t * t
    return acc


@njit(cache=True)
def _query_one(q, k, pts, ids, order, nstart, nend, nleft, nright, nlo, nhi, stack_size, out_d, out_p):
    hd = np.empty(k, dtype=np.float64)
    hs = np.empty(k, dtype=np.int64)
    hp = np.empty(k, dtype=np.int64)
    size = 0
    stack_node = np.empty(stack_size, dtype=np.int64)
    stack_lb = np.empty(stack_size, dtype=np.float64)
    top = 0
    stack_node[0] = 0
    stack_lb[0] = _box_lower_bound(q, nlo[0], nhi[0])
    top = 1
    dim = q.shape[0]
    while top > 0:
        top -= 1
        node = stack_node[top]
        lb = stack_lb[top]
        # a bound equal to the worst kept distance may still hold a smaller id
        if size == k and lb > hd[0]:
            continue
        left = nleft[node]
        if left < 0:
            for i in range(nstart[node], nend[node]):
                acc = 0.0
                for j in range(dim):
                    t = pts[i, j] - q[j]
                    acc += t * t
                sid = ids[i]
                if size < k:
                    hd[size] = acc
                    hs[size] = sid
                    hp[size] = order[i]
                    _sift_up(hd, hs, hp, size)
                    size += 1
                elif _after(hd[0], hs[0], acc, sid):
                    hd[0] = acc
                    hs[0] = sid
                    hp[0] = order[i]
                    _sift_down(hd, hs, hp, size, 0)
            continue
        right = nright[node]
        lb_left = _box_lower_bound(q, nlo[left], nhi[left])
        lb_right = _box_lower_bound(q, nlo[right], nhi[right])
        # push the farther child first so the nearer one is expanded next
        if lb_left <= lb_right:
            stack_node[top] = right
            stack_lb[top] = lb_right
            stack_node[top + 1] = left
            stack_lb[top + 1] = lb_left
        else:
            stack_node[top] = left
            stack_lb[top] = lb_left
            stack_node[top + 1] = right
            stack_lb[top + 1] = lb_right
        top += 2
    # heap sort: repeatedly move the worst entry to the end
    for end in range(size - 1, -1, -1):
        out_d[end] = hd[0]
        out_p[end] = hp[0]
        hd[0] = hd[end]
        hs[0] = hs[end]
        hp[0] = hp[end]
        _sift_down(hd, hs, hp, end, 0)


@njit(cache=True, parallel=True)
def _query_batch(queries, k, pts, ids, order, nstart, nend, nleft, nright, nlo, nhi, stack_size, out_d, out_p):
    for qi in prange(queries.shape[0]):
        _query_one(queries[qi], k, pts, ids, order, nstart, nend, nleft, nright, nlo, nhi, stack_size,
                   out_d[qi], out_p[qi])


def set_threads(n: int | None) -> int:
    """Set the numba worker count (clamped to what the runtime allows)."""
    if n is not None:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()
