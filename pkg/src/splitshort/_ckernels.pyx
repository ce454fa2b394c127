# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled kernels; mirror ``_pykernels`` operation for operation."""
import math

import numpy as np

from libc.math cimport INFINITY, fabs
from libc.stdint cimport int64_t, uint64_t

MAX_NODES_BITS = 63


cdef inline double _tol(double best):
    return 1e-9 * (1.0 + fabs(best))


cdef struct Ctx:
    int L
    int K
    int max_nodes
    const double* unit_cost
    const double* amort_cost
    const int64_t* amort_order
    const int64_t* inv
    const int64_t* qty
    const double* fixed
    const int64_t* order
    const int64_t* order_len
    uint64_t* rest_mask
    double* min_fixed_from
    double best
    int64_t evals


cdef double _var_cost(Ctx* c, uint64_t mask, uint64_t* used):
    cdef double total = 0.0
    cdef int i, r
    cdef int64_t k, remaining, take, avail
    used[0] = 0
    for i in range(c.L):
        remaining = c.qty[i]
        for r in range(c.order_len[i]):
            k = c.order[i * c.K + r]
            if (mask >> k) & 1:
                avail = c.inv[i * c.K + k]
                take = avail if avail < remaining else remaining
                total += c.unit_cost[i * c.K + k] * <double>take
                used[0] |= (<uint64_t>1) << k
                remaining -= take
                if remaining == 0:
                    break
        if remaining > 0:
            return INFINITY
    return total


cdef double _relaxed_cost(Ctx* c, uint64_t chosen, uint64_t rest):
    cdef double total = 0.0
    cdef double cost
    cdef int i
    cdef int64_t n, ra, rb, k, remaining, take, avail
    for i in range(c.L):
        remaining = c.qty[i]
        n = c.order_len[i]
        ra = 0
        rb = 0
        while remaining > 0:
            while ra < n and not ((chosen >> c.order[i * c.K + ra]) & 1):
                ra += 1
            while rb < n and not ((rest >> c.amort_order[i * c.K + rb]) & 1):
                rb += 1
            if ra >= n and rb >= n:
                return INFINITY
            if rb >= n or (ra < n and c.unit_cost[i * c.K + c.order[i * c.K + ra]]
                           <= c.amort_cost[i * c.K + c.amort_order[i * c.K + rb]]):
                k = c.order[i * c.K + ra]
                cost = c.unit_cost[i * c.K + k]
                ra += 1
            else:
                k = c.amort_order[i * c.K + rb]
                cost = c.amort_cost[i * c.K + k]
                rb += 1
            avail = c.inv[i * c.K + k]
            take = avail if avail < remaining else remaining
            total += cost * <double>take
            remaining -= take
    return total


cdef int _visit(Ctx* c, uint64_t mask, int nxt, int nsel, double fixed_sum, list masks, list costs) except -1:
    cdef uint64_t used = 0
    cdef double v_all, v_s, lb, cost, relaxed
    cdef int j
    c.evals += 1
    v_all = _var_cost(c, mask | c.rest_mask[nxt], &used)
    if v_all == INFINITY:
        return 0
    lb = fixed_sum + v_all
    relaxed = fixed_sum + _relaxed_cost(c, mask, c.rest_mask[nxt])
    if nsel > 0:
        v_s = _var_cost(c, mask, &used)
        if v_s == INFINITY:
            if nxt >= c.K:
                return 0
            lb = lb + c.min_fixed_from[nxt]
        elif used == mask:
            cost = fixed_sum + v_s
            if cost < c.best:
                c.best = cost
            if cost <= c.best + _tol(c.best):
                masks.append(mask)
                costs.append(cost)
    if relaxed > lb:
        lb = relaxed
    if c.best != INFINITY and lb > c.best + _tol(c.best):
        return 0
    if nsel >= c.max_nodes:
        return 0
    for j in range(nxt, c.K):
        _visit(c, mask | ((<uint64_t>1) << j), j + 1, nsel + 1, fixed_sum + c.fixed[j], masks, costs)
    return 0


def bnb_search(unit_cost, amort_cost, inv, qty, fixed, order, amort_order, order_len, int max_nodes, double incumbent):
    cdef double[:, ::1] u = np.ascontiguousarray(unit_cost, dtype=np.float64)
    cdef double[:, ::1] am = np.ascontiguousarray(amort_cost, dtype=np.float64)
    cdef int64_t[:, ::1] ao = np.ascontiguousarray(amort_order, dtype=np.int64)
    cdef int64_t[:, ::1] iv = np.ascontiguousarray(inv, dtype=np.int64)
    cdef int64_t[::1] q = np.ascontiguousarray(qty, dtype=np.int64)
    cdef double[::1] f = np.ascontiguousarray(fixed, dtype=np.float64)
    cdef int64_t[:, ::1] od = np.ascontiguousarray(order, dtype=np.int64)
    cdef int64_t[::1] ol = np.ascontiguousarray(order_len, dtype=np.int64)
    cdef int K = f.shape[0]
    cdef int L = q.shape[0]
    if K > MAX_NODES_BITS:
        raise ValueError("compiled bnb_search supports at most 63 candidates")
    rest = np.zeros(K + 1, dtype=np.uint64)
    mff = np.full(K + 1, INFINITY, dtype=np.float64)
    cdef uint64_t[::1] rest_v = rest
    cdef double[::1] mff_v = mff
    cdef int j
    for j in range(K - 1, -1, -1):
        rest_v[j] = rest_v[j + 1] | ((<uint64_t>1) << j)
        mff_v[j] = f[j] if f[j] < mff_v[j + 1] else mff_v[j + 1]
    cdef Ctx c
    c.L = L
    c.K = K
    c.max_nodes = max_nodes
    c.unit_cost = &u[0, 0] if L > 0 and K > 0 else NULL
    c.inv = &iv[0, 0] if L > 0 and K > 0 else NULL
    c.amort_cost = &am[0, 0] if L > 0 and K > 0 else NULL
    c.amort_order = &ao[0, 0] if L > 0 and K > 0 else NULL
    c.qty = &q[0] if L > 0 else NULL
    c.fixed = &f[0] if K > 0 else NULL
    c.order = &od[0, 0] if L > 0 and K > 0 else NULL
    c.order_len = &ol[0] if L > 0 else NULL
    c.rest_mask = &rest_v[0]
    c.min_fixed_from = &mff_v[0]
    c.best = incumbent
    c.evals = 0
    masks = []
    costs = []
    _visit(&c, 0, 0, 0, 0.0, masks, costs)
    return [int(m) for m in masks], costs, int(c.evals)


cdef inline double _midpoint(double a, double b):
    cdef double t = 0.5 * (a + b)
    if t >= b:
        t = a
    return t


def gini_best_split(const double[:, ::1] X, const int64_t[::1] y, const int64_t[:, ::1] sidx, int64_t min_leaf):
    cdef Py_ssize_t p = sidx.shape[0]
    cdef Py_ssize_t m = sidx.shape[1]
    cdef Py_ssize_t f, k
    cdef int64_t pos = 0, cl
    cdef double parent, pl, nlf, pr, nrf, gain
    cdef double best = -INFINITY
    cdef Py_ssize_t bf = -1, bk = -1
    cdef double a, b
    if m < 2 or p == 0:
        return -1, math.nan, 0.0, 0
    for k in range(m):
        pos += y[sidx[0, k]]
    parent = <double>pos * <double>(m - pos) / <double>m
    for f in range(p):
        cl = 0
        for k in range(m - 1):
            cl += y[sidx[f, k]]
            if k + 1 < min_leaf or m - (k + 1) < min_leaf:
                continue
            a = X[sidx[f, k], f]
            b = X[sidx[f, k + 1], f]
            if not (a < b):
                continue
            pl = <double>cl
            nlf = <double>(k + 1)
            pr = <double>pos - pl
            nrf = <double>m - nlf
            gain = parent - pl * (nlf - pl) / nlf - pr * (nrf - pr) / nrf
            if gain > best:
                best = gain
                bf = f
                bk = k
    if bf < 0:
        return -1, math.nan, 0.0, 0
    return (int(bf), _midpoint(X[sidx[bf, bk], bf], X[sidx[bf, bk + 1], bf]),
            best, int(bk + 1))


def stump_best_split(const double[:, ::1] X, const double[::1] z, const double[::1] w, const int64_t[:, ::1] sidx):
    cdef Py_ssize_t p = sidx.shape[0]
    cdef Py_ssize_t n = sidx.shape[1]
    cdef Py_ssize_t f, k, i
    cdef double[::1] wz = np.empty(z.shape[0], dtype=np.float64)
    for i in range(z.shape[0]):
        wz[i] = w[i] * z[i]
    cdef double Wt, Zt, WL, ZL, WR, ZR, gain, best = -INFINITY
    cdef double bWL = 0, bZL = 0, bWR = 0, bZR = 0, c
    cdef Py_ssize_t bf = -1, bk = -1
    cdef double a, b
    if n < 2:
        Wt = 0.0
        Zt = 0.0
        for k in range(n):
            Wt += w[sidx[0, k]]
            Zt += wz[sidx[0, k]]
        c = Zt / Wt
        return -1, math.nan, c, c, 0.0
    for f in range(p):
        Wt = 0.0
        Zt = 0.0
        for k in range(n):
            Wt += w[sidx[f, k]]
            Zt += wz[sidx[f, k]]
        WL = 0.0
        ZL = 0.0
        for k in range(n - 1):
            WL += w[sidx[f, k]]
            ZL += wz[sidx[f, k]]
            a = X[sidx[f, k], f]
            b = X[sidx[f, k + 1], f]
            if not (a < b):
                continue
            WR = Wt - WL
            ZR = Zt - ZL
            gain = ZL * ZL / WL + ZR * ZR / WR - Zt * Zt / Wt
            if gain > best:
                best = gain
                bf = f
                bk = k
                bWL = WL
                bZL = ZL
                bWR = WR
                bZR = ZR
    if bf < 0:
        Wt = 0.0
        Zt = 0.0
        for k in range(n):
            Wt += w[sidx[0, k]]
            Zt += wz[sidx[0, k]]
        c = Zt / Wt
        return -1, math.nan, c, c, 0.0
    return (int(bf), _midpoint(X[sidx[bf, bk], bf], X[sidx[bf, bk + 1], bf]),
            bZL / bWL, bZR / bWR, best)
