"""Reference kernels in Python/numpy.

The compiled twin in ``_ckernels.pyx`` performs the same floating point
operations in the same order, so both backends return identical results.
"""
import math

import numpy as np

INF = math.inf


def _tol(best):
    return 1e-9 * (1.0 + abs(best))


def _var_cost(mask, unit_cost, inv, qty, order, order_len):
    """Greedy variable cost of serving every line from nodes in ``mask``.

    Returns (cost, used_mask); cost is inf when some line cannot be filled.
    """
    total = 0.0
    used = 0
    for i in range(len(qty)):
        remaining = qty[i]
        row_u = unit_cost[i]
        row_inv = inv[i]
        row_order = order[i]
        for r in range(order_len[i]):
            k = row_order[r]
            if (mask >> k) & 1:
                take = row_inv[k] if row_inv[k] < remaining else remaining
                total += row_u[k] * take
                used |= 1 << k
                remaining -= take
                if remaining == 0:
                    break
        if remaining > 0:
            return INF, used
    return total, used


def _relaxed_cost(chosen, rest, unit_cost, amort_cost, inv, qty, order, amort_order, order_len):
    """Line-separable relaxation: chosen nodes at unit cost, the rest also pay
    their fixed cost spread over the most units they could serve."""
    total = 0.0
    for i in range(len(qty)):
        remaining = qty[i]
        row_u = unit_cost[i]
        row_a = amort_cost[i]
        row_inv = inv[i]
        oa = order[i]
        ob = amort_order[i]
        n = order_len[i]
        ra = 0
        rb = 0
        while remaining > 0:
            while ra < n and not (chosen >> oa[ra]) & 1:
                ra += 1
            while rb < n and not (rest >> ob[rb]) & 1:
                rb += 1
            if ra >= n and rb >= n:
                return INF
            if rb >= n or (ra < n and row_u[oa[ra]] <= row_a[ob[rb]]):
                k = oa[ra]
                c = row_u[k]
                ra += 1
            else:
                k = ob[rb]
                c = row_a[k]
                rb += 1
            take = row_inv[k] if row_inv[k] < remaining else remaining
            total += c * take
            remaining -= take
    return total


def bnb_search(unit_cost, amort_cost, inv, qty, fixed, order, amort_order, order_len, max_nodes, incumbent):
    """Depth-first enumeration of node subsets with lower-bound pruning.

    ``amort_cost[i][k]`` is the unit cost plus node k's fixed cost divided by
    the most units k could serve; ``amort_order`` ranks it per line.
    Returns ``(masks, costs, evals)``: every subset whose cost came within
    tolerance of the running best (all its nodes used), plus the number of
    search nodes visited. The caller filters against the final best.
    """
    unit_cost = [list(map(float, row)) for row in np.asarray(unit_cost)]
    amort_cost = [list(map(float, row)) for row in np.asarray(amort_cost)]
    inv = [list(map(int, row)) for row in np.asarray(inv)]
    qty = [int(q) for q in qty]
    fixed = [float(f) for f in fixed]
    order = [list(map(int, row)) for row in np.asarray(order)]
    amort_order = [list(map(int, row)) for row in np.asarray(amort_order)]
    order_len = [int(v) for v in order_len]
    K = len(fixed)

    rest_mask = [0] * (K + 1)
    min_fixed_from = [INF] * (K + 1)
    for j in range(K - 1, -1, -1):
        rest_mask[j] = rest_mask[j + 1] | (1 << j)
        min_fixed_from[j] = fixed[j] if fixed[j] < min_fixed_from[j + 1] else min_fixed_from[j + 1]

    state = {"best": float(incumbent), "evals": 0}
    masks = []
    costs = []

    def visit(mask, nxt, nsel, fixed_sum):
        state["evals"] += 1
        v_all, _ = _var_cost(mask | rest_mask[nxt], unit_cost, inv, qty, order, order_len)
        if v_all == INF:
            return
        lb = fixed_sum + v_all
        relaxed = fixed_sum + _relaxed_cost(mask, rest_mask[nxt], unit_cost, amort_cost, inv, qty,
                                            order, amort_order, order_len)
        if nsel > 0:
            v_s, used = _var_cost(mask, unit_cost, inv, qty, order, order_len)
            if v_s == INF:
                if nxt >= K:
                    return
                lb = lb + min_fixed_from[nxt]
            elif used == mask:
                c = fixed_sum + v_s
                if c < state["best"]:
                    state["best"] = c
                if c <= state["best"] + _tol(state["best"]):
                    masks.append(mask)
                    costs.append(c)
        if relaxed > lb:
            lb = relaxed
        best = state["best"]
        if best != INF and lb > best + _tol(best):
            return
        if nsel >= max_nodes:
            return
        for j in range(nxt, K):
            visit(mask | (1 << j), j + 1, nsel + 1, fixed_sum + fixed[j])

    visit(0, 0, 0, 0.0)
    return masks, costs, state["evals"]


def _midpoint(a, b):
    t = 0.5 * (a + b)
    if t >= b:
        t = a
    return t


def gini_best_split(X, y, sidx, min_leaf):
    """Best Gini split of the node whose samples are the rows of ``sidx``.

    ``sidx[f]`` lists the node's sample indices sorted by feature ``f``.
    Returns ``(feature, threshold, gain, n_left)``; feature is -1 when no
    admissible split exists. ``gain`` is the decrease of count-weighted
    impurity, halved (pos*neg/n form).
    """
    p, m = sidx.shape
    if m < 2:
        return -1, math.nan, 0.0, 0
    Ys = y[sidx]
    cl = np.cumsum(Ys, axis=1)
    pos = int(cl[0, -1])
    parent = float(pos) * float(m - pos) / float(m)
    Xs = X[sidx, np.arange(p)[:, None]]
    nl = np.arange(1, m, dtype=np.int64)
    valid = (Xs[:, :-1] < Xs[:, 1:]) & (nl >= min_leaf)[None, :] & ((m - nl) >= min_leaf)[None, :]
    if not valid.any():
        return -1, math.nan, 0.0, 0
    pl = cl[:, :-1].astype(np.float64)
    nlf = nl.astype(np.float64)
    pr = float(pos) - pl
    nrf = float(m) - nlf
    gain = parent - pl * (nlf - pl) / nlf - pr * (nrf - pr) / nrf
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    f, k = divmod(flat, m - 1)
    thr = _midpoint(float(Xs[f, k]), float(Xs[f, k + 1]))
    return f, thr, float(gain[f, k]), k + 1


def stump_best_split(X, z, w, sidx):
    """Weighted least-squares stump over presorted columns.

    Returns ``(feature, threshold, left_value, right_value, gain)``; when no
    feature varies, feature is -1 and both leaves hold the weighted mean.
    """
    p, n = sidx.shape
    wz = w * z
    W = np.cumsum(w[sidx], axis=1)
    Z = np.cumsum(wz[sidx], axis=1)
    Wt = W[:, -1:]
    Zt = Z[:, -1:]
    if n < 2:
        c = float(Zt[0, 0] / Wt[0, 0])
        return -1, math.nan, c, c, 0.0
    Xs = X[sidx, np.arange(p)[:, None]]
    valid = Xs[:, :-1] < Xs[:, 1:]
    if not valid.any():
        c = float(Zt[0, 0] / Wt[0, 0])
        return -1, math.nan, c, c, 0.0
    WL = W[:, :-1]
    ZL = Z[:, :-1]
    WR = Wt - WL
    ZR = Zt - ZL
    gain = ZL * ZL / WL + ZR * ZR / WR - Zt * Zt / Wt
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    f, k = divmod(flat, n - 1)
    thr = _midpoint(float(Xs[f, k]), float(Xs[f, k + 1]))
    lv = float(ZL[f, k] / WL[f, k])
    rv = float(ZR[f, k] / WR[f, k])
    return f, thr, lv, rv, float(gain[f, k])
