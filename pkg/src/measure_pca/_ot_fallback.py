"""Pure-Python twin of the compiled network-simplex kernel.

Same algorithm, same pivot sequence and therefore bit-identical output to
``_ot_native``; the entering-arc block scan is vectorized with numpy and the
spanning-tree surgery runs in plain Python. Selected automatically when the
compiled extension is unavailable (see :mod:`measure_pca.ot_core`).
"""

from __future__ import annotations

import math

import numpy as np

_INF = math.inf


def solve_dense(cost, supply, demand, tol_rel=1e-9, max_pivots=0):
    """See ``measure_pca._ot_native.solve_dense``; identical contract."""
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    supply = np.ascontiguousarray(supply, dtype=np.float64)
    demand = np.ascontiguousarray(demand, dtype=np.float64)
    m0, m = cost.shape
    if supply.shape != (m0,) or demand.shape != (m,):
        raise ValueError("supply/demand shapes do not match the cost matrix")
    if np.any(cost < 0.0):
        raise ValueError("cost entries must be nonnegative")

    A = m0 * m
    n_art = m0 + m
    n_nodes = n_art + 1
    R = n_art

    cmax = float(cost.max())
    tol = max(tol_rel * cmax, 1e-13 * (1.0 + cmax) * n_nodes)
    big_m = (1.0 + cmax) * n_nodes
    cflat = cost.reshape(-1)
    rows = np.arange(A, dtype=np.int64) // m
    cols = np.arange(A, dtype=np.int64) - rows * m

    x = np.zeros(A + n_art)
    pi = np.zeros(n_nodes)
    parent = [R] * n_art + [-1]
    pred = list(range(A, A + n_art)) + [-1]
    size = [1] * n_art + [n_nodes]
    nxt = [v + 1 for v in range(n_art - 1)] + [R, 0]
    prv = [R] + list(range(n_art - 1)) + [n_art - 1]
    last = list(range(n_art)) + [n_art - 1]
    art_up = [True] * n_art
    for v in range(m0):
        x[A + v] = supply[v]
        pi[v] = big_m
    for v in range(m0, n_art):
        if demand[v - m0] > 0.0:
            art_up[v] = False
            x[A + v] = demand[v - m0]
            pi[v] = -big_m
        else:
            pi[v] = big_m

    def arc_tail(a):
        if a < A:
            return a // m
        w = a - A
        return w if art_up[w] else R

    def arc_head(a):
        if a < A:
            return m0 + a % m
        w = a - A
        return R if art_up[w] else w

    pivot_cap = max_pivots if max_pivots > 0 else 1000 + 100 * n_art
    block = max(1, math.ceil(math.sqrt(A)))
    n_blocks = (A + block - 1) // block
    fails = 0
    cursor = 0
    pivots = 0
    last_refresh = 0

    def block_best(lo, hi):
        idx = np.arange(lo, hi, dtype=np.int64)
        rc = cflat[lo:hi] - pi[rows[lo:hi]] + pi[m0 + cols[lo:hi]]
        k = int(np.argmin(rc))
        return float(rc[k]), int(idx[k])

    def refresh_potentials():
        v = nxt[R]
        while v != R:
            a = pred[v]
            u = parent[v]
            c = cflat[a] if a < A else big_m
            pi[v] = c + pi[u] if arc_tail(a) == v else pi[u] - c
            v = nxt[v]

    rounds = 0
    while True:
        if fails >= n_blocks:
            # Certify optimality against exactly recomputed potentials and
            # resume pivoting in the rare case drift was hiding a candidate.
            refresh_potentials()
            last_refresh = pivots
            best_rc, best_arc = block_best(0, A)
            if best_rc >= -tol:
                break
            rounds += 1
            if rounds > 3:
                raise RuntimeError("failed to certify optimality after refreshes")
            fails = 0
            continue

        if pivots - last_refresh >= 512:
            last_refresh = pivots
            refresh_potentials()

        hi = cursor + block
        best_rc, best_arc = block_best(cursor, min(hi, A))
        if hi > A:
            rc2, arc2 = block_best(0, hi - A)
            if rc2 < best_rc:
                best_rc, best_arc = rc2, arc2
            cursor = hi - A
        else:
            cursor = hi if hi < A else 0
        if best_rc >= -tol:
            fails += 1
            continue
        fails = 0
        pivots += 1
        if pivots > pivot_cap:
            raise RuntimeError("network simplex exceeded its pivot limit")

        p = best_arc // m
        q = m0 + best_arc % m
        if pred[p] == best_arc or pred[q] == best_arc:
            # A basic arc can only look enterable through potential drift;
            # refresh and rescan instead of pivoting on it.
            refresh_potentials()
            last_refresh = pivots
            continue

        # Apex of the pivot cycle.
        sp, sq = p, q
        while True:
            while size[sp] < size[sq]:
                sp = parent[sp]
            while size[sp] > size[sq]:
                sq = parent[sq]
            if size[sp] == size[sq]:
                if sp != sq:
                    sp = parent[sp]
                    sq = parent[sq]
                else:
                    w = sp
                    break

        path_nodes, path_arcs = [], []
        v = p
        while v != w:
            path_nodes.append(v)
            path_arcs.append(pred[v])
            v = parent[v]
        path_nodes.append(w)
        cyc_arcs = path_arcs[::-1] + [best_arc]
        cyc_tails = path_nodes[:0:-1] + [p]
        pos_enter = len(cyc_arcs) - 1
        v = q
        while v != w:
            cyc_arcs.append(pred[v])
            cyc_tails.append(v)
            v = parent[v]

        theta = _INF
        kstar = -1
        for k, (a, u) in enumerate(zip(cyc_arcs, cyc_tails)):
            res = _INF if arc_tail(a) == u else x[a]
            if res <= theta:
                theta = res
                kstar = k
        if kstar < 0 or theta == _INF:
            raise RuntimeError("unbounded pivot cycle; input is malformed")

        if theta != 0.0:
            for a, u in zip(cyc_arcs, cyc_tails):
                if arc_tail(a) == u:
                    x[a] += theta
                else:
                    x[a] -= theta

        if kstar == pos_enter:
            continue

        leave = cyc_arcs[kstar]
        s = cyc_tails[kstar]
        if leave < A:
            other = (leave // m) if s >= m0 else m0 + leave % m
        else:
            other = (leave - A) if s == R else R
        t = other
        if parent[t] != s:
            s, t = t, s
        if pos_enter > kstar:
            p, q = q, p

        # remove_edge(s, t)
        size_t = size[t]
        prev_t = prv[t]
        last_t = last[t]
        next_last_t = nxt[last_t]
        parent[t] = -1
        pred[t] = -1
        nxt[prev_t] = next_last_t
        prv[next_last_t] = prev_t
        nxt[last_t] = t
        prv[t] = last_t
        v = s
        while v != -1:
            size[v] -= size_t
            if last[v] == last_t:
                last[v] = prev_t
            v = parent[v]

        # make_root(q)
        ancestors = []
        v = q
        while v != -1:
            ancestors.append(v)
            v = parent[v]
        for k in range(len(ancestors) - 2, -1, -1):
            pp = ancestors[k + 1]
            qq = ancestors[k]
            size_p = size[pp]
            last_p = last[pp]
            prev_q = prv[qq]
            last_q = last[qq]
            next_last_q = nxt[last_q]
            parent[pp] = qq
            parent[qq] = -1
            pred[pp] = pred[qq]
            pred[qq] = -1
            size[pp] = size_p - size[qq]
            size[qq] = size_p
            nxt[prev_q] = next_last_q
            prv[next_last_q] = prev_q
            nxt[last_q] = qq
            prv[qq] = last_q
            if last_p == last_q:
                last[pp] = prev_q
                last_p = prev_q
            prv[pp] = last_q
            nxt[last_q] = pp
            nxt[last_p] = qq
            prv[qq] = last_p
            last[qq] = last_p

        # add_edge(best_arc, p, q)
        last_p = last[p]
        next_last_p = nxt[last_p]
        size_q = size[q]
        last_q = last[q]
        parent[q] = p
        pred[q] = best_arc
        nxt[last_p] = q
        prv[q] = last_p
        prv[next_last_p] = last_q
        nxt[last_q] = next_last_p
        v = p
        while v != -1:
            size[v] += size_q
            if last[v] == last_p:
                last[v] = last_q
            v = parent[v]

        c_enter = cflat[best_arc]
        if q == m0 + best_arc % m:
            d = pi[p] - c_enter - pi[q]
        else:
            d = pi[p] + c_enter - pi[q]
        v = q
        while True:
            pi[v] += d
            if v == last[q]:
                break
            v = nxt[v]

    if np.any(x[A:] > 1e-9):
        raise RuntimeError("artificial arc retained mass; unbalanced marginals")

    # Exact tree flows by peeling in reverse preorder.
    net = np.empty(n_nodes)
    net[:m0] = supply
    net[m0:n_art] = -demand
    net[R] = float(demand.sum()) - float(supply.sum())
    order = [R]
    for _ in range(n_nodes - 1):
        order.append(nxt[order[-1]])
    for v in reversed(order[1:]):
        a = pred[v]
        u = parent[v]
        fl = net[v] if arc_tail(a) == v else -net[v]
        if fl < -1e-9:
            raise RuntimeError("negative basic flow after recomputation")
        x[a] = fl if fl > 0.0 else 0.0
        net[u] += net[v]

    out_i, out_j, out_m = [], [], []
    total_cost = 0.0
    for v in range(n_art):
        a = pred[v]
        if 0 <= a < A and x[a] > 0.0:
            i, j = a // m, a % m
            out_i.append(i)
            out_j.append(j)
            out_m.append(x[a])
            total_cost += cost[i, j] * x[a]
    return (
        np.array(out_i, dtype=np.int64),
        np.array(out_j, dtype=np.int64),
        np.array(out_m, dtype=np.float64),
        total_cost,
    )
