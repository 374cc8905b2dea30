# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled network-simplex kernel for dense transportation problems.

Primal network simplex on the complete bipartite graph plus an artificial
root, keeping the basis strongly feasible: the entering arc is the most
negative reduced cost inside a cyclically scanned block (lowest index on
ties) and the leaving arc is the last blocking arc along the pivot cycle
starting at the apex. The leaving-arc rule prevents cycling on the highly
degenerate uniform-weight instances this package solves.

The tree is stored in the parent/size/thread representation so subtree
walks and potential updates cost O(subtree size) per pivot.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, ceil, sqrt

cnp.import_array()


cdef inline long _arc_tail(long a, long A, long m, long R, signed char[::1] art_up) noexcept:
    cdef long w
    if a < A:
        return a / m
    w = a - A
    return w if art_up[w] else R


cdef inline long _arc_head(long a, long A, long m0, long m, long R, signed char[::1] art_up) noexcept:
    cdef long w
    if a < A:
        return m0 + a % m
    w = a - A
    return R if art_up[w] else w


cdef void _refresh_potentials(const double[:, ::1] cost, double[::1] pi,
                              long[::1] parent, long[::1] pred, long[::1] nxt,
                              signed char[::1] art_up, long A, long m0, long m,
                              long R, double big_m) noexcept:
    """Recompute potentials exactly from the tree (preorder via the thread)."""
    cdef long v = nxt[R]
    cdef long a, u
    cdef double c
    while v != R:
        a = pred[v]
        u = parent[v]
        c = cost[a / m, a % m] if a < A else big_m
        if _arc_tail(a, A, m, R, art_up) == v:
            pi[v] = c + pi[u]
        else:
            pi[v] = pi[u] - c
        v = nxt[v]


def solve_dense(const double[:, ::1] cost, const double[::1] supply, const double[::1] demand,
                double tol_rel=1e-9, long max_pivots=0):
    """Solve min <cost, X> s.t. X >= 0, X @ 1 = supply, X.T @ 1 = demand.

    Returns ``(row_idx, col_idx, mass, total_cost)`` for the basic arcs with
    positive mass. Optimality holds up to reduced costs >= -tol_rel * max(cost).
    """
    cdef long m0 = cost.shape[0]
    cdef long m = cost.shape[1]
    if supply.shape[0] != m0 or demand.shape[0] != m:
        raise ValueError("supply/demand shapes do not match the cost matrix")

    cdef long A = m0 * m
    cdef long n_art = m0 + m
    cdef long n_nodes = n_art + 1
    cdef long R = n_art

    cdef double cmax = 0.0
    cdef long i, j, a
    for i in range(m0):
        for j in range(m):
            if cost[i, j] > cmax:
                cmax = cost[i, j]
            elif cost[i, j] < 0.0:
                raise ValueError("cost entries must be nonnegative")
    # Tolerance floor keeps float noise in the potentials from re-entering
    # basic arcs; it stays far below any meaningful cost scale.
    cdef double tol = tol_rel * cmax
    cdef double tol_floor = 1e-13 * (1.0 + cmax) * n_nodes
    if tol < tol_floor:
        tol = tol_floor
    cdef double big_m = (1.0 + cmax) * n_nodes

    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.zeros(A + n_art)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pi_arr = np.zeros(n_nodes)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parent_arr = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pred_arr = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] size_arr = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nxt_arr = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prv_arr = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] last_arr = np.empty(n_nodes, dtype=np.int64)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] art_up_arr = np.empty(n_art, dtype=np.int8)

    cdef double[::1] x = x_arr
    cdef double[::1] pi = pi_arr
    cdef long[::1] parent = parent_arr
    cdef long[::1] pred = pred_arr
    cdef long[::1] size = size_arr
    cdef long[::1] nxt = nxt_arr
    cdef long[::1] prv = prv_arr
    cdef long[::1] last = last_arr
    cdef signed char[::1] art_up = art_up_arr

    # Initial basis: every real node hangs off the root by its artificial arc.
    # Zero-flow artificial arcs must point toward the root (strong feasibility),
    # which for sources and zero-demand targets is the node->root direction.
    cdef long v
    for v in range(m0):
        art_up[v] = 1
        x[A + v] = supply[v]
        pi[v] = big_m
    for v in range(m0, n_art):
        if demand[v - m0] > 0.0:
            art_up[v] = 0
            x[A + v] = demand[v - m0]
            pi[v] = -big_m
        else:
            art_up[v] = 1
            x[A + v] = 0.0
            pi[v] = big_m
    for v in range(n_art):
        parent[v] = R
        pred[v] = A + v
        size[v] = 1
        nxt[v] = v + 1 if v + 1 < n_art else R
        prv[v] = v - 1 if v > 0 else R
        last[v] = v
    parent[R] = -1
    pred[R] = -1
    size[R] = n_nodes
    nxt[R] = 0
    prv[R] = n_art - 1
    last[R] = n_art - 1
    pi[R] = 0.0

    cdef long pivot_cap = max_pivots if max_pivots > 0 else 1000 + 100 * n_art

    # Work arrays for the pivot cycle (bounded by the node count).
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cyc_arcs_arr = np.empty(n_nodes + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cyc_tails_arr = np.empty(n_nodes + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] tmp_nodes_arr = np.empty(n_nodes + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] tmp_arcs_arr = np.empty(n_nodes + 1, dtype=np.int64)
    cdef long[::1] cyc_arcs = cyc_arcs_arr
    cdef long[::1] cyc_tails = cyc_tails_arr
    cdef long[::1] tmp_nodes = tmp_nodes_arr
    cdef long[::1] tmp_arcs = tmp_arcs_arr

    cdef long block = <long>ceil(sqrt(<double>A))
    if block < 1:
        block = 1
    cdef long n_blocks = (A + block - 1) / block
    cdef long fails = 0
    cdef long cursor = 0
    cdef long pivots = 0

    cdef long stop, best_arc, p, q, w, sp, sq, len_p, len_q, L, k, pos_enter
    cdef long kstar, leave, s, t, u, other, size_t_, prev_t, last_t, next_last_t
    cdef long size_p, last_p, prev_q, last_q, next_last_q, anc_len, pp, qq
    cdef long last_refresh = 0
    cdef long rounds = 0
    cdef double best_rc, rc, theta, res, d, c_enter, fl

    while True:
        if fails >= n_blocks:
            # Block scans found nothing; certify optimality against exactly
            # recomputed potentials (incremental updates drift) and resume
            # pivoting in the rare case drift was hiding a candidate.
            _refresh_potentials(cost, pi, parent, pred, nxt, art_up, A, m0, m, R, big_m)
            last_refresh = pivots
            best_rc = -tol
            best_arc = -1
            for a in range(A):
                i = a / m
                j = a - i * m
                rc = cost[i, j] - pi[i] + pi[m0 + j]
                if rc < best_rc:
                    best_rc = rc
                    best_arc = a
            if best_arc < 0:
                break
            rounds += 1
            if rounds > 3:
                raise RuntimeError("failed to certify optimality after refreshes")
            fails = 0
            continue

        if pivots - last_refresh >= 512:
            # Recompute potentials exactly from the tree; incremental updates
            # drift over many pivots and the drift feeds the entering test.
            last_refresh = pivots
            _refresh_potentials(cost, pi, parent, pred, nxt, art_up, A, m0, m, R, big_m)

        # --- entering arc: best reduced cost in the current block ---
        best_rc = -tol
        best_arc = -1
        a = cursor
        stop = cursor + block
        if stop > A:
            stop = A
        while a < stop:
            i = a / m
            j = a - i * m
            rc = cost[i, j] - pi[i] + pi[m0 + j]
            if rc < best_rc:
                best_rc = rc
                best_arc = a
            a += 1
        if cursor + block > A:
            stop = cursor + block - A
            a = 0
            while a < stop:
                i = a / m
                j = a - i * m
                rc = cost[i, j] - pi[i] + pi[m0 + j]
                if rc < best_rc:
                    best_rc = rc
                    best_arc = a
                a += 1
            cursor = stop
        else:
            cursor = cursor + block if cursor + block < A else 0
        if best_arc < 0:
            fails += 1
            continue
        fails = 0
        pivots += 1
        if pivots > pivot_cap:
            raise RuntimeError("network simplex exceeded its pivot limit")

        p = best_arc / m
        q = m0 + best_arc % m
        if pred[p] == best_arc or pred[q] == best_arc:
            # A basic arc can only look enterable through potential drift;
            # refresh and rescan instead of pivoting on it.
            _refresh_potentials(cost, pi, parent, pred, nxt, art_up, A, m0, m, R, big_m)
            last_refresh = pivots
            continue

        # --- apex of the pivot cycle (lowest common ancestor by sizes) ---
        sp = p
        sq = q
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

        # --- collect the cycle: apex->p segment, entering arc, q->apex segment ---
        len_p = 0
        v = p
        while v != w:
            tmp_nodes[len_p] = v
            tmp_arcs[len_p] = pred[v]
            v = parent[v]
            len_p += 1
        tmp_nodes[len_p] = w
        for k in range(len_p):
            cyc_arcs[k] = tmp_arcs[len_p - 1 - k]
            cyc_tails[k] = tmp_nodes[len_p - k]
        pos_enter = len_p
        cyc_arcs[pos_enter] = best_arc
        cyc_tails[pos_enter] = p
        len_q = 0
        v = q
        while v != w:
            cyc_arcs[pos_enter + 1 + len_q] = pred[v]
            cyc_tails[pos_enter + 1 + len_q] = v
            v = parent[v]
            len_q += 1
        L = len_p + 1 + len_q

        # --- leaving arc: last blocking arc along the cycle from the apex ---
        theta = INFINITY
        kstar = -1
        for k in range(L):
            a = cyc_arcs[k]
            if _arc_tail(a, A, m, R, art_up) == cyc_tails[k]:
                res = INFINITY
            else:
                res = x[a]
            if res <= theta:
                theta = res
                kstar = k
        if kstar < 0 or theta == INFINITY:
            raise RuntimeError("unbounded pivot cycle; input is malformed")

        # --- augment theta around the cycle ---
        if theta != 0.0:
            for k in range(L):
                a = cyc_arcs[k]
                if _arc_tail(a, A, m, R, art_up) == cyc_tails[k]:
                    x[a] += theta
                else:
                    x[a] -= theta

        if kstar == pos_enter:
            continue

        # --- basis exchange ---
        leave = cyc_arcs[kstar]
        s = cyc_tails[kstar]
        if leave < A:
            other = (leave / m) if s >= m0 else m0 + leave % m
        else:
            other = (leave - A) if s == R else R
        t = other
        if parent[t] != s:
            s = other
            t = cyc_tails[kstar]
        if pos_enter > kstar:
            u = p
            p = q
            q = u

        # remove_edge(s, t)
        size_t_ = size[t]
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
            size[v] -= size_t_
            if last[v] == last_t:
                last[v] = prev_t
            v = parent[v]

        # make_root(q) inside the detached subtree
        anc_len = 0
        v = q
        while v != -1:
            tmp_nodes[anc_len] = v
            v = parent[v]
            anc_len += 1
        for k in range(anc_len - 2, -1, -1):
            pp = tmp_nodes[k + 1]
            qq = tmp_nodes[k]
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

        # add_edge(entering, p, q)
        last_p = last[p]
        next_last_t = nxt[last_p]
        size_t_ = size[q]
        last_q = last[q]
        parent[q] = p
        pred[q] = best_arc
        nxt[last_p] = q
        prv[q] = last_p
        prv[next_last_t] = last_q
        nxt[last_q] = next_last_t
        v = p
        while v != -1:
            size[v] += size_t_
            if last[v] == last_p:
                last[v] = last_q
            v = parent[v]

        # update potentials on the reattached subtree
        c_enter = cost[best_arc / m, best_arc % m]
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

    # --- feasibility: artificial arcs must be drained ---
    for v in range(n_art):
        if x[A + v] > 1e-9:
            raise RuntimeError("artificial arc retained mass; unbalanced marginals")

    # --- recompute exact tree flows by peeling leaves in reverse preorder ---
    cdef cnp.ndarray[cnp.float64_t, ndim=1] net_arr = np.empty(n_nodes)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_arr = np.empty(n_nodes, dtype=np.int64)
    cdef double[::1] net = net_arr
    cdef long[::1] order = order_arr
    cdef double total_in = 0.0, total_out = 0.0
    for v in range(m0):
        net[v] = supply[v]
        total_out += supply[v]
    for v in range(m0, n_art):
        net[v] = -demand[v - m0]
        total_in += demand[v - m0]
    net[R] = total_in - total_out
    order[0] = R
    for k in range(1, n_nodes):
        order[k] = nxt[order[k - 1]]
    for k in range(n_nodes - 1, 0, -1):
        v = order[k]
        a = pred[v]
        u = parent[v]
        if _arc_tail(a, A, m, R, art_up) == v:
            fl = net[v]
        else:
            fl = -net[v]
        if fl < -1e-9:
            raise RuntimeError("negative basic flow after recomputation")
        x[a] = fl if fl > 0.0 else 0.0
        net[u] += net[v]

    # --- extract the plan over real arcs ---
    cdef long nnz = 0
    for v in range(n_art):
        if pred[v] >= 0 and pred[v] < A and x[pred[v]] > 0.0:
            nnz += 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_i = np.empty(nnz, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_j = np.empty(nnz, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_m = np.empty(nnz, dtype=np.float64)
    cdef double total_cost = 0.0
    k = 0
    for v in range(n_art):
        a = pred[v]
        if a >= 0 and a < A and x[a] > 0.0:
            i = a / m
            j = a - i * m
            out_i[k] = i
            out_j[k] = j
            out_m[k] = x[a]
            total_cost += cost[i, j] * x[a]
            k += 1
    return out_i, out_j, out_m, total_cost
