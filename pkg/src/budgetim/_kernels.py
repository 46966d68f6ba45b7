"""Compiled inner loops.  Everything here works on plain numpy arrays."""

from __future__ import annotations

import heapq

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_EDGE_MUL = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _mix64(z):
    # splitmix64 finalizer
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def stream_key(seed, stream):
    """Key for one independent coin-flip stream (one MC round)."""
    return _mix64(_mix64(np.uint64(seed) + _GOLDEN) + (np.uint64(stream) + np.uint64(1)) * _GOLDEN)


@njit(cache=True, inline="always")
def _coin(key, eid):
    z = _mix64(key ^ (np.uint64(eid) * _EDGE_MUL + _GOLDEN))
    return np.float64(z >> _S11) * _INV53


@njit(cache=True)
def ic_rounds(out_ptr, out_dst, out_prob, out_eid, seeds, rounds, seed, first_round, counts):
    """Run ``rounds`` IC cascades; returns activated count per round.

    Edge ``e`` is live in round ``r`` iff ``coin(r, e) < p(e)``, so every
    evaluation sees the same live-edge worlds for a given ``seed``.  Coins are
    only drawn for edges leaving activated nodes.  If ``counts`` has length
    ``n`` it accumulates per-node activation counts.
    """
    n = out_ptr.size - 1
    stamp = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    per_round = np.empty(rounds, dtype=np.float64)
    want = counts.size == n
    for r in range(rounds):
        key = stream_key(seed, first_round + r)
        mark = r + 1
        tail = 0
        for s in seeds:
            if stamp[s] != mark:
                stamp[s] = mark
                queue[tail] = s
                tail += 1
        head = 0
        while head < tail:
            u = queue[head]
            head += 1
            for j in range(out_ptr[u], out_ptr[u + 1]):
                v = out_dst[j]
                if stamp[v] == mark:
                    continue
                if _coin(key, out_eid[j]) < out_prob[j]:
                    stamp[v] = mark
                    queue[tail] = v
                    tail += 1
        per_round[r] = tail
        if want:
            for i in range(tail):
                counts[queue[i]] += 1.0
    return per_round


@njit(cache=True)
def _dijkstra_into(out_ptr, out_dst, out_w, out_p, sources, limit, dist, hops, parent, inprob, state, order):
    """Lexicographic (distance, hops) Dijkstra from ``sources``.

    Ties on (distance, hops) keep the smallest predecessor id.  Nodes whose
    distance exceeds ``limit`` are never labelled.  Settled nodes are written
    to ``order`` in pop order; returns their count.  ``state`` must be 0 on
    entry for all nodes and is restored to 0 for every touched node.
    """
    heap = [(0.0, 0, 0)]
    heap.pop()
    touched = []
    for s in sources:
        if state[s] == 0:
            state[s] = 1
            touched.append(s)
            dist[s] = 0.0
            hops[s] = 0
            parent[s] = -1
            inprob[s] = 1.0
            heapq.heappush(heap, (0.0, 0, s))
    cnt = 0
    while heap:
        d, h, u = heapq.heappop(heap)
        if state[u] == 2 or d != dist[u] or h != hops[u]:
            continue
        state[u] = 2
        order[cnt] = u
        cnt += 1
        for j in range(out_ptr[u], out_ptr[u + 1]):
            x = out_dst[j]
            if state[x] == 2:
                continue
            nd = d + out_w[j]
            if nd > limit:
                continue
            nh = h + 1
            if state[x] == 0:
                state[x] = 1
                touched.append(x)
                dist[x] = nd
                hops[x] = nh
                parent[x] = u
                inprob[x] = out_p[j]
                heapq.heappush(heap, (nd, nh, x))
            elif nd < dist[x] or (nd == dist[x] and nh < hops[x]):
                dist[x] = nd
                hops[x] = nh
                parent[x] = u
                inprob[x] = out_p[j]
                heapq.heappush(heap, (nd, nh, x))
            elif nd == dist[x] and nh == hops[x] and u < parent[x]:
                parent[x] = u
                inprob[x] = out_p[j]
    for t in touched:
        state[t] = 0
    return cnt


@njit(cache=True)
def dijkstra_region(out_ptr, out_dst, out_w, out_p, sources, limit):
    """Single- or multi-source region: (members, parent, dist, hops, inprob) in settle order."""
    n = out_ptr.size - 1
    dist = np.empty(n, dtype=np.float64)
    hops = np.empty(n, dtype=np.int64)
    parent = np.empty(n, dtype=np.int64)
    inprob = np.empty(n, dtype=np.float64)
    state = np.zeros(n, dtype=np.int8)
    order = np.empty(n, dtype=np.int64)
    cnt = _dijkstra_into(out_ptr, out_dst, out_w, out_p, sources, limit, dist, hops, parent, inprob, state, order)
    mem = order[:cnt].copy()
    return mem, parent[mem], dist[mem], hops[mem], inprob[mem]


@njit(cache=True)
def mioa_forest(out_ptr, out_dst, out_w, out_p, limit):
    """One out-arborescence per node, concatenated: ptr plus per-member arrays."""
    n = out_ptr.size - 1
    dist = np.empty(n, dtype=np.float64)
    hops = np.empty(n, dtype=np.int64)
    parent = np.empty(n, dtype=np.int64)
    inprob = np.empty(n, dtype=np.float64)
    state = np.zeros(n, dtype=np.int8)
    order = np.empty(n, dtype=np.int64)
    cap = max(16, 4 * n)
    mem = np.empty(cap, dtype=np.int64)
    par = np.empty(cap, dtype=np.int64)
    dst = np.empty(cap, dtype=np.float64)
    hop = np.empty(cap, dtype=np.int64)
    inp = np.empty(cap, dtype=np.float64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    src = np.empty(1, dtype=np.int64)
    pos = 0
    for r in range(n):
        src[0] = r
        cnt = _dijkstra_into(out_ptr, out_dst, out_w, out_p, src, limit, dist, hops, parent, inprob, state, order)
        if pos + cnt > cap:
            while pos + cnt > cap:
                cap *= 2
            mem2 = np.empty(cap, dtype=np.int64)
            mem2[:pos] = mem[:pos]
            mem = mem2
            par2 = np.empty(cap, dtype=np.int64)
            par2[:pos] = par[:pos]
            par = par2
            dst2 = np.empty(cap, dtype=np.float64)
            dst2[:pos] = dst[:pos]
            dst = dst2
            hop2 = np.empty(cap, dtype=np.int64)
            hop2[:pos] = hop[:pos]
            hop = hop2
            inp2 = np.empty(cap, dtype=np.float64)
            inp2[:pos] = inp[:pos]
            inp = inp2
        for i in range(cnt):
            v = order[i]
            mem[pos + i] = v
            par[pos + i] = parent[v]
            dst[pos + i] = dist[v]
            hop[pos + i] = hops[v]
            inp[pos + i] = inprob[v]
        pos += cnt
        ptr[r + 1] = pos
    return ptr, mem[:pos].copy(), par[:pos].copy(), dst[:pos].copy(), hop[:pos].copy(), inp[:pos].copy()


@njit(cache=True)
def spbp_pass(par_ptr, par_idx, par_prob, is_seed):
    """One topological pass of p(v) = 1 - prod(1 - p(u) p(u, v)).

    Nodes are indexed in topological order.  Returns (probs, sigma, edges touched).
    """
    k = is_seed.size
    p = np.empty(k, dtype=np.float64)
    sigma = 0.0
    touched = 0
    for v in range(k):
        if is_seed[v]:
            p[v] = 1.0
        else:
            q = 1.0
            for j in range(par_ptr[v], par_ptr[v + 1]):
                q *= 1.0 - p[par_idx[j]] * par_prob[j]
                touched += 1
            p[v] = 1.0 - q
        sigma += p[v]
    return p, sigma, touched


@njit(cache=True)
def _norm(a, b):
    s = a + b
    if s <= 0.0:
        return 0.5
    return b / s


@njit(cache=True)
def lbp_noisy_or(par_ptr, par_idx, par_prob, ch_ptr, ch_link, is_seed, max_iters, tol, damping):
    """Flooding sum-product on the noisy-OR factor graph of a DAG.

    Binary messages are stored as the normalized mass on state 1.  Factor f_v
    couples v with its parents; link ``e`` (a position in the parent CSR) joins
    parent ``par_idx[e]`` to factor f_v.  ``ch_link`` lists, per node, the links
    where the node is a parent.  Returns (beliefs, iterations, converged).
    """
    k = is_seed.size
    nl = par_idx.size
    child_of = np.empty(nl, dtype=np.int64)
    for v in range(k):
        for j in range(par_ptr[v], par_ptr[v + 1]):
            child_of[j] = v
    f_self = np.full(k, 0.5)  # f_v -> v
    v_self = np.full(k, 0.5)  # v -> f_v
    f_par = np.full(nl, 0.5)  # f_child -> parent over link
    v_par = np.full(nl, 0.5)  # parent -> f_child over link
    for v in range(k):
        if is_seed[v]:
            f_self[v] = 1.0
        elif par_ptr[v] == par_ptr[v + 1]:
            f_self[v] = 0.0
    # clamped parents send a fixed "active" message from the start
    for j in range(nl):
        if is_seed[par_idx[j]]:
            v_par[j] = 1.0
    nf_self = f_self.copy()
    nf_par = f_par.copy()
    nv_self = v_self.copy()
    nv_par = v_par.copy()
    pre = np.empty(nl + 1)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        # factor -> variable
        for v in range(k):
            lo, hi = par_ptr[v], par_ptr[v + 1]
            if is_seed[v] or lo == hi:
                nf_self[v] = f_self[v]
                continue
            # prefix products of (1 - q_i p_i), then a suffix sweep
            acc = 1.0
            for j in range(lo, hi):
                pre[j] = acc
                acc *= 1.0 - v_par[j] * par_prob[j]
            nf_self[v] = 1.0 - acc
            lam1 = v_self[v]
            lam0 = 1.0 - lam1
            suf = 1.0
            for j in range(hi - 1, lo - 1, -1):
                a = pre[j] * suf
                pj = par_prob[j]
                m0 = lam0 * a + lam1 * (1.0 - a)
                b = (1.0 - pj) * a
                m1 = lam0 * b + lam1 * (1.0 - b)
                nf_par[j] = _norm(m0, m1)
                suf *= 1.0 - v_par[j] * pj
        # variable -> factor
        for u in range(k):
            lo, hi = ch_ptr[u], ch_ptr[u + 1]
            # product of child-factor messages, leave-one-out via prefix/suffix
            a1 = 1.0
            a0 = 1.0
            for t in range(lo, hi):
                e = ch_link[t]
                a1 *= f_par[e]
                a0 *= 1.0 - f_par[e]
            nv_self[u] = _norm(a0, a1)
            if hi == lo:
                continue
            s1 = f_self[u]
            s0 = 1.0 - s1
            # forward pass stores prefix in nv_par temporarily via pairs
            p1 = s1
            p0 = s0
            for t in range(lo, hi):
                e = ch_link[t]
                nv_par[e] = p1
                pre[e] = p0
                p1 *= f_par[e]
                p0 *= 1.0 - f_par[e]
                z = p0 + p1
                if z > 0.0:
                    p1 /= z
                    p0 /= z
            q1 = 1.0
            q0 = 1.0
            for t in range(hi - 1, lo - 1, -1):
                e = ch_link[t]
                m1 = nv_par[e] * q1
                m0 = pre[e] * q0
                nv_par[e] = _norm(m0, m1)
                q1 *= f_par[e]
                q0 *= 1.0 - f_par[e]
                z = q0 + q1
                if z > 0.0:
                    q1 /= z
                    q0 /= z
        delta = 0.0
        w = damping
        for v in range(k):
            x = (1.0 - w) * nf_self[v] + w * f_self[v] if not is_seed[v] else f_self[v]
            delta = max(delta, abs(x - f_self[v]))
            f_self[v] = x
            x = (1.0 - w) * nv_self[v] + w * v_self[v]
            delta = max(delta, abs(x - v_self[v]))
            v_self[v] = x
        for e in range(nl):
            x = (1.0 - w) * nf_par[e] + w * f_par[e]
            delta = max(delta, abs(x - f_par[e]))
            f_par[e] = x
            x = (1.0 - w) * nv_par[e] + w * v_par[e]
            delta = max(delta, abs(x - v_par[e]))
            v_par[e] = x
        if delta < tol:
            converged = True
            break
    belief = np.empty(k)
    for v in range(k):
        b1 = f_self[v]
        b0 = 1.0 - b1
        for t in range(ch_ptr[v], ch_ptr[v + 1]):
            e = ch_link[t]
            b1 *= f_par[e]
            b0 *= 1.0 - f_par[e]
            z = b0 + b1
            if z > 0.0:
                b1 /= z
                b0 /= z
        belief[v] = _norm(b0, b1)
    return belief, it, converged
