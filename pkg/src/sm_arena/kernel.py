"""Compiled hot path for single repetitions.

Flat-array mirror of the reference stepper in `engine`; consumes the same
splitmix64 stream in the same order, so for any (instance, seed) both produce
bit-identical rewards. Tests enforce that equivalence. nogil lets sweep
workers run repetitions on real threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _next_double(state):
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return state, (z >> _S11) * _INV53


@njit(cache=True, nogil=True)
def _rng_probe(seed, k):
    """First k doubles of a stream; used by tests for parity with rng.Stream."""
    out = np.empty(k, dtype=np.float64)
    state = np.uint64(seed)
    for i in range(k):
        state, d = _next_double(state)
        out[i] = d
    return out


@njit(cache=True, nogil=True)
def run_rep(powers, is_sm, cap, alpha, window, seed):
    n = powers.shape[0]
    nmax = cap + 2

    parent = np.empty(nmax, dtype=np.int32)
    owner = np.empty(nmax, dtype=np.int32)
    height = np.empty(nmax, dtype=np.int32)
    parent[0] = -1
    owner[0] = -1
    height[0] = 0
    nb = 1

    target = np.zeros(n, dtype=np.int32)       # mining target per miner
    public_head = np.zeros(n, dtype=np.int32)  # deepest known public block (SM)
    branch = np.empty((n, cap + 1), dtype=np.int32)
    branch_len = np.zeros(n, dtype=np.int64)
    branch_pub = np.zeros(n, dtype=np.int64)   # broadcast prefix of branch

    qblocks = np.empty(nmax, dtype=np.int32)
    msg_sender = np.empty(nmax, dtype=np.int32)
    msg_lo = np.empty(nmax, dtype=np.int32)
    msg_hi = np.empty(nmax, dtype=np.int32)

    counts = np.zeros(n, dtype=np.int64)
    ref_tip = 0
    max_h = 0
    top_tip = 0
    tie = 1

    # sliding max-min over the trailing `window` utility samples
    W = window
    C = W + 1
    samp = np.zeros((n, W), dtype=np.float64)
    dqmax = np.zeros((n, C), dtype=np.int64)
    dqmin = np.zeros((n, C), dtype=np.int64)
    mxh = np.zeros(n, dtype=np.int64)
    mxs = np.zeros(n, dtype=np.int64)
    mnh = np.zeros(n, dtype=np.int64)
    mns = np.zeros(n, dtype=np.int64)
    measured = 0

    state = np.uint64(seed)
    converged = False
    t = 0
    while t < cap and not converged:
        t += 1
        state, r = _next_double(state)
        mi = n - 1
        acc = 0.0
        for i in range(n):
            acc += powers[i]
            if r < acc:
                mi = i
                break

        par = target[mi]
        bid = nb
        parent[bid] = par
        owner[bid] = mi
        height[bid] = height[par] + 1
        nb += 1
        h = height[bid]
        if h > max_h:
            max_h = h
            top_tip = bid
            tie = 1
        elif h == max_h:
            tie += 1

        qn = 0
        qb = 0
        if is_sm[mi]:
            L = branch_len[mi]
            in_race = L > 0 and height[branch[mi, L - 1]] == height[public_head[mi]]
            branch[mi, L] = bid
            branch_len[mi] = L + 1
            target[mi] = bid
            if in_race:
                lo = qb
                for kk in range(branch_pub[mi], L + 1):
                    qblocks[qb] = branch[mi, kk]
                    qb += 1
                msg_sender[qn] = mi
                msg_lo[qn] = lo
                msg_hi[qn] = qb
                qn += 1
                public_head[mi] = bid
                branch_len[mi] = 0
                branch_pub[mi] = 0
        else:
            target[mi] = bid
            qblocks[qb] = bid
            qb += 1
            msg_sender[qn] = mi
            msg_lo[qn] = 0
            msg_hi[qn] = 1
            qn += 1

        while qn > 0:
            state, d = _next_double(state)
            k = int(d * qn)
            if k >= qn:
                k = qn - 1
            snd = msg_sender[k]
            lo = msg_lo[k]
            hi = msg_hi[k]
            qn -= 1
            msg_sender[k] = msg_sender[qn]
            msg_lo[k] = msg_lo[qn]
            msg_hi[k] = msg_hi[qn]
            for j in range(n):
                if j == snd:
                    continue
                if is_sm[j]:
                    out_lo = qb
                    for bi in range(lo, hi):
                        blk = qblocks[bi]
                        if height[blk] <= height[public_head[j]]:
                            continue
                        public_head[j] = blk
                        Lj = branch_len[j]
                        if Lj == 0:
                            target[j] = blk
                            continue
                        tipj = branch[j, Lj - 1]
                        lead = height[tipj] - height[blk]
                        if lead < 0:
                            branch_len[j] = 0
                            branch_pub[j] = 0
                            target[j] = blk
                        elif lead == 0:
                            for kk in range(branch_pub[j], Lj):
                                qblocks[qb] = branch[j, kk]
                                qb += 1
                            branch_pub[j] = Lj
                            target[j] = tipj
                        elif lead == 1:
                            for kk in range(branch_pub[j], Lj):
                                qblocks[qb] = branch[j, kk]
                                qb += 1
                            public_head[j] = tipj
                            branch_len[j] = 0
                            branch_pub[j] = 0
                            target[j] = tipj
                        else:
                            if branch_pub[j] < Lj:
                                qblocks[qb] = branch[j, branch_pub[j]]
                                qb += 1
                                branch_pub[j] += 1
                            target[j] = tipj
                    if qb > out_lo:
                        msg_sender[qn] = j
                        msg_lo[qn] = out_lo
                        msg_hi[qn] = qb
                        qn += 1
                else:
                    for bi in range(lo, hi):
                        blk = qblocks[bi]
                        if height[blk] > height[target[j]]:
                            target[j] = blk

        if tie == 1:
            if top_tip != ref_tip:
                a = ref_tip
                b = top_tip
                while height[a] > height[b]:
                    counts[owner[a]] -= 1
                    a = parent[a]
                while height[b] > height[a]:
                    counts[owner[b]] += 1
                    b = parent[b]
                while a != b:
                    counts[owner[a]] -= 1
                    counts[owner[b]] += 1
                    a = parent[a]
                    b = parent[b]
                ref_tip = top_tip
            inv_h = 1.0 / max_h
            m = measured
            for i in range(n):
                v = counts[i] * inv_h
                samp[i, m % W] = v
                # max deque: drop dominated entries, evict expired head
                while mxs[i] > 0 and samp[i, dqmax[i, (mxh[i] + mxs[i] - 1) % C] % W] <= v:
                    mxs[i] -= 1
                dqmax[i, (mxh[i] + mxs[i]) % C] = m
                mxs[i] += 1
                while dqmax[i, mxh[i]] <= m - W:
                    mxh[i] = (mxh[i] + 1) % C
                    mxs[i] -= 1
                while mns[i] > 0 and samp[i, dqmin[i, (mnh[i] + mns[i] - 1) % C] % W] >= v:
                    mns[i] -= 1
                dqmin[i, (mnh[i] + mns[i]) % C] = m
                mns[i] += 1
                while dqmin[i, mnh[i]] <= m - W:
                    mnh[i] = (mnh[i] + 1) % C
                    mns[i] -= 1
            measured += 1
            if measured >= W:
                ok = True
                for i in range(n):
                    vmax = samp[i, dqmax[i, mxh[i]] % W]
                    vmin = samp[i, dqmin[i, mnh[i]] % W]
                    if vmax - vmin > alpha:
                        ok = False
                        break
                if ok:
                    converged = True

    if top_tip != ref_tip:
        a = ref_tip
        b = top_tip
        while height[a] > height[b]:
            counts[owner[a]] -= 1
            a = parent[a]
        while height[b] > height[a]:
            counts[owner[b]] += 1
            b = parent[b]
        while a != b:
            counts[owner[a]] -= 1
            counts[owner[b]] += 1
            a = parent[a]
            b = parent[b]

    rewards = np.zeros(n, dtype=np.float64)
    if max_h > 0:
        for i in range(n):
            rewards[i] = counts[i] / max_h
    return rewards, t, converged
