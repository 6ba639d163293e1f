"""Compiled priority-first search for ``P = 2`` codes.

Mirrors the pure-Python engine in :mod:`socodes.decoder.search` node for node:
same push order, same ordinals, same tie-break. The only numerical difference
is that ``g`` is accumulated from the ``v`` carries (``sum_{n<m} w_mn b_n``)
instead of the ``u`` carries. Both give the same increment up to rounding.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_ERASED = 1


@njit(cache=True)
def _count(t, level, m, ok, n, pair_block, end_pair, cvec, after, binom):
    if not ok:
        return 0
    if level == n:
        return 1 if m == cvec[t, pair_block[t, level]] else 0
    kn = pair_block[t, level + 1]
    if level >= 2 and pair_block[t, level] != kn:
        if m != cvec[t, pair_block[t, level]]:
            return 0
        m = 0
    r = end_pair[t, kn] - level
    x = r + cvec[t, kn] - m
    if x < 0 or x > 2 * r or x % 2 != 0:
        return 0
    return binom[r, x // 2] * after[t, kn]


@njit(cache=True)
def _hits(lo, hi, delta, per_tree):
    if hi <= lo:
        return False
    i0 = (lo + delta - 1) // delta
    return i0 < per_tree and i0 * delta < hi


@njit(cache=True)
def _less(hf, hl, ho, a, b):
    if hf[a] != hf[b]:
        return hf[a] < hf[b]
    if hl[a] != hl[b]:
        return hl[a] > hl[b]
    return ho[a] < ho[b]


@njit(cache=True)
def _swap(hf, hl, ho, hs, a, b):
    hf[a], hf[b] = hf[b], hf[a]
    hl[a], hl[b] = hl[b], hl[a]
    ho[a], ho[b] = ho[b], ho[a]
    hs[a], hs[b] = hs[b], hs[a]


@njit(cache=True)
def _sift_up(hf, hl, ho, hs, i):
    while i > 0:
        parent = (i - 1) // 2
        if _less(hf, hl, ho, i, parent):
            _swap(hf, hl, ho, hs, i, parent)
            i = parent
        else:
            break


@njit(cache=True)
def _sift_down(hf, hl, ho, hs, i, size):
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _less(hf, hl, ho, right, left):
            best = right
        if _less(hf, hl, ho, best, i):
            _swap(hf, hl, ho, hs, best, i)
            i = best
        else:
            break


@njit(cache=True)
def priority_search(level_alpha, wsum, wblk, h2_offset, use_h2,
                    pair_block, end_pair, cvec, after, binom,
                    deltas, per_tree, cap):
    """Run the search; returns ``(status, tree, rho, expansions, branches, g, bits)``."""
    n = level_alpha.shape[0]
    n_trees = wsum.shape[0]
    n_blocks = wblk.shape[1]

    size = 256
    bits = np.zeros((size, n), np.int8)
    lev = np.zeros(size, np.int64)
    tre = np.zeros(size, np.int64)
    last = np.zeros(size, np.int64)
    msum = np.zeros(size, np.int64)
    okf = np.zeros(size, np.bool_)
    rho = np.zeros(size, np.int64)
    cnt = np.zeros(size, np.int64)
    gval = np.zeros(size)
    vv = np.zeros((size, n_blocks, n))
    free = np.empty(size, np.int64)
    for i in range(size):
        free[i] = size - 1 - i
    nfree = size

    hcap = 256
    hf = np.empty(hcap)
    hl = np.empty(hcap, np.int64)
    ho = np.empty(hcap, np.int64)
    hs = np.empty(hcap, np.int64)
    hn = 0
    ordinal = 0
    expansions = 1  # the origin
    branches = 0  # successor paths evaluated

    empty_bits = np.zeros(n, np.int8)

    for t in range(n_trees):
        # ---- allocate slot (same growth code as in the main loop)
        if nfree == 0:
            new = size * 2
            bits2 = np.zeros((new, n), np.int8); bits2[:size] = bits; bits = bits2
            lev2 = np.zeros(new, np.int64); lev2[:size] = lev; lev = lev2
            tre2 = np.zeros(new, np.int64); tre2[:size] = tre; tre = tre2
            last2 = np.zeros(new, np.int64); last2[:size] = last; last = last2
            msum2 = np.zeros(new, np.int64); msum2[:size] = msum; msum = msum2
            okf2 = np.zeros(new, np.bool_); okf2[:size] = okf; okf = okf2
            rho2 = np.zeros(new, np.int64); rho2[:size] = rho; rho = rho2
            cnt2 = np.zeros(new, np.int64); cnt2[:size] = cnt; cnt = cnt2
            g2 = np.zeros(new); g2[:size] = gval; gval = g2
            vv2 = np.zeros((new, n_blocks, n)); vv2[:size] = vv; vv = vv2
            free = np.empty(new, np.int64)
            for i in range(new - size):
                free[i] = new - 1 - i
            nfree = new - size
            size = new
        nfree -= 1
        s = free[nfree]
        bits[s, :] = 0
        bits[s, 0] = -1
        lev[s] = 1
        tre[s] = t
        last[s] = -1
        msum[s] = 0
        okf[s] = True
        rho[s] = 0
        cnt[s] = _count(t, 1, 0, True, n, pair_block, end_pair, cvec, after, binom)
        for k in range(n_blocks):
            for j in range(n):
                vv[s, k, j] = -wblk[t, k, 0, j]
        g = level_alpha[0] - 0.5 * wsum[t, 0, 0]
        gval[s] = g
        h = 0.0
        if use_h2:
            acc = 0.0
            for k in range(n_blocks):
                for j in range(1, n):
                    acc += abs(vv[s, k, j])
            h = h2_offset[t, 1] - acc
        if cnt[s] == 0 or not _hits(0, cnt[s], deltas[t], per_tree):
            free[nfree] = s
            nfree += 1
            continue
        branches += 1
        if hn == hcap:
            new = hcap * 2
            a = np.empty(new); a[:hcap] = hf; hf = a
            b = np.empty(new, np.int64); b[:hcap] = hl; hl = b
            c = np.empty(new, np.int64); c[:hcap] = ho; ho = c
            d = np.empty(new, np.int64); d[:hcap] = hs; hs = d
            hcap = new
        hf[hn] = g + h
        hl[hn] = 1
        ho[hn] = ordinal
        hs[hn] = s
        ordinal += 1
        hn += 1
        _sift_up(hf, hl, ho, hs, hn - 1)

    while hn > 0:
        if hn > cap:
            return STATUS_ERASED, -1, -1, expansions, branches, 0.0, empty_bits
        s = hs[0]
        hn -= 1
        if hn > 0:
            _swap(hf, hl, ho, hs, 0, hn)
            _sift_down(hf, hl, ho, hs, 0, hn)
        level = lev[s]
        t = tre[s]
        if level == n:
            return STATUS_OK, t, rho[s], expansions, branches, gval[s], bits[s].copy()
        expansions += 1

        # ---- counter state of the lower child (bit -1)
        j = level + 1
        m0 = msum[s]
        ok0 = okf[s]
        if level >= 2 and pair_block[t, j] != pair_block[t, level]:
            ok0 = ok0 and m0 == cvec[t, pair_block[t, level]]
            m0 = 0
        elif level < 2:
            m0 = 0
        m_lo = m0 - last[s]
        m_hi = m0 + last[s]
        gamma = _count(t, j, m_lo, ok0, n, pair_block, end_pair, cvec, after, binom)
        lo_rho = rho[s]
        total = cnt[s]
        mi = level  # 0-based index of the new bit
        vsum = 0.0
        for k in range(n_blocks):
            vsum += vv[s, k, mi]

        for branch in range(2):
            if branch == 0:
                bit = -1
                c_lo = lo_rho
                c_hi = lo_rho + gamma
                c_m = m_lo
            else:
                bit = 1
                c_lo = lo_rho + gamma
                c_hi = lo_rho + total
                c_m = m_hi
            if not _hits(c_lo, c_hi, deltas[t], per_tree):
                continue
            if nfree == 0:
                new = size * 2
                bits2 = np.zeros((new, n), np.int8); bits2[:size] = bits; bits = bits2
                lev2 = np.zeros(new, np.int64); lev2[:size] = lev; lev = lev2
                tre2 = np.zeros(new, np.int64); tre2[:size] = tre; tre = tre2
                last2 = np.zeros(new, np.int64); last2[:size] = last; last = last2
                msum2 = np.zeros(new, np.int64); msum2[:size] = msum; msum = msum2
                okf2 = np.zeros(new, np.bool_); okf2[:size] = okf; okf = okf2
                rho2 = np.zeros(new, np.int64); rho2[:size] = rho; rho = rho2
                cnt2 = np.zeros(new, np.int64); cnt2[:size] = cnt; cnt = cnt2
                g2 = np.zeros(new); g2[:size] = gval; gval = g2
                vv2 = np.zeros((new, n_blocks, n)); vv2[:size] = vv; vv = vv2
                free = np.empty(new, np.int64)
                for i in range(new - size):
                    free[i] = new - 1 - i
                nfree = new - size
                size = new
            nfree -= 1
            c = free[nfree]
            bits[c, :] = bits[s, :]
            bits[c, mi] = bit
            lev[c] = j
            tre[c] = t
            last[c] = bit
            msum[c] = c_m
            okf[c] = ok0
            rho[c] = c_lo
            cnt[c] = c_hi - c_lo
            g = gval[s] + level_alpha[mi] - bit * vsum - 0.5 * wsum[t, mi, mi]
            gval[c] = g
            branches += 1
            acc = 0.0
            for k in range(n_blocks):
                for q in range(n):
                    vv[c, k, q] = vv[s, k, q] + bit * wblk[t, k, mi, q]
                if use_h2:
                    for q in range(j, n):
                        acc += abs(vv[c, k, q])
            h = h2_offset[t, j] - acc if use_h2 else 0.0
            if hn == hcap:
                new = hcap * 2
                a = np.empty(new); a[:hcap] = hf; hf = a
                b = np.empty(new, np.int64); b[:hcap] = hl; hl = b
                cc = np.empty(new, np.int64); cc[:hcap] = ho; ho = cc
                d = np.empty(new, np.int64); d[:hcap] = hs; hs = d
                hcap = new
            hf[hn] = g + h
            hl[hn] = j
            ho[hn] = ordinal
            hs[hn] = c
            ordinal += 1
            hn += 1
            _sift_up(hf, hl, ho, hs, hn - 1)
        free[nfree] = s
        nfree += 1

    return STATUS_ERASED, -1, -1, expansions, branches, 0.0, empty_bits
