"""Successive-cancellation list decoder kernel (LLR domain, min-sum).

Tree traversal keeps one LLR buffer and two partial-codeword buffers
(left/right child) per depth.  Path forks never copy buffers; instead each
depth has a row map from path index to buffer row which is permuted at
every information-bit decision, so work stays O(L n log n).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _scl_kernel(llr, frozen, L):
    n = llr.size
    m = 0
    while (1 << m) < n:
        m += 1
    off = np.empty(m + 1, dtype=np.int64)
    for d in range(m + 1):
        off[d] = 2 * n - 2 * (n >> d)
    alpha = np.zeros((L, 2 * n), dtype=np.float64)
    bl = np.zeros((L, 2 * n), dtype=np.int8)
    br = np.zeros((L, 2 * n), dtype=np.int8)
    row_a = np.zeros((m + 1, L), dtype=np.int64)
    row_bl = np.zeros((m + 1, L), dtype=np.int64)
    for d in range(m + 1):
        for l in range(L):
            row_a[d, l] = l
            row_bl[d, l] = l
    for l in range(L):
        for i in range(n):
            alpha[l, i] = llr[i]
    pm = np.full(L, np.inf)
    pm[0] = 0.0
    cand_pm = np.empty(2 * L)
    perm = np.empty(L, dtype=np.int64)
    ubit = np.empty(L, dtype=np.int8)
    tmp_row = np.empty(L, dtype=np.int64)
    new_pm = np.empty(L)
    taken = np.zeros(2 * L, dtype=np.bool_)

    for phi in range(n):
        if phi == 0:
            start = 1
        else:
            x = phi ^ (phi - 1)
            b = 0
            while (x >> (b + 1)) > 0:
                b += 1
            d0 = m - b
            size = n >> d0
            o_p = off[d0 - 1]
            o_c = off[d0]
            for l in range(L):
                ra = row_a[d0 - 1, l]
                rb = row_bl[d0, l]
                for i in range(size):
                    a = alpha[ra, o_p + i]
                    bb = alpha[ra, o_p + size + i]
                    if bl[rb, o_c + i] == 0:
                        alpha[l, o_c + i] = bb + a
                    else:
                        alpha[l, o_c + i] = bb - a
            # rows written in place only touch depth d0; reading depth d0-1 rows is safe
            for l in range(L):
                row_a[d0, l] = l
            start = d0 + 1
        for d in range(start, m + 1):
            size = n >> d
            o_p = off[d - 1]
            o_c = off[d]
            for l in range(L):
                ra = row_a[d - 1, l]
                for i in range(size):
                    a = alpha[ra, o_p + i]
                    bb = alpha[ra, o_p + size + i]
                    aa = abs(a)
                    ab = abs(bb)
                    mag = aa if aa < ab else ab
                    if (a < 0) != (bb < 0):
                        mag = -mag
                    alpha[l, o_c + i] = mag
            for l in range(L):
                row_a[d, l] = l

        o_m = off[m]
        if frozen[phi]:
            for l in range(L):
                lam = alpha[l, o_m]
                if lam < 0:
                    pm[l] += -lam
                ubit[l] = 0
        else:
            for l in range(L):
                lam = alpha[l, o_m]
                p0 = pm[l] + (-lam if lam < 0 else 0.0)
                p1 = pm[l] + (lam if lam > 0 else 0.0)
                cand_pm[2 * l] = p0
                cand_pm[2 * l + 1] = p1
                taken[2 * l] = False
                taken[2 * l + 1] = False
            for j in range(L):
                best = -1
                for c in range(2 * L):
                    if not taken[c] and (best < 0 or cand_pm[c] < cand_pm[best]):
                        best = c
                taken[best] = True
                perm[j] = best // 2
                ubit[j] = best % 2
                new_pm[j] = cand_pm[best]
            for j in range(L):
                pm[j] = new_pm[j]
            for d in range(m + 1):
                for j in range(L):
                    tmp_row[j] = row_a[d, perm[j]]
                for j in range(L):
                    row_a[d, j] = tmp_row[j]
                for j in range(L):
                    tmp_row[j] = row_bl[d, perm[j]]
                for j in range(L):
                    row_bl[d, j] = tmp_row[j]

        # write leaf decision and combine upward
        if (phi & 1) == 0:
            for l in range(L):
                bl[l, o_m] = ubit[l]
                row_bl[m, l] = l
        else:
            for l in range(L):
                br[l, o_m] = ubit[l]
            d = m
            idx = phi
            while d > 0 and (idx & 1) == 1:
                half = n >> d
                o_c = off[d]
                o_p = off[d - 1]
                parent = idx >> 1
                to_left = (parent & 1) == 0 or d - 1 == 0
                for l in range(L):
                    rb = row_bl[d, l]
                    for i in range(half):
                        v_r = br[l, o_c + i]
                        v_l = bl[rb, o_c + i] ^ v_r
                        if to_left:
                            bl[l, o_p + i] = v_l
                            bl[l, o_p + half + i] = v_r
                        else:
                            br[l, o_p + i] = v_l
                            br[l, o_p + half + i] = v_r
                if to_left:
                    for l in range(L):
                        row_bl[d - 1, l] = l
                d -= 1
                idx = parent

    codewords = np.empty((L, n), dtype=np.int8)
    for l in range(L):
        for i in range(n):
            codewords[l, i] = bl[l, off[0] + i]
    return codewords, pm


def scl_decode(llr: np.ndarray, frozen: np.ndarray, list_size: int):
    """Run the kernel; returns (codewords[L, n], path order by metric)."""
    codewords, pm = _scl_kernel(llr, np.ascontiguousarray(frozen, dtype=np.bool_), int(list_size))
    order = [int(i) for i in np.argsort(pm, kind="stable") if np.isfinite(pm[i])]
    return codewords, order
