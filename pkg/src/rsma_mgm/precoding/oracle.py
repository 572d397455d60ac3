"""Exhaustive grid search over two-antenna precoders, used as a reference.

Each active precoder is ``sqrt(a_s * P_t) * [cos(theta), sin(theta) e^{j phi}]``
with ``theta = i * (pi/2) / R`` (i = 0..R), ``phi = 2 pi l / R`` (l = 0..R-1)
and power fractions ``a_s`` on the simplex with step ``1/R``; full power is
always used.  The grids for ``R`` are subsets of those for ``2R``, so the
oracle value is non-decreasing under resolution doubling.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..schemes import Scheme
from .rates import PrecoderSet, rate_report, scheme_objective, stack_csit


def grid_directions(resolution: int) -> np.ndarray:
    """(n_dir, 2) unit vectors of the angular grid."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    th = np.arange(resolution + 1) * (np.pi / 2) / resolution
    ph = np.arange(resolution) * 2 * np.pi / resolution
    T, F = np.meshgrid(th, ph, indexing="ij")
    return np.stack([np.cos(T).ravel() + 0j, (np.sin(T) * np.exp(1j * F)).ravel()], axis=1)


@njit(cache=True)
def _sdma(G, sigma2, p_t, R):
    nd = G.shape[0]
    best = -1.0
    arg = (0, 0, 0)
    for i in range(nd):
        for k in range(nd):
            for q in range(1, R):
                a = q / R
                p1 = a * p_t
                p2 = (1 - a) * p_t
                s1 = min(p1 * G[i, 0] / (sigma2 + p2 * G[k, 0]), p1 * G[i, 1] / (sigma2 + p2 * G[k, 1]))
                s2 = min(p2 * G[k, 2] / (sigma2 + p1 * G[i, 2]), p2 * G[k, 3] / (sigma2 + p1 * G[i, 3]))
                v = min(s1, s2)
                if v > best:
                    best = v
                    arg = (i, k, q)
    return best, arg


@njit(cache=True)
def _noma(G, sigma2, p_t, R, other):
    # other: 0-based group index served by the private stream
    nd = G.shape[0]
    best = -1.0
    arg = (0, 0, 0)
    u0 = 2 * other
    for i in range(nd):
        for k in range(nd):
            for q in range(1, R):
                a = q / R
                pc = a * p_t
                pp = (1 - a) * p_t
                sc = 1e300
                for j in range(4):
                    s = pc * G[i, j] / (sigma2 + pp * G[k, j])
                    if s < sc:
                        sc = s
                sp = min(pp * G[k, u0] / sigma2, pp * G[k, u0 + 1] / sigma2)
                v = min(sc, sp)
                if v > best:
                    best = v
                    arg = (i, k, q)
    return best, arg


@njit(cache=True)
def _rsma(G, sigma2, p_t, R):
    nd = G.shape[0]
    best = -1.0
    arg = (0, 0, 0, 0, 0)
    for ic in range(nd):
        for i1 in range(nd):
            for i2 in range(nd):
                for qc in range(0, R + 1):
                    for q1 in range(0, R + 1 - qc):
                        q2 = R - qc - q1
                        pc = qc / R * p_t
                        p1 = q1 / R * p_t
                        p2 = q2 / R * p_t
                        rc = 1e300
                        for j in range(4):
                            r = math.log2(1 + pc * G[ic, j] / (sigma2 + p1 * G[i1, j] + p2 * G[i2, j]))
                            if r < rc:
                                rc = r
                        r1 = min(math.log2(1 + p1 * G[i1, 0] / (sigma2 + p2 * G[i2, 0])),
                                 math.log2(1 + p1 * G[i1, 1] / (sigma2 + p2 * G[i2, 1])))
                        r2 = min(math.log2(1 + p2 * G[i2, 2] / (sigma2 + p1 * G[i1, 2])),
                                 math.log2(1 + p2 * G[i2, 3] / (sigma2 + p1 * G[i1, 3])))
                        v = min(r1 + rc, r2 + rc, 0.5 * (rc + r1 + r2))
                        if v > best:
                            best = v
                            arg = (ic, i1, i2, qc, q1)
    return best, arg


def grid_oracle_maxmin(csit_all, p_t: float, sigma2: float, mode, resolution: int):
    """Grid-best precoders and their rates; NOMA tries both group orderings."""
    H = stack_csit(csit_all)
    if H.shape[1] != 2:
        raise ValueError("grid oracle supports exactly 2 transmit antennas")
    mode = Scheme.parse(mode)
    D = grid_directions(resolution)
    G = np.ascontiguousarray(np.abs(np.conj(H) @ D.T).T ** 2)     # (n_dir, 4)
    R = int(resolution)
    P = np.zeros((2, 3), dtype=complex)
    common_group = 2
    if mode is Scheme.SDMA:
        _, (i, k, q) = _sdma(G, sigma2, p_t, R)
        P[:, 1] = math.sqrt(q / R * p_t) * D[i]
        P[:, 2] = math.sqrt((R - q) / R * p_t) * D[k]
    elif mode is Scheme.NOMA:
        cands = []
        for cg in (1, 2):
            other = 3 - cg
            v, (i, k, q) = _noma(G, sigma2, p_t, R, other - 1)
            cands.append((v, cg, i, k, q))
        v, common_group, i, k, q = max(cands, key=lambda c: c[0])
        P[:, 0] = math.sqrt(q / R * p_t) * D[i]
        P[:, 3 - common_group] = math.sqrt((R - q) / R * p_t) * D[k]
    else:
        _, (ic, i1, i2, qc, q1) = _rsma(G, sigma2, p_t, R)
        q2 = R - qc - q1
        P[:, 0] = math.sqrt(qc / R * p_t) * D[ic]
        P[:, 1] = math.sqrt(q1 / R * p_t) * D[i1]
        P[:, 2] = math.sqrt(q2 / R * p_t) * D[i2]
    pre = PrecoderSet.from_matrix(P, mode, common_group)
    return pre, rate_report(H, pre, sigma2)


def oracle_objective(csit_all, p_t, sigma2, mode, resolution) -> float:
    pre, _ = grid_oracle_maxmin(csit_all, p_t, sigma2, mode, resolution)
    return scheme_objective(stack_csit(csit_all), pre.matrix, sigma2, mode, pre.noma_common_group)
