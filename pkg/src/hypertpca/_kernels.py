"""Compiled inner loops of the color-coding programs.

Both loops visit only vertex pairs whose colors are admissible for the table
entry being filled, which numpy's dense products cannot exploit.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def accumulate_block(lam, A, B, I, tau, idx):
    """lam[idx[I_w | bit(tau_x)], x, z] += A[w, x] * B[w, z] over admissible (w, x, z).

    A already carries the interior edge product.  x and z must avoid the
    interior colors I_w and each other's color.
    """
    n = tau.shape[0]
    for w in range(A.shape[0]):
        Iw = I[w]
        for x in range(n):
            cx = tau[x]
            if (Iw >> cx) & 1:
                continue
            ax = A[w, x]
            if ax == 0.0:
                continue
            t = idx[Iw | (1 << cx)]
            for z in range(n):
                cz = tau[z]
                if cz == cx or (Iw >> cz) & 1:
                    continue
                lam[t, x, z] += ax * B[w, z]


@numba.njit(cache=True)
def convolve_level(lam, D, R_of, S_of, B_colors, R_colors, cstart, out):
    """out[S][x, :] += sum_z lam[B][x, z] D[R][z, :] for every split S = B + R.

    Vertices are numbered so that each color class is the contiguous range
    cstart[c]:cstart[c+1]; x runs over classes in B and z over classes in R.
    Columns are left dense: the caller zeroes those whose color lies in S.
    """
    n = out.shape[2]
    for b in range(lam.shape[0]):
        for ca in B_colors[b]:
            for x in range(cstart[ca], cstart[ca + 1]):
                for j in range(R_of.shape[1]):
                    r = R_of[b, j]
                    s = S_of[b, j]
                    for ce in R_colors[r]:
                        for z in range(cstart[ce], cstart[ce + 1]):
                            v = lam[b, x, z]
                            if v == 0.0:
                                continue
                            for y in range(n):
                                out[s, x, y] += v * D[r, z, y]
