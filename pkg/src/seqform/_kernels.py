"""Numba kernels operating on flat treeplex arrays.

All kernels take plain numpy arrays so they stay trivially cacheable.
``seq_start`` always carries a trailing sentinel equal to the number of
sequences, so infoset ``i`` owns sequence ids ``seq_start[i]..seq_start[i+1])``
and infosets are numbered in depth-first preorder (parents before children;
iterating in reverse is a valid bottom-up sweep).
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Popcount over 9-bit cell masks.
POP9 = np.array([bin(i).count("1") for i in range(512)], dtype=np.int64)


@njit(cache=True)
def seq_forward(parent_seq, seq_start, probs, x):
    """Sequence-form reach: x[(I,a)] = x[parent(I)] * probs[(I,a)]."""
    x[0] = 1.0
    for i in range(len(seq_start) - 1):
        base = x[parent_seq[i]]
        for s in range(seq_start[i], seq_start[i + 1]):
            x[s] = base * probs[s]


@njit(cache=True)
def flow_residual(parent_seq, seq_start, x):
    """Max per-infoset |sum(children) - parent| (flow conservation)."""
    worst = 0.0
    for i in range(len(seq_start) - 1):
        tot = 0.0
        for s in range(seq_start[i], seq_start[i + 1]):
            tot += x[s]
        r = abs(tot - x[parent_seq[i]])
        if r > worst:
            worst = r
    return worst


@njit(cache=True)
def policy_row_sums(seq_start, probs, sums):
    for i in range(len(seq_start) - 1):
        tot = 0.0
        for s in range(seq_start[i], seq_start[i + 1]):
            tot += probs[s]
        sums[i] = tot


@njit(cache=True)
def scale_rows(seq_start, probs, scale):
    for i in range(len(seq_start) - 1):
        for s in range(seq_start[i], seq_start[i + 1]):
            probs[s] *= scale[i]


@njit(cache=True)
def br_backward(parent_seq, seq_start, g, val, best):
    """Greedy treeplex best response, bottom-up.

    ``val`` must come in as a copy of ``g``; on return val[s] holds the
    optimal value of the subtree hanging off sequence s, ``best[i]`` the
    argmax action index at infoset i (lowest index wins ties), and the
    returned scalar is the best achievable x^T g over the whole treeplex.
    """
    for i in range(len(seq_start) - 2, -1, -1):
        vmax = -np.inf
        arg = 0
        for k in range(seq_start[i + 1] - seq_start[i]):
            v = val[seq_start[i] + k]
            if v > vmax:
                vmax = v
                arg = k
        best[i] = arg
        val[parent_seq[i]] += vmax
    return val[0]


@njit(cache=True)
def br_forward(parent_seq, seq_start, best, xhat):
    """Vertex strategy selecting ``best`` at every reached infoset."""
    for s in range(len(xhat)):
        xhat[s] = 0.0
    xhat[0] = 1.0
    for i in range(len(seq_start) - 1):
        r = xhat[parent_seq[i]]
        if r != 0.0:
            xhat[seq_start[i] + best[i]] = r
