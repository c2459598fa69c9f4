"""Game-tree traversal kernel: payoff gradients without storing the payoff
matrix.

One task per ordered pair of opening attempts (p1's first placement ``a``,
p2's first attempted cell ``b``).  Tasks run in ``n`` rounds arranged as a
Latin square (round r pairs a with b=(a+r) mod n), so at any moment at most
one running task writes into the g1 sequence range under opening ``a`` and
at most one into the g2 range under first attempt ``b`` -- the write
regions double as the concurrency buffers, and every buffer sees its
updates in a fixed order, making results bit-identical for any thread
count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from ._kernels import POP9

_STACK = 64


@njit(cache=True)
def _task(a, b, n, abrupt, ttt, win1, win2,
          ss1, ch1, ss2, ch2, x, y,
          want_g1, want_g2, want_ev, g1, g2):
    """Traverse everything under opening pair (a, b); returns the ev part."""
    full = (1 << n) - 1
    # State after p1's opening placement (never a collision).
    sq1 = 1 + a
    i1 = ch1[0, sq1]
    p1m0 = 1 << a

    st_p1m = np.empty(_STACK, dtype=np.int64)
    st_p2m = np.empty(_STACK, dtype=np.int64)
    st_s1 = np.empty(_STACK, dtype=np.int64)
    st_s2 = np.empty(_STACK, dtype=np.int64)
    st_turn = np.empty(_STACK, dtype=np.int64)
    st_i1 = np.empty(_STACK, dtype=np.int64)
    st_i2 = np.empty(_STACK, dtype=np.int64)
    st_sq1 = np.empty(_STACK, dtype=np.int64)
    st_sq2 = np.empty(_STACK, dtype=np.int64)
    st_rem = np.empty(_STACK, dtype=np.int64)

    ev = 0.0
    sp = 0
    st_p1m[0] = p1m0; st_p2m[0] = 0
    st_s1[0] = 0; st_s2[0] = 0
    st_turn[0] = 2
    st_i1[0] = i1; st_i2[0] = 0
    st_sq1[0] = sq1; st_sq2[0] = 0
    st_rem[0] = 1 << b  # p2's first attempt is pinned to this task

    while sp >= 0:
        rem = st_rem[sp]
        if rem == 0:
            sp -= 1
            continue
        abit = rem & -rem
        st_rem[sp] = rem & ~abit
        cell = POP9[abit - 1]

        p1m = st_p1m[sp]; p2m = st_p2m[sp]
        s1 = st_s1[sp]; s2 = st_s2[sp]
        turn = st_turn[sp]
        i1 = st_i1[sp]; i2 = st_i2[sp]
        sq1 = st_sq1[sp]; sq2 = st_sq2[sp]

        if turn == 1:
            own = p1m; opp = p2m; seen = s1; node = i1
        else:
            own = p2m; opp = p1m; seen = s2; node = i2
        legal = full & ~(own | seen)
        if turn == 1:
            sq = ss1[node] + POP9[legal & (abit - 1)]
        else:
            sq = ss2[node] + POP9[legal & (abit - 1)]

        if opp & abit:
            # Collision: mover learns the cell; classical retries, abrupt
            # forfeits the turn.  Board unchanged, never terminal.
            if turn == 1:
                nsq1 = sq; nsq2 = sq2
                ni1 = ch1[1, sq]; ni2 = i2
                ns1 = seen | abit; ns2 = s2
            else:
                nsq1 = sq1; nsq2 = sq
                ni1 = i1; ni2 = ch2[1, sq]
                ns1 = s1; ns2 = seen | abit
            nturn = (3 - turn) if abrupt else turn
            np1m = p1m; np2m = p2m
        else:
            own2 = own | abit
            if turn == 1:
                np1m = own2; np2m = p2m
                win = win1[own2]
                nsq1 = sq; nsq2 = sq2
            else:
                np1m = p1m; np2m = own2
                win = win2[own2]
                nsq1 = sq1; nsq2 = sq
            if win or (own2 | opp) == full:
                if win:
                    u = 1.0 if turn == 1 else -1.0
                    if want_g1:
                        g1[nsq1] += u * y[nsq2]
                    if want_g2:
                        g2[nsq2] -= u * x[nsq1]
                    if want_ev:
                        ev += u * x[nsq1] * y[nsq2]
                # Filled board without a line is a 0 draw: nothing to add.
                continue
            if turn == 1:
                ni1 = ch1[0, sq]; ni2 = i2
            else:
                ni1 = i1; ni2 = ch2[0, sq]
            ns1 = s1; ns2 = s2
            nturn = 3 - turn

        xr = x[nsq1]
        yr = y[nsq2]
        needed = ((want_g1 and yr != 0.0) or (want_g2 and xr != 0.0)
                  or (want_ev and xr != 0.0 and yr != 0.0))
        if not needed:
            continue
        if nturn == 1:
            nrem = full & ~(np1m | ns1)
        else:
            nrem = full & ~(np2m | ns2)
        sp += 1
        st_p1m[sp] = np1m; st_p2m[sp] = np2m
        st_s1[sp] = ns1; st_s2[sp] = ns2
        st_turn[sp] = nturn
        st_i1[sp] = ni1; st_i2[sp] = ni2
        st_sq1[sp] = nsq1; st_sq2[sp] = nsq2
        st_rem[sp] = nrem
    return ev


@njit(cache=True, parallel=True)
def gradient_rounds(n, abrupt, ttt, win1, win2, first_ok,
                    ss1, ch1, ss2, ch2, x, y,
                    want_g1, want_g2, want_ev, g1, g2):
    """All opening-pair tasks, Latin-square scheduled; per-task ev parts."""
    ev_task = np.zeros((n, n))
    for r in range(n):
        for a in prange(n):
            if first_ok[a]:
                b = (a + r) % n
                ev_task[a, b] = _task(
                    a, b, n, abrupt, ttt, win1, win2,
                    ss1, ch1, ss2, ch2, x, y,
                    want_g1, want_g2, want_ev, g1, g2)
    return ev_task
