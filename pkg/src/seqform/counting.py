"""Exact game-size counting without walking the explicit tree.

History counting memoizes subtree sizes on the compressed ground state
(both boards, both revealed-cell sets, acting player): two histories that
agree on those have identical futures, so the tens-of-billions-node trees
collapse to a few million distinct states.

Information-state counting walks each player's information-set tree (one
node per reachable key at which the player acts), which is exactly the
number of infosets, using the compatible-set machinery of ``_infosets``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from . import _infosets
from .games import GameSpec, win_tables


@dataclass(frozen=True)
class GameCounts:
    histories: int        # all tree nodes: decision nodes and terminals
    decision_nodes: int
    terminals: int
    infostates_p1: int
    infostates_p2: int

    @property
    def infostates_total(self) -> int:
        return self.infostates_p1 + self.infostates_p2


def count_histories(spec: GameSpec) -> tuple[int, int]:
    """(total nodes, terminal nodes) of the full game tree, root included."""
    sys.setrecursionlimit(10000)
    n = spec.num_cells
    full = (1 << n) - 1
    win1, win2 = win_tables(spec)
    ttt = spec.family == "phantom_ttt"
    abrupt = spec.abrupt
    memo: dict[int, tuple[int, int]] = {}

    def rec(p1: int, p2: int, s1: int, s2: int, turn: int) -> tuple[int, int]:
        key = p1 | p2 << n | s1 << 2 * n | s2 << 3 * n | turn << 4 * n
        hit = memo.get(key)
        if hit is not None:
            return hit
        own, opp = (p1, p2) if turn == 1 else (p2, p1)
        seen = s1 if turn == 1 else s2
        win = win1 if turn == 1 else win2
        nodes, terms = 1, 0
        legal = full & ~(own | seen)
        for a in range(n):
            if not legal >> a & 1:
                continue
            bit = 1 << a
            if opp & bit:
                ns1, ns2 = (s1 | bit, s2) if turn == 1 else (s1, s2 | bit)
                cn, ct = rec(p1, p2, ns1, ns2, 3 - turn if abrupt else turn)
            else:
                own2 = own | bit
                if win[own2] or (own2 | opp) == full:
                    if not win[own2] and not ttt:
                        raise RuntimeError("hex board filled without a winner")
                    cn, ct = 1, 1
                else:
                    np1, np2 = (own2, p2) if turn == 1 else (p1, own2)
                    cn, ct = rec(np1, np2, s1, s2, 3 - turn)
            nodes += cn
            terms += ct
        memo[key] = (nodes, terms)
        return nodes, terms

    return rec(0, 0, 0, 0, 1)


def count_infosets(spec: GameSpec, player: int) -> int:
    """Number of distinct information states at which the player acts."""
    sys.setrecursionlimit(10000)
    memo: dict[tuple[int, int, int], int] = {}

    def rec(own: int, seen: int, s: int) -> int:
        key = (own, seen, s)
        hit = memo.get(key)
        if hit is not None:
            return hit
        total = 1
        for _, _, own2, seen2, s2 in _infosets.expand(spec, player, own, seen, s):
            total += rec(own2, seen2, s2)
        memo[key] = total
        return total

    root = _infosets.root_set(spec, player)
    if not root:
        return 0
    return rec(0, 0, root)


def count_game(spec: GameSpec) -> GameCounts:
    histories, terminals = count_histories(spec)
    return GameCounts(
        histories=histories,
        decision_nodes=histories - terminals,
        terminals=terminals,
        infostates_p1=count_infosets(spec, 1),
        infostates_p2=count_infosets(spec, 2),
    )


def round_3sf(x: int) -> str:
    """Table-style 3-significant-figure rendering, e.g. 19.12B, 6.07M."""
    for suffix, scale in (("B", 10**9), ("M", 10**6), ("K", 10**3)):
        if x >= scale:
            return f"{x / scale:.2f}{suffix}"
    return str(x)
