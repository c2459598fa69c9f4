"""Per-player information-set tree expansion.

A player's information state is their own attempt/outcome sequence; the set
of ground states compatible with it is abstracted to the set of possible
opponent boards.  Opponent reveal moves (their collisions with our hidden
pieces) never constrain their later placements, so which of our cells they
revealed is irrelevant to everything the viewing player can ever observe.
Under the abrupt ruleset a reveal consumes the opponent's turn, so there the
*number* of our pieces still hidden from them matters; boards are therefore
paired with that count.

Compatible sets are encoded as one Python integer bitmask: bit
``board + (hidden_count << num_cells)`` is set iff that configuration is
compatible.  Set algebra then becomes bigint bitwise arithmetic, and
opponent placements become shifts (adding cell bit ``e`` to every board in a
set is a left shift by ``2**e``).
"""

from __future__ import annotations

import functools

from .games import PLACED, OCCUPIED, GameSpec, win_tables


@functools.lru_cache(maxsize=None)
def tables(spec: GameSpec, viewer: int):
    """Bitmask tables over opponent-board configurations, from one side.

    Returns a dict with, for the viewer's opponent:
      has[c]   configurations whose board contains cell c
      win      configurations whose board is a win for the opponent
      blocks   number of hidden-count blocks (1 for classical)
    """
    n = spec.num_cells
    nboards = 1 << n
    blocks = (n + 1) // 2 + 1 if spec.abrupt else 1  # viewer piece count <= ceil(n/2)
    opp_win_table = win_tables(spec)[(3 - viewer) - 1]

    has = [0] * n
    win = 0
    for board in range(nboards):
        for c in range(n):
            if board >> c & 1:
                has[c] |= 1 << board
        if opp_win_table[board]:
            win |= 1 << board
    block = (1 << nboards) - 1
    rep = 0
    for u in range(blocks):
        rep |= block << (u * nboards)
    has = [_replicate(h, nboards, blocks) for h in has]
    win = _replicate(win, nboards, blocks)
    return {"has": has, "win": win, "blocks": blocks,
            "nboards": nboards, "all": rep}


def _replicate(mask: int, nboards: int, blocks: int) -> int:
    out = 0
    for u in range(blocks):
        out |= mask << (u * nboards)
    return out


def root_set(spec: GameSpec, player: int) -> int:
    """Compatible configurations at the player's first decision."""
    if player == 1:
        return 1  # empty opponent board, no hidden pieces
    # Player 2 first acts after player 1's opening placement (never a
    # collision on an empty board); drop openings that already won (1x1 hex).
    t = tables(spec, 2)
    s = 0
    for c in range(spec.num_cells):
        s |= 1 << (1 << c)
    return s & ~t["win"]


def expand(spec: GameSpec, viewer: int, own: int, seen: int, s: int):
    """Children of one decision node of the viewer's information-set tree.

    Yields (cell, outcome, own', seen', s') for every feasible own
    attempt/outcome pair, where s' is the compatible set at the viewer's
    *next* decision with that key.  Empty s' are not yielded.  Terminal
    continuations (either player winning, or a filled tic-tac-toe board)
    simply drop out of s'.
    """
    t = tables(spec, viewer)
    my_win = win_tables(spec)[viewer - 1]
    n = spec.num_cells
    nboards = t["nboards"]
    full = (1 << n) - 1
    ttt = spec.family == "phantom_ttt"
    legal = full & ~(own | seen)
    for a in range(n):
        if not legal >> a & 1:
            continue
        abit = 1 << a
        s_occ = s & t["has"][a]
        s_pl = s & ~t["has"][a]

        if s_occ:
            if not spec.abrupt:
                # Classical: the viewer retries immediately.
                yield a, OCCUPIED, own, seen | abit, s_occ
            else:
                s2 = _opponent_turn(spec, t, s_occ, own, ttt)
                if s2:
                    yield a, OCCUPIED, own, seen | abit, s2

        if s_pl:
            own2 = own | abit
            if my_win[own2]:
                continue  # terminal for every compatible board
            if ttt:
                # A board-filling placement without a line is a draw.
                s_pl = _drop_board(s_pl, full & ~own2, nboards, t["blocks"])
            if spec.abrupt:
                s_pl = s_pl << nboards  # our new piece is hidden from them
                s_pl &= t["all"]
            if s_pl:
                s2 = _opponent_turn(spec, t, s_pl, own2, ttt)
                if s2:
                    yield a, PLACED, own2, seen, s2


def _drop_board(s: int, board: int, nboards: int, blocks: int) -> int:
    for u in range(blocks):
        s &= ~(1 << (board + u * nboards))
    return s


def _opponent_turn(spec: GameSpec, t, s: int, own: int, ttt: bool) -> int:
    """Advance every configuration in s by one opponent turn.

    Classical: any number of reveals (irrelevant here) then one placement.
    Abrupt: either one reveal (consumes their turn; board unchanged; needs a
    hidden viewer piece) or one placement.  Configurations where the
    opponent's placement ends the game are dropped.
    """
    n = spec.num_cells
    nboards = t["nboards"]
    full = (1 << n) - 1
    out = 0
    if spec.abrupt:
        # Reveal: hidden count decreases; u=0 block has no hidden piece to
        # reveal and is shifted out automatically.
        out |= s >> nboards
    for e in range(n):
        if own >> e & 1:
            continue
        placed = (s & ~t["has"][e]) << (1 << e)
        out |= placed
    out &= ~t["win"] & t["all"]
    if ttt:
        # Opponent placements that fill the board without a line are draws.
        out = _drop_board(out, full & ~own, nboards, t["blocks"])
    return out
