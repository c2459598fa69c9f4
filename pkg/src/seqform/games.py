"""Rules engines for Dark Hex and Phantom Tic-Tac-Toe (classical and abrupt).

Boards are indexed row-major. All board contents are kept as bitmasks over
cells, which makes win detection a table lookup and keeps states cheap to
copy. States are immutable values: ``apply_action`` returns a new state.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterator, Optional

PLACED = "placed"
OCCUPIED = "occupied"

_OUTCOME_CHAR = {PLACED: "p", OCCUPIED: "o"}
_CHAR_OUTCOME = {v: k for k, v in _OUTCOME_CHAR.items()}


class IllegalActionError(ValueError):
    pass


class TerminalStateError(ValueError):
    pass


@dataclass(frozen=True)
class GameSpec:
    """Which game: family, ruleset and (for dark hex) the board side."""

    family: str  # "dark_hex" | "phantom_ttt"
    ruleset: str  # "classical" | "abrupt"
    side: int = 3

    def __post_init__(self):
        if self.family not in ("dark_hex", "phantom_ttt"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.ruleset not in ("classical", "abrupt"):
            raise ValueError(f"unknown ruleset {self.ruleset!r}")
        if self.family == "dark_hex" and not 1 <= self.side <= 3:
            raise ValueError(f"dark_hex side must be in [1, 3], got {self.side}")
        if self.family == "phantom_ttt" and self.side != 3:
            raise ValueError("phantom_ttt board is fixed 3x3")

    @property
    def num_cells(self) -> int:
        return self.side * self.side

    @property
    def abrupt(self) -> bool:
        return self.ruleset == "abrupt"

    @property
    def game_id(self) -> str:
        if self.family == "phantom_ttt":
            return "apttt" if self.abrupt else "pttt"
        base = f"dh{self.side}"
        return "a" + base if self.abrupt else base


_GAME_IDS = {
    "dh1": ("dark_hex", "classical", 1),
    "dh2": ("dark_hex", "classical", 2),
    "dh3": ("dark_hex", "classical", 3),
    "adh1": ("dark_hex", "abrupt", 1),
    "adh2": ("dark_hex", "abrupt", 2),
    "adh3": ("dark_hex", "abrupt", 3),
    "pttt": ("phantom_ttt", "classical", 3),
    "apttt": ("phantom_ttt", "abrupt", 3),
}


def spec_from_id(game_id: str) -> GameSpec:
    try:
        family, ruleset, side = _GAME_IDS[game_id]
    except KeyError:
        raise ValueError(f"unknown game id {game_id!r}") from None
    return GameSpec(family, ruleset, side)


def _hex_neighbors(side: int, cell: int) -> Iterator[int]:
    # Standard hex rhombus adjacency: (r±1,c), (r,c±1), (r+1,c−1), (r−1,c+1).
    r, c = divmod(cell, side)
    for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)):
        rr, cc = r + dr, c + dc
        if 0 <= rr < side and 0 <= cc < side:
            yield rr * side + cc


def _hex_connected(side: int, mask: int, player: int) -> bool:
    # Player 1 connects top row to bottom row, player 2 left col to right col.
    if player == 1:
        frontier = [c for c in range(side) if mask >> c & 1]
        goal = set(range(side * (side - 1), side * side))
    else:
        frontier = [r * side for r in range(side) if mask >> (r * side) & 1]
        goal = {r * side + side - 1 for r in range(side)}
    seen = set(frontier)
    while frontier:
        cell = frontier.pop()
        if cell in goal:
            return True
        for nb in _hex_neighbors(side, cell):
            if mask >> nb & 1 and nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    return False


_TTT_LINES = (0b111, 0b111000, 0b111000000,
              0b1001001, 0b10010010, 0b100100100,
              0b100010001, 0b1010100)


@functools.lru_cache(maxsize=None)
def win_tables(spec: GameSpec) -> tuple[tuple[bool, ...], tuple[bool, ...]]:
    """(p1_wins, p2_wins): per piece-mask, whether that mask is a win."""
    n = spec.num_cells
    if spec.family == "phantom_ttt":
        table = tuple(any(m & line == line for line in _TTT_LINES)
                      for m in range(1 << n))
        return table, table
    p1 = tuple(_hex_connected(spec.side, m, 1) for m in range(1 << n))
    p2 = tuple(_hex_connected(spec.side, m, 2) for m in range(1 << n))
    return p1, p2


@dataclass(frozen=True)
class Action:
    cell: int


@dataclass(frozen=True)
class InfoStateKey:
    """One player's view: their own attempts and the observed outcomes."""

    player: int
    tokens: tuple[tuple[int, str], ...]

    def serialize(self) -> str:
        return "".join(f"{cell}{_OUTCOME_CHAR[outcome]}" for cell, outcome in self.tokens)

    @classmethod
    def parse(cls, player: int, text: str) -> "InfoStateKey":
        if len(text) % 2:
            raise ValueError(f"malformed info state key {text!r}")
        tokens = []
        for i in range(0, len(text), 2):
            cell, oc = text[i], text[i + 1]
            if not cell.isdigit() or oc not in _CHAR_OUTCOME:
                raise ValueError(f"malformed info state key {text!r}")
            tokens.append((int(cell), _CHAR_OUTCOME[oc]))
        return cls(player, tuple(tokens))

    @property
    def own_mask(self) -> int:
        return _mask_of(self.tokens, PLACED)

    @property
    def seen_mask(self) -> int:
        return _mask_of(self.tokens, OCCUPIED)


def _mask_of(tokens, outcome) -> int:
    m = 0
    for cell, o in tokens:
        if o == outcome:
            m |= 1 << cell
    return m


@dataclass(frozen=True)
class GameState:
    """Ground-truth history of one play-through (both transcripts)."""

    spec: GameSpec
    p1_mask: int = 0
    p2_mask: int = 0
    p1_seen: int = 0  # opponent cells revealed to player 1
    p2_seen: int = 0
    acting_player: int = 1
    transcript: tuple[tuple[int, int, str], ...] = ()
    terminal_reward: Optional[int] = None  # player-1 payoff in {-1, 0, +1}

    @property
    def is_terminal(self) -> bool:
        return self.terminal_reward is not None

    def player_mask(self, player: int) -> int:
        return self.p1_mask if player == 1 else self.p2_mask

    def seen_mask(self, player: int) -> int:
        return self.p1_seen if player == 1 else self.p2_seen

    @property
    def board(self) -> list[int]:
        """Per-cell contents: 0 empty, 1 player 1, 2 player 2."""
        return [1 if self.p1_mask >> c & 1 else 2 if self.p2_mask >> c & 1 else 0
                for c in range(self.spec.num_cells)]


def initial_state(spec: GameSpec) -> GameState:
    return GameState(spec=spec)


def legal_cells_mask(spec: GameSpec, own_mask: int, seen_mask: int) -> int:
    full = (1 << spec.num_cells) - 1
    return full & ~(own_mask | seen_mask)


def legal_actions(state: GameState) -> list[Action]:
    """Cells not already the mover's own and not revealed occupied to them."""
    if state.is_terminal:
        raise TerminalStateError("legal_actions on terminal state")
    p = state.acting_player
    mask = legal_cells_mask(state.spec, state.player_mask(p), state.seen_mask(p))
    return [Action(c) for c in range(state.spec.num_cells) if mask >> c & 1]


def apply_action(state: GameState, action: Action) -> GameState:
    """Attempt a placement; pure function of (state, action)."""
    if state.is_terminal:
        raise TerminalStateError("apply_action on terminal state")
    spec = state.spec
    p = state.acting_player
    cell = action.cell
    legal = legal_cells_mask(spec, state.player_mask(p), state.seen_mask(p))
    if not 0 <= cell < spec.num_cells or not legal >> cell & 1:
        raise IllegalActionError(f"cell {cell} is not legal for player {p}")
    bit = 1 << cell
    opp_mask = state.player_mask(3 - p)
    transcript = state.transcript + ((p, cell, OCCUPIED if opp_mask & bit else PLACED),)

    if opp_mask & bit:
        # Collision: mover learns the cell is taken.  Classical: retry now;
        # abrupt: lose the turn.
        seen = dict(p1_seen=state.p1_seen, p2_seen=state.p2_seen)
        seen["p1_seen" if p == 1 else "p2_seen"] = state.seen_mask(p) | bit
        return GameState(
            spec=spec, p1_mask=state.p1_mask, p2_mask=state.p2_mask,
            acting_player=p if not spec.abrupt else 3 - p,
            transcript=transcript, **seen)

    own = state.player_mask(p) | bit
    p1_mask = own if p == 1 else state.p1_mask
    p2_mask = own if p == 2 else state.p2_mask
    reward: Optional[int] = None
    if win_tables(spec)[p - 1][own]:
        reward = 1 if p == 1 else -1
    elif (p1_mask | p2_mask) == (1 << spec.num_cells) - 1:
        if spec.family == "dark_hex":
            raise RuntimeError("hex board filled without a winner")  # Hex theorem
        reward = 0
    return GameState(
        spec=spec, p1_mask=p1_mask, p2_mask=p2_mask,
        p1_seen=state.p1_seen, p2_seen=state.p2_seen,
        acting_player=3 - p, transcript=transcript, terminal_reward=reward)


def info_state_key(state: GameState, player: int) -> InfoStateKey:
    tokens = tuple((cell, outcome) for p, cell, outcome in state.transcript
                   if p == player)
    return InfoStateKey(player, tokens)


def replay(spec: GameSpec, cells: list[int]) -> GameState:
    """Apply a sequence of attempted cells from the initial state."""
    state = initial_state(spec)
    for c in cells:
        state = apply_action(state, Action(c))
    return state
