"""Deterministic winning strategies for classical Dark Hex.

A deterministic first-player strategy is stored as an ordered action list
per information state: attempt the entries in order, advancing past each
one observed occupied.  The module provides

* :class:`OrderedActionStrategy` with a text serialization,
* ``to_behavioral`` / ``tabular_strategy`` conversions,
* ``verify_winning`` -- proves (or refutes) that a strategy wins against
  every opposing strategy, via one best-response computation, plus the
  exact rational value against a uniform opponent,
* ``search_deterministic_winner`` -- depth-first backtracking over the
  first player's choices, maintaining the set of opponent boards
  compatible with each information state as a single big-integer bitset.

The search treats the opponent as a per-ground-state adversary (it may
pick a different reply for every compatible board), which is at least as
strong as any real opposing strategy; hence any strategy it returns is
sound, and ``verify_winning`` certifies it independently.
"""

from __future__ import annotations

import functools
import pickle
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import _infosets
from .games import OCCUPIED, PLACED, GameSpec, InfoStateKey, win_tables
from .treeplex import TabularPolicy, Treeplex


def _require_classical_hex(spec: GameSpec):
    if spec.family != "dark_hex" or spec.abrupt:
        raise ValueError(
            "deterministic winning strategies apply to classical dark hex "
            f"only, not {spec.game_id}")


@dataclass(frozen=True)
class OrderedActionStrategy:
    """Per-infoset ordered action lists for player 1 (classical dark hex).

    Keys are the information states reached after each of player 1's own
    successful placements (and the root); within a key, successive
    occupied observations advance through the list.
    """

    spec: GameSpec
    lists: dict[InfoStateKey, tuple[int, ...]]

    def __post_init__(self):
        _require_classical_hex(self.spec)
        n = self.spec.num_cells
        for key, actions in self.lists.items():
            if key.player != 1:
                raise ValueError("ordered-action strategies are player 1's")
            if len(set(actions)) != len(actions) or not actions:
                raise ValueError(f"list at {key.serialize()!r} must hold "
                                 "distinct actions and be nonempty")
            blocked = key.own_mask | key.seen_mask
            for a in actions:
                if not 0 <= a < n or (1 << a) & blocked:
                    raise ValueError(
                        f"illegal action {a} at {key.serialize()!r}")

    def flat_actions(self) -> dict[InfoStateKey, int]:
        """Expand lists into one action per (collision-extended) key."""
        flat: dict[InfoStateKey, int] = {}
        for key, actions in self.lists.items():
            tokens = list(key.tokens)
            for k, a in enumerate(actions):
                flat[InfoStateKey(1, tuple(tokens))] = a
                tokens.append((a, OCCUPIED))
        return flat

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"DH-STRATEGY v1 {self.spec.game_id}"]
        for key in sorted(self.lists, key=lambda k: (len(k.tokens), k.tokens)):
            acts = ",".join(str(a) for a in self.lists[key])
            lines.append(f"{key.serialize()}\t{acts}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "OrderedActionStrategy":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("DH-STRATEGY v1 "):
            raise ValueError("missing 'DH-STRATEGY v1 <game>' header")
        from .games import spec_from_id

        spec = spec_from_id(lines[0].split()[2])
        lists = {}
        for ln in lines[1:]:
            key_s, _, acts = ln.partition("\t")
            key = InfoStateKey.parse(1, key_s)
            lists[key] = tuple(int(a) for a in acts.split(","))
        return cls(spec, lists)

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "OrderedActionStrategy":
        return cls.from_text(Path(path).read_text())


def to_behavioral(strategy: OrderedActionStrategy):
    """Deterministic behavioral policy: key -> {cell: probability}.

    Keys outside the strategy (unreachable under its own play) get the
    lowest-index legal action.
    """
    spec = strategy.spec
    n = spec.num_cells
    flat = strategy.flat_actions()

    def policy(key: InfoStateKey) -> dict[int, float]:
        if key.player != 1:
            raise ValueError("strategy defines player 1 only")
        cell = flat.get(key)
        if cell is None:
            legal = ((1 << n) - 1) & ~(key.own_mask | key.seen_mask)
            cell = (legal & -legal).bit_length() - 1
        return {cell: 1.0}

    return policy


def tabular_strategy(tp: Treeplex, strategy: OrderedActionStrategy
                     ) -> TabularPolicy:
    """Dense per-sequence form of the strategy over player 1's treeplex."""
    import numpy as np

    if tp.player != 1 or tp.spec != strategy.spec:
        raise ValueError("treeplex does not match the strategy")
    flat = {k.serialize(): a for k, a in strategy.flat_actions().items()}
    probs = np.zeros(tp.num_sequences)
    probs[0] = 1.0
    for i, key_s in enumerate(tp.iter_keys()):
        cell = flat.get(key_s)
        if cell is None:
            cell = int(tp.actions(i)[0])
        probs[tp.sequence(i, cell)] = 1.0
    return TabularPolicy(tp, probs)


# -- exact evaluation against a uniform opponent -----------------------------


def value_vs_uniform(strategy: OrderedActionStrategy) -> Fraction:
    """Exact expected payoff of the strategy against a uniform player 2.

    Player 1's play is deterministic, so the reachable tree only branches
    on player 2's moves; the recursion is exact rational arithmetic.
    """
    spec = strategy.spec
    n = spec.num_cells
    full = (1 << n) - 1
    win1, win2 = win_tables(spec)
    flat = strategy.flat_actions()

    def p1_key(tokens: tuple[str, ...]) -> int:
        key = InfoStateKey(1, tokens)
        cell = flat.get(key)
        if cell is None:
            legal = full & ~(key.own_mask | key.seen_mask)
            cell = (legal & -legal).bit_length() - 1
        return cell

    def walk(p1m, p2m, s1, s2, turn, tokens) -> Fraction:
        if turn == 1:
            cell = p1_key(tokens)
            bit = 1 << cell
            if p2m & bit:
                return walk(p1m, p2m, s1 | bit, s2, 1, tokens + ((cell, OCCUPIED),))
            own = p1m | bit
            if win1[own]:
                return Fraction(1)
            if (own | p2m) == full:
                raise AssertionError("hex board filled without a winner")
            return walk(own, p2m, s1, s2, 2, tokens + ((cell, PLACED),))
        legal = full & ~(p2m | s2)
        total = Fraction(0)
        weight = Fraction(1, bin(legal).count("1"))
        rem = legal
        while rem:
            bit = rem & -rem
            rem ^= bit
            if p1m & bit:
                total += weight * walk(p1m, p2m, s1, s2 | bit, 2, tokens)
            else:
                own = p2m | bit
                if win2[own]:
                    total += weight * Fraction(-1)
                elif (p1m | own) == full:
                    raise AssertionError("hex board filled without a winner")
                else:
                    total += weight * walk(p1m, own, s1, s2, 1, tokens)
        return total

    return walk(0, 0, 0, 0, 1, ())


@dataclass(frozen=True)
class Verification:
    proven: bool
    min_value: float
    uniform_value: Fraction


def verify_winning(engine, strategy: OrderedActionStrategy,
                   tol: float = 1e-9) -> Verification:
    """Certify that a strategy wins with certainty.

    ``min_value`` is min over all player-2 strategies of player 1's payoff
    (one gradient pass plus a greedy best response); ``proven`` iff it is
    1 within ``tol``.  ``uniform_value`` is the exact rational payoff
    against a uniform player 2 (equal to 1 for any proven strategy).
    """
    from .treeplex import greedy_best_response, to_sequence_form

    _require_classical_hex(engine.spec)
    x = to_sequence_form(engine.tp1, tabular_strategy(engine.tp1, strategy))
    # g2 = -A^T x does not depend on y; pass anything valid.
    g2 = engine.gradient(2, x, uniform_y(engine))
    _, v2 = greedy_best_response(engine.tp2, g2.values)
    min_value = -v2
    return Verification(proven=min_value >= 1.0 - tol,
                        min_value=min_value,
                        uniform_value=value_vs_uniform(strategy))


def uniform_y(engine):
    from .treeplex import uniform_sequence_form

    return uniform_sequence_form(engine.tp2)


# -- backtracking search ------------------------------------------------------


@functools.lru_cache(maxsize=4)
def _perfect_info_table(spec: GameSpec):
    """Minimax winner of perfect-information hex from every position."""
    win1, win2 = win_tables(spec)
    full = (1 << spec.num_cells) - 1
    memo: dict[tuple[int, int, int], int] = {}

    def winner(p1m, p2m, turn) -> int:
        key = (p1m, p2m, turn)
        got = memo.get(key)
        if got is not None:
            return got
        legal = full & ~(p1m | p2m)
        if legal == 0:
            raise AssertionError("hex board filled without a winner")
        result = 3 - turn
        rem = legal
        while rem:
            bit = rem & -rem
            rem ^= bit
            if turn == 1:
                own = p1m | bit
                sub = 1 if win1[own] else winner(own, p2m, 2)
            else:
                own = p2m | bit
                sub = 2 if win2[own] else winner(p1m, own, 1)
            if sub == turn:
                result = turn
                break
        memo[key] = result
        return result

    return winner


class _Search:
    def __init__(self, spec: GameSpec, perfect_info_prune: bool,
                 checkpoint_path=None, checkpoint_every: int = 2_000_000):
        _require_classical_hex(spec)
        self.spec = spec
        self.n = spec.num_cells
        self.full = (1 << self.n) - 1
        t = _infosets.tables(spec, viewer=1)
        self.has = t["has"]
        self.win_mask = t["win"]  # union of opponent-winning boards
        self.win1 = win_tables(spec)[0]
        self.memo: dict[tuple[int, int, int], int] = {}
        self.prune = (_perfect_info_table(spec) if perfect_info_prune
                      else None)
        self.nodes = 0
        self.checkpoint_path = checkpoint_path
        self.checkpoint_every = checkpoint_every
        if checkpoint_path is not None and Path(checkpoint_path).exists():
            with open(checkpoint_path, "rb") as fh:
                self.memo = pickle.load(fh)

    def _checkpoint(self):
        if self.checkpoint_path is not None:
            tmp = str(self.checkpoint_path) + ".tmp"
            with open(tmp, "wb") as fh:
                pickle.dump(self.memo, fh, protocol=pickle.HIGHEST_PROTOCOL)
            Path(tmp).replace(self.checkpoint_path)

    def _iter_boards(self, s):
        while s:
            bit = s & -s
            s ^= bit
            yield bit.bit_length() - 1

    def solve(self, own: int, seen: int, s: int) -> int:
        """Winning cell for player 1 at this state, or -1 if none exists.

        ``s`` is the bitset of opponent boards compatible with player 1's
        observations; a cell wins only if both its observable outcomes
        (occupied / placed) lead to certain wins against every compatible
        board and adversary reply.
        """
        key = (own, seen, s)
        got = self.memo.get(key)
        if got is not None:
            return got
        self.nodes += 1
        if self.checkpoint_path is not None and \
                self.nodes % self.checkpoint_every == 0:
            self._checkpoint()
        result = -1
        if self.prune is not None and any(
                self.prune(own, board, 1) != 1
                for board in self._iter_boards(s)):
            self.memo[key] = result
            return result
        legal = self.full & ~(own | seen)
        rem = legal
        while rem:
            bit = rem & -rem
            rem ^= bit
            cell = bit.bit_length() - 1
            s_occ = s & self.has[cell]
            s_pl = s & ~self.has[cell]
            ok = True
            if s_pl:
                own2 = own | bit
                if not self.win1[own2]:
                    s_next = self._opponent_moves(own2, s_pl)
                    if s_next < 0 or self.solve(own2, seen, s_next) < 0:
                        ok = False
            if ok and s_occ:
                if self.solve(own, seen | bit, s_occ) < 0:
                    ok = False
            if ok:
                result = cell
                break
        self.memo[key] = result
        return result

    def _opponent_moves(self, own: int, s: int) -> int:
        """Union over compatible boards of every adversary placement.

        Returns -1 if some board admits an immediately winning reply.
        """
        out = 0
        rem_cells = self.full & ~own
        rem = rem_cells
        while rem:
            bit = rem & -rem
            rem ^= bit
            out |= (s & ~self.has[bit.bit_length() - 1]) << bit
        if out & self.win_mask:
            return -1
        return out


def search_deterministic_winner(
        spec: GameSpec, perfect_info_prune: bool = True,
        allow_large: bool = False, checkpoint_path=None
) -> OrderedActionStrategy | None:
    """Backtracking search for a surely-winning deterministic strategy.

    Returns ``None`` when no choice of actions survives against the
    per-state adversary.  Sides above 3 require ``allow_large=True``
    (long-running; pass ``checkpoint_path`` to persist/resume the memo).
    """
    _require_classical_hex(spec)
    if spec.side > 3 and not allow_large:
        raise ValueError("side > 3 search is long-running; "
                         "pass allow_large=True to proceed")
    search = _Search(spec, perfect_info_prune, checkpoint_path)
    root_s = _infosets.root_set(spec, 1)
    if search.solve(0, 0, root_s) < 0:
        return None

    lists: dict[InfoStateKey, tuple[int, ...]] = {}

    def extract(own, seen, s, tokens):
        # Follow occupied observations to assemble one ordered list.
        actions = []
        state = (own, seen, s)
        while True:
            own, seen, s = state
            cell = search.memo[(own, seen, s)]
            assert cell >= 0
            actions.append(cell)
            bit = 1 << cell
            s_pl = s & ~search.has[cell]
            if s_pl:
                own2 = own | bit
                if not search.win1[own2]:
                    s_next = search._opponent_moves(own2, s_pl)
                    ntok = tokens + tuple((a, OCCUPIED) for a in actions[:-1]) \
                        + ((cell, PLACED),)
                    extract(own2, seen, s_next, ntok)
            s_occ = s & search.has[cell]
            if not s_occ:
                break
            state = (own, seen | bit, s_occ)
        lists[InfoStateKey(1, tokens)] = tuple(actions)

    extract(0, 0, root_s, ())
    return OrderedActionStrategy(spec, lists)
