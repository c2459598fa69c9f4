"""Brute-force reference computations over the explicit game tree.

Everything here is deliberately slow and simple: plain recursion over
``games.GameState`` with no sequence-form machinery, so that agreement with
the treeplex/gradient pipeline is evidence rather than tautology.  Only
meant for small boards; a history limit guards against accidental use on
the full-size games.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import games
from .games import Action, GameSpec, GameState


class OracleLimitError(RuntimeError):
    pass


@dataclass
class OracleLimits:
    max_histories: int = 10**7


@dataclass
class _Counter:
    limits: OracleLimits
    n: int = 0

    def tick(self):
        self.n += 1
        if self.n > self.limits.max_histories:
            raise OracleLimitError(
                f"game tree exceeds max_histories={self.limits.max_histories}")


def _policy_dist(policy, state: GameState):
    """Query a behavioral policy and sanity-check the returned distribution."""
    key = games.info_state_key(state, state.acting_player)
    dist = policy(key)
    legal = {a.cell for a in games.legal_actions(state)}
    if set(dist) - legal:
        raise ValueError(f"policy puts mass on illegal cells at {key.serialize()!r}")
    total = sum(dist.values())
    if abs(total - 1) > 1e-9 or any(p < 0 for p in dist.values()):
        raise ValueError(f"malformed distribution at key {key.serialize()!r}")
    return dist


def oracle_expected_value(spec: GameSpec, pi1, pi2,
                          limits: OracleLimits | None = None):
    """Exact expected player-1 payoff by full-tree recursion.

    Policies are callables InfoStateKey -> {cell: prob}.  Works with exact
    (Fraction) probabilities as well as floats.
    """
    counter = _Counter(limits or OracleLimits())

    def ev(state: GameState):
        counter.tick()
        if state.is_terminal:
            return state.terminal_reward
        dist = _policy_dist(pi1 if state.acting_player == 1 else pi2, state)
        total = 0
        for cell, p in dist.items():
            if p == 0:
                continue
            total += p * ev(games.apply_action(state, Action(cell)))
        return total

    return ev(games.initial_state(spec))


def oracle_best_response(spec: GameSpec, opponent, responder: int,
                         limits: OracleLimits | None = None):
    """(value, deterministic policy) of the responder's exact best response.

    Aggregates opponent-reach-weighted continuation values per responder
    infoset, deciding infosets from the deepest up so that every evaluation
    only depends on infosets that are already decided.
    """
    counter = _Counter(limits or OracleLimits())
    # Explicit tree: per node the state, the opponent reach, and children
    # indexed by cell.
    nodes: list[tuple[GameState, float, dict[int, int]]] = []
    by_infoset: dict[tuple, list[int]] = {}

    def build(state: GameState, opp_reach):
        counter.tick()
        idx = len(nodes)
        children: dict[int, int] = {}
        nodes.append((state, opp_reach, children))
        if state.is_terminal:
            return idx
        if state.acting_player == responder:
            key = games.info_state_key(state, responder)
            by_infoset.setdefault(key.tokens, []).append(idx)
            for a in games.legal_actions(state):
                children[a.cell] = build(games.apply_action(state, a), opp_reach)
        else:
            dist = _policy_dist(opponent, state)
            for a in games.legal_actions(state):
                children[a.cell] = build(games.apply_action(state, a),
                                         opp_reach * dist.get(a.cell, 0))
        return idx

    build(games.initial_state(spec), 1)

    decided: dict[tuple, int] = {}
    value_memo: dict[int, float] = {}

    def node_value(idx: int):
        """Responder payoff below node idx, with deeper infosets decided."""
        if idx in value_memo:
            return value_memo[idx]
        state, _, children = nodes[idx]
        if state.is_terminal:
            v = state.terminal_reward if responder == 1 else -state.terminal_reward
        elif state.acting_player == responder:
            key = games.info_state_key(state, responder)
            v = node_value(children[decided[key.tokens]])
        else:
            dist = _policy_dist(opponent, state)
            v = 0
            for cell, child in children.items():
                p = dist.get(cell, 0)
                if p != 0:
                    v += p * node_value(child)
        value_memo[idx] = v
        return v

    # Decide infosets deepest-first (responder key length strictly increases
    # down the tree, so every evaluation below only meets decided infosets,
    # and memoized values of deeper nodes never go stale).
    for tokens in sorted(by_infoset, key=len, reverse=True):
        best_cell, best_val = None, None
        state0, _, _ = nodes[by_infoset[tokens][0]]
        for a in games.legal_actions(state0):
            val = 0
            for idx in by_infoset[tokens]:
                _, opp_reach, children = nodes[idx]
                if opp_reach == 0:
                    continue
                val += opp_reach * node_value(children[a.cell])
            if best_val is None or val > best_val:
                best_cell, best_val = a.cell, val
        decided[tokens] = best_cell

    value = node_value(0)
    policy = {games.InfoStateKey(responder, tokens): cell
              for tokens, cell in decided.items()}
    return value, policy


def oracle_exploitability(spec: GameSpec, pi1, pi2,
                          limits: OracleLimits | None = None):
    br1, _ = oracle_best_response(spec, pi2, 1, limits)
    br2, _ = oracle_best_response(spec, pi1, 2, limits)
    return (br1 + br2) / 2


def oracle_nash_gap(spec: GameSpec, pi1, pi2, limits: OracleLimits | None = None):
    br1, _ = oracle_best_response(spec, pi2, 1, limits)
    br2, _ = oracle_best_response(spec, pi1, 2, limits)
    return br1 + br2


@dataclass
class TreeCensus:
    """Exhaustive-walk counts used as goldens for the fast counting paths."""

    histories: int = 0  # all nodes, root and terminals included
    decision_nodes: int = 0
    terminals: int = 0
    rewards: set = field(default_factory=set)
    infoset_keys: tuple[set, set] = field(default_factory=lambda: (set(), set()))

    @property
    def infosets(self) -> tuple[int, int]:
        return len(self.infoset_keys[0]), len(self.infoset_keys[1])


def census(spec: GameSpec, limits: OracleLimits | None = None) -> TreeCensus:
    counter = _Counter(limits or OracleLimits())
    out = TreeCensus()

    def walk(state: GameState):
        counter.tick()
        out.histories += 1
        if state.is_terminal:
            out.terminals += 1
            out.rewards.add(state.terminal_reward)
            return
        out.decision_nodes += 1
        p = state.acting_player
        out.infoset_keys[p - 1].add(games.info_state_key(state, p).tokens)
        for a in games.legal_actions(state):
            walk(games.apply_action(state, a))

    walk(games.initial_state(spec))
    return out


def make_uniform_policy(spec: GameSpec):
    """Uniform behavioral policy usable directly with the oracle."""
    full = (1 << spec.num_cells) - 1

    def policy(key: games.InfoStateKey):
        mask = full & ~(key.own_mask | key.seen_mask)
        legal = [c for c in range(spec.num_cells) if mask >> c & 1]
        return {c: 1 / len(legal) for c in legal}

    return policy
