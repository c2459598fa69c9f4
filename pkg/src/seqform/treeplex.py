"""Per-player sequence-form decision structure (treeplex) and strategies.

The treeplex is stored as flat arrays in depth-first preorder: infoset 0 is
the player's first decision, children always carry larger ids than their
parents, and sequence ids are dealt out in the same sweep (sequence 0 is
the empty sequence).  This gives bottom-up passes by simple reverse
iteration and makes the sequence ids of the subtree under each opening
move contiguous, which the parallel gradient engine relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from . import _infosets, _kernels
from .games import PLACED, OCCUPIED, GameSpec, InfoStateKey

_FLOW_TOL = 1e-12
_RENORM_TOL = 1e-9


class _Grow:
    """Append-only numpy array with amortized growth."""

    def __init__(self, dtype, cap=1 << 16):
        self.arr = np.empty(cap, dtype=dtype)
        self.n = 0

    def append(self, value):
        if self.n == len(self.arr):
            self.arr = np.resize(self.arr, len(self.arr) * 2)
        self.arr[self.n] = value
        self.n += 1

    def done(self):
        return self.arr[: self.n].copy()


@dataclass
class Treeplex:
    spec: GameSpec
    player: int
    parent_seq: np.ndarray      # i32[num_infosets], sequence id of parent
    seq_start: np.ndarray       # i32[num_infosets + 1], trailing sentinel
    own: np.ndarray             # u16[num_infosets] mover's pieces
    seen: np.ndarray            # u16[num_infosets] revealed opponent cells
    parent_outcome: np.ndarray  # i8: 0 placed, 1 occupied, -1 first move
    child: np.ndarray           # i32[2, num_sequences]: next infoset or -1

    @property
    def num_infosets(self) -> int:
        return len(self.parent_seq)

    @property
    def num_sequences(self) -> int:
        return int(self.seq_start[-1])

    def legal_mask(self, infoset: int) -> int:
        full = (1 << self.spec.num_cells) - 1
        return full & ~(int(self.own[infoset]) | int(self.seen[infoset]))

    def actions(self, infoset: int) -> list[int]:
        m = self.legal_mask(infoset)
        return [c for c in range(self.spec.num_cells) if m >> c & 1]

    def num_actions(self, infoset: int) -> int:
        return int(self.seq_start[infoset + 1] - self.seq_start[infoset])

    def sequence(self, infoset: int, cell: int) -> int:
        m = self.legal_mask(infoset)
        if not m >> cell & 1:
            raise ValueError(f"cell {cell} not legal at infoset {infoset}")
        return int(self.seq_start[infoset]) + (m & ((1 << cell) - 1)).bit_count()

    def infoset_of_sequence(self, seq: int) -> int:
        if seq == 0:
            raise ValueError("empty sequence has no infoset")
        return int(np.searchsorted(self.seq_start, seq, side="right")) - 1

    def key_of(self, infoset: int) -> InfoStateKey:
        tokens = []
        i = infoset
        while True:
            out = int(self.parent_outcome[i])
            if i == 0 and out == -1 and int(self.parent_seq[i]) == 0:
                break
            pseq = int(self.parent_seq[i])
            parent = self.infoset_of_sequence(pseq)
            cell = self.actions(parent)[pseq - int(self.seq_start[parent])]
            tokens.append((cell, PLACED if out == 0 else OCCUPIED))
            i = parent
        return InfoStateKey(self.player, tuple(reversed(tokens)))

    def node_of_key(self, key: InfoStateKey) -> int:
        i = 0
        for cell, outcome in key.tokens:
            seq = self.sequence(i, cell)
            i = int(self.child[0 if outcome == PLACED else 1, seq])
            if i < 0:
                raise KeyError(f"unreachable info state {key.serialize()!r}")
        return i

    def iter_keys(self) -> Iterator[str]:
        """Serialized keys in infoset-id (preorder) order, O(1) per step."""
        for _, key in self.iter_items():
            yield key

    def iter_items(self) -> Iterator[tuple[int, str]]:
        """(infoset id, serialized key) pairs in infoset-id order."""
        # Depth-first walk mirroring the builder, so order matches ids.
        stack = [(0, "")]
        while stack:
            i, key = stack.pop()
            yield i, key
            kids = []
            m = self.legal_mask(i)
            base = int(self.seq_start[i])
            k = 0
            for c in range(self.spec.num_cells):
                if not m >> c & 1:
                    continue
                for out_ix, ch in ((1, "o"), (0, "p")):
                    j = int(self.child[out_ix, base + k])
                    if j >= 0:
                        kids.append((j, key + f"{c}{ch}"))
                k += 1
            stack.extend(sorted(kids, reverse=True))  # smallest id on top


def build_treeplex(spec: GameSpec, player: int) -> Treeplex:
    parent_seq = _Grow(np.int32)
    seq_start = _Grow(np.int32)
    own_arr = _Grow(np.uint16)
    seen_arr = _Grow(np.uint16)
    parent_out = _Grow(np.int8)
    child_pl = _Grow(np.int32)
    child_oc = _Grow(np.int32)
    child_pl.append(-1)  # slot for the empty sequence, so index == seq id
    child_oc.append(-1)
    next_seq = 1  # sequence 0 is the empty sequence

    def new_node(own, seen, pseq, pout):
        nonlocal next_seq
        i = parent_seq.n
        parent_seq.append(pseq)
        own_arr.append(own)
        seen_arr.append(seen)
        parent_out.append(pout)
        seq_start.append(next_seq)
        nact = (((1 << spec.num_cells) - 1) & ~(own | seen)).bit_count()
        for _ in range(nact):
            child_pl.append(-1)
            child_oc.append(-1)
        next_seq += nact
        return i

    def build(own, seen, s, pseq, pout):
        i = new_node(own, seen, pseq, pout)
        base = int(seq_start.arr[i])
        legal = ((1 << spec.num_cells) - 1) & ~(own | seen)
        for cell, outcome, own2, seen2, s2 in _infosets.expand(spec, player, own, seen, s):
            seq = base + (legal & ((1 << cell) - 1)).bit_count()
            j = build(own2, seen2, s2, seq, 0 if outcome == PLACED else 1)
            (child_pl if outcome == PLACED else child_oc).arr[seq] = j
        return i

    root = _infosets.root_set(spec, player)
    if root:
        import sys
        sys.setrecursionlimit(100000)
        build(0, 0, root, 0, -1)
    seq_start.append(next_seq)  # sentinel
    child = np.stack([child_pl.done(), child_oc.done()])
    return Treeplex(
        spec=spec, player=player,
        parent_seq=parent_seq.done(), seq_start=seq_start.done(),
        own=own_arr.done(), seen=seen_arr.done(),
        parent_outcome=parent_out.done(), child=child)


def build_treeplexes(spec: GameSpec) -> tuple[Treeplex, Treeplex]:
    return build_treeplex(spec, 1), build_treeplex(spec, 2)


def save_treeplex(path, tp: Treeplex):
    np.savez_compressed(
        path, game_id=tp.spec.game_id, player=tp.player,
        parent_seq=tp.parent_seq, seq_start=tp.seq_start, own=tp.own,
        seen=tp.seen, parent_outcome=tp.parent_outcome, child=tp.child)


def load_treeplex(path, spec: GameSpec) -> Treeplex:
    with np.load(path) as z:
        if str(z["game_id"]) != spec.game_id:
            raise ValueError(f"treeplex cache is for {z['game_id']}, not {spec.game_id}")
        return Treeplex(
            spec=spec, player=int(z["player"]),
            parent_seq=z["parent_seq"], seq_start=z["seq_start"],
            own=z["own"], seen=z["seen"],
            parent_outcome=z["parent_outcome"], child=z["child"])


@dataclass
class SequenceFormStrategy:
    """Reach-probability vector over one player's sequences."""

    player: int
    values: np.ndarray

    def validate(self, tp: Treeplex, tol: float = 1e-9):
        if len(self.values) != tp.num_sequences:
            raise ValueError("strategy/treeplex dimension mismatch")
        if abs(self.values[0] - 1.0) > tol:
            raise ValueError("root sequence mass must be 1")
        resid = _kernels.flow_residual(tp.parent_seq, tp.seq_start, self.values)
        if resid > tol:
            raise ValueError(f"flow conservation violated (residual {resid:.3g})")
        return self


class TabularPolicy:
    """Dense behavioral policy: one action probability per sequence.

    Also usable as a key-queried behavioral policy (``policy(key) -> dict``)
    so the same object feeds both the fast pipeline and the oracle.
    """

    def __init__(self, tp: Treeplex, probs: np.ndarray):
        if len(probs) != tp.num_sequences:
            raise ValueError("policy/treeplex dimension mismatch")
        self.tp = tp
        self.probs = np.asarray(probs, dtype=np.float64)
        self._normalize()

    def _normalize(self):
        if np.any(self.probs < -1e-15) or not np.all(np.isfinite(self.probs)):
            raise ValueError("malformed distribution: negative or non-finite")
        np.clip(self.probs, 0.0, None, out=self.probs)
        self.probs[0] = 1.0  # the empty sequence carries no behavioral choice
        n = self.tp.num_infosets
        sums = np.empty(n)
        _kernels.policy_row_sums(self.tp.seq_start, self.probs, sums)
        bad = np.abs(sums - 1.0) > _RENORM_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(
                f"distribution at infoset {i} sums to {sums[i]!r}, not 1")
        _kernels.scale_rows(self.tp.seq_start, self.probs, 1.0 / sums)

    def __call__(self, key: InfoStateKey) -> dict[int, float]:
        i = self.tp.node_of_key(key)
        s0 = int(self.tp.seq_start[i])
        return {c: float(self.probs[s0 + k])
                for k, c in enumerate(self.tp.actions(i))}

    def sequence_form(self) -> SequenceFormStrategy:
        x = np.empty(self.tp.num_sequences)
        _kernels.seq_forward(self.tp.parent_seq, self.tp.seq_start, self.probs, x)
        return SequenceFormStrategy(self.tp.player, x)


def uniform_policy(tp: Treeplex) -> TabularPolicy:
    probs = np.empty(tp.num_sequences)
    probs[0] = 1.0
    nact = np.diff(tp.seq_start)
    probs[1:] = np.repeat(1.0 / nact, nact) if tp.num_infosets else 1.0
    return TabularPolicy(tp, probs)


def random_policy(tp: Treeplex, rng: np.random.Generator) -> TabularPolicy:
    raw = rng.random(tp.num_sequences) + 1e-3
    probs = np.empty_like(raw)
    for i in range(tp.num_infosets):
        s0, s1 = int(tp.seq_start[i]), int(tp.seq_start[i + 1])
        probs[s0:s1] = raw[s0:s1] / raw[s0:s1].sum()
    return TabularPolicy(tp, probs)


def tabular_from_behavioral(tp: Treeplex, policy: Callable) -> TabularPolicy:
    """Materialize a key-queried behavioral policy onto the treeplex."""
    probs = np.zeros(tp.num_sequences)
    for i, key_str in enumerate(tp.iter_keys()):
        dist = policy(InfoStateKey.parse(tp.player, key_str))
        actions = tp.actions(i)
        if set(dist) - set(actions):
            raise ValueError(f"policy puts mass on illegal cells at {key_str!r}")
        s0 = int(tp.seq_start[i])
        for k, c in enumerate(actions):
            probs[s0 + k] = dist.get(c, 0.0)
    return TabularPolicy(tp, probs)


def to_sequence_form(tp: Treeplex, policy) -> SequenceFormStrategy:
    """Behavioral -> sequence form, for tabular or key-queried policies."""
    if not isinstance(policy, TabularPolicy):
        policy = tabular_from_behavioral(tp, policy)
    if policy.tp is not tp and policy.tp.num_sequences != tp.num_sequences:
        raise ValueError("policy built on a different treeplex")
    return policy.sequence_form()


def uniform_sequence_form(tp: Treeplex) -> SequenceFormStrategy:
    return uniform_policy(tp).sequence_form()


def behavioral_from_sequence_form(tp: Treeplex, strategy) -> TabularPolicy:
    """Invert seq_forward: per-infoset conditionals, uniform where unreached."""
    x = strategy.values if isinstance(strategy, SequenceFormStrategy) else strategy
    if len(x) != tp.num_sequences:
        raise ValueError("strategy/treeplex dimension mismatch")
    probs = np.empty(tp.num_sequences)
    probs[0] = 1.0
    if tp.num_infosets:
        nact = np.diff(tp.seq_start)
        denom = np.repeat(x[tp.parent_seq], nact)
        body = x[1:]
        reached = denom > 0.0
        probs[1:] = np.where(reached, np.divide(
            body, denom, out=np.zeros_like(body), where=reached),
            np.repeat(1.0 / nact, nact))
    return TabularPolicy(tp, probs)


@dataclass
class GradientVector:
    player: int
    values: np.ndarray


def greedy_best_response(tp: Treeplex, g) -> tuple[SequenceFormStrategy, float]:
    """argmax over the treeplex polytope of x^T g, plus the maximum.

    Deterministic: ties broken toward the lowest action index.  The returned
    value is re-checked against an independent dot product.
    """
    values = g.values if isinstance(g, GradientVector) else np.asarray(g, dtype=np.float64)
    if len(values) != tp.num_sequences:
        raise ValueError("gradient/treeplex dimension mismatch")
    val = values.copy()
    best = np.zeros(tp.num_infosets, dtype=np.int64)
    opt = _kernels.br_backward(tp.parent_seq, tp.seq_start, values, val, best)
    xhat = np.empty(tp.num_sequences)
    _kernels.br_forward(tp.parent_seq, tp.seq_start, best, xhat)
    check = float(xhat @ values)
    if abs(check - opt) > 1e-9 * max(1.0, abs(opt)):
        raise AssertionError(f"best-response self-check failed: {opt} vs {check}")
    strategy = SequenceFormStrategy(tp.player, xhat)
    return strategy, float(opt)


def best_response_policy(tp: Treeplex, g) -> TabularPolicy:
    """Deterministic best-response as a behavioral policy (lowest-index
    action at unreached infosets)."""
    values = g.values if isinstance(g, GradientVector) else np.asarray(g, dtype=np.float64)
    val = values.copy()
    best = np.zeros(tp.num_infosets, dtype=np.int64)
    _kernels.br_backward(tp.parent_seq, tp.seq_start, values, val, best)
    probs = np.zeros(tp.num_sequences)
    probs[tp.seq_start[:-1] + best] = 1.0
    return TabularPolicy(tp, probs)
