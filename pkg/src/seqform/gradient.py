"""Payoff-gradient engine and the exact metrics built on top of it.

For sequence-form strategies x (player 1) and y (player 2) with payoff
matrix A (never materialized), a single pruned traversal of the game tree
produces any subset of::

    g1 = A y        g2 = -A^T x        ev = x^T A y

Best responses against a gradient are a linear maximization over the
treeplex (bottom-up dynamic program), which yields exact Nash gap,
exploitability, and head-to-head values.
"""

from __future__ import annotations

import functools
import os

import numpy as np

from . import _traverse
from .games import GameSpec, win_tables
from .treeplex import (
    GradientVector,
    SequenceFormStrategy,
    TabularPolicy,
    Treeplex,
    build_treeplex,
    greedy_best_response,
    to_sequence_form,
)

THREADS_ENV_VAR = "SEQFORM_THREADS"


def configure_threads(threads: int | None = None) -> int:
    """Set the traversal thread count (argument wins over the env var)."""
    import numba

    if threads is None:
        raw = os.environ.get(THREADS_ENV_VAR, "").strip()
        threads = int(raw) if raw else numba.config.NUMBA_NUM_THREADS
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    threads = min(threads, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(threads)
    return threads


class Engine:
    """Gradient computations for one game, reusing its two treeplexes."""

    def __init__(self, spec: GameSpec, tp1: Treeplex | None = None,
                 tp2: Treeplex | None = None):
        self.spec = spec
        self.tp1 = tp1 if tp1 is not None else build_treeplex(spec, 1)
        self.tp2 = tp2 if tp2 is not None else build_treeplex(spec, 2)
        if self.tp1.spec != spec or self.tp2.spec != spec:
            raise ValueError("treeplex game does not match engine game")
        wins = win_tables(spec)
        self._win1 = np.asarray(wins[0], dtype=np.uint8)
        self._win2 = np.asarray(wins[1], dtype=np.uint8)
        n = spec.num_cells
        # Openings whose subtree is nonempty; a first-move win (1x1 boards)
        # is folded into the gradients directly in _run.
        self._first_win = np.array(
            [bool(wins[0][1 << a]) for a in range(n)], dtype=np.uint8)
        self._first_ok = np.asarray(1 - self._first_win, dtype=np.uint8)

    # -- raw pass ---------------------------------------------------------

    def _run(self, x: np.ndarray, y: np.ndarray,
             want_g1: bool, want_g2: bool, want_ev: bool):
        spec = self.spec
        n = spec.num_cells
        if x.shape != (self.tp1.num_sequences,):
            raise ValueError("x has wrong length for player 1")
        if y.shape != (self.tp2.num_sequences,):
            raise ValueError("y has wrong length for player 2")
        g1 = np.zeros(self.tp1.num_sequences) if want_g1 else np.zeros(1)
        g2 = np.zeros(self.tp2.num_sequences) if want_g2 else np.zeros(1)
        ev = 0.0
        for a in range(n):
            if self._first_win[a]:
                sq1 = 1 + a
                if want_g1:
                    g1[sq1] += y[0]
                if want_g2:
                    g2[0] -= x[sq1]
                if want_ev:
                    ev += x[sq1] * y[0]
        ev_task = _traverse.gradient_rounds(
            n, spec.abrupt, spec.family == "pttt",
            self._win1, self._win2, self._first_ok,
            self.tp1.seq_start, self.tp1.child,
            self.tp2.seq_start, self.tp2.child,
            x, y, want_g1, want_g2, want_ev, g1, g2)
        if want_ev:
            for a in range(n):
                for b in range(n):
                    ev += ev_task[a, b]
        return g1, g2, ev

    def _seq(self, policy, player: int) -> np.ndarray:
        tp = self.tp1 if player == 1 else self.tp2
        if isinstance(policy, SequenceFormStrategy):
            if policy.player != player:
                raise ValueError("strategy belongs to the other player")
            return policy.values
        if isinstance(policy, TabularPolicy):
            return to_sequence_form(tp, policy).values
        if isinstance(policy, np.ndarray):
            return np.ascontiguousarray(policy, dtype=np.float64)
        raise TypeError(f"unsupported policy type {type(policy).__name__}")

    # -- public operations ------------------------------------------------

    def gradients(self, x, y) -> tuple[GradientVector, GradientVector]:
        xv = self._seq(x, 1)
        yv = self._seq(y, 2)
        g1, g2, _ = self._run(xv, yv, True, True, False)
        return GradientVector(1, g1), GradientVector(2, g2)

    def gradient(self, player: int, x, y) -> GradientVector:
        """One player's gradient only (half the work of gradients())."""
        xv = self._seq(x, 1)
        yv = self._seq(y, 2)
        g1, g2, _ = self._run(xv, yv, player == 1, player == 2, False)
        return GradientVector(player, g1 if player == 1 else g2)

    def expected_value(self, x, y) -> float:
        """Player 1's expected payoff x^T A y (zero sum: p2 gets minus it)."""
        xv = self._seq(x, 1)
        yv = self._seq(y, 2)
        return self._run(xv, yv, False, False, True)[2]

    def best_response_values(self, x, y) -> tuple[float, float]:
        """(max_x' x'^T A y, max_y' -x^T A y') -- each player's BR payoff."""
        g1, g2 = self.gradients(x, y)
        _, v1 = greedy_best_response(self.tp1, g1.values)
        _, v2 = greedy_best_response(self.tp2, g2.values)
        return v1, v2

    def nash_gap(self, x, y) -> float:
        v1, v2 = self.best_response_values(x, y)
        gap = v1 + v2
        if gap < -1e-9:
            raise AssertionError(f"negative Nash gap {gap}: numerical bug")
        return gap

    def exploitability(self, x, y) -> float:
        """Average of the two players' incentives to deviate, nash_gap/2."""
        return self.nash_gap(x, y) / 2.0

    def head_to_head(self, x, y) -> float:
        return self.expected_value(x, y)

    def symmetrized_value(self, profile_a, profile_b) -> float:
        """Seat-averaged value of profile A against profile B.

        Profiles are (player-1 policy, player-2 policy) pairs; the result
        averages A seated first against B seated second with the reverse
        seating (sign-flipped so positive always favors A).
        """
        a1, a2 = profile_a
        b1, b2 = profile_b
        return (self.expected_value(a1, b2)
                - self.expected_value(b1, a2)) / 2.0


@functools.lru_cache(maxsize=4)
def engine_for(spec: GameSpec) -> Engine:
    return Engine(spec)


def gradients(spec, x, y):
    return engine_for(spec).gradients(x, y)


def expected_value(spec, x, y) -> float:
    return engine_for(spec).expected_value(x, y)


def nash_gap(spec, x, y) -> float:
    return engine_for(spec).nash_gap(x, y)


def exploitability(spec, x, y) -> float:
    return engine_for(spec).exploitability(x, y)


def head_to_head(spec, x, y) -> float:
    return engine_for(spec).head_to_head(x, y)
