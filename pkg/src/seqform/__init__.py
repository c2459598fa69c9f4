"""Exact solving and evaluation for dark hex and phantom tic-tac-toe.

The package computes payoff gradients of these imperfect-information games
on the fly (the payoff matrix, with billions of entries per side, is never
materialized), and builds exact exploitability, best responses, and a
family of tabular equilibrium solvers on top.
"""

from .games import (
    Action,
    GameSpec,
    GameState,
    IllegalActionError,
    InfoStateKey,
    TerminalStateError,
    initial_state,
    spec_from_id,
)
from .gradient import Engine, configure_threads, engine_for
from .solvers import SolverConfig, run_solver
from .treeplex import (
    GradientVector,
    SequenceFormStrategy,
    TabularPolicy,
    Treeplex,
    build_treeplex,
    build_treeplexes,
    greedy_best_response,
    uniform_policy,
)

__version__ = "0.1.0"

GAME_IDS = ("dh1", "dh2", "dh3", "adh1", "adh2", "adh3", "pttt", "apttt")

__all__ = [
    "Action", "Engine", "GAME_IDS", "GameSpec", "GameState",
    "GradientVector", "IllegalActionError", "InfoStateKey",
    "SequenceFormStrategy", "SolverConfig", "TabularPolicy",
    "TerminalStateError", "Treeplex", "build_treeplex", "build_treeplexes",
    "configure_threads", "engine_for", "greedy_best_response",
    "initial_state", "run_solver", "spec_from_id", "uniform_policy",
]
