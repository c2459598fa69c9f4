"""Tabular equilibrium solvers over the sequence form.

All solvers share one interface: construct with an :class:`Engine` and a
:class:`SolverConfig`, call :meth:`step` repeatedly, read the average
profile from :meth:`average`.  ``run_solver`` wraps the loop with metric
logging.

Implemented variants (``SolverConfig.name``):

* ``cfr``    -- counterfactual regret minimization, uniform averaging
* ``cfr+``   -- nonnegative cumulative regrets, linear averaging
* ``dcfr``   -- discounted CFR (alpha=1.5, beta=0, gamma=2 defaults)
* ``pcfr``   -- predictive CFR (prediction = latest regret increment)
* ``pcfr+``  -- predictive CFR+
* ``pdcfr``  -- predictive discounted CFR
* ``fp``     -- fictitious play on sequence-form averages
* ``mmd``    -- magnetic mirror descent, uniform magnet, constant steps

Regret updates use counterfactual values taken straight from the payoff
gradient (which already carries the opponent's reach), so one gradient
pass per player per iteration is the entire cost of an iteration.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .gradient import Engine
from .treeplex import (
    SequenceFormStrategy,
    Treeplex,
    greedy_best_response,
    uniform_sequence_form,
)
from ._kernels import seq_forward

SOLVER_NAMES = ("cfr", "cfr+", "dcfr", "pcfr", "pcfr+", "pdcfr", "fp", "mmd")


@dataclass(frozen=True)
class SolverConfig:
    name: str
    alternating: bool = True
    # DCFR discount exponents (positive regrets, negative regrets, average).
    alpha: float = 1.5
    beta: float = 0.0
    gamma: float = 2.0
    # MMD stepsize and regularization temperature (constant schedule).
    eta: float = 0.1
    mmd_alpha: float = 0.1

    def __post_init__(self):
        if self.name not in SOLVER_NAMES:
            raise ValueError(
                f"unknown solver {self.name!r}; choose from {SOLVER_NAMES}")

    @property
    def predictive(self) -> bool:
        return self.name in ("pcfr", "pcfr+", "pdcfr")

    @property
    def plus(self) -> bool:
        return self.name in ("cfr+", "pcfr+")

    @property
    def discounted(self) -> bool:
        return self.name in ("dcfr", "pdcfr")

    def average_weight(self, t: int) -> float:
        if self.name in ("cfr", "pcfr", "mmd"):
            return 1.0
        if self.name in ("cfr+", "pcfr+"):
            return float(t)
        return float(t) ** self.gamma  # dcfr / pdcfr


# -- per-infoset kernels ----------------------------------------------------


@njit(cache=True)
def _cf_backward(parent_seq, seq_start, probs, vseq, dreg):
    """Counterfactual values bottom-up; dreg gets the regret increments."""
    num_infosets = seq_start.size - 1
    for i in range(num_infosets - 1, -1, -1):
        lo = seq_start[i]
        hi = seq_start[i + 1]
        vi = 0.0
        for s in range(lo, hi):
            vi += probs[s] * vseq[s]
        for s in range(lo, hi):
            dreg[s] = vseq[s] - vi
        vseq[parent_seq[i]] += vi
    return vseq[0]


@njit(cache=True)
def _regret_match(seq_start, regrets, probs):
    num_infosets = seq_start.size - 1
    for i in range(num_infosets):
        lo = seq_start[i]
        hi = seq_start[i + 1]
        total = 0.0
        for s in range(lo, hi):
            if regrets[s] > 0.0:
                total += regrets[s]
        if total > 0.0:
            for s in range(lo, hi):
                probs[s] = regrets[s] / total if regrets[s] > 0.0 else 0.0
        else:
            u = 1.0 / (hi - lo)
            for s in range(lo, hi):
                probs[s] = u


@njit(cache=True)
def _discount(regrets, pos_factor, neg_factor):
    for s in range(regrets.size):
        if regrets[s] > 0.0:
            regrets[s] *= pos_factor
        elif regrets[s] < 0.0:
            regrets[s] *= neg_factor


@njit(cache=True)
def _mmd_step(seq_start, probs, q, eta, alpha):
    """Closed-form MMD update with a uniform magnet, in place.

    pi' propto exp[(eta*q + eta*alpha*log(rho) + log(pi)) / (1 + eta*alpha)];
    the uniform-magnet term is constant per infoset and cancels in the
    normalization.
    """
    denom = 1.0 + eta * alpha
    num_infosets = seq_start.size - 1
    for i in range(num_infosets):
        lo = seq_start[i]
        hi = seq_start[i + 1]
        hival = -1e300
        for s in range(lo, hi):
            logit = (eta * q[s] + np.log(max(probs[s], 1e-300))) / denom
            q[s] = logit  # reuse q as scratch for logits
            if logit > hival:
                hival = logit
        total = 0.0
        for s in range(lo, hi):
            q[s] = np.exp(q[s] - hival)
            total += q[s]
        for s in range(lo, hi):
            probs[s] = q[s] / total


# -- solver state -------------------------------------------------------------


class _PlayerState:
    def __init__(self, tp: Treeplex):
        self.tp = tp
        n = tp.num_sequences
        self.regrets = np.zeros(n)
        self.prediction = np.zeros(n)
        self.probs = np.empty(n)
        _regret_match(tp.seq_start, self.regrets, self.probs)  # uniform
        self.avg = np.zeros(n)
        self.avg_weight = 0.0

    def realization(self) -> np.ndarray:
        x = np.empty(self.tp.num_sequences)
        seq_forward(self.tp.parent_seq, self.tp.seq_start, self.probs, x)
        return x

    def average(self) -> SequenceFormStrategy:
        if self.avg_weight <= 0.0:
            return uniform_sequence_form(self.tp)
        return SequenceFormStrategy(self.tp.player, self.avg / self.avg_weight)


class RegretSolver:
    """CFR family and MMD (anything driven by counterfactual values)."""

    def __init__(self, engine: Engine, config: SolverConfig):
        if config.name == "fp":
            raise ValueError("use FictitiousPlay for the fp solver")
        self.engine = engine
        self.config = config
        self.players = {1: _PlayerState(engine.tp1), 2: _PlayerState(engine.tp2)}
        self.t = 0

    def _update_player(self, player: int, x1: np.ndarray, y2: np.ndarray):
        cfg = self.config
        ps = self.players[player]
        tp = ps.tp
        g = self.engine.gradient(player, x1, y2).values
        vseq = g.copy()
        dreg = np.empty_like(vseq)
        _cf_backward(tp.parent_seq, tp.seq_start, ps.probs, vseq, dreg)
        if cfg.name == "mmd":
            # dreg holds q(s) - v(I); the per-infoset shift cancels in the
            # softmax, so it works directly as the Q-value input.
            _mmd_step(tp.seq_start, ps.probs, dreg, cfg.eta, cfg.mmd_alpha)
            return
        ps.regrets += dreg
        if cfg.plus:
            np.maximum(ps.regrets, 0.0, out=ps.regrets)
        elif cfg.discounted:
            ta = float(self.t) ** cfg.alpha
            tb = float(self.t) ** cfg.beta
            _discount(ps.regrets, ta / (ta + 1.0), tb / (tb + 1.0))
        if cfg.predictive:
            ps.prediction = dreg
            _regret_match(tp.seq_start, ps.regrets + ps.prediction, ps.probs)
        else:
            _regret_match(tp.seq_start, ps.regrets, ps.probs)

    def step(self):
        self.t += 1
        w = self.config.average_weight(self.t)
        p1, p2 = self.players[1], self.players[2]
        if self.config.alternating:
            self._update_player(1, p1.realization(), p2.realization())
            self._update_player(2, p1.realization(), p2.realization())
        else:
            x = p1.realization()
            y = p2.realization()
            self._update_player(1, x, y)
            self._update_player(2, x, y)
        for ps in (p1, p2):
            ps.avg += w * ps.realization()
            ps.avg_weight += w

    def average(self) -> tuple[SequenceFormStrategy, SequenceFormStrategy]:
        return self.players[1].average(), self.players[2].average()

    def current(self) -> tuple[SequenceFormStrategy, SequenceFormStrategy]:
        """Last-iterate profile (mainly of interest for MMD)."""
        return (SequenceFormStrategy(1, self.players[1].realization()),
                SequenceFormStrategy(2, self.players[2].realization()))


class FictitiousPlay:
    """Full-width fictitious play: best respond to the opponent average."""

    def __init__(self, engine: Engine, config: SolverConfig):
        if config.name != "fp":
            raise ValueError("FictitiousPlay requires config.name == 'fp'")
        self.engine = engine
        self.config = config
        self.avg = {1: uniform_sequence_form(engine.tp1).values,
                    2: uniform_sequence_form(engine.tp2).values}
        self.t = 1  # the uniform start counts as the first averaged iterate

    def _update_player(self, player: int):
        eng = self.engine
        tp = eng.tp1 if player == 1 else eng.tp2
        g = eng.gradient(player, self.avg[1], self.avg[2]).values
        br, _ = greedy_best_response(tp, g)
        self.avg[player] = (self.t * self.avg[player] + br.values) / (self.t + 1)

    def step(self):
        if self.config.alternating:
            self._update_player(1)
            self._update_player(2)
        else:
            g1 = self.engine.gradient(1, self.avg[1], self.avg[2]).values
            g2 = self.engine.gradient(2, self.avg[1], self.avg[2]).values
            br1, _ = greedy_best_response(self.engine.tp1, g1)
            br2, _ = greedy_best_response(self.engine.tp2, g2)
            self.avg[1] = (self.t * self.avg[1] + br1.values) / (self.t + 1)
            self.avg[2] = (self.t * self.avg[2] + br2.values) / (self.t + 1)
        self.t += 1

    def average(self) -> tuple[SequenceFormStrategy, SequenceFormStrategy]:
        return (SequenceFormStrategy(1, self.avg[1].copy()),
                SequenceFormStrategy(2, self.avg[2].copy()))


def make_solver(engine: Engine, config: SolverConfig):
    if config.name == "fp":
        return FictitiousPlay(engine, config)
    return RegretSolver(engine, config)


@dataclass
class RunRecord:
    iteration: int
    value: float
    nash_gap: float
    exploitability: float
    wall_seconds: float


@dataclass
class RunResult:
    x: SequenceFormStrategy
    y: SequenceFormStrategy
    records: list[RunRecord] = field(default_factory=list)
    last_x: SequenceFormStrategy | None = None
    last_y: SequenceFormStrategy | None = None

    @property
    def final(self) -> RunRecord:
        return self.records[-1]


def run_solver(engine: Engine, config: SolverConfig, iterations: int,
               log_every: int = 0, csv_path: str | None = None,
               progress=None) -> RunResult:
    """Run ``iterations`` steps, measuring the average profile as it goes.

    ``log_every=0`` evaluates only once at the end; ``progress`` (if given)
    is called with each :class:`RunRecord`.
    """
    solver = make_solver(engine, config)
    records: list[RunRecord] = []
    start = time.perf_counter()
    writer = None
    fh = None
    if csv_path is not None:
        fh = open(csv_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(
            ["iteration", "value", "nash_gap", "exploitability",
             "wall_seconds"])
    try:
        for it in range(1, iterations + 1):
            solver.step()
            if it == iterations or (log_every and it % log_every == 0):
                x, y = solver.average()
                value = float(engine.expected_value(x, y))
                gap = float(engine.nash_gap(x, y))
                rec = RunRecord(it, value, gap, gap / 2.0,
                                time.perf_counter() - start)
                records.append(rec)
                if writer is not None:
                    writer.writerow([rec.iteration, repr(rec.value),
                                     repr(rec.nash_gap),
                                     repr(rec.exploitability),
                                     f"{rec.wall_seconds:.3f}"])
                    fh.flush()
                if progress is not None:
                    progress(rec)
    finally:
        if fh is not None:
            fh.close()
    x, y = solver.average()
    last_x = last_y = None
    if isinstance(solver, RegretSolver):
        last_x, last_y = solver.current()
    return RunResult(x, y, records, last_x, last_y)
