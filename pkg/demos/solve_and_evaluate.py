"""Solve a small game, inspect convergence, and round-trip the policy file.

Usage: python3 demos/solve_and_evaluate.py [game-id] [solver] [iterations]
Defaults: dh2 cfr+ 300.
"""

import sys
import tempfile
from pathlib import Path

from seqform import policy_io
from seqform.games import spec_from_id
from seqform.gradient import Engine
from seqform.solvers import SolverConfig, run_solver
from seqform.treeplex import behavioral_from_sequence_form


def main(argv=None):
    args = argv if argv is not None else sys.argv[1:]
    gid = args[0] if len(args) > 0 else "dh2"
    solver = args[1] if len(args) > 1 else "cfr+"
    iters = int(args[2]) if len(args) > 2 else 300

    spec = spec_from_id(gid)
    engine = Engine(spec)
    print(f"{gid}: {engine.tp1.num_infosets + engine.tp2.num_infosets:,} "
          f"infosets, {engine.tp1.num_sequences + engine.tp2.num_sequences:,} "
          "sequences")

    print(f"\nrunning {solver} for {iters} iterations")
    result = run_solver(engine, SolverConfig(name=solver), iters,
                        log_every=max(1, iters // 10),
                        progress=lambda r: print(
                            f"  iter {r.iteration:>5}  value {r.value:+.7f}  "
                            f"exploitability {r.exploitability:.3e}"))
    final = result.final
    print(f"\nfinal: value {final.value:+.7f}, "
          f"nash gap {final.nash_gap:.3e}, "
          f"exploitability {final.exploitability:.3e}")

    with tempfile.TemporaryDirectory() as td:
        path = Path(td) / f"{gid}.sfpolicy"
        pol = {1: behavioral_from_sequence_form(engine.tp1, result.x),
               2: behavioral_from_sequence_form(engine.tp2, result.y)}
        policy_io.save_policy(path, spec, pol)
        print(f"\nsaved average policy ({path.stat().st_size:,} bytes); "
              "reloading and re-evaluating:")
        loaded = policy_io.load_policy(
            path, spec, {1: engine.tp1, 2: engine.tp2})
        gap = engine.nash_gap(loaded[1], loaded[2])
        print(f"  reloaded nash gap {gap:.3e} "
              f"(matches within {abs(gap - final.nash_gap):.2e})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
