"""Command-line front end.

Subcommands: ``count``, ``solve``, ``expl``, ``h2h``, ``dh3``, ``keys``,
``bench``.  Exit codes: 0 success, 2 usage error, 3 data error (malformed
files / unknown keys), 4 resource limit.

Treeplexes for the full-size games take a while to build; pass
``--cache-dir`` (or set ``SEQFORM_CACHE_DIR``) to build them once and
memory-map them on later runs.  Thread count comes from ``--threads`` or
the ``SEQFORM_THREADS`` environment variable (the flag wins).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RESOURCE = 4

_ALGOS = ("cfr", "cfr+", "dcfr", "pcfr", "pcfr+", "pdcfr", "fp", "mmd")


class DataError(Exception):
    pass


def _spec(game_id):
    from .games import spec_from_id

    try:
        return spec_from_id(game_id)
    except ValueError as e:
        raise DataError(str(e)) from e


def _cache_dir(args) -> Path | None:
    d = args.cache_dir or os.environ.get("SEQFORM_CACHE_DIR")
    return Path(d) if d else None


def _treeplex(spec, player, cache: Path | None):
    from .treeplex import build_treeplex, load_treeplex, save_treeplex

    if cache is not None:
        cache.mkdir(parents=True, exist_ok=True)
        path = cache / f"{spec.game_id}_p{player}.npz"
        if path.exists():
            return load_treeplex(path, spec)
        tp = build_treeplex(spec, player)
        save_treeplex(path, tp)
        return tp
    return build_treeplex(spec, player)


def _engine(spec, args):
    from .gradient import Engine, configure_threads

    configure_threads(getattr(args, "threads", None))
    cache = _cache_dir(args)
    return Engine(spec, _treeplex(spec, 1, cache), _treeplex(spec, 2, cache))


# -- subcommands --------------------------------------------------------------


def cmd_count(args):
    from . import counting

    spec = _spec(args.game)
    counts = counting.count_game(spec)
    print(f"game:            {spec.game_id}")
    print(f"histories:       {counts.histories} "
          f"({counting.round_3sf(counts.histories)})")
    print(f"terminals:       {counts.terminals}")
    print(f"decision nodes:  {counts.decision_nodes}")
    print(f"infosets p1:     {counts.infostates_p1}")
    print(f"infosets p2:     {counts.infostates_p2}")
    print(f"infosets total:  {counts.infostates_total} "
          f"({counting.round_3sf(counts.infostates_total)})")
    return EXIT_OK


def cmd_solve(args):
    from . import policy_io
    from .solvers import SolverConfig, run_solver
    from .treeplex import behavioral_from_sequence_form

    spec = _spec(args.game)
    if args.iterations < 1:
        raise DataError("iterations must be >= 1")
    engine = _engine(spec, args)
    config = SolverConfig(name=args.algo,
                          alternating=not args.simultaneous)

    def progress(rec):
        print(f"iter {rec.iteration}: value={rec.value:.7f} "
              f"nash_gap={rec.nash_gap:.7e} "
              f"exploitability={rec.exploitability:.7e} "
              f"({rec.wall_seconds:.1f}s)", flush=True)

    result = run_solver(engine, config, args.iterations,
                        log_every=args.report_every,
                        csv_path=args.log, progress=progress)
    if args.out:
        policies = {1: behavioral_from_sequence_form(engine.tp1, result.x),
                    2: behavioral_from_sequence_form(engine.tp2, result.y)}
        policy_io.save_policy(args.out, spec, policies)
        print(f"wrote average policy to {args.out}")
        if args.algo == "mmd" and result.last_x is not None:
            out = Path(args.out)
            last = out.with_name(out.stem + ".last" + out.suffix)
            policy_io.save_policy(last, spec, {
                1: behavioral_from_sequence_form(engine.tp1, result.last_x),
                2: behavioral_from_sequence_form(engine.tp2, result.last_y)})
            print(f"wrote last-iterate policy to {last}")
    return EXIT_OK


def _load_sides(args, spec, engine):
    from . import policy_io

    tps = {1: engine.tp1, 2: engine.tp2}
    try:
        pols1 = policy_io.load_policy(args.policy1, spec, tps)
        pols2 = policy_io.load_policy(args.policy2, spec, tps)
    except policy_io.PolicyFormatError as e:
        raise DataError(str(e)) from e
    if 1 not in pols1:
        raise DataError(f"{args.policy1} lacks a player-1 policy")
    if 2 not in pols2:
        raise DataError(f"{args.policy2} lacks a player-2 policy")
    return pols1, pols2


def cmd_expl(args):
    spec = _spec(args.game)
    engine = _engine(spec, args)
    pols1, pols2 = _load_sides(args, spec, engine)
    x, y = pols1[1], pols2[2]
    gap = engine.nash_gap(x, y)
    value = engine.expected_value(x, y)
    print(f"expected_value:  {value:.9f}")
    print(f"nash_gap:        {gap:.9f}")
    print(f"exploitability:  {gap / 2.0:.9f}")
    if 2 in pols1 and 1 in pols2:
        sym = engine.symmetrized_value((pols1[1], pols1[2]),
                                       (pols2[1], pols2[2]))
        print(f"symmetrized_h2h: {sym:.9f}")
    return EXIT_OK


def cmd_h2h(args):
    spec = _spec(args.game)
    engine = _engine(spec, args)
    pols1, pols2 = _load_sides(args, spec, engine)
    value = engine.expected_value(pols1[1], pols2[2])
    print(f"expected_value:  {value:.9f}")
    if 2 in pols1 and 1 in pols2:
        sym = engine.symmetrized_value((pols1[1], pols1[2]),
                                       (pols2[1], pols2[2]))
        print(f"symmetrized_h2h: {sym:.9f}")
    return EXIT_OK


def cmd_dh3(args):
    from . import dh3 as dh3mod
    from .games import GameSpec

    spec = GameSpec(family="dark_hex", ruleset="classical", side=args.side)
    if args.action == "search":
        strategy = dh3mod.search_deterministic_winner(
            spec, perfect_info_prune=not args.no_prune,
            allow_large=args.allow_large,
            checkpoint_path=args.checkpoint)
        if strategy is None:
            print("no deterministic winning strategy exists")
            return EXIT_OK
        out = args.out or f"{spec.game_id}_winner.txt"
        strategy.save(out)
        print(f"found a deterministic strategy ({len(strategy.lists)} "
              f"infosets); wrote {out}")
        if args.no_verify:
            return EXIT_OK
    else:
        try:
            strategy = dh3mod.OrderedActionStrategy.load(args.strategy)
        except (ValueError, OSError) as e:
            raise DataError(str(e)) from e
        if strategy.spec != spec:
            spec = strategy.spec
    engine = _engine(spec, args)
    v = dh3mod.verify_winning(engine, strategy)
    print(f"min value vs any opponent: {v.min_value:.9f}")
    print(f"value vs uniform (exact):  {v.uniform_value}")
    print("PROVEN: wins with certainty" if v.proven
          else "REFUTED: a counter-strategy holds player 1 to "
          f"{v.min_value:.9f}")
    return EXIT_OK


def cmd_keys(args):
    spec = _spec(args.game)
    tp = _treeplex(spec, args.player, _cache_dir(args))
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        if args.actions:
            for i, key in tp.iter_items():
                cells = ",".join(str(c) for c in tp.actions(i))
                out.write(f"{key}\t{cells}\n")
        else:
            for key in tp.iter_keys():
                out.write(key + "\n")
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_bench(args):
    from .treeplex import uniform_sequence_form

    spec = _spec(args.game)
    engine = _engine(spec, args)
    x = uniform_sequence_form(engine.tp1)
    y = uniform_sequence_form(engine.tp2)
    engine.expected_value(x, y)  # JIT warm-up
    for rep in range(args.reps):
        t = time.perf_counter()
        g1, g2 = engine.gradients(x, y)
        dt = time.perf_counter() - t
        print(f"gradient pass {rep + 1}: {dt:.2f}s "
              f"(|g1|={len(g1.values)}, |g2|={len(g2.values)})")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _add_common(p):
    p.add_argument("--threads", type=int, default=None,
                   help="traversal threads (default: SEQFORM_THREADS or all)")
    p.add_argument("--cache-dir", default=None,
                   help="directory for cached treeplexes "
                        "(default: SEQFORM_CACHE_DIR)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqform",
        description="Exact solving and evaluation for dark hex and "
                    "phantom tic-tac-toe.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="print game size quantities")
    p.add_argument("game")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("solve", help="run a tabular solver")
    p.add_argument("game")
    p.add_argument("algo", choices=_ALGOS)
    p.add_argument("iterations", type=int)
    p.add_argument("--out", help="policy file to write (.sfpb for binary)")
    p.add_argument("--log", help="CSV run log path")
    p.add_argument("--report-every", type=int, default=0,
                   help="evaluate metrics every N iterations (0: end only)")
    p.add_argument("--simultaneous", action="store_true",
                   help="simultaneous instead of alternating updates")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    for name, fn in (("expl", cmd_expl), ("h2h", cmd_h2h)):
        p = sub.add_parser(name, help="evaluate policy files")
        p.add_argument("game")
        p.add_argument("policy1", help="file providing player 1's policy")
        p.add_argument("policy2", help="file providing player 2's policy")
        _add_common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("dh3", help="deterministic winning strategies")
    psub = p.add_subparsers(dest="action", required=True)
    ps = psub.add_parser("search")
    ps.add_argument("--side", type=int, default=3)
    ps.add_argument("--out", help="strategy file to write")
    ps.add_argument("--no-verify", action="store_true")
    ps.add_argument("--no-prune", action="store_true",
                    help="disable the perfect-information pruning heuristic")
    ps.add_argument("--allow-large", action="store_true",
                    help="permit side > 3 (long-running)")
    ps.add_argument("--checkpoint", help="memo checkpoint path (side 4)")
    _add_common(ps)
    ps.set_defaults(func=cmd_dh3, action="search")
    pv = psub.add_parser("verify")
    pv.add_argument("strategy")
    pv.add_argument("--side", type=int, default=3)
    _add_common(pv)
    pv.set_defaults(func=cmd_dh3, action="verify")

    p = sub.add_parser("keys", help="list infostate keys in treeplex order")
    p.add_argument("game")
    p.add_argument("player", type=int, choices=(1, 2))
    p.add_argument("--out")
    p.add_argument("--actions", action="store_true",
                   help="append each key's legal action cells "
                        "(tab-separated, comma lists)")
    _add_common(p)
    p.set_defaults(func=cmd_keys)

    p = sub.add_parser("bench", help="time gradient passes")
    p.add_argument("game")
    p.add_argument("--reps", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    sys.setrecursionlimit(1_000_000)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as e:
        import errno

        print(f"error: {e}", file=sys.stderr)
        if e.errno in (errno.ENOSPC, errno.ENOMEM):
            return EXIT_RESOURCE
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
