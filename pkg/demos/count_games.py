"""Print fundamental size quantities for every supported game.

Usage: python3 demos/count_games.py [game-id ...]
"""

import sys

from seqform import GAME_IDS, counting
from seqform.games import spec_from_id


def main(argv=None):
    games = (argv or sys.argv[1:]) or list(GAME_IDS)
    header = f"{'game':>6} | {'states':>15} | {'infosets':>13} | {'terminal':>15}"
    print(header)
    print("-" * len(header))
    for gid in games:
        spec = spec_from_id(gid)
        histories, terminals = counting.count_histories(spec)
        infosets = (counting.count_infosets(spec, 1)
                    + counting.count_infosets(spec, 2))
        print(f"{gid:>6} | {counting.round_3sf(histories):>7} "
              f"{histories:>13,} | {counting.round_3sf(infosets):>6} "
              f"{infosets:>12,} | {terminals:>15,}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
