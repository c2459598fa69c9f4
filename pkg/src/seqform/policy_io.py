"""Policy file formats.

Text format (any extension except ``.sfpb``)::

    SFPOLICY v1 <game-id> <player|both>
    <infostate-key>\tp0,p1,...,pk
    ...
    #defaults uniform

One line per infoset, probabilities over its legal actions in ascending
cell order, written with ``repr`` so parsing reproduces every float
bit-for-bit.  Files declaring ``both`` hold player 1's block, a
``#player 2`` marker, then player 2's block.  Unlisted infosets default
to uniform.

Binary format (extension ``.sfpb``): the same header line with pattern
``SFPOLICY-BIN v1 <game-id> <player|both>``, then for each declared
player the raw little-endian float64 per-sequence probabilities in
treeplex sequence order (a fixed 8-byte record per sequence; lengths are
implied by the game's treeplexes).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .games import GameSpec, InfoStateKey, spec_from_id
from .treeplex import TabularPolicy, Treeplex, uniform_policy

BINARY_SUFFIX = ".sfpb"


class PolicyFormatError(ValueError):
    """Malformed policy file (CLI exit code 3)."""


def _is_binary(path) -> bool:
    return Path(path).suffix == BINARY_SUFFIX


def _players_of(player) -> tuple[int, ...]:
    if player == "both":
        return (1, 2)
    if player in (1, 2):
        return (player,)
    raise PolicyFormatError(f"player must be 1, 2 or 'both', got {player!r}")


def save_policy(path, spec: GameSpec, policies: dict[int, TabularPolicy]):
    """Write the given players' policies; key set {1}, {2} or {1, 2}."""
    players = tuple(sorted(policies))
    if players not in ((1,), (2,), (1, 2)):
        raise ValueError(f"bad player set {players}")
    who = "both" if players == (1, 2) else str(players[0])
    if _is_binary(path):
        with open(path, "wb") as fh:
            fh.write(f"SFPOLICY-BIN v1 {spec.game_id} {who}\n".encode())
            for p in players:
                fh.write(np.ascontiguousarray(
                    policies[p].probs, dtype="<f8").tobytes())
        return
    with open(path, "w") as fh:
        fh.write(f"SFPOLICY v1 {spec.game_id} {who}\n")
        for p in players:
            if p == 2 and len(players) == 2:
                fh.write("#player 2\n")
            pol = policies[p]
            tp = pol.tp
            seq_start = tp.seq_start
            probs = pol.probs
            for i, key in enumerate(tp.iter_keys()):
                row = probs[int(seq_start[i]):int(seq_start[i + 1])]
                fh.write(key)
                fh.write("\t")
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")
        fh.write("#defaults uniform\n")


def load_policy(path, spec: GameSpec,
                treeplexes: dict[int, Treeplex]) -> dict[int, TabularPolicy]:
    """Parse a policy file; returns one TabularPolicy per declared player."""
    if _is_binary(path):
        return _load_binary(path, spec, treeplexes)
    return _load_text(path, spec, treeplexes)


def _parse_header(line: str, magic: str, spec: GameSpec) -> tuple[int, ...]:
    parts = line.strip().split()
    if len(parts) != 4 or parts[0] != magic or parts[1] != "v1":
        raise PolicyFormatError(
            f"bad header {line.strip()!r}; expected '{magic} v1 <game> <player>'")
    if parts[2] != spec.game_id:
        raise PolicyFormatError(
            f"policy file is for {parts[2]!r}, not {spec.game_id!r}")
    who = parts[3]
    return _players_of("both" if who == "both" else int(who))


def _load_binary(path, spec, treeplexes):
    with open(path, "rb") as fh:
        players = _parse_header(fh.readline().decode(), "SFPOLICY-BIN", spec)
        out = {}
        for p in players:
            tp = treeplexes[p]
            raw = fh.read(8 * tp.num_sequences)
            if len(raw) != 8 * tp.num_sequences:
                raise PolicyFormatError(
                    f"truncated binary policy for player {p}")
            out[p] = TabularPolicy(tp, np.frombuffer(raw, dtype="<f8").copy())
        if fh.read(1):
            raise PolicyFormatError("trailing bytes after declared players")
    return out


def _load_text(path, spec, treeplexes):
    with open(path) as fh:
        players = _parse_header(fh.readline(), "SFPOLICY", spec)
        current = players[0]
        probs = {p: uniform_policy(treeplexes[p]).probs.copy()
                 for p in players}
        seen: set[tuple[int, str]] = set()
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("#player "):
                    current = int(line.split()[1])
                    if current not in players:
                        raise PolicyFormatError(
                            f"line {lineno}: player {current} not declared")
                continue
            key_s, tab, row_s = line.partition("\t")
            if not tab:
                raise PolicyFormatError(f"line {lineno}: missing tab")
            tp = treeplexes[current]
            try:
                key = InfoStateKey.parse(current, key_s)
                i = tp.node_of_key(key)
            except (ValueError, KeyError) as e:
                raise PolicyFormatError(
                    f"line {lineno}: unknown info state {key_s!r}: {e}") from e
            if (current, key_s) in seen:
                raise PolicyFormatError(
                    f"line {lineno}: duplicate key {key_s!r}")
            seen.add((current, key_s))
            s0, s1 = int(tp.seq_start[i]), int(tp.seq_start[i + 1])
            try:
                row = [float(v) for v in row_s.split(",")]
            except ValueError as e:
                raise PolicyFormatError(f"line {lineno}: {e}") from e
            if len(row) != s1 - s0:
                raise PolicyFormatError(
                    f"line {lineno}: {len(row)} probabilities for "
                    f"{s1 - s0} legal actions")
            probs[current][s0:s1] = row
    out = {}
    for p in players:
        try:
            out[p] = TabularPolicy(treeplexes[p], probs[p])
        except ValueError as e:
            raise PolicyFormatError(f"player {p}: {e}") from e
    return out


def load_policy_for(path, spec: GameSpec, treeplexes, player: int
                    ) -> TabularPolicy:
    """Load and return one player's policy, erroring if absent."""
    got = load_policy(path, spec, treeplexes)
    if player not in got:
        raise PolicyFormatError(
            f"{path} does not contain a policy for player {player}")
    return got[player]


def game_spec_of_file(path) -> GameSpec:
    """Peek at a policy file's header to learn its game."""
    opener = open(path, "rb") if _is_binary(path) else open(path)
    with opener as fh:
        line = fh.readline()
    if isinstance(line, bytes):
        line = line.decode()
    parts = line.split()
    if len(parts) != 4:
        raise PolicyFormatError(f"bad header in {path}")
    return spec_from_id(parts[2])
