import numpy as np
import pytest

from seqform import policy_io
from seqform.games import spec_from_id
from seqform.policy_io import PolicyFormatError, load_policy, save_policy
from seqform.treeplex import random_policy, uniform_policy


def _tps(engine, gid):
    eng = engine(gid)
    return eng.spec, {1: eng.tp1, 2: eng.tp2}


def test_text_round_trip_is_exact(tmp_path, engine, rng):
    spec, tps = _tps(engine, "adh2")
    pols = {1: random_policy(tps[1], rng), 2: random_policy(tps[2], rng)}
    path = tmp_path / "p.sfpolicy"
    save_policy(path, spec, pols)
    back = load_policy(path, spec, tps)
    for p in (1, 2):
        # written with repr(); only renormalization may wiggle the last ulp
        assert np.max(np.abs(back[p].probs - pols[p].probs)) < 1e-12


def test_binary_round_trip_is_exact(tmp_path, engine, rng):
    spec, tps = _tps(engine, "adh2")
    pols = {1: random_policy(tps[1], rng), 2: random_policy(tps[2], rng)}
    path = tmp_path / "p.sfpb"
    save_policy(path, spec, pols)
    back = load_policy(path, spec, tps)
    for p in (1, 2):
        assert np.max(np.abs(back[p].probs - pols[p].probs)) < 1e-12


def test_single_player_file(tmp_path, engine, rng):
    spec, tps = _tps(engine, "dh2")
    path = tmp_path / "p2.sfpolicy"
    save_policy(path, spec, {2: random_policy(tps[2], rng)})
    back = load_policy(path, spec, tps)
    assert set(back) == {2}
    with pytest.raises(PolicyFormatError):
        policy_io.load_policy_for(path, spec, tps, player=1)


def test_header_checks(tmp_path, engine):
    spec, tps = _tps(engine, "dh2")
    path = tmp_path / "p.sfpolicy"
    path.write_text("SFPOLICY v2 dh2 both\n")
    with pytest.raises(PolicyFormatError):
        load_policy(path, spec, tps)
    path.write_text("SFPOLICY v1 adh2 both\n")
    with pytest.raises(PolicyFormatError):
        load_policy(path, spec, tps)  # wrong game
    assert policy_io.game_spec_of_file(path) == spec_from_id("adh2")


def test_unlisted_keys_default_to_uniform(tmp_path, engine):
    spec, tps = _tps(engine, "dh2")
    path = tmp_path / "p.sfpolicy"
    path.write_text("SFPOLICY v1 dh2 1\n\t1.0,0.0,0.0,0.0\n#defaults uniform\n")
    back = load_policy(path, spec, tps)[1]
    assert back.probs[1] == 1.0  # the listed root line
    u = uniform_policy(tps[1])
    assert np.array_equal(back.probs[5:], u.probs[5:])  # everything else


def test_data_errors(tmp_path, engine):
    spec, tps = _tps(engine, "dh2")
    path = tmp_path / "p.sfpolicy"
    head = "SFPOLICY v1 dh2 1\n"
    for body, why in (
        ("bogus\t1.0\n", "unknown key"),
        ("\t1.0,0.0\n", "wrong arity"),
        ("\t0.7,0.0,0.0,0.0\n", "bad sum"),
        ("\t1.0,0.0,0.0,0.0\n\t1.0,0.0,0.0,0.0\n", "duplicate"),
        ("\t1.0,x,0.0,0.0\n", "bad float"),
        ("0p 1.0,0.0,0.0\n", "missing tab"),
    ):
        path.write_text(head + body)
        with pytest.raises(PolicyFormatError):
            load_policy(path, spec, tps)


def test_binary_truncation_and_trailing(tmp_path, engine, rng):
    spec, tps = _tps(engine, "dh2")
    path = tmp_path / "p.sfpb"
    save_policy(path, spec, {1: random_policy(tps[1], rng)})
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(PolicyFormatError):
        load_policy(path, spec, tps)
    path.write_bytes(raw + b"\x00")
    with pytest.raises(PolicyFormatError):
        load_policy(path, spec, tps)


def test_loaded_policies_validate(tmp_path, engine, rng):
    # A file with a slightly off-sum row (within 1e-9) renormalizes silently.
    spec, tps = _tps(engine, "dh2")
    path = tmp_path / "p.sfpolicy"
    eps = 2e-10
    path.write_text(f"SFPOLICY v1 dh2 1\n\t{0.25 + eps},0.25,0.25,0.25\n")
    back = load_policy(path, spec, tps)[1]
    assert abs(back.probs[1:5].sum() - 1.0) < 1e-15
