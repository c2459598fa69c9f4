import numpy as np
import pytest

from seqform.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def test_count_output(capsys):
    code, out = run(capsys, "count", "dh2")
    assert code == EXIT_OK
    assert "histories:       441" in out
    assert "infosets total:  70" in out


def test_count_unknown_game(capsys):
    assert main(["count", "dh9"]) == EXIT_DATA


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "dh2", "nonsense-algo", "10"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == EXIT_USAGE
    # no RNG anywhere: seed flags are rejected as unknown arguments
    with pytest.raises(SystemExit) as exc:
        main(["solve", "dh2", "cfr", "10", "--seed", "1"])
    assert exc.value.code == EXIT_USAGE


def test_solve_expl_h2h_round_trip(tmp_path, capsys):
    pol = tmp_path / "dh2.sfpolicy"
    log = tmp_path / "run.csv"
    code, out = run(capsys, "solve", "dh2", "cfr+", "60",
                    "--out", str(pol), "--log", str(log),
                    "--report-every", "30")
    assert code == EXIT_OK
    assert pol.exists() and log.exists()
    assert pol.read_text().startswith("SFPOLICY v1 dh2 both\n")

    code, out = run(capsys, "expl", "dh2", str(pol), str(pol))
    assert code == EXIT_OK
    assert "exploitability:  0.000000" in out
    assert "symmetrized_h2h:" in out

    code, out = run(capsys, "h2h", "dh2", str(pol), str(pol))
    assert code == EXIT_OK
    assert "expected_value:  1.000000" in out


def test_expl_malformed_file_exits_3(tmp_path, capsys):
    bad = tmp_path / "bad.sfpolicy"
    bad.write_text("SFPOLICY v1 dh2 1\nbogus\t1.0\n")
    assert main(["expl", "dh2", str(bad), str(bad)]) == EXIT_DATA


def test_dh3_search_and_verify_side2(tmp_path, capsys):
    out_file = tmp_path / "winner.txt"
    code, out = run(capsys, "dh3", "search", "--side", "2",
                    "--out", str(out_file))
    assert code == EXIT_OK
    assert "PROVEN" in out
    code, out = run(capsys, "dh3", "verify", str(out_file), "--side", "2")
    assert code == EXIT_OK
    assert "PROVEN" in out and "value vs uniform (exact):  1" in out


def test_keys_output(tmp_path, capsys):
    out_file = tmp_path / "keys.txt"
    code, _ = run(capsys, "keys", "dh2", "2", "--out", str(out_file))
    assert code == EXIT_OK
    lines = out_file.read_text().splitlines()
    assert len(lines) == 53  # dh2 player-2 infoset count
    assert lines[0] == ""  # the root key is empty


def test_solve_deterministic_outputs(tmp_path, capsys):
    a = tmp_path / "a.sfpb"
    b = tmp_path / "b.sfpb"
    assert main(["solve", "adh2", "dcfr", "40", "--out", str(a)]) == EXIT_OK
    assert main(["solve", "adh2", "dcfr", "40", "--out", str(b)]) == EXIT_OK
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_cache_dir_round_trip(tmp_path, capsys):
    cache = tmp_path / "cache"
    code, out1 = run(capsys, "expl", "dh2", *_uniform_files(tmp_path),
                     "--cache-dir", str(cache))
    assert code == EXIT_OK
    assert (cache / "dh2_p1.npz").exists()
    code, out2 = run(capsys, "expl", "dh2", *_uniform_files(tmp_path),
                     "--cache-dir", str(cache))
    assert out1 == out2


def _uniform_files(tmp_path):
    # minimal valid files: everything defaults to uniform
    p1 = tmp_path / "u1.sfpolicy"
    p2 = tmp_path / "u2.sfpolicy"
    p1.write_text("SFPOLICY v1 dh2 1\n#defaults uniform\n")
    p2.write_text("SFPOLICY v1 dh2 2\n#defaults uniform\n")
    return str(p1), str(p2)


def test_bench_runs(capsys):
    code, out = run(capsys, "bench", "dh1", "--reps", "1")
    assert code == EXIT_OK
    assert "gradient pass 1:" in out
