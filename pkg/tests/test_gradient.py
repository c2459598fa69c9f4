import subprocess
import sys

import numpy as np
import pytest

from seqform import oracle
from seqform.games import spec_from_id
from seqform.gradient import Engine, configure_threads, engine_for
from seqform.treeplex import (
    random_policy,
    to_sequence_form,
    uniform_sequence_form,
)

SMALL = ("dh1", "dh2", "adh1", "adh2")


@pytest.mark.parametrize("gid", SMALL)
def test_expected_value_matches_oracle(engine, rng, gid):
    eng = engine(gid)
    for _ in range(10):
        p1 = random_policy(eng.tp1, rng)
        p2 = random_policy(eng.tp2, rng)
        fast = eng.expected_value(p1, p2)
        exact = oracle.oracle_expected_value(eng.spec, p1, p2)
        assert abs(fast - float(exact)) < 1e-9


@pytest.mark.parametrize("gid", SMALL)
def test_gradient_identities(engine, rng, gid):
    # x^T g1 = ev and y^T g2 = -ev for any strategy pair.
    eng = engine(gid)
    for _ in range(5):
        x = to_sequence_form(eng.tp1, random_policy(eng.tp1, rng))
        y = to_sequence_form(eng.tp2, random_policy(eng.tp2, rng))
        ev = eng.expected_value(x, y)
        g1, g2 = eng.gradients(x, y)
        assert abs(float(x.values @ g1.values) - ev) < 1e-12
        assert abs(float(y.values @ g2.values) + ev) < 1e-12


def test_single_sided_gradient_matches_pair(engine, rng):
    eng = engine("adh2")
    x = to_sequence_form(eng.tp1, random_policy(eng.tp1, rng))
    y = to_sequence_form(eng.tp2, random_policy(eng.tp2, rng))
    g1, g2 = eng.gradients(x, y)
    assert np.array_equal(eng.gradient(1, x, y).values, g1.values)
    assert np.array_equal(eng.gradient(2, x, y).values, g2.values)


def test_nash_gap_nonnegative_and_matches_oracle(engine, rng):
    for gid in ("dh2", "adh2"):
        eng = engine(gid)
        for _ in range(5):
            p1 = random_policy(eng.tp1, rng)
            p2 = random_policy(eng.tp2, rng)
            gap = eng.nash_gap(p1, p2)
            ogap = oracle.oracle_nash_gap(eng.spec, p1, p2)
            assert gap >= 0
            assert abs(gap - float(ogap)) < 1e-9
            assert abs(eng.exploitability(p1, p2) - gap / 2) < 1e-15


def test_uniform_exploitability_zero_on_dh1(engine):
    eng = engine("dh1")
    x = uniform_sequence_form(eng.tp1)
    y = uniform_sequence_form(eng.tp2)
    assert eng.exploitability(x, y) == 0.0


def test_pruning_consistent_with_dense(engine, rng):
    # A sparse (deterministic) strategy prunes most of the tree; results
    # must match the oracle exactly anyway.
    eng = engine("adh2")
    from seqform.treeplex import best_response_policy

    det = best_response_policy(eng.tp1, rng.standard_normal(eng.tp1.num_sequences))
    p2 = random_policy(eng.tp2, rng)
    fast = eng.expected_value(det, p2)
    exact = oracle.oracle_expected_value(eng.spec, det, p2)
    assert abs(fast - float(exact)) < 1e-12


def test_symmetrized_value_antisymmetric(engine, rng):
    eng = engine("adh2")
    a = (random_policy(eng.tp1, rng), random_policy(eng.tp2, rng))
    b = (random_policy(eng.tp1, rng), random_policy(eng.tp2, rng))
    ab = eng.symmetrized_value(a, b)
    ba = eng.symmetrized_value(b, a)
    assert abs(ab + ba) < 1e-15
    assert abs(eng.symmetrized_value(a, a)) < 1e-15


def test_engine_for_is_cached():
    spec = spec_from_id("dh1")
    assert engine_for(spec) is engine_for(spec)


def test_dimension_mismatch_rejected(engine):
    eng = engine("dh2")
    with pytest.raises(ValueError):
        eng.expected_value(np.ones(3), uniform_sequence_form(eng.tp2))
    with pytest.raises(ValueError):
        eng.gradients(uniform_sequence_form(eng.tp2),
                      uniform_sequence_form(eng.tp2))


def test_configure_threads_validates():
    with pytest.raises(ValueError):
        configure_threads(0)
    assert configure_threads(1) == 1


_DETERMINISM_SNIPPET = """
import sys
sys.setrecursionlimit(100000)
import numpy as np
from seqform.games import spec_from_id
from seqform.gradient import Engine
from seqform.treeplex import random_policy, to_sequence_form
eng = Engine(spec_from_id("adh2"))
rng = np.random.default_rng(7)
x = to_sequence_form(eng.tp1, random_policy(eng.tp1, rng))
y = to_sequence_form(eng.tp2, random_policy(eng.tp2, rng))
g1, g2 = eng.gradients(x, y)
sys.stdout.buffer.write(g1.values.tobytes() + g2.values.tobytes())
"""


def _gradient_bytes(threads: int) -> bytes:
    import os

    env = dict(os.environ, NUMBA_NUM_THREADS=str(threads),
               SEQFORM_THREADS=str(threads))
    out = subprocess.run([sys.executable, "-c", _DETERMINISM_SNIPPET],
                         capture_output=True, env=env, check=True)
    return out.stdout


def test_thread_count_determinism():
    # Bit-identical gradients with 1, 2, and 8 traversal threads.
    ref = _gradient_bytes(1)
    assert len(ref) > 0
    assert _gradient_bytes(2) == ref
    assert _gradient_bytes(8) == ref
