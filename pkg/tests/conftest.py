import sys

import numpy as np
import pytest

sys.setrecursionlimit(1_000_000)

from seqform.games import spec_from_id
from seqform.gradient import Engine

_ENGINES: dict[str, Engine] = {}


@pytest.fixture(scope="session")
def engine():
    """Factory returning a cached Engine for a (small) game id."""

    def get(game_id: str) -> Engine:
        if game_id not in _ENGINES:
            _ENGINES[game_id] = Engine(spec_from_id(game_id))
        return _ENGINES[game_id]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(20260826)
