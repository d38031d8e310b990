from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
import pytest

from friendlab.data import Dataset, PlayerRecord, SyntheticConfig, generate_synthetic


def tiny_record(pid, **kwargs) -> PlayerRecord:
    defaults = dict(
        daily_interactions=[],
        daily_gameplay={},
        avatar_inventory=set(),
        displayed_avatar=None,
        avatar_acquisitions={},
        friends_before=set(),
        friends_after=set(),
    )
    defaults.update(kwargs)
    return PlayerRecord(id=pid, **defaults)


@pytest.fixture(scope="session")
def small_synthetic() -> Dataset:
    return generate_synthetic(SyntheticConfig(n_players=60, n_groups=2, seed=11))


@pytest.fixture(scope="session")
def two_player_dataset() -> Dataset:
    embeddings = {1: np.array([1.0, 0.0]), 2: np.array([0.0, 1.0])}
    players = [
        tiny_record(
            0,
            daily_interactions=[(0, 1, 3), (5, 1, 1)],
            daily_gameplay={0: {"PVE": 1, "PVP": 0, "Guild": 0}},
            avatar_inventory={1},
            displayed_avatar=1,
            avatar_acquisitions={1: 0},
            friends_before={1},
        ),
        tiny_record(
            1,
            daily_interactions=[(0, 0, 3), (5, 0, 1)],
            daily_gameplay={1: {"PVE": 0, "PVP": 1, "Guild": 0}},
            avatar_inventory={2},
            displayed_avatar=2,
            avatar_acquisitions={2: 1},
            friends_before={0},
        ),
    ]
    return Dataset(
        players=players,
        span_days=60,
        split_day=40,
        avatar_visual_embeddings=embeddings,
    )
