import numpy as np
import pytest

from trackseq.core import Album, TrackFeatures
from trackseq.markov import TransitionModel
from trackseq.synth import REFERENCE


def make_album(columns=None, k=None, album_id="a1", artist_id="x1", genre="rock", seed=0):
    """Album from explicit per-feature columns, or random valid values for ``k`` tracks."""
    if columns is None:
        rng = np.random.default_rng(seed)
        columns = {
            "valence": rng.random(k),
            "energy": rng.random(k),
            "loudness": rng.uniform(-20, -2, k),
            "tempo": rng.uniform(60, 180, k),
        }
    k = len(next(iter(columns.values())))
    filled = {
        "valence": columns.get("valence", np.full(k, 0.5)),
        "energy": columns.get("energy", np.full(k, 0.5)),
        "loudness": columns.get("loudness", np.full(k, -8.0)),
        "tempo": columns.get("tempo", np.full(k, 120.0)),
    }
    tracks = tuple(
        TrackFeatures(i + 1, float(filled["valence"][i]), float(filled["energy"][i]),
                      float(filled["loudness"][i]), float(filled["tempo"][i]))
        for i in range(k)
    )
    return Album(album_id, artist_id, genre, tracks)


def album_record(k=8, album_id="a1", artist_id="x1", genre="rock", seed=0):
    return make_album(k=k, album_id=album_id, artist_id=artist_id, genre=genre, seed=seed).to_dict()


@pytest.fixture
def reference_model():
    return TransitionModel.from_matrices(REFERENCE)


@pytest.fixture
def valence_exact_model():
    # rows completed so the quoted entries (0.690, 0.664) stay exact
    m = [[0.310, 0.690], [0.664, 0.336]]
    return TransitionModel.from_matrices({f: m for f in ("valence", "energy", "loudness", "tempo")})
