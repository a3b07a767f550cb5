import json

import numpy as np
import pytest

from trackseq.core import FEATURES, validate_album
from trackseq.markov import estimate_model
from trackseq.synth import REFERENCE, UNIFORM, SynthSpec, alternating, synth_dataset
from trackseq.trajectory import ramp_analysis


def test_albums_are_valid_and_in_range():
    ds = synth_dataset(SynthSpec(k_min=6, k_max=9), 300, seed=4)
    assert len(ds) == 300
    for album in ds:
        assert validate_album(album) == album
        assert 6 <= len(album) <= 9
    assert len(ds.artists) == 50


def test_provenance_embeds_parameters():
    ds = synth_dataset(SynthSpec(drift={"tempo": -0.5}), 10, seed=9)
    assert ds.source.startswith("synth:")
    params = json.loads(ds.source[len("synth:"):])
    assert params["seed"] == 9 and params["n_albums"] == 10
    assert params["generator"]["drift"] == {"tempo": -0.5}


def test_deterministic_and_seed_sensitive():
    a = synth_dataset(SynthSpec(), 20, seed=1)
    assert a.digest == synth_dataset(SynthSpec(), 20, seed=1).digest
    assert a.digest != synth_dataset(SynthSpec(), 20, seed=2).digest


def test_prefix_stability():
    # album i does not depend on how many albums are generated
    small = synth_dataset(SynthSpec(), 5, seed=3)
    big = synth_dataset(SynthSpec(), 50, seed=3)
    assert big.albums[:5] == small.albums


def test_recovers_matrices():
    ds = synth_dataset(SynthSpec(), 2000, seed=5)
    model = estimate_model(ds.albums)
    for f in FEATURES:
        target = np.array(REFERENCE[f.value])
        target = target / target.sum(axis=1, keepdims=True)
        assert np.abs(model.matrix(f) - target).max() < 0.03


def test_uniform_no_drift_ramps_balanced():
    ramps = ramp_analysis(synth_dataset(SynthSpec(matrices=UNIFORM), 2000, seed=6), seed=6)
    for f in FEATURES:
        assert abs(ramps[f].down_ramp_proportion_original - 0.5) < 0.05


def test_shared_directions():
    ds = synth_dataset(SynthSpec(matrices=alternating(0.9), shared_directions=True), 20, seed=0)
    for album in ds:
        signs = np.sign(np.diff(album.values, axis=0))
        assert np.all(signs == signs[:, :1])


@pytest.mark.parametrize("spec", [
    SynthSpec(k_min=5),
    SynthSpec(k_max=17),
    SynthSpec(k_min=10, k_max=8),
    SynthSpec(matrices={"valence": [[0.5, 0.5], [0.5, 0.5]]}),
    SynthSpec(matrices={**UNIFORM, "tempo": [[0.2, 0.2], [0.5, 0.5]]}),
    SynthSpec(matrices={**UNIFORM, "tempo": [[1.2, -0.2], [0.5, 0.5]]}),
    SynthSpec(drift={"pitch": 1.0}),
    SynthSpec(magnitude={"tempo": 0.0}),
    SynthSpec(albums_per_artist=0),
    SynthSpec(shared_directions=True),
])
def test_invalid_specs(spec):
    with pytest.raises(ValueError):
        synth_dataset(spec, 5, seed=0)
