import itertools
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackseq.core import FEATURES, FeatureId, ParsonsSequence, State
from trackseq.markov import (
    DegenerateModelWarning,
    ModelError,
    TransitionModel,
    album_loglik,
    estimate_model,
    feature_logliks,
    load_model,
    model_to_dict,
    save_model,
    sequence_loglik,
    transition_counts,
)
from trackseq.synth import REFERENCE

from conftest import make_album

U, D = State.UP, State.DOWN


def _album_from_states(states, album_id="s"):
    """Album whose four features all follow the given up/down states."""
    x = np.concatenate([[0.0], np.cumsum([0.05 if s == U else -0.05 for s in states])]) + 0.5
    return make_album({"valence": x, "energy": x, "loudness": x * 10 - 10, "tempo": x * 10 + 100},
                      album_id=album_id)


def test_exact_counting_with_degenerate_rows():
    train = [_album_from_states([U, D, U], "a"), _album_from_states([D, U, D], "b")]
    with pytest.warns(DegenerateModelWarning):
        model = estimate_model(train)
    for f in FEATURES:
        m = model.matrix(f)
        assert m[U, D] == 1.0 and m[D, U] == 1.0
        assert m[U, U] == 0.0 and m[D, D] == 0.0
        np.testing.assert_array_equal(model.counts[f], [[0, 2], [2, 0]])
    assert model.trained_on == 2


def test_all_zero_row_left_uniform():
    with pytest.warns(DegenerateModelWarning):
        model = estimate_model([_album_from_states([D, D, D, D])])
    np.testing.assert_array_equal(model.matrix(FeatureId.VALENCE), [[1.0, 0.0], [0.5, 0.5]])


def test_smoothing_formula():
    model = estimate_model([_album_from_states([U, D, U], "a"), _album_from_states([D, U, D], "b")],
                           smoothing_alpha=1.0)
    np.testing.assert_allclose(model.matrix(FeatureId.TEMPO), [[1 / 4, 3 / 4], [3 / 4, 1 / 4]])


def test_large_alpha_goes_uniform():
    albums = [make_album(k=10, album_id=str(i), seed=i) for i in range(5)]
    model = estimate_model(albums, smoothing_alpha=1e12)
    for f in FEATURES:
        np.testing.assert_allclose(model.matrix(f), 0.5, atol=1e-9)
    inf_model = estimate_model(albums, smoothing_alpha=math.inf)
    for f in FEATURES:
        np.testing.assert_array_equal(inf_model.matrix(f), 0.5)


def test_counts_pool_across_albums():
    albums = [make_album(k=k, album_id=str(i), seed=i) for i, k in enumerate([6, 9, 12])]
    total = sum(transition_counts(a) for a in albums)
    model = estimate_model(albums)
    for j, f in enumerate(FEATURES):
        np.testing.assert_array_equal(model.counts[f], total[j])
        assert model.counts[f].sum() == 4 + 7 + 10  # k - 2 state pairs per album
        np.testing.assert_allclose(model.matrix(f).sum(axis=1), 1.0, atol=1e-12)


def test_estimate_errors():
    with pytest.raises(ValueError):
        estimate_model([])
    with pytest.raises(ValueError):
        estimate_model([make_album(k=6)], smoothing_alpha=-1)


def test_sequence_loglik_examples(valence_exact_model):
    seq = ParsonsSequence(FeatureId.VALENCE, (U, D))
    assert sequence_loglik(seq, valence_exact_model) == pytest.approx(math.log(0.664), abs=1e-12)
    assert math.log(0.664) == pytest.approx(-0.4095, abs=5e-5)
    seq = ParsonsSequence(FeatureId.VALENCE, (D, U, D))
    expected = (math.log(0.690) + math.log(0.664)) / 2
    assert sequence_loglik(seq, valence_exact_model) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-0.3904, abs=2e-4)  # quoted to 4 places, rounded loosely


def test_uniform_model_gives_log_half():
    uniform = TransitionModel.uniform()
    for states in [(U, U), (D, U, D, D, U)]:
        assert sequence_loglik(ParsonsSequence(FeatureId.ENERGY, states), uniform) == pytest.approx(math.log(0.5))
    assert album_loglik(make_album(k=11), uniform) == pytest.approx(math.log(0.5))


def test_zero_probability_is_negative_infinity():
    model = TransitionModel.from_matrices({f.value: [[0.0, 1.0], [1.0, 0.0]] for f in FEATURES})
    assert sequence_loglik(ParsonsSequence(FeatureId.TEMPO, (U, U)), model) == -math.inf
    assert sequence_loglik(ParsonsSequence(FeatureId.TEMPO, (U, D, U)), model) == 0.0


def test_sequence_too_short():
    with pytest.raises(ValueError):
        sequence_loglik(ParsonsSequence(FeatureId.TEMPO, (U,)), TransitionModel.uniform())


def test_identical_sequences_album_equals_sequence(reference_model):
    states = (U, D, D, U, D, U, U)
    album = _album_from_states(states)
    # all features share a shape, but matrices differ per feature
    expected = np.mean([sequence_loglik(ParsonsSequence(f, states), reference_model) for f in FEATURES])
    assert album_loglik(album, reference_model) == pytest.approx(expected, abs=1e-12)
    same = TransitionModel.from_matrices({f.value: REFERENCE["valence"] for f in FEATURES})
    assert album_loglik(album, same) == pytest.approx(
        sequence_loglik(ParsonsSequence(FeatureId.VALENCE, states), same), abs=1e-12)


def test_alternating_album_closed_form(reference_model):
    states = (U, D, U, D, U, D, U)
    album = _album_from_states(states)
    terms = []
    for f in FEATURES:
        m = reference_model.matrix(f)
        # 3 up->down steps and 3 down->up steps along the path
        terms.append((3 * math.log(m[U, D]) + 3 * math.log(m[D, U])) / 6)
    assert album_loglik(album, reference_model) == pytest.approx(np.mean(terms), abs=1e-12)


@pytest.mark.parametrize("n", range(2, 7))
def test_exhaustive_loglik_oracle(n, reference_model):
    for f in FEATURES:
        m = reference_model.matrix(f)
        for states in itertools.product((D, U), repeat=n):
            prob = 1.0
            for a, b in zip(states, states[1:]):
                prob *= m[a][b]
            oracle = math.log(prob) / (n - 1)
            got = sequence_loglik(ParsonsSequence(f, states), reference_model)
            assert got == pytest.approx(oracle, rel=1e-12, abs=1e-14)


def test_feature_logliks_uses_all_features(reference_model):
    album = make_album(k=9, seed=4)
    lls = feature_logliks(album, reference_model)
    assert lls.shape == (4,)
    assert album_loglik(album, reference_model) == pytest.approx(lls.mean())


def test_from_matrices_normalizes_rows(reference_model):
    for f in FEATURES:
        np.testing.assert_allclose(reference_model.matrix(f).sum(axis=1), 1.0, atol=1e-15)


def test_save_load_round_trip(tmp_path):
    albums = [make_album(k=12, album_id=str(i), seed=i) for i in range(8)]
    model = estimate_model(albums, smoothing_alpha=0.5, fold_id=3)
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    assert back == model
    assert back.fold_id == 3 and back.trained_on == 8 and back.smoothing_alpha == 0.5
    for f in FEATURES:
        np.testing.assert_array_equal(back.matrix(f), model.matrix(f))


def _model_json(tmp_path, mutate):
    model = estimate_model([make_album(k=12, seed=1)], smoothing_alpha=1.0)
    data = model_to_dict(model)
    mutate(data)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(data))
    return path


def test_load_bad_row_sum(tmp_path):
    path = _model_json(tmp_path, lambda d: d["features"]["energy"].__setitem__("matrix", [[0.5, 0.4], [0.5, 0.5]]))
    with pytest.raises(ModelError, match="energy"):
        load_model(path)


def test_load_missing_feature(tmp_path):
    path = _model_json(tmp_path, lambda d: d["features"].pop("tempo"))
    with pytest.raises(ModelError, match="tempo"):
        load_model(path)


def test_load_corrupted(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"features": {"valence": ')
    with pytest.raises(ModelError):
        load_model(path)
    path.write_text("[1, 2]")
    with pytest.raises(ModelError):
        load_model(path)


def test_model_file_schema(tmp_path):
    model = estimate_model([make_album(k=12, seed=1)], smoothing_alpha=1.0)
    data = model_to_dict(model)
    assert set(data) == {"smoothing_alpha", "features", "trained_on", "fold_id"}
    assert set(data["features"]) == {f.value for f in FEATURES}
    assert set(data["features"]["valence"]) == {"matrix", "counts"}


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(3, 16), min_size=1, max_size=6), st.floats(0, 5), st.integers(0, 10_000))
def test_rows_stochastic(lengths, alpha, seed):
    albums = [make_album(k=k, album_id=str(i), seed=seed + i) for i, k in enumerate(lengths)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModelWarning)
        model = estimate_model(albums, smoothing_alpha=alpha)
    for f in FEATURES:
        m = model.matrix(f)
        assert np.all((m >= 0) & (m <= 1))
        np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-9)
