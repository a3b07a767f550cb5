import csv
import itertools
import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackseq.ingest import (
    Dataset,
    DatasetError,
    genre_summary,
    make_folds,
    parse_dataset,
    randomize_album,
    write_dataset,
    write_rejection_log,
)

from conftest import album_record, make_album


def _write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def _dataset(n_artists, per_artist=1, genre="rock"):
    albums = [make_album(k=8, album_id=f"al{a}-{j}", artist_id=f"ar{a}", genre=genre, seed=a * 10 + j)
              for a in range(n_artists) for j in range(per_artist)]
    return Dataset(tuple(albums))


def test_jsonl_three_valid_one_short(tmp_path):
    recs = [album_record(k=8, album_id=f"a{i}", seed=i) for i in range(3)]
    recs.insert(1, album_record(k=5, album_id="short"))
    path = tmp_path / "d.jsonl"
    _write_jsonl(path, recs)
    ds = parse_dataset(path)
    assert len(ds) == 3
    assert len(ds.rejections) == 1
    assert ds.rejections[0].reason == "too-short"
    assert ds.rejections[0].record_locator == "line 2"


def test_csv_out_of_order_tracks(tmp_path):
    album = make_album(k=8)
    path = tmp_path / "d.csv"
    rows = [{"album_id": album.album_id, "artist_id": album.artist_id, "genre": album.genre, **t.to_dict()}
            for t in album.tracks]
    rows = [rows[i] for i in (3, 0, 7, 5, 1, 2, 6, 4)]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    ds = parse_dataset(path, "csv")
    assert len(ds) == 1
    assert [t.track_number for t in ds.albums[0].tracks] == list(range(1, 9))
    assert ds.albums[0] == album


def test_duplicate_album_rejected(tmp_path):
    rec = album_record(k=8, album_id="dup")
    path = tmp_path / "d.jsonl"
    _write_jsonl(path, [rec, album_record(k=8, album_id="other"), rec])
    ds = parse_dataset(path)
    assert [a.album_id for a in ds] == ["dup", "other"]
    assert [r.reason for r in ds.rejections] == ["duplicate"]
    assert ds.rejections[0].record_locator == "line 3"


def test_malformed_line_continues(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text("{not json\n" + json.dumps(album_record(k=8)) + "\n\n", encoding="utf-8")
    ds = parse_dataset(path)
    assert len(ds) == 1
    assert ds.rejections[0].reason == "malformed"


def test_empty_result_is_error(tmp_path):
    path = tmp_path / "d.jsonl"
    _write_jsonl(path, [album_record(k=4)])
    with pytest.raises(DatasetError):
        parse_dataset(path)


def test_unreadable_file(tmp_path):
    with pytest.raises(DatasetError):
        parse_dataset(tmp_path / "missing.jsonl")


def test_inconsistent_csv_metadata(tmp_path):
    album = make_album(k=6)
    path = tmp_path / "d.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["album_id", "artist_id", "genre", "track_number", "valence", "energy", "loudness", "tempo"])
        for t in album.tracks:
            artist = "other" if t.track_number == 3 else album.artist_id
            w.writerow([album.album_id, artist, album.genre, *t.to_dict().values()])
    with pytest.raises(DatasetError):
        parse_dataset(path)


@pytest.mark.parametrize("fmt", ["jsonl", "csv"])
def test_round_trip_bit_identical(tmp_path, fmt):
    ds = _dataset(5, 2)
    path = tmp_path / f"d.{fmt}"
    write_dataset(ds.albums, path)
    back = parse_dataset(path)
    assert back.albums == ds.albums
    assert back.digest == ds.digest
    again = tmp_path / f"e.{fmt}"
    write_dataset(back.albums, again)
    assert again.read_bytes() == path.read_bytes()


def test_rejection_log(tmp_path):
    path = tmp_path / "d.jsonl"
    _write_jsonl(path, [album_record(k=5), album_record(k=8, album_id="ok")])
    ds = parse_dataset(path)
    out = tmp_path / "rej.csv"
    write_rejection_log(ds.rejections, out)
    rows = list(csv.reader(out.open()))
    assert rows == [["record_locator", "reason"], ["line 1", "too-short"]]


def test_genre_summary():
    albums = [make_album(k=6, album_id=f"a{i}", genre=g) for i, g in enumerate(["rock", "rock", "jazz", "jazz"])]
    assert genre_summary(albums) == [("jazz", 2, 50.0), ("rock", 2, 50.0)]
    assert genre_summary(albums[:2]) == [("rock", 2, 100.0)]
    blank = [make_album(k=6, album_id="b", genre=" "), make_album(k=6, album_id="c", genre="pop")]
    assert [row[0] for row in genre_summary(blank)] == ["pop", "unknown"]
    with pytest.raises(DatasetError):
        genre_summary([])


def test_make_folds_ten_artists():
    plan = make_folds(_dataset(10), n_folds=1, test_fraction=0.2, seed=7)
    (fold,) = plan.folds
    assert len(fold.test_artist_ids) == 2 and len(fold.train_artist_ids) == 8


def test_make_folds_defaults_and_determinism():
    ds = _dataset(23, 2)
    plan = make_folds(ds)
    assert len(plan.folds) == 10
    assert plan == make_folds(ds)
    assert plan != make_folds(ds, seed=1)
    artists = set(ds.artists)
    for fold in plan.folds:
        assert not fold.train_artist_ids & fold.test_artist_ids
        assert fold.train_artist_ids | fold.test_artist_ids == artists
        assert abs(len(fold.test_artist_ids) - 0.2 * 23) <= 1
        test_albums = ds.subset(fold.test_artist_ids)
        train_albums = ds.subset(fold.train_artist_ids)
        assert not {a.album_id for a in test_albums} & {a.album_id for a in train_albums}


def test_make_folds_too_few_artists():
    with pytest.raises(DatasetError):
        make_folds(_dataset(2, 3), test_fraction=0.2)
    with pytest.raises(ValueError):
        make_folds(_dataset(10), test_fraction=1.0)


def test_randomize_single_track_is_identity():
    album = make_album(k=1)
    assert randomize_album(album, 3) == album


def test_randomize_deterministic_and_multiset():
    album = make_album(k=6)
    a, b = randomize_album(album, 11), randomize_album(album, 11)
    assert a == b
    assert [t.track_number for t in a.tracks] == list(range(1, 7))
    assert Counter(t.features() for t in a.tracks) == Counter(t.features() for t in album.tracks)


def test_randomize_depends_on_album_id_not_position():
    x = make_album(k=8, album_id="same", seed=1)
    y = make_album(k=8, album_id="same", seed=1)
    assert randomize_album(x, 5) == randomize_album(y, 5)


def test_randomize_uniform_over_s3():
    album = make_album({"valence": np.array([0.1, 0.2, 0.3])})
    n = 10_000
    counts = Counter()
    for seed in range(n):
        order = tuple(round(t.valence * 10) for t in randomize_album(album, seed).tracks)
        counts[order] += 1
    assert set(counts) == set(itertools.permutations((1, 2, 3)))
    for c in counts.values():
        assert abs(c / n - 1 / 6) < 0.02
    chi2 = sum((c - n / 6) ** 2 / (n / 6) for c in counts.values())
    assert chi2 < 20.5  # chi-square(5) upper 0.1% point


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**32))
def test_randomize_preserves_tracks(k, seed):
    album = make_album(k=k, seed=seed % 1000)
    shuffled = randomize_album(album, seed)
    assert sorted(t.features() for t in shuffled.tracks) == sorted(t.features() for t in album.tracks)
