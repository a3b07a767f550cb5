"""Dataset ingestion, summaries, artist-level splits and seeded album shuffles."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from trackseq.core import FEATURES, Album, AlbumRejected, Rejection, validate_album

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("album_id", "artist_id", "genre", "track_number", *(f.value for f in FEATURES))


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class RejectedRecord:
    record_locator: str
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class Dataset:
    albums: tuple[Album, ...]
    source: str = ""
    rejections: tuple[RejectedRecord, ...] = field(default=(), compare=False)

    def __post_init__(self):
        ids = [a.album_id for a in self.albums]
        if len(set(ids)) != len(ids):
            raise DatasetError("album_ids are not unique")

    def __len__(self) -> int:
        return len(self.albums)

    def __iter__(self) -> Iterator[Album]:
        return iter(self.albums)

    @property
    def digest(self) -> str:
        """Content digest of the accepted albums, independent of the file format they came from."""
        h = hashlib.sha256()
        for album in self.albums:
            h.update(_jsonl_line(album).encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()

    @property
    def artists(self) -> list[str]:
        return sorted({a.artist_id for a in self.albums})

    def subset(self, artist_ids: Iterable[str]) -> list[Album]:
        keep = set(artist_ids)
        return [a for a in self.albums if a.artist_id in keep]


@dataclass(frozen=True)
class Fold:
    train_artist_ids: frozenset[str]
    test_artist_ids: frozenset[str]


@dataclass(frozen=True)
class SplitPlan:
    folds: tuple[Fold, ...]
    seed: int
    test_fraction: float


# -- stable per-item random streams ------------------------------------------------

def stream_key(*parts: object) -> int:
    """Map arbitrary labels to a 128-bit integer usable as seed entropy."""
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def rng_for(seed: int, *labels: object) -> np.random.Generator:
    """Independent generator keyed by ``seed`` and labels; independent of iteration order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), stream_key(*labels)]))


# -- parsing -----------------------------------------------------------------------

def _jsonl_line(album: Album) -> str:
    return json.dumps(album.to_dict(), separators=(",", ":"), ensure_ascii=False)


def _iter_jsonl(text: str) -> Iterator[tuple[str, object]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        locator = f"line {lineno}"
        try:
            yield locator, json.loads(line)
        except json.JSONDecodeError as exc:
            yield locator, AlbumRejected(Rejection.MALFORMED, f"invalid JSON: {exc.msg}")


def _iter_csv(text: str) -> Iterator[tuple[str, object]]:
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise DatasetError(f"CSV header missing columns {missing}")
    grouped: dict[str, list[dict[str, str]]] = {}
    first_line: dict[str, int] = {}
    for row in reader:
        key = row["album_id"]
        grouped.setdefault(key, []).append(row)
        first_line.setdefault(key, reader.line_num)
    for album_id, rows in grouped.items():
        locator = f"album_id={album_id} (line {first_line[album_id]})"
        meta = {(r["artist_id"], r["genre"]) for r in rows}
        if len(meta) > 1:
            yield locator, AlbumRejected(Rejection.INCONSISTENT_METADATA, f"{sorted(meta)}")
            continue
        artist_id, genre = meta.pop()
        yield locator, {
            "album_id": album_id,
            "artist_id": artist_id,
            "genre": genre,
            "tracks": [{c: r[c] for c in CSV_COLUMNS[3:]} for r in rows],
        }


def parse_dataset(path: str | Path, format: str | None = None) -> Dataset:
    """Read albums from a JSONL or CSV file.

    Records failing validation are not fatal: they are collected in
    ``Dataset.rejections`` with a locator and reason, and parsing continues.
    Duplicate album ids keep the first occurrence.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in ("jsonl", "csv"):
        raise DatasetError(f"unsupported format {fmt!r}; expected jsonl or csv")
    try:
        text = path.read_bytes().decode("utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc

    records = _iter_jsonl(text) if fmt == "jsonl" else _iter_csv(text)
    albums: list[Album] = []
    rejections: list[RejectedRecord] = []
    seen: set[str] = set()
    for locator, record in records:
        try:
            if isinstance(record, AlbumRejected):
                raise record
            album = validate_album(record)
            if album.album_id in seen:
                raise AlbumRejected(Rejection.DUPLICATE, f"album_id {album.album_id} already seen")
        except AlbumRejected as exc:
            rejections.append(RejectedRecord(locator, exc.reason.value, exc.detail))
            continue
        seen.add(album.album_id)
        albums.append(album)

    logger.info("parsed %s: %d accepted, %d rejected", path, len(albums), len(rejections))
    if not albums:
        raise DatasetError(f"no valid albums in {path} ({len(rejections)} rejected)")
    return Dataset(tuple(albums), source=str(path), rejections=tuple(rejections))


def write_dataset(albums: Iterable[Album], path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for album in albums:
                fh.write(_jsonl_line(album) + "\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(CSV_COLUMNS)
            for album in albums:
                for t in album.tracks:
                    writer.writerow([album.album_id, album.artist_id, album.genre, t.track_number,
                                     *(repr(v) for v in t.features())])
    else:
        raise DatasetError(f"unsupported format {fmt!r}")


def write_rejection_log(rejections: Sequence[RejectedRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["record_locator", "reason"])
        for r in rejections:
            writer.writerow([r.record_locator, r.reason])


# -- summaries and splits -----------------------------------------------------------

def genre_summary(dataset: Dataset | Sequence[Album]) -> list[tuple[str, int, float]]:
    """Rows of ``(genre, count, percentage)`` sorted by genre; blank genres count as ``unknown``."""
    albums = list(dataset)
    if not albums:
        raise DatasetError("empty dataset")
    counts = Counter((a.genre.strip() or "unknown") for a in albums)
    total = len(albums)
    return [(g, n, 100.0 * n / total) for g, n in sorted(counts.items())]


def make_folds(dataset: Dataset | Sequence[Album], n_folds: int = 10, test_fraction: float = 0.2,
               seed: int = 0) -> SplitPlan:
    """Independent random artist-level holdouts, one per fold."""
    if n_folds < 1:
        raise ValueError("n_folds must be >= 1")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    artists = sorted({a.artist_id for a in dataset})
    if not artists:
        raise DatasetError("empty dataset")
    n_test = int(round(test_fraction * len(artists)))
    if n_test < 1 or n_test >= len(artists):
        raise DatasetError(
            f"{len(artists)} artists cannot be split with test_fraction={test_fraction}"
        )
    folds = []
    for fold in range(n_folds):
        rng = rng_for(seed, "fold", fold)
        picked = rng.choice(len(artists), size=n_test, replace=False)
        test = frozenset(artists[i] for i in picked)
        folds.append(Fold(frozenset(artists) - test, test))
    return SplitPlan(tuple(folds), seed, test_fraction)


def random_order(album: Album, seed: int, *labels: object) -> np.ndarray:
    return rng_for(seed, "shuffle", album.album_id, *labels).permutation(len(album))


def randomize_album(album: Album, seed: int, *labels: object) -> Album:
    """Uniformly shuffled copy of ``album``, renumbered 1..k in the new order.

    The permutation depends only on ``(seed, album.album_id, *labels)``.
    """
    return album.reordered(random_order(album, seed, *labels))
