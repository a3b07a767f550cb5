"""Domain types shared by every analysis: tracks, albums, Parsons sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from typing import Any, Iterable, Mapping

import numpy as np

MIN_TRACKS = 6
MAX_TRACKS = 16


class FeatureId(str, Enum):
    VALENCE = "valence"
    ENERGY = "energy"
    LOUDNESS = "loudness"
    TEMPO = "tempo"

    def __str__(self) -> str:
        return self.value


FEATURES: tuple[FeatureId, ...] = tuple(FeatureId)


class State(IntEnum):
    """Direction of change between two consecutive tracks.

    The integer value doubles as the row/column index into a transition matrix,
    so ``down`` comes first in every matrix.
    """

    DOWN = 0
    UP = 1

    @property
    def code(self) -> str:
        return "u" if self is State.UP else "d"


class Rejection(str, Enum):
    TOO_SHORT = "too-short"
    TOO_LONG = "too-long"
    BAD_FEATURE_RANGE = "bad-feature-range"
    DUPLICATE_TRACK_NUMBER = "duplicate-track-number"
    TRACK_NUMBER_GAP = "track-number-gap"
    NON_FINITE = "non-finite-value"
    MALFORMED = "malformed"
    DUPLICATE = "duplicate"
    INCONSISTENT_METADATA = "inconsistent-metadata"


class AlbumRejected(ValueError):
    """Raised by :func:`validate_album`; ``reason`` is a :class:`Rejection`."""

    def __init__(self, reason: Rejection, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)


@dataclass(frozen=True)
class TrackFeatures:
    track_number: int
    valence: float
    energy: float
    loudness: float
    tempo: float

    def value(self, feature: FeatureId) -> float:
        return getattr(self, feature.value)

    def features(self) -> tuple[float, float, float, float]:
        return (self.valence, self.energy, self.loudness, self.tempo)

    def renumbered(self, track_number: int) -> TrackFeatures:
        return TrackFeatures(track_number, self.valence, self.energy, self.loudness, self.tempo)

    def to_dict(self) -> dict[str, Any]:
        return {
            "track_number": self.track_number,
            "valence": self.valence,
            "energy": self.energy,
            "loudness": self.loudness,
            "tempo": self.tempo,
        }


@dataclass(frozen=True)
class Album:
    album_id: str
    artist_id: str
    genre: str
    tracks: tuple[TrackFeatures, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.tracks)

    @cached_property
    def values(self) -> np.ndarray:
        """Feature matrix of shape ``(k, 4)`` in track order, columns in ``FEATURES`` order."""
        arr = np.array([t.features() for t in self.tracks], dtype=float).reshape(len(self.tracks), 4)
        arr.flags.writeable = False
        return arr

    def column(self, feature: FeatureId) -> np.ndarray:
        return self.values[:, FEATURES.index(feature)]

    def reordered(self, order: Iterable[int]) -> Album:
        """Album with tracks taken at positions ``order`` and renumbered 1..k."""
        tracks = tuple(self.tracks[i].renumbered(n) for n, i in enumerate(order, start=1))
        return Album(self.album_id, self.artist_id, self.genre, tracks)

    def to_dict(self) -> dict[str, Any]:
        return {
            "album_id": self.album_id,
            "artist_id": self.artist_id,
            "genre": self.genre,
            "tracks": [t.to_dict() for t in self.tracks],
        }


@dataclass(frozen=True)
class ParsonsSequence:
    feature: FeatureId
    states: tuple[State, ...]
    tie_count: int = 0

    def __len__(self) -> int:
        return len(self.states)

    @property
    def code(self) -> str:
        return "".join(s.code for s in self.states)


def _as_float(value: Any, what: str) -> float:
    if isinstance(value, bool):
        raise AlbumRejected(Rejection.MALFORMED, f"{what} is a boolean")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise AlbumRejected(Rejection.MALFORMED, f"{what}={value!r} is not a number") from None


def _as_track(raw: TrackFeatures | Mapping[str, Any]) -> TrackFeatures:
    if isinstance(raw, TrackFeatures):
        return raw
    if not isinstance(raw, Mapping):
        raise AlbumRejected(Rejection.MALFORMED, f"track record {raw!r} is not a mapping")
    missing = [k for k in ("track_number", *(f.value for f in FEATURES)) if k not in raw]
    if missing:
        raise AlbumRejected(Rejection.MALFORMED, f"track missing fields {missing}")
    number = raw["track_number"]
    if isinstance(number, bool) or not isinstance(number, (int, float, str)):
        raise AlbumRejected(Rejection.MALFORMED, f"track_number={number!r}")
    try:
        as_float = float(number)
    except ValueError:
        raise AlbumRejected(Rejection.MALFORMED, f"track_number={number!r}") from None
    if not as_float.is_integer():
        raise AlbumRejected(Rejection.MALFORMED, f"track_number={number!r} is not an integer")
    return TrackFeatures(
        int(as_float),
        *(_as_float(raw[f.value], f.value) for f in FEATURES),
    )


def validate_album(raw: Album | Mapping[str, Any]) -> Album:
    """Normalize an album-like record into an :class:`Album` or raise :class:`AlbumRejected`.

    Tracks are sorted by track number. Accepted albums have track numbers exactly
    ``1..k`` with ``MIN_TRACKS <= k <= MAX_TRACKS``, valence and energy in ``[0, 1]``,
    positive tempo and finite values everywhere.
    """
    if isinstance(raw, Album):
        album_id, artist_id, genre, raw_tracks = raw.album_id, raw.artist_id, raw.genre, raw.tracks
    elif isinstance(raw, Mapping):
        missing = [k for k in ("album_id", "artist_id", "tracks") if k not in raw]
        if missing:
            raise AlbumRejected(Rejection.MALFORMED, f"missing fields {missing}")
        album_id, artist_id = raw["album_id"], raw["artist_id"]
        genre = raw.get("genre") or ""
        raw_tracks = raw["tracks"]
        if not isinstance(raw_tracks, (list, tuple)):
            raise AlbumRejected(Rejection.MALFORMED, "tracks is not a list")
    else:
        raise AlbumRejected(Rejection.MALFORMED, f"unsupported record type {type(raw).__name__}")

    tracks = sorted((_as_track(t) for t in raw_tracks), key=lambda t: t.track_number)

    for t in tracks:
        values = t.features()
        if not all(math.isfinite(v) for v in values):
            raise AlbumRejected(Rejection.NON_FINITE, f"track {t.track_number}")
        if not (0.0 <= t.valence <= 1.0 and 0.0 <= t.energy <= 1.0):
            raise AlbumRejected(Rejection.BAD_FEATURE_RANGE, f"track {t.track_number} valence/energy outside [0, 1]")
        if t.tempo <= 0.0:
            raise AlbumRejected(Rejection.BAD_FEATURE_RANGE, f"track {t.track_number} tempo {t.tempo} <= 0")

    numbers = [t.track_number for t in tracks]
    if len(set(numbers)) != len(numbers):
        raise AlbumRejected(Rejection.DUPLICATE_TRACK_NUMBER, str(numbers))
    if numbers != list(range(1, len(numbers) + 1)):
        raise AlbumRejected(Rejection.TRACK_NUMBER_GAP, str(numbers))

    k = len(tracks)
    if k < MIN_TRACKS:
        raise AlbumRejected(Rejection.TOO_SHORT, f"k={k}")
    if k > MAX_TRACKS:
        raise AlbumRejected(Rejection.TOO_LONG, f"k={k}")

    return Album(str(album_id), str(artist_id), str(genre), tuple(tracks))
