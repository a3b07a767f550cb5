"""Absolute positioning (album terciles) and overall trajectory (ramps) analyses."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from trackseq.core import FEATURES, Album, FeatureId
from trackseq.ingest import random_order
from trackseq.stats import TestResult, mean_sem, paired_t, pearson, rankdata


class Segment(str, Enum):
    BEGINNING = "beginning"
    MIDDLE = "middle"
    END = "end"


class Condition(str, Enum):
    ORIGINAL = "original"
    RANDOM = "random"


SEGMENTS = tuple(Segment)


@dataclass(frozen=True)
class ZScores:
    values: np.ndarray  # (k, 4)
    constant: tuple[bool, ...]  # per feature: zero spread, z left at 0


def normalize_within_album(album: Album | np.ndarray) -> ZScores:
    """Per-feature z-scores within one album (sample sd, ``n - 1`` denominator)."""
    x = album.values if isinstance(album, Album) else np.asarray(album, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) < 2:
        raise ValueError("need at least two tracks")
    dev = x - x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    constant = sd == 0
    z = np.divide(dev, sd, out=np.zeros_like(dev), where=~constant)
    return ZScores(z, tuple(bool(c) for c in constant))


def tercile_segment(track_number: int, k: int) -> Segment:
    """``ceil(3 * track_number / k)`` mapped to beginning/middle/end."""
    if not 1 <= track_number <= k:
        raise ValueError(f"track_number {track_number} outside 1..{k}")
    return SEGMENTS[-(-3 * track_number // k) - 1]


def segment_indices(k: int) -> np.ndarray:
    """0/1/2 segment index for each position of a ``k``-track album."""
    i = np.arange(1, k + 1)
    return -(-3 * i // k) - 1


@dataclass(frozen=True)
class SegmentRow:
    condition: Condition
    segment: Segment
    feature: FeatureId
    mean: float
    sem: float | None
    n: int
    genre: str | None = None

    def to_dict(self) -> dict:
        row = {
            "condition": self.condition.value,
            "segment": self.segment.value,
            "feature": self.feature.value,
            "mean": self.mean,
            "sem": self.sem,
            "n": self.n,
        }
        if self.genre is not None:
            row = {"genre": self.genre, **row}
        return row


@dataclass(frozen=True)
class SegmentTable:
    rows: tuple[SegmentRow, ...]
    constant_features: int = 0  # (album, feature) pairs with zero spread

    def cell(self, condition: str, segment: str, feature: str, genre: str | None = None) -> SegmentRow:
        for r in self.rows:
            if (r.condition.value, r.segment.value, r.feature.value, r.genre) == (
                    Condition(condition).value, Segment(segment).value, FeatureId(feature).value, genre):
                return r
        raise KeyError((condition, segment, feature, genre))

    def to_rows(self) -> list[dict]:
        return [r.to_dict() for r in self.rows]


def segment_table(dataset: Iterable[Album], seed: int = 0, group_by_genre: bool = False) -> SegmentTable:
    """Mean/SEM of within-album z-scores per album tercile, for original and shuffled orders.

    The shuffled condition uses one seeded permutation per album.
    """
    albums = list(dataset)
    if not albums:
        raise ValueError("empty dataset")
    buckets: dict[tuple, list[np.ndarray]] = defaultdict(list)
    constant = 0
    for album in albums:
        zs = normalize_within_album(album)
        constant += sum(zs.constant)
        seg = segment_indices(len(album))
        shuffled = zs.values[random_order(album, seed)]
        genre = (album.genre.strip() or "unknown") if group_by_genre else None
        for condition, z in ((Condition.ORIGINAL, zs.values), (Condition.RANDOM, shuffled)):
            for s in range(3):
                buckets[(genre, condition, s)].append(z[seg == s])

    rows = []
    for genre in sorted({key[0] for key in buckets}, key=lambda g: "" if g is None else g):
        for condition in Condition:
            for s, segment in enumerate(SEGMENTS):
                block = np.concatenate(buckets[(genre, condition, s)], axis=0)
                for j, feature in enumerate(FEATURES):
                    mean, sem = mean_sem(block[:, j])
                    rows.append(SegmentRow(condition, segment, feature, mean, sem, len(block), genre))
    return SegmentTable(tuple(rows), constant)


# -- overall trajectory --------------------------------------------------------------

@dataclass(frozen=True)
class RampSummary:
    feature: FeatureId
    rho_values_original: np.ndarray  # one per album; NaN where undefined
    rho_values_random: np.ndarray
    down_ramp_proportion_original: float
    down_ramp_proportion_random: float
    test: TestResult
    excluded: int

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.value,
            "down_ramp_proportion_original": self.down_ramp_proportion_original,
            "down_ramp_proportion_random": self.down_ramp_proportion_random,
            "mean_rho_original": float(np.nanmean(self.rho_values_original)),
            "mean_rho_random": float(np.nanmean(self.rho_values_random)),
            "sd_rho_original": float(np.nanstd(self.rho_values_original, ddof=1)),
            "sd_rho_random": float(np.nanstd(self.rho_values_random, ddof=1)),
            "excluded": self.excluded,
            "test": self.test.to_dict(),
        }


@dataclass(frozen=True)
class RampAnalysis:
    features: dict[FeatureId, RampSummary]
    pooled: TestResult
    excluded: int = 0
    n_albums: int = 0

    def __getitem__(self, feature: str | FeatureId) -> RampSummary:
        return self.features[FeatureId(feature)]

    def to_dict(self) -> dict:
        return {
            "n_albums": self.n_albums,
            "excluded": self.excluded,
            "pooled": self.pooled.to_dict(),
            "features": {f.value: s.to_dict() for f, s in self.features.items()},
        }

    def to_rows(self) -> list[dict]:
        rows = []
        for f, s in self.features.items():
            for cond, rhos in ((Condition.ORIGINAL, s.rho_values_original), (Condition.RANDOM, s.rho_values_random)):
                rows.append({
                    "feature": f.value,
                    "condition": cond.value,
                    "down_ramp_proportion": (s.down_ramp_proportion_original if cond is Condition.ORIGINAL
                                             else s.down_ramp_proportion_random),
                    "mean_rho": float(np.nanmean(rhos)),
                    "n": int(np.isfinite(rhos).sum()),
                })
        return rows


def ramp_rhos(values: np.ndarray) -> np.ndarray:
    """Spearman rho between track position and each column of raw ``values``; NaN if constant."""
    k = len(values)
    pos = np.arange(1, k + 1, dtype=float)
    out = np.empty(values.shape[1])
    for j in range(values.shape[1]):
        corr = pearson(pos, rankdata(values[:, j]))
        out[j] = np.nan if corr.degenerate else corr.rho
    return out


def _down_share(rhos: np.ndarray) -> float:
    finite = rhos[np.isfinite(rhos)]
    return float((finite < 0).mean()) if len(finite) else float("nan")


def ramp_analysis(dataset: Iterable[Album], seed: int = 0) -> RampAnalysis:
    """Per-album rank correlation of raw feature values with track position.

    Each album is compared with one seeded shuffle of itself; undefined
    correlations (constant features) are excluded from tests and proportions.
    """
    albums = list(dataset)
    if not albums:
        raise ValueError("empty dataset")
    orig = np.empty((len(albums), len(FEATURES)))
    rand = np.empty_like(orig)
    for i, album in enumerate(albums):
        orig[i] = ramp_rhos(album.values)
        rand[i] = ramp_rhos(album.values[random_order(album, seed)])

    summaries = {}
    pooled_o, pooled_r = [], []
    excluded = 0
    for j, f in enumerate(FEATURES):
        ok = np.isfinite(orig[:, j]) & np.isfinite(rand[:, j])
        excluded += int((~ok).sum())
        pooled_o.append(orig[ok, j])
        pooled_r.append(rand[ok, j])
        summaries[f] = RampSummary(
            f, orig[:, j].copy(), rand[:, j].copy(),
            _down_share(orig[:, j]), _down_share(rand[:, j]),
            paired_t(orig[ok, j], rand[ok, j]), int((~ok).sum()),
        )
    pooled = paired_t(np.concatenate(pooled_o), np.concatenate(pooled_r))
    return RampAnalysis(summaries, pooled, excluded, len(albums))
