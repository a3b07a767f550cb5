"""Simulated-annealing track sequencer.

The objective rewards orderings whose up/down transitions are likely under a
:class:`~trackseq.markov.TransitionModel`, and penalizes orderings whose
features rise over the album (positive rank correlation with position).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from trackseq.core import FEATURES, MAX_TRACKS, Album, TrackFeatures
from trackseq.ingest import rng_for
from trackseq.markov import TransitionModel, feature_logliks
from trackseq.stats import rankdata, spearman


class UnoptimizableAlbum(ValueError):
    """Every visited ordering had zero probability under the model."""


@dataclass(frozen=True)
class AnnealConfig:
    initial_temp: float = 1.0
    cooling_rate: float = 0.95
    min_temp: float = 1e-3
    iters_per_temp: int = 100
    initial_q: int | None = None  # None: album length
    min_q: int = 2
    seed: int = 0

    def check(self, k: int) -> None:
        if not self.initial_temp > 0 or not self.min_temp > 0:
            raise ValueError("temperatures must be positive")
        if not self.min_temp < self.initial_temp:
            raise ValueError("min_temp must be below initial_temp")
        if not 0.0 < self.cooling_rate < 1.0:
            raise ValueError("cooling_rate must lie in (0, 1)")
        if self.iters_per_temp < 1:
            raise ValueError("iters_per_temp must be >= 1")
        if self.min_q < 2:
            raise ValueError("min_q must be >= 2")
        q0 = k if self.initial_q is None else self.initial_q
        if not self.min_q <= q0 <= k:
            raise ValueError(f"need min_q <= initial_q <= k ({self.min_q}, {q0}, {k})")

    def temperatures(self) -> list[float]:
        temps = []
        t = self.initial_temp
        while t > self.min_temp:
            temps.append(t)
            t *= self.cooling_rate
        return temps

    def q_schedule(self, k: int) -> list[int]:
        """Subset size per temperature block, decreasing linearly to ``min_q``."""
        q0 = k if self.initial_q is None else self.initial_q
        n = len(self.temperatures())
        if n <= 1:
            return [q0] * n
        return [int(round(q0 + (self.min_q - q0) * s / (n - 1))) for s in range(n)]


@dataclass(frozen=True)
class AnnealResult:
    ordering: Album
    order: tuple[int, ...]  # ordering.tracks[i] is input track order[i]
    objective: float
    objective_trace: tuple[float, ...]
    accepted_moves: int
    proposals: int
    config: AnnealConfig = field(default_factory=AnnealConfig)

    def to_dict(self) -> dict:
        return {
            "order": list(self.order),
            "ordering": [t.to_dict() for t in self.ordering.tracks],
            "objective": self.objective,
            "objective_trace": list(self.objective_trace),
            "accepted_moves": self.accepted_moves,
            "proposals": self.proposals,
            "config": asdict(self.config),
        }


def objective(ordering: Album, model: TransitionModel, tie_epsilon: float = 0.0) -> float:
    """Mean over features of ``L * (1 + max(rho, 0))``.

    ``L`` is the feature's mean transition log-likelihood (``<= 0``) and ``rho``
    the rank correlation between track position and feature value, so rising
    trends make the objective more negative and falling ones cost nothing.
    """
    if len(ordering) < 3:
        raise ValueError("need at least 3 tracks")
    logliks = feature_logliks(ordering, model, tie_epsilon)
    position = np.arange(1, len(ordering) + 1)
    terms = []
    for j, f in enumerate(FEATURES):
        rho = spearman(position, ordering.column(f)).rho
        terms.append(logliks[j] * (1.0 + max(rho, 0.0)))
    return float(np.mean(terms))


def acceptance_probability(delta_l: float, temp: float) -> float:
    if not temp > 0:
        raise ValueError("temperature must be positive")
    if math.isnan(delta_l) or delta_l >= 0:
        return 1.0
    return math.exp(delta_l / temp)


def perm_q(ordering: Album, q: int, rng: np.random.Generator) -> Album:
    """Randomly permute the tracks at ``q`` randomly chosen positions; renumbers tracks."""
    return ordering.reordered(_perm_q_order(np.arange(len(ordering)), q, rng))


def _perm_q_order(order: np.ndarray, q: int, rng: np.random.Generator) -> np.ndarray:
    k = len(order)
    if not 2 <= q <= k:
        raise ValueError(f"q must lie in [2, {k}], got {q}")
    positions = rng.permutation(k)[:q]
    new = order.copy()
    new[positions] = order[positions[rng.permutation(q)]]
    return new


class _Scorer:
    """Vectorized, memoized :func:`objective` over index orderings of a fixed track set."""

    def __init__(self, values: np.ndarray, model: TransitionModel, tie_epsilon: float):
        k = len(values)
        self.values = values
        self.tie_epsilon = tie_epsilon
        self.log_m = model.log_matrices()
        self.cols = np.arange(values.shape[1])
        ranks = np.column_stack([rankdata(values[:, j]) for j in range(values.shape[1])])
        self.rank_dev = ranks - ranks.mean(axis=0)
        norms = np.sqrt((self.rank_dev ** 2).sum(axis=0))
        self.constant = norms == 0
        self.pos_dev = np.arange(k) - (k - 1) / 2.0
        self.denom = np.where(self.constant, 1.0, norms * math.sqrt(float(self.pos_dev @ self.pos_dev)))
        self.inv_pairs = 1.0 / (k - 2)
        self.inv_features = 1.0 / values.shape[1]
        self.cache: dict[bytes, float] = {}

    def __call__(self, order: np.ndarray) -> float:
        key = order.tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        v = self.values[order]
        states = (v[1:] - v[:-1] > self.tie_epsilon).view(np.int8)
        loglik = self.log_m[self.cols, states[:-1], states[1:]].sum(axis=0) * self.inv_pairs
        rho = (self.pos_dev @ self.rank_dev[order]) / self.denom
        rho[self.constant] = 0.0
        value = float((loglik * (1.0 + np.maximum(rho, 0.0))).sum()) * self.inv_features
        self.cache[key] = value
        return value


def _as_album(tracks: Album | Sequence[TrackFeatures]) -> Album:
    if isinstance(tracks, Album):
        return tracks
    tracks = tuple(tracks)
    return Album("tracks", "", "", tuple(t.renumbered(i) for i, t in enumerate(tracks, start=1)))


def anneal(tracks: Album | Sequence[TrackFeatures], model: TransitionModel,
           config: AnnealConfig = AnnealConfig(), tie_epsilon: float = 0.0) -> AnnealResult:
    """Search for the ordering of ``tracks`` that maximizes :func:`objective`.

    The walk starts from a seeded shuffle that differs from the input order. At
    each temperature, ``iters_per_temp`` proposals re-shuffle ``q`` random
    positions; the temperature then cools geometrically while ``q`` shrinks
    linearly towards ``min_q``. The best ordering ever visited is returned.
    """
    album = _as_album(tracks)
    k = len(album)
    if not 3 <= k <= MAX_TRACKS:
        raise ValueError(f"can sequence 3..{MAX_TRACKS} tracks, got {k}")
    config.check(k)
    rng = rng_for(config.seed, "anneal", album.album_id)
    score = _Scorer(album.values, model, tie_epsilon)

    current = rng.permutation(k)
    while np.array_equal(current, np.arange(k)):
        current = rng.permutation(k)
    current_score = score(current)
    best, best_score = current, current_score

    trace = []
    accepted = proposals = 0
    for temp, q in zip(config.temperatures(), config.q_schedule(k)):
        for _ in range(config.iters_per_temp):
            candidate = _perm_q_order(current, q, rng)
            candidate_score = score(candidate)
            delta = candidate_score - current_score
            proposals += 1
            if rng.random() < acceptance_probability(delta, temp):
                current, current_score = candidate, candidate_score
                accepted += 1
                if current_score > best_score:
                    best, best_score = current, current_score
        trace.append(best_score)

    if best_score == -math.inf:
        raise UnoptimizableAlbum(
            f"album {album.album_id}: every visited ordering has zero probability; "
            "re-train the model with smoothing_alpha > 0"
        )
    order = tuple(int(i) for i in best)
    return AnnealResult(album.reordered(order), order, best_score, tuple(trace), accepted, proposals, config)
