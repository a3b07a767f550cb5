"""Synthetic album corpora with known transition structure and drift."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from trackseq.core import FEATURES, MAX_TRACKS, MIN_TRACKS, Album, FeatureId, TrackFeatures
from trackseq.ingest import Dataset, rng_for

# Reference transition probabilities observed on commercial albums; rows/columns ordered (down, up).
REFERENCE: dict[str, list[list[float]]] = {
    "valence": [[0.309, 0.690], [0.664, 0.334]],
    "energy": [[0.299, 0.700], [0.664, 0.335]],
    "loudness": [[0.310, 0.689], [0.654, 0.345]],
    "tempo": [[0.328, 0.671], [0.666, 0.333]],
}

UNIFORM = {f.value: [[0.5, 0.5], [0.5, 0.5]] for f in FEATURES}

GENRES = ("country", "electronic", "jazz", "pop", "rock")

# value = centre + scale * latent, squeezed so bounded features stay in range
_PLACEMENT = {
    FeatureId.VALENCE: (0.5, 0.08, 0.45),
    FeatureId.ENERGY: (0.5, 0.08, 0.45),
    FeatureId.LOUDNESS: (-8.0, 1.5, None),
    FeatureId.TEMPO: (120.0, 8.0, 90.0),
}


def alternating(p_switch: float) -> dict[str, list[list[float]]]:
    """Same matrix for every feature with probability ``p_switch`` of changing direction."""
    m = [[1.0 - p_switch, p_switch], [p_switch, 1.0 - p_switch]]
    return {f.value: m for f in FEATURES}


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters.

    ``drift`` is added to every latent step (per track, in units of the step
    magnitude scale); directions always follow the chain, so drift only changes
    step sizes. With ``shared_directions=True`` one chain drives the up/down
    pattern of all four features (their matrices must then be identical), as
    with strongly co-varying features; magnitudes stay independent. With
    ``iid=True`` track values are drawn independently and the chain/drift
    settings are ignored.
    """

    matrices: dict[str, list[list[float]]] = field(default_factory=lambda: dict(REFERENCE))
    drift: dict[str, float] = field(default_factory=dict)
    magnitude: dict[str, float] = field(default_factory=dict)
    k_min: int = MIN_TRACKS
    k_max: int = MAX_TRACKS
    albums_per_artist: int = 6
    min_step: float = 1e-3
    shared_directions: bool = False
    iid: bool = False

    def checked_matrices(self) -> dict[FeatureId, np.ndarray]:
        out = {}
        for f in FEATURES:
            if f.value not in self.matrices:
                raise ValueError(f"generator spec lacks a matrix for {f.value!r}")
            m = np.asarray(self.matrices[f.value], dtype=float)
            if m.shape != (2, 2) or np.any(m < 0):
                raise ValueError(f"{f.value}: matrix must be 2x2 and non-negative")
            sums = m.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > 0.01):
                raise ValueError(f"{f.value}: rows must sum to 1 (got {sums.tolist()})")
            out[f] = m / sums[:, None]
        return out

    def validate(self) -> None:
        if not MIN_TRACKS <= self.k_min <= self.k_max <= MAX_TRACKS:
            raise ValueError(f"album length range must lie within [{MIN_TRACKS}, {MAX_TRACKS}]")
        if self.albums_per_artist < 1:
            raise ValueError("albums_per_artist must be >= 1")
        unknown = set(self.drift) | set(self.magnitude)
        unknown -= {f.value for f in FEATURES}
        if unknown:
            raise ValueError(f"unknown features {sorted(unknown)}")
        if any(v <= 0 for v in self.magnitude.values()):
            raise ValueError("magnitude scales must be positive")
        matrices = self.checked_matrices()
        if self.shared_directions and any(
                not np.allclose(matrices[f], matrices[FEATURES[0]]) for f in FEATURES):
            raise ValueError("shared_directions requires the same matrix for every feature")


def _stationary(m: np.ndarray) -> float:
    """P(up) under the stationary distribution of a 2-state chain."""
    to_up, to_down = m[0, 1], m[1, 0]
    total = to_up + to_down
    return 0.5 if total == 0 else to_up / total


def _place(latent: np.ndarray, feature: FeatureId) -> np.ndarray:
    centre, scale, half_width = _PLACEMENT[feature]
    dev = latent - latent.mean()
    if half_width is not None:
        spread = np.abs(dev).max()
        if spread > 0:
            scale = min(scale, half_width / spread)
    return centre + scale * dev


def _chain_states(rng: np.random.Generator, n: int, m: np.ndarray) -> np.ndarray:
    states = np.empty(n, dtype=np.intp)
    states[0] = rng.random() < _stationary(m)
    u = rng.random(n - 1)
    for i in range(1, n):
        states[i] = u[i - 1] < m[states[i - 1], 1]
    return states


def _chain_values(rng: np.random.Generator, states: np.ndarray, drift: float, scale: float,
                  min_step: float) -> np.ndarray:
    sign = np.where(states == 1, 1.0, -1.0)
    mag = rng.exponential(scale, size=len(states))
    steps = sign * np.maximum(mag + sign * drift * scale, min_step * scale)
    return np.concatenate([[0.0], np.cumsum(steps)])


def synth_album(spec: SynthSpec, index: int, seed: int,
                matrices: dict[FeatureId, np.ndarray] | None = None) -> Album:
    matrices = spec.checked_matrices() if matrices is None else matrices
    rng = rng_for(seed, "synth", index)
    k = int(rng.integers(spec.k_min, spec.k_max + 1))
    shared = _chain_states(rng, k - 1, matrices[FEATURES[0]]) if spec.shared_directions else None
    columns = []
    for f in FEATURES:
        if spec.iid:
            latent = rng.standard_normal(k)
        else:
            states = shared if shared is not None else _chain_states(rng, k - 1, matrices[f])
            latent = _chain_values(rng, states, spec.drift.get(f.value, 0.0),
                                   spec.magnitude.get(f.value, 1.0), spec.min_step)
        columns.append(_place(latent, f))
    artist = index // spec.albums_per_artist
    genre = GENRES[int(rng_for(seed, "genre", artist).integers(len(GENRES)))]
    tracks = tuple(
        TrackFeatures(i + 1, *(float(c[i]) for c in columns)) for i in range(k)
    )
    return Album(f"synth-{index:06d}", f"artist-{artist:05d}", genre, tracks)


def synth_dataset(spec: SynthSpec, n_albums: int, seed: int) -> Dataset:
    """Albums whose up/down sequences follow ``spec.matrices`` exactly."""
    spec.validate()
    if n_albums < 1:
        raise ValueError("n_albums must be >= 1")
    matrices = spec.checked_matrices()
    albums = tuple(synth_album(spec, i, seed, matrices) for i in range(n_albums))
    params = json.dumps({"generator": asdict(spec), "n_albums": n_albums, "seed": seed}, sort_keys=True)
    return Dataset(albums, source=f"synth:{params}")
