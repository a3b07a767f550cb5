"""Up/down (Parsons) coding of feature changes between consecutive tracks."""

from __future__ import annotations

import numpy as np

from trackseq.core import FEATURES, Album, FeatureId, ParsonsSequence, State


def direction_codes(values: np.ndarray, tie_epsilon: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized coding along axis 0.

    Returns ``(up, ties)`` boolean arrays of length ``len(values) - 1``. A change is
    ``up`` only when it exceeds ``tie_epsilon``; ties are coded down.
    """
    delta = np.diff(np.asarray(values, dtype=float), axis=0)
    return delta > tie_epsilon, np.abs(delta) <= tie_epsilon


def encode_feature(album: Album, feature: FeatureId, tie_epsilon: float = 0.0) -> ParsonsSequence:
    if len(album) < 2:
        raise ValueError(f"album {album.album_id} has {len(album)} tracks; need at least 2")
    if tie_epsilon < 0:
        raise ValueError("tie_epsilon must be >= 0")
    feature = FeatureId(feature)
    up, ties = direction_codes(album.column(feature), tie_epsilon)
    states = tuple(State.UP if u else State.DOWN for u in up)
    return ParsonsSequence(feature, states, int(ties.sum()))


def encode_album(album: Album, tie_epsilon: float = 0.0) -> dict[FeatureId, ParsonsSequence]:
    return {f: encode_feature(album, f, tie_epsilon) for f in FEATURES}


def state_matrix(album: Album, tie_epsilon: float = 0.0) -> np.ndarray:
    """``(k-1, 4)`` integer matrix of states (0=down, 1=up), one column per feature."""
    if len(album) < 2:
        raise ValueError(f"album {album.album_id} has {len(album)} tracks; need at least 2")
    up, _ = direction_codes(album.values, tie_epsilon)
    return up.astype(np.intp)
