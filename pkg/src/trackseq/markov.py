"""First-order transition matrices over up/down states, and log-likelihood scoring."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from trackseq.core import FEATURES, Album, FeatureId, ParsonsSequence
from trackseq.parsons import state_matrix

ROW_SUM_TOL = 1e-9


class ModelError(ValueError):
    pass


class DegenerateModelWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """Per-feature 2x2 row-stochastic matrices; row = from-state, column = to-state (0=down, 1=up)."""

    matrices: Mapping[FeatureId, np.ndarray]
    counts: Mapping[FeatureId, np.ndarray]
    smoothing_alpha: float = 0.0
    trained_on: int = 0
    fold_id: int | None = None

    def matrix(self, feature: FeatureId) -> np.ndarray:
        return self.matrices[FeatureId(feature)]

    def log_matrices(self) -> np.ndarray:
        """``(4, 2, 2)`` array of natural-log probabilities, ``-inf`` where a probability is 0."""
        stacked = np.stack([self.matrices[f] for f in FEATURES])
        with np.errstate(divide="ignore"):
            return np.log(stacked)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return (
            self.smoothing_alpha == other.smoothing_alpha
            and self.trained_on == other.trained_on
            and self.fold_id == other.fold_id
            and all(np.array_equal(self.matrices[f], other.matrices[f]) for f in FEATURES)
            and all(np.array_equal(self.counts[f], other.counts[f]) for f in FEATURES)
        )

    @classmethod
    def from_matrices(cls, matrices: Mapping[str | FeatureId, object], **meta) -> TransitionModel:
        """Model with fixed probabilities (no counts), e.g. reference matrices."""
        mats = {}
        for f in FEATURES:
            if f.value not in {str(k) for k in matrices}:
                raise ModelError(f"missing matrix for feature {f.value!r}")
            raw = next(v for k, v in matrices.items() if str(k) == f.value)
            mats[f] = _checked_matrix(raw, f.value, normalize=True)
        zeros = {f: np.zeros((2, 2), dtype=np.int64) for f in FEATURES}
        return cls(mats, zeros, **meta)

    @classmethod
    def uniform(cls) -> TransitionModel:
        return cls.from_matrices({f.value: [[0.5, 0.5], [0.5, 0.5]] for f in FEATURES})


def _checked_matrix(raw: object, name: str, normalize: bool = False) -> np.ndarray:
    try:
        m = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{name}: matrix is not numeric") from exc
    if m.shape != (2, 2):
        raise ModelError(f"{name}: matrix must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or np.any(m < 0) or np.any(m > 1):
        raise ModelError(f"{name}: probabilities must lie in [0, 1]")
    sums = m.sum(axis=1)
    if normalize:
        if np.any(sums <= 0):
            raise ModelError(f"{name}: a row sums to zero")
        m = m / sums[:, None]
    elif np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
        raise ModelError(f"{name}: rows must sum to 1, got {sums.tolist()}")
    return m


# -- estimation ---------------------------------------------------------------------

def transition_counts(album: Album, tie_epsilon: float = 0.0) -> np.ndarray:
    """``(4, 2, 2)`` counts of consecutive state pairs for one album."""
    states = state_matrix(album, tie_epsilon)
    out = np.zeros((len(FEATURES), 2, 2), dtype=np.int64)
    if len(states) < 2:
        return out
    src, dst = states[:-1], states[1:]
    for j in range(len(FEATURES)):
        np.add.at(out[j], (src[:, j], dst[:, j]), 1)
    return out


def model_from_counts(counts: np.ndarray, smoothing_alpha: float = 0.0, trained_on: int = 0,
                      fold_id: int | None = None) -> TransitionModel:
    if smoothing_alpha < 0:
        raise ValueError("smoothing_alpha must be >= 0")
    counts = np.asarray(counts, dtype=np.int64)
    matrices = {}
    for j, f in enumerate(FEATURES):
        c = counts[j].astype(float)
        rows = c.sum(axis=1, keepdims=True) + 2.0 * smoothing_alpha
        m = np.full((2, 2), 0.5)
        ok = rows[:, 0] > 0
        if not math.isinf(smoothing_alpha):  # infinite smoothing is the uniform limit
            m[ok] = (c[ok] + smoothing_alpha) / rows[ok]
        if not np.all(ok):
            warnings.warn(f"{f.value}: no transitions observed from state(s) "
                          f"{np.flatnonzero(~ok).tolist()}; row left uniform", DegenerateModelWarning,
                          stacklevel=3)
        if np.any(m == 0):
            warnings.warn(f"{f.value}: zero-probability transitions; consider smoothing_alpha > 0",
                          DegenerateModelWarning, stacklevel=3)
        matrices[f] = m
    return TransitionModel(matrices, {f: counts[j].copy() for j, f in enumerate(FEATURES)},
                           float(smoothing_alpha), int(trained_on), fold_id)


def estimate_model(train_albums: Iterable[Album], tie_epsilon: float = 0.0, smoothing_alpha: float = 0.0,
                   fold_id: int | None = None) -> TransitionModel:
    """Pool transition counts over all training albums and normalize each row.

    ``P[r, c] = (n[r, c] + alpha) / (sum_c n[r, c] + 2 alpha)``.
    """
    total = np.zeros((len(FEATURES), 2, 2), dtype=np.int64)
    n = 0
    for album in train_albums:
        if len(album) < 3:
            raise ValueError(f"album {album.album_id} has {len(album)} tracks; need at least 3")
        total += transition_counts(album, tie_epsilon)
        n += 1
    if n == 0:
        raise ValueError("empty training set")
    return model_from_counts(total, smoothing_alpha, n, fold_id)


# -- scoring ------------------------------------------------------------------------

def _mean_loglik(states: np.ndarray, log_m: np.ndarray) -> float:
    # states: 1-d int array of length k' >= 2; log_m: 2x2
    return float(log_m[states[:-1], states[1:]].mean())


def sequence_loglik(seq: ParsonsSequence, model: TransitionModel) -> float:
    """Mean natural-log transition probability over the ``k' - 1`` consecutive state pairs.

    Returns ``-inf`` when the sequence uses a transition with probability 0.
    """
    if len(seq) < 2:
        raise ValueError("sequence needs at least two states")
    with np.errstate(divide="ignore"):
        log_m = np.log(model.matrix(seq.feature))
    return _mean_loglik(np.fromiter((int(s) for s in seq.states), dtype=np.intp), log_m)


def feature_logliks(album: Album, model: TransitionModel, tie_epsilon: float = 0.0,
                    log_matrices: np.ndarray | None = None) -> np.ndarray:
    """Per-feature mean log-likelihoods, shape ``(4,)`` in ``FEATURES`` order."""
    if len(album) < 3:
        raise ValueError(f"album {album.album_id} has {len(album)} tracks; need at least 3")
    log_m = model.log_matrices() if log_matrices is None else log_matrices
    states = state_matrix(album, tie_epsilon)
    cols = np.arange(len(FEATURES))
    return log_m[cols, states[:-1], states[1:]].mean(axis=0)


def album_loglik(album: Album, model: TransitionModel, tie_epsilon: float = 0.0) -> float:
    """Average of the four per-feature mean log-likelihoods; ``-inf`` propagates."""
    return float(feature_logliks(album, model, tie_epsilon).mean())


# -- persistence ---------------------------------------------------------------------

def model_to_dict(model: TransitionModel) -> dict:
    return {
        "smoothing_alpha": model.smoothing_alpha,
        "features": {
            f.value: {
                "matrix": model.matrices[f].tolist(),
                "counts": model.counts[f].tolist(),
            }
            for f in FEATURES
        },
        "trained_on": model.trained_on,
        "fold_id": model.fold_id,
    }


def model_from_dict(data: Mapping) -> TransitionModel:
    if not isinstance(data, Mapping) or "features" not in data:
        raise ModelError("model file must be an object with a 'features' entry")
    feats = data["features"]
    if not isinstance(feats, Mapping):
        raise ModelError("'features' must be an object")
    matrices, counts = {}, {}
    for f in FEATURES:
        if f.value not in feats:
            raise ModelError(f"model is missing feature {f.value!r}")
        entry = feats[f.value]
        if not isinstance(entry, Mapping) or "matrix" not in entry:
            raise ModelError(f"{f.value}: entry needs a 'matrix'")
        matrices[f] = _checked_matrix(entry["matrix"], f.value)
        c = np.array(entry.get("counts", [[0, 0], [0, 0]]))
        if c.shape != (2, 2) or np.any(c < 0) or not np.all(c == np.round(c)):
            raise ModelError(f"{f.value}: counts must be a 2x2 array of non-negative integers")
        counts[f] = c.astype(np.int64)
    alpha = data.get("smoothing_alpha", 0.0)
    if not isinstance(alpha, (int, float)) or alpha < 0:
        raise ModelError("smoothing_alpha must be a non-negative number")
    fold_id = data.get("fold_id")
    return TransitionModel(matrices, counts, float(alpha), int(data.get("trained_on", 0)),
                           None if fold_id is None else int(fold_id))


def save_model(model: TransitionModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TransitionModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: corrupted model file ({exc.msg})") from exc
    return model_from_dict(data)
