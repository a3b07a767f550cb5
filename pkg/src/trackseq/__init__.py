"""Statistical regularities of track order in albums, and an annealing sequencer built on them."""

__version__ = "0.1.0"

from trackseq.core import (  # noqa: E402
    FEATURES,
    Album,
    AlbumRejected,
    FeatureId,
    ParsonsSequence,
    Rejection,
    State,
    TrackFeatures,
    validate_album,
)
from trackseq.ingest import Dataset, SplitPlan, make_folds, parse_dataset, randomize_album  # noqa: E402
from trackseq.markov import TransitionModel, album_loglik, estimate_model, sequence_loglik  # noqa: E402

__all__ = [
    "FEATURES",
    "Album",
    "AlbumRejected",
    "Dataset",
    "FeatureId",
    "ParsonsSequence",
    "Rejection",
    "SplitPlan",
    "State",
    "TrackFeatures",
    "TransitionModel",
    "album_loglik",
    "estimate_model",
    "make_folds",
    "parse_dataset",
    "randomize_album",
    "sequence_loglik",
    "validate_album",
]
