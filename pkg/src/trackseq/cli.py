"""Command-line entry point: ``trackseq <subcommand> ...``.

Every flag can also be set through an environment variable named
``TRACKSEQ_<FLAG>`` (upper case, dashes as underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from trackseq.annealer import AnnealConfig, UnoptimizableAlbum, anneal
from trackseq.core import FEATURES, AlbumRejected, TrackFeatures, validate_album
from trackseq.evaluation import likelihood_experiment, sequencing_experiment, train_fold_models
from trackseq.ingest import (
    DatasetError,
    genre_summary,
    make_folds,
    parse_dataset,
    write_dataset,
    write_rejection_log,
)
from trackseq.markov import ModelError, estimate_model, load_model, model_from_dict, save_model
from trackseq.report import ExperimentReport, _write_rows
from trackseq.synth import REFERENCE, UNIFORM, SynthSpec, alternating, synth_dataset
from trackseq.trajectory import ramp_analysis, segment_table

logger = logging.getLogger("trackseq")

ENV_PREFIX = "TRACKSEQ_"
# flags that do not influence results (parallelism, logging, output locations)
# are left out of recorded configs so reruns are byte-identical wherever they write
_UNRECORDED = {"threads", "log_level", "func", "out", "out_dir"}


# -- helpers ---------------------------------------------------------------------------

def _load(args):
    dataset = parse_dataset(args.input, args.format)
    if dataset.rejections:
        logger.warning("%d records rejected while reading %s", len(dataset.rejections), args.input)
    return dataset


def _run_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}


def _anneal_config(args) -> AnnealConfig:
    return AnnealConfig(
        initial_temp=args.temp0,
        cooling_rate=args.cooling,
        min_temp=args.min_temp,
        iters_per_temp=args.iters,
        initial_q=args.q0,
        min_q=args.min_q,
        seed=args.seed,
    )


def _emit(report: ExperimentReport, args) -> None:
    report.metadata["run_config"] = _run_config(args)
    for path in report.write(args.out_dir):
        logger.info("wrote %s", path)
    print(report.to_json(), end="")


def _read_tracks(path: Path) -> list[TrackFeatures]:
    data = json.loads(path.read_text(encoding="utf-8"))
    raw = data["tracks"] if isinstance(data, dict) else data
    if not isinstance(raw, list):
        raise DatasetError(f"{path}: expected a list of tracks or an album object")
    tracks = []
    for i, entry in enumerate(raw, start=1):
        if not isinstance(entry, dict):
            raise DatasetError(f"{path}: track {i} is not an object")
        try:
            tracks.append(TrackFeatures(int(entry.get("track_number", i)),
                                        *(float(entry[f.value]) for f in FEATURES)))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{path}: track {i}: {exc}") from exc
    return tracks


def _matrices(name: str, alternation: float | None) -> dict:
    if alternation is not None:
        return alternating(alternation)
    presets = {"reference": REFERENCE, "uniform": UNIFORM}
    if name in presets:
        return presets[name]
    data = json.loads(Path(name).read_text(encoding="utf-8"))
    if "features" in data:  # a saved model file
        model = model_from_dict(data)
        return {f.value: model.matrices[f].tolist() for f in FEATURES}
    return data


# -- subcommands ---------------------------------------------------------------------

def cmd_ingest(args) -> int:
    dataset = _load(args)
    rows = genre_summary(dataset)
    print(f"{'genre':<20}{'n':>8}{'percentage':>12}")
    for genre, n, pct in rows:
        print(f"{genre:<20}{n:>8}{pct:>12.2f}")
    print(f"{'total':<20}{len(dataset):>8}{100.0:>12.2f}")
    print(f"rejected: {len(dataset.rejections)}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "genre_summary.csv",
                    [{"genre": g, "count": n, "percentage": p} for g, n, p in rows])
        write_rejection_log(dataset.rejections, out / "rejections.csv")
        if args.normalized:
            write_dataset(dataset.albums, out / f"dataset.{args.format or 'jsonl'}")
    return 0


def cmd_train(args) -> int:
    dataset = _load(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.full:
        model = estimate_model(dataset.albums, args.tie_epsilon, args.alpha)
        save_model(model, out / "model.json")
        logger.info("trained one model on %d albums", model.trained_on)
        return 0
    folds = make_folds(dataset, args.folds, args.test_fraction, args.seed)
    for model in train_fold_models(dataset, folds, args.tie_epsilon, args.alpha):
        save_model(model, out / f"model_fold{model.fold_id}.json")
    logger.info("trained %d fold models", len(folds.folds))
    return 0


def cmd_likelihood(args) -> int:
    dataset = _load(args)
    folds = make_folds(dataset, args.folds, args.test_fraction, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.models_dir:
        models = [load_model(Path(args.models_dir) / f"model_fold{i}.json") for i in range(len(folds.folds))]
    else:
        models = train_fold_models(dataset, folds, args.tie_epsilon, args.alpha)
        for model in models:
            save_model(model, out / f"model_fold{model.fold_id}.json")
    report = likelihood_experiment(dataset, folds, args.tie_epsilon, args.alpha, args.seed, models,
                                   workers=args.threads)
    _emit(report, args)
    return 0


def cmd_positioning(args) -> int:
    dataset = _load(args)
    table = segment_table(dataset, args.seed, args.by_genre)
    report = ExperimentReport(
        "positioning",
        statistics={"constant_features": table.constant_features, "n_albums": len(dataset)},
        tables={"segments": table.to_rows()},
        metadata={"seed": args.seed, "dataset_digest": dataset.digest},
    )
    _emit(report, args)
    return 0


def cmd_trajectory(args) -> int:
    dataset = _load(args)
    ramps = ramp_analysis(dataset, args.seed)
    report = ExperimentReport(
        "trajectory",
        statistics=ramps.to_dict(),
        tables={"ramps": ramps.to_rows()},
        metadata={"seed": args.seed, "dataset_digest": dataset.digest},
    )
    _emit(report, args)
    return 0


def cmd_sequence(args) -> int:
    model = load_model(args.model)
    tracks = _read_tracks(Path(args.tracks))
    result = anneal(tracks, model, _anneal_config(args), args.tie_epsilon)
    payload = result.to_dict()
    payload["run_config"] = _run_config(args)
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def cmd_evaluate(args) -> int:
    dataset = _load(args)
    model = load_model(args.model)
    report = sequencing_experiment(dataset, model, _anneal_config(args), args.bootstrap, args.seed,
                                   args.tie_epsilon, workers=args.threads)
    _emit(report, args)
    return 0


def cmd_synth(args) -> int:
    drift = {f.value: args.drift for f in FEATURES} if args.drift else {}
    for item in args.feature_drift or []:
        name, _, value = item.partition("=")
        drift[name] = float(value)
    spec = SynthSpec(
        matrices=_matrices(args.matrices, args.alternation),
        drift=drift,
        k_min=args.k_min,
        k_max=args.k_max,
        albums_per_artist=args.albums_per_artist,
        shared_directions=args.shared_directions,
        iid=args.iid,
    )
    dataset = synth_dataset(spec, args.n, args.seed)
    write_dataset(dataset.albums, args.out, args.format)
    logger.info("wrote %d albums to %s (digest %s)", len(dataset), args.out, dataset.digest[:12])
    return 0


# -- parser ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="worker processes; results do not depend on it")
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def _dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None,
                   help="defaults to the file extension")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tie-epsilon", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.0, help="additive smoothing of transition counts")


def _fold_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.2)


def _anneal_args(p: argparse.ArgumentParser) -> None:
    d = AnnealConfig()
    p.add_argument("--temp0", type=float, default=d.initial_temp)
    p.add_argument("--cooling", type=float, default=d.cooling_rate)
    p.add_argument("--min-temp", type=float, default=d.min_temp)
    p.add_argument("--iters", type=int, default=d.iters_per_temp)
    p.add_argument("--q0", type=int, default=None, help="initial subset size (default: album length)")
    p.add_argument("--min-q", type=int, default=d.min_q)
    p.add_argument("--tie-epsilon", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trackseq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset and print the genre summary")
    _common(p)
    _dataset_args(p)
    p.add_argument("--out-dir", default=None, help="write genre_summary.csv and rejections.csv here")
    p.add_argument("--normalized", action="store_true", help="also write the accepted albums")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="estimate transition models, one per fold")
    _common(p)
    _dataset_args(p)
    _model_args(p)
    _fold_args(p)
    p.add_argument("--full", action="store_true", help="train a single model on the whole dataset")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("likelihood", help="original vs shuffled likelihood under cross-validation")
    _common(p)
    _dataset_args(p)
    _model_args(p)
    _fold_args(p)
    p.add_argument("--models-dir", default=None, help="reuse model_fold<i>.json files from `train`")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_likelihood)

    p = sub.add_parser("positioning", help="normalized feature means per album tercile")
    _common(p)
    _dataset_args(p)
    p.add_argument("--by-genre", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_positioning)

    p = sub.add_parser("trajectory", help="rank correlation of features with track position")
    _common(p)
    _dataset_args(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("sequence", help="order one set of tracks by simulated annealing")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--tracks", required=True, help="JSON list of tracks or an album object")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    _anneal_args(p)
    p.set_defaults(func=cmd_sequence)

    p = sub.add_parser("evaluate", help="re-sequence every album and compare with a shuffle bootstrap")
    _common(p)
    _dataset_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--bootstrap", type=int, default=10_000)
    p.add_argument("--out-dir", required=True)
    _anneal_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic dataset with known structure")
    _common(p)
    p.add_argument("--matrices", default="reference",
                   help="'reference', 'uniform', or a JSON file of matrices / a saved model")
    p.add_argument("--alternation", type=float, default=None,
                   help="use the same matrix for all features with this switch probability")
    p.add_argument("--drift", type=float, default=0.0, help="drift per track for every feature")
    p.add_argument("--feature-drift", action="append", metavar="FEATURE=DRIFT")
    p.add_argument("--shared-directions", action="store_true",
                   help="one up/down chain drives all features (needs identical matrices)")
    p.add_argument("--iid", action="store_true", help="independent track values (no structure)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k-min", type=int, default=SynthSpec.k_min)
    p.add_argument("--k-max", type=int, default=SynthSpec.k_max)
    p.add_argument("--albums-per-artist", type=int, default=SynthSpec.albums_per_artist)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.set_defaults(func=cmd_synth)

    _apply_env_defaults(sub)
    return parser


def _apply_env_defaults(sub: argparse._SubParsersAction, environ=os.environ) -> None:
    for subparser in sub.choices.values():
        for action in subparser._actions:
            if not action.option_strings or action.dest in ("help", "func"):
                continue
            flag = action.option_strings[-1].lstrip("-")
            raw = environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))
            if raw is None:
                continue
            if isinstance(action, argparse._StoreTrueAction):
                value = raw.strip().lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
            action.default = value
            action.required = False


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DatasetError, ModelError, AlbumRejected, UnoptimizableAlbum, ValueError, OSError) as exc:
        print(f"trackseq {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
