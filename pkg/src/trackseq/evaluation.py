"""End-to-end experiments: likelihood of original vs shuffled albums, and sequencer accuracy."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from trackseq import __version__
from trackseq.annealer import AnnealConfig, UnoptimizableAlbum, anneal, objective
from trackseq.core import FEATURES, Album
from trackseq.ingest import Dataset, SplitPlan, randomize_album, rng_for
from trackseq.markov import TransitionModel, estimate_model, feature_logliks
from trackseq.parallel import pmap
from trackseq.report import ExperimentReport
from trackseq.stats import TestResult, bonferroni, mean_sem, one_sample_t, paired_t, t_sf_two_sided

BOOTSTRAP_CHUNK = 250


# -- correct-pair accuracy -----------------------------------------------------------

@dataclass(frozen=True)
class PairAccuracy:
    correct_pairs: int
    album_length: int

    @property
    def normalized(self) -> float:
        return self.correct_pairs / self.album_length


def count_correct_pairs(numbers: Sequence[int]) -> int:
    """Adjacent positions whose original track numbers ascend by exactly one."""
    return sum(1 for a, b in zip(numbers, numbers[1:]) if b == a + 1)


def original_numbers(candidate: Album, reference: Album) -> list[int]:
    """Reference track number of each candidate track, matched on feature values."""
    if len(candidate) != len(reference):
        raise ValueError("candidate is not a permutation of the reference")
    pool: dict[tuple, list[int]] = defaultdict(list)
    for t in reference.tracks:
        pool[t.features()].append(t.track_number)
    numbers = []
    for t in candidate.tracks:
        matches = pool.get(t.features())
        if not matches:
            raise ValueError(f"candidate track {t.track_number} does not occur in the reference")
        numbers.append(matches.pop(0))
    return numbers


def correct_pairs(candidate: Album, reference: Album) -> PairAccuracy:
    return PairAccuracy(count_correct_pairs(original_numbers(candidate, reference)), len(reference))


def position_accuracy(candidate: Album, reference: Album) -> float:
    """Share of tracks placed at their original position (strict metric, reported only)."""
    numbers = original_numbers(candidate, reference)
    return sum(n == i for i, n in enumerate(numbers, start=1)) / len(numbers)


# -- bootstrap baseline -------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapBaseline:
    mean: float
    sd: float
    normalized_mean: float
    normalized_sd: float
    run_means: np.ndarray
    n_runs: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "sd": self.sd,
            "normalized_mean": self.normalized_mean,
            "normalized_sd": self.normalized_sd,
            "n_runs": self.n_runs,
        }


def expected_random_pairs(lengths: Iterable[int]) -> float:
    """Dataset mean of ``(k - 1) / k``, the expected correct pairs of a uniform shuffle."""
    lengths = np.asarray(list(lengths), dtype=float)
    return float(((lengths - 1) / lengths).mean())


def _bootstrap_chunk(job: tuple[int, int, int, tuple[tuple[int, int], ...]]) -> tuple[np.ndarray, np.ndarray]:
    seed, chunk, runs, groups = job
    rng = rng_for(seed, "bootstrap", chunk)
    raw = np.zeros(runs)
    norm = np.zeros(runs)
    for k, n_albums in groups:
        perms = np.argsort(rng.random((runs, n_albums, k)), axis=-1)
        pairs = (perms[..., 1:] == perms[..., :-1] + 1).sum(axis=-1)
        raw += pairs.sum(axis=1)
        norm += pairs.sum(axis=1) / k
    return raw, norm


def bootstrap_baseline(dataset: Iterable[Album], n_runs: int = 10_000, seed: int = 0,
                       workers: int = 1) -> BootstrapBaseline:
    """Distribution of the dataset-mean correct-pair count under uniform shuffles.

    Each run shuffles every album independently. Returns the mean of the run
    means and their standard deviation (which plays the role of a standard error).
    """
    if n_runs < 2:
        raise ValueError("n_runs must be >= 2")
    lengths = [len(a) for a in dataset]
    if not lengths:
        raise ValueError("empty dataset")
    groups = tuple(sorted(((k, n) for k, n in zip(*np.unique(lengths, return_counts=True))),
                          key=lambda g: g[0]))
    groups = tuple((int(k), int(n)) for k, n in groups)
    jobs = []
    for chunk, start in enumerate(range(0, n_runs, BOOTSTRAP_CHUNK)):
        jobs.append((seed, chunk, min(BOOTSTRAP_CHUNK, n_runs - start), groups))
    parts = pmap(_bootstrap_chunk, jobs, workers)
    raw = np.concatenate([p[0] for p in parts]) / len(lengths)
    norm = np.concatenate([p[1] for p in parts]) / len(lengths)
    return BootstrapBaseline(float(raw.mean()), float(raw.std(ddof=1)), float(norm.mean()),
                             float(norm.std(ddof=1)), raw, n_runs)


# -- likelihood experiment ----------------------------------------------------------

def corrected_resampled_t(diffs: Sequence[float], test_train_ratio: float) -> TestResult:
    """Paired t over resampled holdouts with the variance inflated by ``1/J + n_test/n_train``.

    Holdout sets drawn independently overlap, so fold-level differences are
    positively correlated and the plain paired t-test is anti-conservative.
    """
    d = np.asarray(diffs, dtype=float)
    plain = paired_t(d, np.zeros_like(d))
    if plain.degenerate:
        return plain
    j = len(d)
    sd = float(d.std(ddof=1))
    se = sd * math.sqrt(1.0 / j + test_train_ratio)
    t = plain.mean / se
    return TestResult(t, plain.df, t_sf_two_sided(t, plain.df), plain.effect_size_d, j, plain.mean)


def train_fold_models(dataset: Dataset, folds: SplitPlan, tie_epsilon: float = 0.0,
                      smoothing_alpha: float = 0.0) -> list[TransitionModel]:
    return [
        estimate_model(dataset.subset(fold.train_artist_ids), tie_epsilon, smoothing_alpha, fold_id=i)
        for i, fold in enumerate(folds.folds)
    ]


def _score_fold(job) -> dict:
    fold_id, test_albums, model, tie_epsilon, seed = job
    log_m = model.log_matrices()
    orig, rand, ids = [], [], []
    for album in test_albums:
        shuffled = randomize_album(album, seed, "fold", fold_id)
        orig.append(feature_logliks(album, model, tie_epsilon, log_m))
        rand.append(feature_logliks(shuffled, model, tie_epsilon, log_m))
        ids.append(album.album_id)
    return {"fold": fold_id, "ids": ids,
            "orig": np.array(orig).reshape(-1, len(FEATURES)),
            "rand": np.array(rand).reshape(-1, len(FEATURES))}


def _feature_tests(orig: np.ndarray, rand: np.ndarray) -> dict[str, dict]:
    out = {}
    for j, f in enumerate(FEATURES):
        ok = np.isfinite(orig[:, j]) & np.isfinite(rand[:, j])
        if ok.sum() < 2:
            out[f.value] = {"excluded": int((~ok).sum()), "test": None}
            continue
        res = paired_t(orig[ok, j], rand[ok, j])
        out[f.value] = {
            "mean_original": float(orig[ok, j].mean()),
            "mean_random": float(rand[ok, j].mean()),
            "test": res,
            "p_bonferroni": bonferroni(res.p, len(FEATURES)),
            "excluded": int((~ok).sum()),
        }
    return out


def likelihood_experiment(dataset: Dataset, folds: SplitPlan, tie_epsilon: float = 0.0,
                          smoothing_alpha: float = 0.0, seed: int = 0,
                          models: Sequence[TransitionModel] | None = None,
                          workers: int = 1) -> ExperimentReport:
    """Compare held-out albums with one seeded shuffle of themselves under per-fold models.

    Every fold trains on its training artists and scores its test artists'
    albums. Albums with a zero-probability transition are excluded and counted.
    The headline test pairs the fold-level means of the two conditions.
    """
    if models is None:
        models = train_fold_models(dataset, folds, tie_epsilon, smoothing_alpha)
    if len(models) != len(folds.folds):
        raise ValueError("need exactly one model per fold")
    jobs = []
    for i, (fold, model) in enumerate(zip(folds.folds, models)):
        test = dataset.subset(fold.test_artist_ids)
        if not test:
            raise ValueError(f"fold {i} has an empty test set")
        jobs.append((i, test, model, tie_epsilon, seed))
    scored = pmap(_score_fold, jobs, workers)

    fold_rows, feature_rows = [], []
    fold_orig, fold_rand = [], []
    fold_feat_orig, fold_feat_rand = [], []
    ratios = []
    pooled_o, pooled_r = [], []
    excluded_total = 0
    for part, fold, model in zip(scored, folds.folds, models):
        album_o = part["orig"].mean(axis=1)
        album_r = part["rand"].mean(axis=1)
        ok = np.isfinite(album_o) & np.isfinite(album_r)
        excluded = int((~ok).sum())
        excluded_total += excluded
        if ok.sum() < 2:
            raise ValueError(f"fold {part['fold']}: fewer than two scorable test albums")
        test = paired_t(album_o[ok], album_r[ok])
        fold_orig.append(float(album_o[ok].mean()))
        fold_rand.append(float(album_r[ok].mean()))
        pooled_o.append(album_o[ok])
        pooled_r.append(album_r[ok])
        n_test = int(ok.sum())
        ratios.append(n_test / max(1, model.trained_on))
        fold_rows.append({
            "fold": part["fold"],
            "train_artists": len(fold.train_artist_ids),
            "test_artists": len(fold.test_artist_ids),
            "train_albums": model.trained_on,
            "test_albums": n_test,
            "excluded": excluded,
            "mean_original": fold_orig[-1],
            "mean_random": fold_rand[-1],
            "t": test.t,
            "df": test.df,
            "p": test.p,
            "d": test.effect_size_d,
        })
        feats = _feature_tests(part["orig"], part["rand"])
        fold_feat_orig.append([feats[f.value].get("mean_original", math.nan) for f in FEATURES])
        fold_feat_rand.append([feats[f.value].get("mean_random", math.nan) for f in FEATURES])
        for f in FEATURES:
            entry = feats[f.value]
            res = entry["test"]
            feature_rows.append({
                "fold": part["fold"],
                "feature": f.value,
                "mean_original": entry.get("mean_original"),
                "mean_random": entry.get("mean_random"),
                "t": None if res is None else res.t,
                "p": None if res is None else res.p,
                "p_bonferroni": entry.get("p_bonferroni"),
                "excluded": entry["excluded"],
            })

    stats: dict = {
        "n_folds": len(folds.folds),
        "excluded_albums": excluded_total,
        "mean_original": float(np.mean(fold_orig)),
        "mean_random": float(np.mean(fold_rand)),
        "pooled_album_test": paired_t(np.concatenate(pooled_o), np.concatenate(pooled_r)),
    }
    if len(folds.folds) >= 2:
        diffs = np.array(fold_orig) - np.array(fold_rand)
        stats["cross_fold_uncorrected"] = paired_t(fold_orig, fold_rand)
        stats["cross_fold"] = corrected_resampled_t(diffs, float(np.mean(ratios)))
        per_feature = {}
        fo, fr = np.array(fold_feat_orig), np.array(fold_feat_rand)
        for j, f in enumerate(FEATURES):
            ok = np.isfinite(fo[:, j]) & np.isfinite(fr[:, j])
            if ok.sum() < 2:
                continue
            res = corrected_resampled_t(fo[ok, j] - fr[ok, j], float(np.mean(ratios)))
            per_feature[f.value] = {
                "mean_original": float(fo[ok, j].mean()),
                "mean_random": float(fr[ok, j].mean()),
                "test": res,
                "p_bonferroni": bonferroni(res.p, len(FEATURES)),
            }
        stats["cross_fold_per_feature"] = per_feature
    else:
        stats["cross_fold"] = stats["pooled_album_test"]

    return ExperimentReport(
        "likelihood",
        statistics=stats,
        tables={"folds": fold_rows, "fold_features": feature_rows},
        metadata={
            "seed": seed,
            "split_seed": folds.seed,
            "test_fraction": folds.test_fraction,
            "n_folds": len(folds.folds),
            "tie_epsilon": tie_epsilon,
            "smoothing_alpha": smoothing_alpha,
            "n_albums": len(dataset),
            "dataset_digest": dataset.digest,
            "version": __version__,
        },
    )


# -- sequencing experiment -----------------------------------------------------------

def _sequence_one(job) -> dict:
    album, model, config, tie_epsilon = job
    try:
        result = anneal(album, model, config, tie_epsilon)
    except UnoptimizableAlbum as exc:
        return {"album_id": album.album_id, "error": str(exc)}
    numbers = [album.tracks[i].track_number for i in result.order]
    pairs = count_correct_pairs(numbers)
    k = len(album)
    return {
        "album_id": album.album_id,
        "k": k,
        "correct_pairs": pairs,
        "normalized": pairs / k,
        "position_accuracy": sum(n == i for i, n in enumerate(numbers, start=1)) / k,
        "objective": result.objective,
        "objective_original": objective(album, model, tie_epsilon),
        "accepted_moves": result.accepted_moves,
        "order": " ".join(str(n) for n in numbers),
    }


def sequencing_experiment(dataset: Dataset, model: TransitionModel, config: AnnealConfig = AnnealConfig(),
                          n_bootstrap: int = 10_000, seed: int = 0, tie_epsilon: float = 0.0,
                          workers: int = 1) -> ExperimentReport:
    """Re-sequence every album from a shuffle and count recovered adjacent pairs.

    The annealer runs with ``seed`` (each album gets its own stream). Optimized
    correct-pair counts are tested against the bootstrap mean with a one-sample
    t-test; normalized accuracies (pairs / album length) are reported alongside.
    """
    config = replace(config, seed=seed)
    jobs = [(album, model, config, tie_epsilon) for album in dataset]
    rows = pmap(_sequence_one, jobs, workers, chunksize=8)
    done = [r for r in rows if "error" not in r]
    failed = [r for r in rows if "error" in r]
    if len(done) < 2:
        raise ValueError("fewer than two albums could be sequenced")

    kept = {r["album_id"] for r in done}
    baseline = bootstrap_baseline([a for a in dataset if a.album_id in kept], n_bootstrap, seed, workers)
    pairs = np.array([r["correct_pairs"] for r in done], dtype=float)
    normalized = np.array([r["normalized"] for r in done])
    pairs_mean, pairs_sem = mean_sem(pairs)
    norm_mean, norm_sem = mean_sem(normalized)
    stats = {
        "n_albums": len(done),
        "excluded_albums": len(failed),
        "optimized_mean_pairs": pairs_mean,
        "optimized_sem_pairs": pairs_sem,
        "optimized_normalized": norm_mean,
        "optimized_normalized_sem": norm_sem,
        "optimized_position_accuracy": float(np.mean([r["position_accuracy"] for r in done])),
        "expected_random_pairs": expected_random_pairs(r["k"] for r in done),
        "bootstrap": baseline,
        "test": one_sample_t(pairs, baseline.mean),
        "test_normalized": one_sample_t(normalized, baseline.normalized_mean),
    }
    return ExperimentReport(
        "sequencing",
        statistics=stats,
        tables={"albums": rows},
        metadata={
            "seed": seed,
            "n_bootstrap": n_bootstrap,
            "tie_epsilon": tie_epsilon,
            "anneal_config": asdict(config),
            "model": {"trained_on": model.trained_on, "fold_id": model.fold_id,
                      "smoothing_alpha": model.smoothing_alpha},
            "n_albums": len(dataset),
            "dataset_digest": dataset.digest,
            "version": __version__,
        },
    )
