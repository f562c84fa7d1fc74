"""Backward feature elimination driven by the learning automaton.

One selection run: calibrate the accuracy floor on a pool of stratified
subsets, then repeatedly sample a candidate feature, train the SVM with
that feature (and everything already removed) dropped, and reward the
automaton when validation accuracy stays at or above the floor. A feature
whose probability reaches the removal threshold leaves permanently and the
automaton restarts uniform over the survivors. The run ends when a full
round's iteration budget passes without any removal, or when the surviving
set reaches the configured minimum. A final pass retrains on the complete
training data and compares the reduced model against the full-feature
baseline on held-out data, accuracy and prediction time both.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import automaton
from .dataset import (Dataset, SubsetSpec, build_subset_pool, remove_features,
                      stratified_split)
from .errors import ConfigError, LafsError
from .svm import (MulticlassModel, SvmConfig, accuracy, timed_predict,
                  train_multiclass)

log = logging.getLogger(__name__)

AUTO_BUDGET_PER_FEATURE = 200
TIMING_REPEATS = 5

TERMINATION_BUDGET = "budget_exhausted"
TERMINATION_MIN_FEATURES = "min_features_reached"


@dataclass(frozen=True)
class SelectionConfig:
    """Every tunable of a selection run."""

    t2: float = 0.8
    delta: float | None = None  # None: 1 / (10 * original feature count)
    pool_size: int = 10
    t1_offset: float = 0.0
    budget: int | None = None  # per-round iteration cap; None: 200 * active count
    min_features: int = 1
    recalibrate: bool = False
    subset_spec: SubsetSpec = field(default_factory=SubsetSpec)
    svm: SvmConfig = field(default_factory=SvmConfig)
    seed: int = 0
    holdout_fraction: float = 0.3  # used only when no test set is supplied

    def __post_init__(self):
        if not 0.0 < self.t2 <= 1.0:
            raise ConfigError(f"t2 must be in (0, 1], got {self.t2}")
        if self.delta is not None and self.delta <= 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.pool_size < 2:
            raise ConfigError(f"pool size must be >= 2, got {self.pool_size}")
        if self.budget is not None and self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if self.min_features < 1:
            raise ConfigError(f"min features must be >= 1, got {self.min_features}")

    def resolve_delta(self, n_features: int) -> float:
        if self.delta is not None:
            return self.delta
        return 1.0 / (10.0 * n_features)

    def resolve_budget(self, n_active: int) -> int:
        if self.budget is not None:
            return self.budget
        return AUTO_BUDGET_PER_FEATURE * n_active

    def to_dict(self) -> dict:
        return {
            "t2": self.t2,
            "delta": self.delta,
            "pool_size": self.pool_size,
            "t1_offset": self.t1_offset,
            "budget": self.budget,
            "min_features": self.min_features,
            "recalibrate": self.recalibrate,
            "subset_spec": self.subset_spec.to_dict(),
            "svm": {
                "C": self.svm.C,
                "max_epochs": self.svm.max_epochs,
                "tolerance": self.svm.tolerance,
                "shuffle_seed": self.svm.shuffle_seed,
            },
            "seed": self.seed,
            "holdout_fraction": self.holdout_fraction,
        }


@dataclass(frozen=True)
class IterationRecord:
    iteration: int  # global, 1-based
    round_no: int  # 1-based, bumped after every removal
    feature: int
    accuracy: float
    beta: int  # 0 = reward, 1 = penalty
    max_p: float
    train_subset: int
    val_subset: int

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "round": self.round_no,
            "feature": self.feature,
            "accuracy": self.accuracy,
            "beta": self.beta,
            "max_p": self.max_p,
            "train_subset": self.train_subset,
            "val_subset": self.val_subset,
        }


@dataclass(frozen=True)
class RemovalRecord:
    round_no: int
    iteration: int
    feature: int
    probability: float
    t1: float

    def to_dict(self) -> dict:
        return {
            "round": self.round_no,
            "iteration": self.iteration,
            "feature": self.feature,
            "probability": self.probability,
            "t1": self.t1,
        }


@dataclass(frozen=True)
class FinalMetrics:
    baseline_accuracy: float
    reduced_accuracy: float
    baseline_features: int
    reduced_features: int
    baseline_predict_seconds: float
    reduced_predict_seconds: float
    speedup: float

    def accuracy_dict(self) -> dict:
        return {
            "baseline_accuracy": self.baseline_accuracy,
            "reduced_accuracy": self.reduced_accuracy,
            "baseline_features": self.baseline_features,
            "reduced_features": self.reduced_features,
        }

    def timing_dict(self) -> dict:
        return {
            "baseline_predict_seconds": self.baseline_predict_seconds,
            "reduced_predict_seconds": self.reduced_predict_seconds,
            "speedup": self.speedup,
            "repeats": TIMING_REPEATS,
        }


@dataclass(frozen=True)
class FinalEvaluation:
    metrics: FinalMetrics
    baseline_model: MulticlassModel
    reduced_model: MulticlassModel


@dataclass(frozen=True)
class SelectionResult:
    removed: tuple[int, ...]
    surviving: tuple[int, ...]
    t1: float
    trace: tuple[IterationRecord, ...]
    removals: tuple[RemovalRecord, ...]
    termination: str
    final_model: MulticlassModel
    final_metrics: FinalMetrics
    config: SelectionConfig


def calibrate_t1(pool, svm_cfg: SvmConfig, offset: float = 0.0) -> float:
    """Mean validation accuracy over cyclic (train, validate) pairs, plus offset.

    Subset i trains the model that subset i+1 (mod pool size) scores, so no
    pair trains and validates on the same subset. Capped at 1.
    """
    r = len(pool)
    if r < 2:
        raise ConfigError(f"calibration needs a pool of >= 2 subsets, got {r}")
    accuracies = []
    for i in range(r):
        model = train_multiclass(pool[i], svm_cfg)
        accuracies.append(accuracy(model, pool[(i + 1) % r]))
    return min(float(np.mean(accuracies)) + offset, 1.0)


def run_iteration(state, pool, svm_cfg: SvmConfig, t1: float,
                  rng: np.random.Generator, removed=frozenset(),
                  iteration: int = 1, round_no: int = 1):
    """One loop step: sample a feature, score its removal, update the automaton."""
    if len(pool) < 2:
        raise ConfigError("need >= 2 subsets to draw distinct train/validation")
    if state.n_actions < 2:
        raise ConfigError("need >= 2 active features to evaluate a removal")
    feature = automaton.select_action(state, rng)
    tr_idx, val_idx = (int(i) for i in rng.choice(len(pool), size=2, replace=False))
    drop = {feature} | set(removed)
    train_subset = remove_features(
        pool[tr_idx], drop & set(pool[tr_idx].feature_ids))
    val_subset = remove_features(
        pool[val_idx], drop & set(pool[val_idx].feature_ids))
    model = train_multiclass(train_subset, svm_cfg)
    acc = accuracy(model, val_subset)
    if acc >= t1:
        beta = 0
        state = automaton.reward(state, feature)
    else:
        beta = 1
        state = automaton.penalty(state)
    record = IterationRecord(
        iteration=iteration,
        round_no=round_no,
        feature=feature,
        accuracy=acc,
        beta=beta,
        max_p=float(state.probabilities.max()),
        train_subset=tr_idx,
        val_subset=val_idx,
    )
    return state, record


def evaluate_final(train_full: Dataset, test_full: Dataset, removed,
                   svm_cfg: SvmConfig,
                   repeats: int = TIMING_REPEATS) -> FinalEvaluation:
    """Full-feature baseline vs reduced model: test accuracy and predict time."""
    if test_full.n_rows == 0:
        raise LafsError("cannot evaluate on an empty test set")
    baseline_model = train_multiclass(train_full, svm_cfg)
    baseline_acc = accuracy(baseline_model, test_full)
    _, baseline_time = timed_predict(baseline_model, test_full, repeats)

    reduced_train = remove_features(train_full, removed)
    reduced_test = remove_features(test_full, removed)
    reduced_model = train_multiclass(reduced_train, svm_cfg)
    reduced_acc = accuracy(reduced_model, reduced_test)
    _, reduced_time = timed_predict(reduced_model, reduced_test, repeats)

    metrics = FinalMetrics(
        baseline_accuracy=baseline_acc,
        reduced_accuracy=reduced_acc,
        baseline_features=train_full.n_features,
        reduced_features=reduced_train.n_features,
        baseline_predict_seconds=baseline_time,
        reduced_predict_seconds=reduced_time,
        speedup=baseline_time / reduced_time if reduced_time > 0 else float("inf"),
    )
    return FinalEvaluation(metrics, baseline_model, reduced_model)


def run_selection(train_data: Dataset, cfg: SelectionConfig,
                  test_data: Dataset | None = None) -> SelectionResult:
    """Execute the whole selection procedure on one dataset.

    When no test set is supplied, a stratified holdout is split off first
    and the remainder drives selection and final training.
    """
    if train_data.n_features < 2:
        raise ConfigError("selection needs at least 2 features")
    if cfg.min_features >= train_data.n_features:
        raise ConfigError(
            f"min features {cfg.min_features} must be below the "
            f"feature count {train_data.n_features}"
        )

    seed_seq = np.random.SeedSequence(cfg.seed)
    holdout_seed, pool_seed, loop_seed = seed_seq.spawn(3)
    if test_data is None:
        train_data, test_data = stratified_split(
            train_data, cfg.holdout_fraction, np.random.default_rng(holdout_seed))
    pool = build_subset_pool(train_data, cfg.pool_size, cfg.subset_spec,
                             np.random.default_rng(pool_seed))
    t1 = initial_t1 = calibrate_t1(pool, cfg.svm, cfg.t1_offset)
    log.info("calibrated accuracy floor: %.6f", t1)

    delta = cfg.resolve_delta(train_data.n_features)
    state = automaton.init(train_data.feature_ids, delta, cfg.t2)
    rng = np.random.default_rng(loop_seed)

    removed: list[int] = []
    trace: list[IterationRecord] = []
    removals: list[RemovalRecord] = []
    iteration = 0
    round_no = 1
    termination = TERMINATION_MIN_FEATURES
    while state.n_actions > cfg.min_features:
        budget = cfg.resolve_budget(state.n_actions)
        removed_this_round = False
        for _ in range(budget):
            iteration += 1
            state, record = run_iteration(
                state, pool, cfg.svm, t1, rng,
                removed=frozenset(removed), iteration=iteration,
                round_no=round_no,
            )
            trace.append(record)
            target = automaton.check_threshold(state)
            if target is not None:
                removals.append(RemovalRecord(
                    round_no=round_no,
                    iteration=iteration,
                    feature=target,
                    probability=float(state.probabilities.max()),
                    t1=t1,
                ))
                removed.append(target)
                pool = [remove_features(s, [target]) for s in pool]
                state = automaton.reinitialize(state, target)
                if cfg.recalibrate:
                    t1 = calibrate_t1(pool, cfg.svm, cfg.t1_offset)
                    log.info("recalibrated accuracy floor: %.6f", t1)
                log.info("round %d: removed feature %d after iteration %d",
                         round_no, target, iteration)
                round_no += 1
                removed_this_round = True
                break
        if not removed_this_round:
            termination = TERMINATION_BUDGET
            break

    evaluation = evaluate_final(train_data, test_data, removed, cfg.svm)
    return SelectionResult(
        removed=tuple(removed),
        surviving=state.actions,
        t1=initial_t1,
        trace=tuple(trace),
        removals=tuple(removals),
        termination=termination,
        final_model=evaluation.reduced_model,
        final_metrics=evaluation.metrics,
        config=cfg,
    )


def result_to_report(result: SelectionResult) -> dict:
    """Deterministic report body; measured durations live in the timing sidecar."""
    return {
        "config": result.config.to_dict(),
        "t1": result.t1,
        "trace": [rec.to_dict() for rec in result.trace],
        "removals": [rec.to_dict() for rec in result.removals],
        "surviving_features": list(result.surviving),
        "termination": result.termination,
        "final_metrics": result.final_metrics.accuracy_dict(),
    }


def write_report(result: SelectionResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result_to_report(result), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_timing(result: SelectionResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.final_metrics.timing_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trace_csv(result: SelectionResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "round", "feature", "accuracy", "beta", "max_p"])
        for rec in result.trace:
            writer.writerow([
                rec.iteration, rec.round_no, rec.feature,
                repr(rec.accuracy), rec.beta, repr(rec.max_p),
            ])
