"""Synthetic datasets with planted informative and pure-noise features.

Ground truth about which columns carry signal makes these sets an oracle
for the selection engine: a correct run removes noise columns and keeps
informative ones. Informative columns are class-conditional Gaussians with
adjacent class means one margin apart; noise columns are uniform draws
independent of the label. Columns are shuffled so position reveals nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, remove_features, stratified_split
from .errors import ConfigError, LafsError
from .svm import SvmConfig, accuracy, train_multiclass

# Class-conditional spread relative to the margin: small enough that the
# full informative set is nearly separable, large enough that dropping one
# informative column costs measurable accuracy (about 0.7 points at the
# default spec, several sigma of subset-validation noise).
SPREAD_PER_MARGIN = 1 / 2.2


@dataclass(frozen=True)
class SynthSpec:
    n_samples: int = 2000
    n_informative: int = 5
    n_noise: int = 10
    n_classes: int = 2
    margin: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n_informative < 1:
            raise ConfigError("need at least one informative feature")
        if self.n_noise < 0:
            raise ConfigError("noise feature count must be >= 0")
        if not 2 <= self.n_classes <= 5:
            raise ConfigError(f"class count must be in 2..5, got {self.n_classes}")
        if self.margin <= 0:
            raise ConfigError(f"margin must be positive, got {self.margin}")
        if self.n_samples < self.n_classes:
            raise ConfigError("need at least one sample per class")

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "n_informative": self.n_informative,
            "n_noise": self.n_noise,
            "n_classes": self.n_classes,
            "margin": self.margin,
            "seed": self.seed,
        }


def generate(spec: SynthSpec) -> tuple[Dataset, set[int]]:
    """Build the dataset and return it with the noise columns' feature ids.

    Labels cycle through the classes so counts are balanced. Every column
    is min-max scaled to [0, 1] before the random column shuffle.
    """
    rng = np.random.default_rng(spec.seed)
    n, d, k = spec.n_samples, spec.n_informative, spec.n_noise
    y = np.arange(n) % spec.n_classes
    y = y[rng.permutation(n)]

    sigma = spec.margin * SPREAD_PER_MARGIN
    signs = rng.choice((-1.0, 1.0), size=d)
    informative = rng.normal(size=(n, d)) * sigma
    informative += y[:, None] * spec.margin * signs[None, :]
    noise = rng.random(size=(n, k))

    X = np.hstack([informative, noise])
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span <= 0] = 1.0
    X = (X - lo) / span

    order = rng.permutation(d + k)
    X = X[:, order]
    noise_ids = {int(pos) + 1 for pos, col in enumerate(order) if col >= d}
    names = tuple(
        f"{'noise' if col >= d else 'signal'}_{col}" for col in order
    )
    return Dataset(X, y, tuple(range(1, d + k + 1)), names), noise_ids


def oracle_redundancy(dataset: Dataset, feature_id: int,
                      svm_cfg: SvmConfig) -> tuple[float, float]:
    """Accuracy with and without one feature, measured on a fixed 70/30 split.

    Pure train-and-measure; no automaton involved. Used as the brute-force
    reference the selection engine is judged against.
    """
    if dataset.n_features < 2:
        raise LafsError("need a second feature to measure removal impact")
    if feature_id not in dataset.feature_ids:
        raise LafsError(f"unknown feature id {feature_id}")
    rng = np.random.default_rng(0)
    train, test = stratified_split(dataset, 0.3, rng)
    acc_with = accuracy(train_multiclass(train, svm_cfg), test)
    reduced_train = remove_features(train, [feature_id])
    reduced_test = remove_features(test, [feature_id])
    acc_without = accuracy(train_multiclass(reduced_train, svm_cfg), reduced_test)
    return acc_with, acc_without


def save_ground_truth(noise_ids, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"noise_feature_ids": sorted(int(i) for i in noise_ids)}, fh)
        fh.write("\n")


def load_ground_truth(path) -> set[int]:
    with open(path, encoding="utf-8") as fh:
        return {int(i) for i in json.load(fh)["noise_feature_ids"]}
