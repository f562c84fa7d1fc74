"""From-scratch L2-regularized linear SVM.

Binary models are trained by dual coordinate descent with the bias carried
as an implicit constant-one feature; multiclass is one-vs-rest over class
ids 0..4 with raw-score argmax. Prediction cost is proportional to the
active feature count, which is what the selection engine's timing
comparison measures.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from statistics import median

import numpy as np

from ._solver import BACKEND, dcd_epoch
from .errors import DimensionError, LafsError

CLASS_IDS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    max_epochs: int = 100
    tolerance: float = 1e-3
    shuffle_seed: int = 0
    record_history: bool = False  # per-epoch primal objective, for diagnostics

    def __post_init__(self):
        if self.C <= 0:
            raise LafsError(f"C must be positive, got {self.C}")
        if self.max_epochs < 1:
            raise LafsError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.tolerance <= 0:
            raise LafsError(f"tolerance must be positive, got {self.tolerance}")


@dataclass(frozen=True)
class BinaryModel:
    weights: np.ndarray  # float64, one entry per training column
    bias: float
    column_ids: tuple[int, ...]
    objective_history: tuple[float, ...] = field(default=(), compare=False)
    dual_history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if w.shape[0] != len(self.column_ids):
            raise DimensionError(
                f"{w.shape[0]} weights for {len(self.column_ids)} columns"
            )

    def decision(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.bias


@dataclass(frozen=True)
class MulticlassModel:
    models: tuple[BinaryModel, ...]  # aligned with CLASS_IDS
    classes: tuple[int, ...] = CLASS_IDS

    def __post_init__(self):
        ids = {m.column_ids for m in self.models}
        if len(ids) != 1:
            raise DimensionError("member models disagree on column identities")

    @property
    def column_ids(self) -> tuple[int, ...]:
        return self.models[0].column_ids

    @property
    def n_features(self) -> int:
        return len(self.column_ids)


def _as_matrix(features) -> np.ndarray:
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"feature matrix must be 2-d, got shape {X.shape}")
    return X


def train_binary(features, targets, cfg: SvmConfig, column_ids=None) -> BinaryModel:
    """Minimize (1/2)||w||^2 + C * sum hinge(y * (w.x + b)) over the rows.

    Runs permuted per-example dual coordinate descent until the largest
    absolute projected gradient in an epoch drops below the tolerance or the
    epoch budget runs out. Single-sign targets yield the constant classifier
    of that sign.
    """
    X = _as_matrix(features)
    y = np.asarray(targets, dtype=np.float64).ravel()
    n, d = X.shape
    if y.shape[0] != n:
        raise DimensionError(f"{n} rows but {y.shape[0]} targets")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise LafsError("targets must be +/-1")
    if column_ids is None:
        column_ids = tuple(range(1, d + 1))
    column_ids = tuple(int(c) for c in column_ids)
    if len(column_ids) != d:
        raise DimensionError(f"{len(column_ids)} column ids for {d} columns")

    if np.all(y == y[0]):
        sign = float(y[0])
        return BinaryModel(np.zeros(d), sign, column_ids)

    alpha = np.zeros(n)
    w = np.zeros(d)
    bias = 0.0
    qdiag = np.einsum("ij,ij->i", X, X) + 1.0
    rng = np.random.default_rng(cfg.shuffle_seed)
    history = []
    dual = []
    for _ in range(cfg.max_epochs):
        order = rng.permutation(n)
        bias, violation = dcd_epoch(X, y, alpha, w, bias, float(cfg.C), qdiag, order)
        if cfg.record_history:
            history.append(_objective_raw(w, bias, X, y, cfg.C))
            dual.append(0.5 * (float(w @ w) + bias * bias) - float(alpha.sum()))
        if violation < cfg.tolerance:
            break
    return BinaryModel(w, bias, column_ids, tuple(history), tuple(dual))


def _objective_raw(w, bias, X, y, C) -> float:
    margins = 1.0 - y * (X @ w + bias)
    np.maximum(margins, 0.0, out=margins)
    return 0.5 * float(w @ w) + C * float(margins.sum())


def objective(model: BinaryModel, features, targets, C: float) -> float:
    """Primal objective (1/2)||w||^2 + C * sum hinge at the model's (w, b)."""
    X = _as_matrix(features)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionError(f"{X.shape[0]} rows but {y.shape[0]} targets")
    if X.shape[1] != model.weights.shape[0]:
        raise DimensionError(
            f"model has {model.weights.shape[0]} weights, matrix has {X.shape[1]} columns"
        )
    return _objective_raw(model.weights, model.bias, X, y, C)


def train_multiclass(dataset, cfg: SvmConfig) -> MulticlassModel:
    """One binary model per class id; absent classes get the constant -1 model."""
    if dataset.n_rows == 0:
        raise LafsError("cannot train on an empty dataset")
    X = dataset.X
    y = dataset.y
    ids = dataset.feature_ids
    models = []
    for c in CLASS_IDS:
        mask = y == c
        if not mask.any():
            models.append(BinaryModel(np.zeros(X.shape[1]), -1.0, ids))
            continue
        targets = np.where(mask, 1.0, -1.0)
        models.append(train_binary(X, targets, cfg, column_ids=ids))
    return MulticlassModel(tuple(models))


def _score_matrix(model: MulticlassModel, X: np.ndarray) -> np.ndarray:
    W = np.stack([m.weights for m in model.models])
    b = np.array([m.bias for m in model.models])
    return X @ W.T + b


def predict(model: MulticlassModel, row) -> int:
    """Argmax class score for one row; ties break to the lowest class id."""
    x = np.asarray(row, dtype=np.float64).ravel()
    if x.shape[0] != model.n_features:
        raise DimensionError(
            f"row has {x.shape[0]} values, model expects {model.n_features}"
        )
    scores = _score_matrix(model, x[None, :])
    return int(scores[0].argmax())


def predict_batch(model: MulticlassModel, features) -> np.ndarray:
    X = _as_matrix(features)
    if X.shape[1] != model.n_features:
        raise DimensionError(
            f"matrix has {X.shape[1]} columns, model expects {model.n_features}"
        )
    return _score_matrix(model, X).argmax(axis=1)


def accuracy(model: MulticlassModel, dataset) -> float:
    if dataset.n_rows == 0:
        raise LafsError("accuracy of an empty dataset is undefined")
    return float(np.mean(predict_batch(model, dataset.X) == dataset.y))


def timed_predict(model: MulticlassModel, dataset, repeats: int = 5):
    """Full-batch prediction timed ``repeats`` times; returns (predictions, median seconds)."""
    if repeats < 1:
        raise LafsError(f"repeats must be >= 1, got {repeats}")
    if dataset.n_rows == 0:
        raise LafsError("cannot time prediction on an empty dataset")
    X = np.ascontiguousarray(dataset.X)
    durations = []
    predictions = None
    for _ in range(repeats):
        start = time.perf_counter()
        predictions = predict_batch(model, X)
        durations.append(time.perf_counter() - start)
    return predictions, median(durations)


def model_to_dict(model: MulticlassModel, cfg: SvmConfig | None = None) -> dict:
    doc = {
        "classes": list(model.classes),
        "column_ids": list(model.column_ids),
        "models": [
            {"class": c, "weights": m.weights.tolist(), "bias": m.bias}
            for c, m in zip(model.classes, model.models)
        ],
    }
    if cfg is not None:
        doc["svm_config"] = {
            "C": cfg.C,
            "max_epochs": cfg.max_epochs,
            "tolerance": cfg.tolerance,
            "shuffle_seed": cfg.shuffle_seed,
        }
    return doc


def model_from_dict(doc: dict) -> MulticlassModel:
    ids = tuple(int(c) for c in doc["column_ids"])
    models = tuple(
        BinaryModel(np.array(m["weights"], dtype=np.float64), float(m["bias"]), ids)
        for m in doc["models"]
    )
    return MulticlassModel(models, tuple(int(c) for c in doc["classes"]))


def save_model(model: MulticlassModel, path, cfg: SvmConfig | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, cfg), fh, indent=2)
        fh.write("\n")


def load_model(path) -> MulticlassModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def solver_backend() -> str:
    """Which inner-loop implementation is active: "compiled" or "pure"."""
    return BACKEND
