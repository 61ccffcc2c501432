"""Seedable classifiers with class-probability outputs.

Five variants: two baselines (majority, stratified), random forest, SAMME
AdaBoost over depth-limited trees, and a numpy MLP. The tree ensembles wrap
scikit-learn estimators behind this module's contracts; the baselines and the
MLP are implemented here. Trained models carry the registry fingerprint they
were trained against and refuse to predict on mismatched features.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from sklearn.ensemble import AdaBoostClassifier, RandomForestClassifier
from sklearn.tree import DecisionTreeClassifier

from .core import ACTIVITY_CLASSES
from .featurize import Dataset
from .mlp import MlpNet, MlpParams, fit_mlp
from .registry import FeatureRegistry
from .seeding import sklearn_seed

MODEL_VARIANTS = ("majority", "stratified", "rf", "adaboost", "mlp")

_MODEL_FORMAT = "sensefold-model"
_MODEL_VERSION = 1


@dataclass
class ForestParams:
    trees: int = 100
    max_features: object = "sqrt"
    min_leaf: int = 1
    depth: Optional[int] = None
    bootstrap: bool = True
    n_jobs: int = 1


@dataclass
class AdaBoostParams:
    rounds: int = 50
    base_depth: int = 1


@dataclass
class ModelConfig:
    forest: ForestParams = field(default_factory=ForestParams)
    adaboost: AdaBoostParams = field(default_factory=AdaBoostParams)
    mlp: MlpParams = field(default_factory=MlpParams)


@dataclass
class TrainedModel:
    variant: str
    classes: np.ndarray  # class codes seen in training, ascending
    fingerprint: str
    payload: object


def _check_trainable(dataset: Dataset, require_complete: bool, min_classes: int = 1) -> None:
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    if require_complete and np.isnan(dataset.X).any():
        raise ValueError("training data contains missing values; impute first")
    if np.unique(dataset.y).size < min_classes:
        raise ValueError(f"training data has fewer than {min_classes} classes")


def train_majority(dataset: Dataset) -> TrainedModel:
    """Always predicts the most frequent training class; ties resolve to the
    lexicographically smaller class name."""
    _check_trainable(dataset, require_complete=False)
    codes, counts = np.unique(dataset.y, return_counts=True)
    best = counts.max()
    tied = [int(c) for c, n in zip(codes, counts) if n == best]
    modal = min(tied, key=lambda c: ACTIVITY_CLASSES[c].value)
    return TrainedModel("majority", np.asarray([modal]), dataset.registry.fingerprint(),
                        payload=modal)


def train_stratified(dataset: Dataset, seed: int = 0) -> TrainedModel:
    """Predicts by sampling the training class distribution; the probability
    output is that (constant) distribution."""
    _check_trainable(dataset, require_complete=False)
    codes, counts = np.unique(dataset.y, return_counts=True)
    probs = counts / counts.sum()
    return TrainedModel("stratified", codes.astype(np.int64), dataset.registry.fingerprint(),
                        payload={"probs": probs, "seed": int(seed)})


def train_random_forest(dataset: Dataset, params: Optional[ForestParams] = None,
                        seed: int = 0) -> TrainedModel:
    params = params or ForestParams()
    _check_trainable(dataset, require_complete=True, min_classes=2)
    est = RandomForestClassifier(
        n_estimators=params.trees,
        max_features=params.max_features,
        min_samples_leaf=params.min_leaf,
        max_depth=params.depth,
        bootstrap=params.bootstrap,
        random_state=sklearn_seed(seed),
        n_jobs=params.n_jobs,
    )
    est.fit(dataset.X, dataset.y.astype(np.int64))
    return TrainedModel("rf", est.classes_.astype(np.int64), dataset.registry.fingerprint(),
                        payload=est)


def train_adaboost(dataset: Dataset, params: Optional[AdaBoostParams] = None,
                   seed: int = 0) -> TrainedModel:
    """Multiclass SAMME boosting over depth-limited Gini trees. Boosting stops
    early when a round's weighted error reaches 1 - 1/K, keeping the rounds
    fitted so far."""
    params = params or AdaBoostParams()
    _check_trainable(dataset, require_complete=True, min_classes=2)
    est = AdaBoostClassifier(
        estimator=DecisionTreeClassifier(max_depth=params.base_depth),
        n_estimators=params.rounds,
        random_state=sklearn_seed(seed),
    )
    est.fit(dataset.X, dataset.y.astype(np.int64))
    return TrainedModel("adaboost", est.classes_.astype(np.int64), dataset.registry.fingerprint(),
                        payload=est)


# ---------------------------------------------------------------------------
# MLP: integer-coded categoricals are one-hot expanded, inputs standardized
# with training statistics.


def design_columns(registry: FeatureRegistry) -> list[tuple[int, Optional[int]]]:
    """(source column, cardinality-or-None) per design block."""
    return [(i, d.categorical) for i, d in enumerate(registry.descriptors)]


def design_matrix(X: np.ndarray, columns: list[tuple[int, Optional[int]]]) -> np.ndarray:
    blocks = []
    for col, card in columns:
        if card is None:
            blocks.append(X[:, col:col + 1])
        else:
            codes = X[:, col].astype(np.intp)
            onehot = np.zeros((X.shape[0], card))
            onehot[np.arange(X.shape[0]), np.clip(codes, 0, card - 1)] = 1.0
            blocks.append(onehot)
    return np.hstack(blocks)


def train_mlp(dataset: Dataset, params: Optional[MlpParams] = None, seed: int = 0) -> TrainedModel:
    params = params or MlpParams()
    _check_trainable(dataset, require_complete=True, min_classes=2)
    columns = design_columns(dataset.registry)
    Xd = design_matrix(dataset.X, columns)
    mean = Xd.mean(axis=0)
    std = Xd.std(axis=0)
    std[std == 0] = 1.0
    Xs = (Xd - mean) / std

    classes = np.unique(dataset.y).astype(np.int64)
    class_pos = {int(c): i for i, c in enumerate(classes)}
    y_local = np.fromiter((class_pos[int(c)] for c in dataset.y), dtype=np.intp,
                          count=len(dataset))
    result = fit_mlp(Xs, y_local, len(classes), params, seed=seed)
    payload = {
        "net": {"sizes": result.net.sizes,
                "weights": result.net.weights,
                "biases": result.net.biases},
        "columns": columns,
        "mean": mean,
        "std": std,
        "epochs_run": result.epochs_run,
    }
    return TrainedModel("mlp", classes, dataset.registry.fingerprint(), payload=payload)


# ---------------------------------------------------------------------------
# Prediction


def _check_fingerprint(model: TrainedModel, dataset: Dataset) -> None:
    if dataset.registry.fingerprint() != model.fingerprint:
        raise ValueError(
            "feature registry fingerprint mismatch: model was trained on "
            f"{model.fingerprint}, data carries {dataset.registry.fingerprint()}"
        )


def predict_proba(model: TrainedModel, dataset: Dataset) -> np.ndarray:
    """Class-probability matrix with columns aligned to ``model.classes``."""
    _check_fingerprint(model, dataset)
    n = len(dataset)
    if model.variant == "majority":
        return np.ones((n, 1))
    if model.variant == "stratified":
        return np.tile(model.payload["probs"], (n, 1))
    if model.variant in ("rf", "adaboost"):
        return model.payload.predict_proba(dataset.X)
    if model.variant == "mlp":
        p = model.payload
        net = MlpNet(p["net"]["sizes"], seed=0)
        net.weights = [w.copy() for w in p["net"]["weights"]]
        net.biases = [b.copy() for b in p["net"]["biases"]]
        Xs = (design_matrix(dataset.X, p["columns"]) - p["mean"]) / p["std"]
        return net.predict_proba(Xs)
    raise ValueError(f"unknown model variant {model.variant!r}")


def predict_labels(model: TrainedModel, dataset: Dataset) -> np.ndarray:
    """Predicted class codes. The stratified baseline samples its training
    distribution with its stored seed (so repeated calls give the same
    sequence); all other variants take the most probable class."""
    _check_fingerprint(model, dataset)
    if model.variant == "stratified":
        rng = np.random.default_rng(model.payload["seed"])
        return rng.choice(model.classes, size=len(dataset), p=model.payload["probs"])
    proba = predict_proba(model, dataset)
    return model.classes[np.argmax(proba, axis=1)]


def gini_importance(model: TrainedModel) -> np.ndarray:
    """Normalized mean impurity decrease per feature; forests only."""
    if model.variant != "rf":
        raise ValueError("Gini importance is only defined for random forest models")
    return np.asarray(model.payload.feature_importances_, dtype=float)


# ---------------------------------------------------------------------------
# Serialization


def save_model(model: TrainedModel, path: str | Path) -> None:
    blob = {
        "format": _MODEL_FORMAT,
        "version": _MODEL_VERSION,
        "variant": model.variant,
        "classes": model.classes,
        "fingerprint": model.fingerprint,
        "payload": model.payload,
    }
    with open(path, "wb") as fh:
        pickle.dump(blob, fh)


def load_model(path: str | Path) -> TrainedModel:
    with open(path, "rb") as fh:
        blob = pickle.load(fh)
    if blob.get("format") != _MODEL_FORMAT or blob.get("version") != _MODEL_VERSION:
        raise ValueError(f"{path} is not a supported model file")
    return TrainedModel(blob["variant"], blob["classes"], blob["fingerprint"], blob["payload"])


def train_model(variant: str, dataset: Dataset, seed: int = 0,
                config: Optional[ModelConfig] = None) -> TrainedModel:
    config = config or ModelConfig()
    if variant == "majority":
        return train_majority(dataset)
    if variant == "stratified":
        return train_stratified(dataset, seed=seed)
    if variant == "rf":
        return train_random_forest(dataset, config.forest, seed=seed)
    if variant == "adaboost":
        return train_adaboost(dataset, config.adaboost, seed=seed)
    if variant == "mlp":
        return train_mlp(dataset, config.mlp, seed=seed)
    raise ValueError(f"unknown model variant {variant!r}; choose one of {MODEL_VARIANTS}")
