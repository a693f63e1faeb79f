"""Supervised baselines (multinomial logit, random forest, neural network)
over the shared 8-feature encoding, written from scratch on numpy."""

from __future__ import annotations

import numpy as np

from ..dataset import MODE_ORDER, ChoiceSituation, ModeLabel
from . import forest, mnl, neural
from .config import (
    BenchmarkError,
    ClassMissing,
    EmptyTrainingSet,
    NonFiniteLoss,
    TrainConfig,
    default_train_config,
)
from .features import (
    FEATURE_NAMES,
    FeatureScaler,
    encode_features,
    encode_matrix,
    fit_scaler,
    labels_array,
)
from .forest import ForestModel
from .mnl import MnlModel
from .model_io import load_model, model_from_dict, model_to_dict, save_model
from .neural import NeuralModel

BENCHMARK_KINDS = ("mnl", "rf", "nn")

__all__ = [
    "BENCHMARK_KINDS",
    "BenchmarkError",
    "ClassMissing",
    "EmptyTrainingSet",
    "FEATURE_NAMES",
    "FeatureScaler",
    "ForestModel",
    "MnlModel",
    "NeuralModel",
    "NonFiniteLoss",
    "TrainConfig",
    "default_train_config",
    "encode_features",
    "encode_matrix",
    "fit_classifier",
    "fit_scaler",
    "labels_array",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict_label",
    "predict_labels",
    "predict_proba",
    "save_model",
]


def fit_classifier(
    kind: str,
    train: list[ChoiceSituation],
    cfg: TrainConfig,
    scaler: FeatureScaler,
):
    """Fit one benchmark kind on encoded training situations."""
    if kind != cfg.kind:
        raise ValueError(f"kind {kind!r} does not match cfg.kind {cfg.kind!r}")
    if not train:
        raise EmptyTrainingSet("cannot fit on an empty training set")
    X = encode_matrix(train, scaler)
    y = labels_array(train)
    if kind in ("mnl", "nn"):
        missing = {m for m in MODE_ORDER if int(m) not in set(y)}
        if missing:
            raise ClassMissing(missing)
    if kind == "mnl":
        return mnl.fit(X, y, cfg)
    if kind == "rf":
        return forest.fit(X, y, cfg)
    if kind == "nn":
        return neural.fit(X, y, cfg)
    raise ValueError(f"unknown benchmark kind {kind!r}")


def predict_proba(model, x: np.ndarray) -> np.ndarray:
    """Class-probability 3-vector for a single encoded feature vector."""
    return model.predict_proba_matrix(np.asarray(x, dtype=float)[None, :])[0]


def predict_label(model, x: np.ndarray) -> ModeLabel:
    """Argmax of predict_proba; exact ties fall to the lower mode label."""
    return ModeLabel(int(np.argmax(predict_proba(model, x))))


def predict_labels(model, X: np.ndarray) -> list[ModeLabel]:
    proba = model.predict_proba_matrix(np.asarray(X, dtype=float))
    return [ModeLabel(int(i)) for i in np.argmax(proba, axis=1)]
