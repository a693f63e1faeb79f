"""Feature encoding: six z-scored numerics plus two pass-through binaries.

Vector layout (fixed): [train_time, train_cost, car_time, car_cost,
swissmetro_time, swissmetro_cost] z-scored, then [is_regular_train_user,
owns_annual_pass] as raw 0/1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import MODE_ORDER, ChoiceSituation
from .config import EmptyTrainingSet

N_NUMERIC = 6
N_FEATURES = 8
N_CLASSES = 3

FEATURE_NAMES = (
    "train_time",
    "train_cost",
    "car_time",
    "car_cost",
    "swissmetro_time",
    "swissmetro_cost",
    "is_regular_train_user",
    "owns_annual_pass",
)


def _raw_numeric(situation: ChoiceSituation) -> list[float]:
    values = []
    for mode in MODE_ORDER:
        values.append(float(situation.travel_time_min[mode]))
        values.append(float(situation.travel_cost[mode]))
    return values


@dataclass
class FeatureScaler:
    """Per-feature mean/std over the six numerics; degenerate (zero-variance)
    features map to 0 instead of dividing by zero."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.stds = np.asarray(self.stds, dtype=float)
        if self.means.shape != (N_NUMERIC,) or self.stds.shape != (N_NUMERIC,):
            raise ValueError(f"scaler must cover exactly {N_NUMERIC} numeric features")
        if np.any(self.stds < 0):
            raise ValueError("stds must be non-negative")

    @property
    def degenerate(self) -> np.ndarray:
        return self.stds == 0

    @classmethod
    def identity(cls) -> "FeatureScaler":
        """No-op scaler for probing sensitivity to standardization."""
        return cls(means=np.zeros(N_NUMERIC), stds=np.ones(N_NUMERIC))

    def transform(self, raw: np.ndarray) -> np.ndarray:
        safe_std = np.where(self.degenerate, 1.0, self.stds)
        z = (raw - self.means) / safe_std
        return np.where(self.degenerate, 0.0, z)


def fit_scaler(train: list[ChoiceSituation]) -> FeatureScaler:
    if not train:
        raise EmptyTrainingSet("cannot fit a scaler on an empty training set")
    raw = np.array([_raw_numeric(s) for s in train], dtype=float)
    return FeatureScaler(means=raw.mean(axis=0), stds=raw.std(axis=0))


def encode_features(situation: ChoiceSituation, scaler: FeatureScaler) -> np.ndarray:
    """Deterministic 8-vector in the fixed feature order."""
    numeric = scaler.transform(np.array(_raw_numeric(situation), dtype=float))
    binaries = [float(situation.is_regular_train_user), float(situation.owns_annual_pass)]
    return np.concatenate([numeric, binaries])


def encode_matrix(situations: list[ChoiceSituation], scaler: FeatureScaler) -> np.ndarray:
    return np.array([encode_features(s, scaler) for s in situations], dtype=float)


def labels_array(situations: list[ChoiceSituation]) -> np.ndarray:
    return np.array([int(s.chosen) for s in situations], dtype=int)
