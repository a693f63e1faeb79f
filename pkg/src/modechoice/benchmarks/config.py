"""Training configuration and error types shared by the benchmark models."""

from __future__ import annotations

from dataclasses import dataclass


class BenchmarkError(Exception):
    pass


class EmptyTrainingSet(BenchmarkError):
    pass


class NonFiniteLoss(BenchmarkError):
    pass


class ClassMissing(BenchmarkError):
    def __init__(self, missing):
        self.missing = missing
        super().__init__(f"training set lacks classes: {sorted(m.display for m in missing)}")


@dataclass
class TrainConfig:
    """Hyper-parameters for one benchmark kind; see default_train_config for
    the per-kind defaults (chosen to mimic common toolkit defaults)."""

    kind: str  # "mnl" | "rf" | "nn"
    seed: int = 0
    # gradient-trained models (mnl, nn)
    learning_rate: float = 1e-3
    max_epochs: int = 200
    tolerance: float = 1e-4
    l2_strength: float = 1e-4
    optimizer: str = "adam"  # "adam" | "gd_halving"
    hidden_units: int = 100
    batch_size: int = 200
    # random forest
    n_trees: int = 100
    max_features: str | int = "sqrt"
    bootstrap: bool = True
    max_depth: int | None = None
    # feature handling
    standardize: bool = True

    def __post_init__(self):
        if self.kind not in ("mnl", "rf", "nn"):
            raise ValueError(f"unknown benchmark kind {self.kind!r}")
        if self.learning_rate <= 0 or self.max_epochs <= 0 or self.tolerance <= 0:
            raise ValueError("learning_rate, max_epochs, and tolerance must be positive")
        if self.l2_strength < 0:
            raise ValueError("l2_strength must be non-negative")
        if self.optimizer not in ("adam", "gd_halving"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.hidden_units <= 0 or self.batch_size <= 0 or self.n_trees <= 0:
            raise ValueError("hidden_units, batch_size, and n_trees must be positive")
        if self.max_depth is not None and self.max_depth <= 0:
            raise ValueError("max_depth must be positive when set")


def default_train_config(kind: str, seed: int = 0) -> TrainConfig:
    if kind == "mnl":
        # full-batch descent with step halving: monotone and insensitive to the
        # initial step, so a generous starting rate is fine
        return TrainConfig(
            kind="mnl",
            seed=seed,
            learning_rate=1.0,
            max_epochs=2000,
            tolerance=1e-9,
            l2_strength=1.0,
            optimizer="gd_halving",
        )
    if kind == "nn":
        return TrainConfig(
            kind="nn",
            seed=seed,
            learning_rate=1e-3,
            max_epochs=200,
            tolerance=1e-4,
            l2_strength=1e-4,
            optimizer="adam",
            hidden_units=100,
            batch_size=200,
        )
    if kind == "rf":
        return TrainConfig(
            kind="rf",
            seed=seed,
            n_trees=100,
            max_features="sqrt",
            bootstrap=True,
            max_depth=None,
        )
    raise ValueError(f"unknown benchmark kind {kind!r}")
