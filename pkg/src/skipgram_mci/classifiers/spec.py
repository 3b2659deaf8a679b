"""Model specifications and the common trained-model interface."""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace
from typing import Any, ClassVar

import numpy as np


class Variant(str, enum.Enum):
    SVM_SMO = "SVM_SMO"
    NAIVE_BAYES_KDE = "NAIVE_BAYES_KDE"
    LOGISTIC_RIDGE = "LOGISTIC_RIDGE"
    DECISION_TREE = "DECISION_TREE"


class Kernel(str, enum.Enum):
    LINEAR = "LINEAR"
    RBF = "RBF"
    NORMALIZED_POLY = "NORMALIZED_POLY"


@dataclass(frozen=True)
class SVMParams:
    C: float = 0.9375
    kernel: Kernel = Kernel.RBF
    gamma: float = 1.0124e-4
    exponent: float = 4.097
    lower_order: bool = True
    standardize: bool = True
    platt_calibrate: bool = True
    tol: float = 1e-3
    max_iter: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if self.kernel is Kernel.RBF and self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.kernel is Kernel.NORMALIZED_POLY and self.exponent <= 0:
            raise ValueError("exponent must be > 0")


@dataclass(frozen=True)
class NBParams:
    kernel_density: bool = True
    var_floor: float = 1e-9


@dataclass(frozen=True)
class LogisticParams:
    ridge: float = 8.114737295158544e-12
    grad_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")


@dataclass(frozen=True)
class TreeParams:
    confidence: float = 0.25
    min_leaf: int = 2
    prune: bool = True

    def __post_init__(self):
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")


PARAMS_FOR = {
    Variant.SVM_SMO: SVMParams,
    Variant.NAIVE_BAYES_KDE: NBParams,
    Variant.LOGISTIC_RIDGE: LogisticParams,
    Variant.DECISION_TREE: TreeParams,
}

_ALIASES = {
    "svm": Variant.SVM_SMO, "smo": Variant.SVM_SMO,
    "nb": Variant.NAIVE_BAYES_KDE, "naive_bayes": Variant.NAIVE_BAYES_KDE,
    "logistic": Variant.LOGISTIC_RIDGE, "lr": Variant.LOGISTIC_RIDGE,
    "tree": Variant.DECISION_TREE, "dt": Variant.DECISION_TREE, "j48": Variant.DECISION_TREE,
}


def parse_variant(value: str | Variant) -> Variant:
    if isinstance(value, Variant):
        return value
    return _ALIASES.get(value.lower()) or Variant(value.upper())


@dataclass(frozen=True)
class ModelSpec:
    variant: Variant
    params: Any = None
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        variant = parse_variant(self.variant)
        object.__setattr__(self, "variant", variant)
        cls = PARAMS_FOR[variant]
        if self.params is None:
            object.__setattr__(self, "params", cls())
        elif isinstance(self.params, dict):
            object.__setattr__(self, "params", cls(**self.params))
        elif not isinstance(self.params, cls):
            raise TypeError(f"{variant.value} needs {cls.__name__}, got {type(self.params).__name__}")
        if not self.name:
            object.__setattr__(self, "name", variant.value)

    def with_params(self, **changes) -> "ModelSpec":
        return replace(self, params=replace(self.params, **changes))

    def to_dict(self) -> dict:
        params = {
            f.name: (v.value if isinstance(v, enum.Enum) else v)
            for f in fields(self.params)
            for v in [getattr(self.params, f.name)]
        }
        return {"name": self.name, "variant": self.variant.value, "seed": self.seed, **params}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        data = dict(data)
        variant = parse_variant(data.pop("variant"))
        name = data.pop("name", "")
        seed = int(data.pop("seed", 0))
        allowed = {f.name for f in fields(PARAMS_FOR[variant])}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown {variant.value} parameters: {sorted(unknown)}")
        defaults = PARAMS_FOR[variant]()
        for key, value in data.items():
            kind = type(getattr(defaults, key))
            if kind is bool:
                data[key] = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
            elif kind in (int, float):
                data[key] = kind(value)
        return cls(variant, PARAMS_FOR[variant](**data), seed, name)


def table1_models() -> list[ModelSpec]:
    """The four skip-gram models with their reported hyperparameters."""
    return [
        ModelSpec(Variant.SVM_SMO, SVMParams(), name="SVM"),
        ModelSpec(Variant.NAIVE_BAYES_KDE, NBParams(kernel_density=True), name="NB"),
        ModelSpec(Variant.DECISION_TREE, TreeParams(), name="DT"),
        ModelSpec(Variant.LOGISTIC_RIDGE, LogisticParams(), name="Logistic"),
    ]


def baseline_svm() -> ModelSpec:
    return ModelSpec(
        Variant.SVM_SMO,
        SVMParams(
            C=0.9681, kernel=Kernel.NORMALIZED_POLY, exponent=4.097,
            lower_order=True, standardize=True, platt_calibrate=False,
        ),
        name="Baseline-SVM",
    )


class TrainedModel:
    """Interface shared by the four fitted model types."""

    variant: ClassVar[Variant]
    emits_probability: bool = True

    spec: ModelSpec
    dim: int

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Positive-class scores for each row of ``X``."""
        raise NotImplementedError

    def state(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_state(cls, spec: ModelSpec, dim: int, state: dict) -> "TrainedModel":
        raise NotImplementedError

    @property
    def threshold(self) -> float:
        return 0.5 if self.emits_probability else 0.0


def check_training_data(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    from ..errors import TrainingError

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError(f"X must be 2-D with one row per label, got {X.shape} / {y.shape}")
    if not np.all(np.isfinite(X)):
        raise TrainingError("training features must be finite")
    if not set(np.unique(y)) <= {0, 1}:
        raise TrainingError("labels must be 0 (CONTROL) or 1 (MCI)")
    if len(np.unique(y)) < 2:
        raise TrainingError("training set needs at least one sample of each class")
    return X, y
