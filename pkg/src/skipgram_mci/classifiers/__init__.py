"""From-scratch binary classifiers: SMO-trained SVM, naive Bayes, ridge logistic, C4.5 tree.

Scores follow one convention everywhere: larger means "more MCI".
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import TrainingError
from ..features import Dataset, SparseVector
from ..transcripts import Label
from .logistic import LogisticModel, train_logistic
from .naive_bayes import NaiveBayesModel, train_naive_bayes
from .spec import (
    Kernel,
    LogisticParams,
    ModelSpec,
    NBParams,
    SVMParams,
    TrainedModel,
    TreeParams,
    Variant,
    baseline_svm,
    table1_models,
)
from .svm import SVMModel, train_svm
from .tree import TreeModel, train_tree

_TRAINERS = {
    Variant.SVM_SMO: train_svm,
    Variant.NAIVE_BAYES_KDE: train_naive_bayes,
    Variant.LOGISTIC_RIDGE: train_logistic,
    Variant.DECISION_TREE: train_tree,
}
_MODEL_TYPES = {
    Variant.SVM_SMO: SVMModel,
    Variant.NAIVE_BAYES_KDE: NaiveBayesModel,
    Variant.LOGISTIC_RIDGE: LogisticModel,
    Variant.DECISION_TREE: TreeModel,
}


def train(spec: ModelSpec, data: Dataset | np.ndarray, y=None) -> TrainedModel:
    """Fit ``spec`` on a :class:`Dataset` or on a dense ``(X, y)`` pair with y in {0, 1}."""
    if isinstance(data, Dataset):
        X, y = data.X, data.y
    else:
        if y is None:
            raise TrainingError("labels are required with a dense feature matrix")
        X = np.asarray(data, dtype=float)
        y = np.asarray([v.y if isinstance(v, Label) else v for v in y], dtype=int)
    return _TRAINERS[spec.variant](spec, X, y)


def _as_matrix(model: TrainedModel, x) -> tuple[np.ndarray, bool]:
    if isinstance(x, SparseVector):
        x = x.to_dense()
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.dim:
        raise ValueError(f"feature dimension {arr.shape[1]} does not match model dimension {model.dim}")
    return arr, single


def predict_score(model: TrainedModel, x):
    """Positive-class score: a probability, or an SVM decision value without calibration."""
    arr, single = _as_matrix(model, x)
    s = model.scores(arr)
    return float(s[0]) if single else s


def predict_label(model: TrainedModel, x, threshold: float | None = None):
    """MCI when the score reaches ``threshold`` (0.5 for probabilities, 0 for decision values)."""
    threshold = model.threshold if threshold is None else threshold
    s = predict_score(model, x)
    if np.ndim(s) == 0:
        return Label.MCI if s >= threshold else Label.CONTROL
    return [Label.MCI if v >= threshold else Label.CONTROL for v in s]


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "variant": model.variant.value,
        "spec": model.spec.to_dict(),
        "dim": model.dim,
        "state": model.state(),
    }


def model_from_dict(data: dict) -> TrainedModel:
    variant = Variant(data["variant"])
    spec = ModelSpec.from_dict(data["spec"])
    return _MODEL_TYPES[variant].from_state(spec, int(data["dim"]), data["state"])


def save_model(model: TrainedModel, path: str | Path) -> None:
    """JSON text; float values are written with round-trip precision."""
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


__all__ = [
    "Kernel", "LogisticParams", "ModelSpec", "NBParams", "SVMParams", "TrainedModel",
    "TreeParams", "Variant", "baseline_svm", "table1_models", "train", "predict_score",
    "predict_label", "save_model", "load_model", "model_to_dict", "model_from_dict",
]
