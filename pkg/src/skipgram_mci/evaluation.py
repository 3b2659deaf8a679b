"""Cross-validation, leave-pair-out AUC, metrics, and validation-set grid search."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import baseline as bl
from .classifiers import ModelSpec, TrainedModel, Variant, predict_score, train
from .classifiers.spec import LogisticParams, NBParams, SVMParams, TreeParams
from .errors import ParticipantOverlapError
from .features import (
    LeakageMode,
    RankingMethod,
    Vocabulary,
    Weighting,
    gram_counts,
    rank_features,
    select_top,
    vectorize,
    vocabulary_from_counts,
)
from .skipgrams import COMPOUND, FeatureSetSpec
from .transcripts import Corpus, Label, TranscriptSample

log = logging.getLogger(__name__)


def _y(labels) -> np.ndarray:
    return np.array([lab.y if isinstance(lab, Label) else int(lab) for lab in labels], dtype=int)


# -- folds ------------------------------------------------------------------

@dataclass
class FoldAssignment:
    folds: np.ndarray
    k: int
    seed: int

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.folds == fold)
        train = np.flatnonzero(self.folds != fold)
        return train, test

    def __iter__(self):
        return (self.split(f) for f in range(self.k))


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Seeded shuffle within each class, then round-robin over folds.

    ``k`` is lowered to the minority-class size (with a warning) when a class
    has fewer than ``k`` samples.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    y = _y(labels)
    sizes = [int(np.sum(y == c)) for c in (1, 0)]
    minority = min(sizes)
    if minority < 2:
        raise ValueError("each class needs at least 2 samples for cross-validation")
    if minority < k:
        warnings.warn(f"reducing k from {k} to {minority} (smallest class size)", stacklevel=2)
        k = minority
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=int)
    for c in (1, 0):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        folds[idx] = np.arange(len(idx)) % k
    return FoldAssignment(folds, k, seed)


# -- metrics ----------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        t, p = _y(y_true), _y(y_pred)
        return cls(
            tp=int(np.sum((t == 1) & (p == 1))),
            fp=int(np.sum((t == 0) & (p == 1))),
            fn=int(np.sum((t == 1) & (p == 0))),
            tn=int(np.sum((t == 0) & (p == 0))),
        )


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class WeightedPRF:
    precision: float
    recall: float
    f1: float
    accuracy: float
    per_class: dict[str, ClassMetrics]


def weighted_prf(cm: ConfusionMatrix) -> WeightedPRF:
    """Per-class precision/recall/F1 (0/0 taken as 0), averaged by class support."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")

    def cls_metrics(tp, fp, fn):
        p, r = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
        return ClassMetrics(p, r, _ratio(2 * p * r, p + r), tp + fn)

    per = {"MCI": cls_metrics(cm.tp, cm.fp, cm.fn), "CONTROL": cls_metrics(cm.tn, cm.fn, cm.fp)}
    w = {name: m.support / cm.total for name, m in per.items()}
    return WeightedPRF(
        precision=sum(w[c] * per[c].precision for c in per),
        recall=sum(w[c] * per[c].recall for c in per),
        f1=sum(w[c] * per[c].f1 for c in per),
        accuracy=(cm.tp + cm.tn) / cm.total,
        per_class=per,
    )


def _check_both_classes(y: np.ndarray) -> tuple[int, int]:
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative sample")
    return n_pos, n_neg


def auc(scores, labels) -> float:
    """Area under the ROC curve by a trapezoidal threshold sweep.

    The sweep accumulates twice the area in integer units, so the result is
    exactly the Mann-Whitney statistic (ties count one half).
    """
    s = np.asarray(scores, dtype=float)
    y = _y(labels)
    n_pos, n_neg = _check_both_classes(y)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    area2 = 0
    tp = 0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:
            j += 1
        dp = int(y[i:j].sum())
        dn = (j - i) - dp
        area2 += dn * (2 * tp + dp)
        tp += dp
        i = j
    return area2 / (2 * n_pos * n_neg)


def mann_whitney_auc(scores, labels) -> float:
    """AUC by counting concordant positive/negative pairs (ties count one half)."""
    s = np.asarray(scores, dtype=float)
    y = _y(labels)
    n_pos, n_neg = _check_both_classes(y)
    pos, neg = s[y == 1], s[y == 0]
    wins2 = int(2 * np.sum(pos[:, None] > neg[None, :]) + np.sum(pos[:, None] == neg[None, :]))
    return wins2 / (2 * n_pos * n_neg)


@dataclass
class RocCurve:
    points: list[tuple[float, float]]

    @property
    def fpr(self) -> list[float]:
        return [p[0] for p in self.points]

    @property
    def tpr(self) -> list[float]:
        return [p[1] for p in self.points]


def roc_curve(scores, labels) -> RocCurve:
    s = np.asarray(scores, dtype=float)
    y = _y(labels)
    n_pos, n_neg = _check_both_classes(y)
    points = [(0.0, 0.0)]
    tp = fp = 0
    for thr in np.unique(s)[::-1]:
        at = s == thr
        tp += int(np.sum(y[at] == 1))
        fp += int(np.sum(y[at] == 0))
        points.append((fp / n_neg, tp / n_pos))
    return RocCurve(points)


@dataclass
class MetricsReport:
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    auc: float
    accuracy: float
    per_class: dict[str, ClassMetrics]
    pooled: bool = True
    auc_fold_mean: float | None = None
    confusion: ConfusionMatrix | None = None

    @classmethod
    def from_scores(cls, scores, labels, threshold: float, **extra) -> "MetricsReport":
        y = _y(labels)
        pred = (np.asarray(scores) >= threshold).astype(int)
        cm = ConfusionMatrix.from_predictions(y, pred)
        prf = weighted_prf(cm)
        return cls(prf.precision, prf.recall, prf.f1, auc(scores, y), prf.accuracy,
                   prf.per_class, confusion=cm, **extra)


# -- pipeline ---------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    """How samples become a feature matrix before a model is trained.

    ``features="baseline"`` uses the seven linguistic/timing features instead
    of skip-grams; the ranking/selection fields are then ignored.
    """

    feature_set: FeatureSetSpec = COMPOUND
    k_top: int = 200
    ranking: RankingMethod = RankingMethod.INFO_GAIN
    leakage: LeakageMode = LeakageMode.GLOBAL
    weighting: Weighting = Weighting.COUNT
    features: str = "skipgram"

    def __post_init__(self):
        object.__setattr__(self, "ranking", RankingMethod(self.ranking))
        object.__setattr__(self, "leakage", LeakageMode(self.leakage))
        object.__setattr__(self, "weighting", Weighting(self.weighting))
        if self.features not in ("skipgram", "baseline"):
            raise ValueError(f"features must be 'skipgram' or 'baseline', got {self.features!r}")
        if self.k_top < 1:
            raise ValueError("k_top must be >= 1")


def _samples(corpus) -> list[TranscriptSample]:
    return list(corpus.samples) if isinstance(corpus, Corpus) else list(corpus)


def select_features(samples, counts, config: PipelineConfig) -> Vocabulary:
    vocab = vocabulary_from_counts(counts, [s.label for s in samples], config.feature_set)
    return select_top(rank_features(vocab, config.ranking), config.k_top)


@dataclass
class FittedPipeline:
    model: TrainedModel
    vocab: Vocabulary | None = None
    pos_model: bl.PosBigramModel | None = None
    impute_means: np.ndarray | None = None


def fit_and_score(
    train_samples: Sequence[TranscriptSample],
    test_samples: Sequence[TranscriptSample],
    spec: ModelSpec,
    config: PipelineConfig = PipelineConfig(),
    *,
    train_counts=None,
    test_counts=None,
    vocab: Vocabulary | None = None,
) -> tuple[np.ndarray, FittedPipeline]:
    """Train on one partition and score the other.

    ``vocab`` short-circuits feature selection (used for globally selected
    features); otherwise features are ranked on the training partition only.
    """
    y_train = _y([s.label for s in train_samples])
    if config.features == "baseline":
        pos_model = bl.reference_model(train_samples)
        tr = bl.baseline_matrix(train_samples, pos_model)
        te = bl.baseline_matrix(test_samples, pos_model)
        tr, te = bl.impute_train_means(tr, te)
        model = train(spec, tr, y_train)
        means = tr.mean(axis=0)
        return predict_score(model, te), FittedPipeline(model, pos_model=pos_model, impute_means=means)

    if train_counts is None:
        train_counts = gram_counts(train_samples, config.feature_set)
    if test_counts is None:
        test_counts = gram_counts(test_samples, config.feature_set)
    if vocab is None:
        vocab = select_features(train_samples, train_counts, config)
    X_train = np.vstack([vectorize(c, vocab, config.weighting).to_dense() for c in train_counts])
    X_test = np.vstack([vectorize(c, vocab, config.weighting).to_dense() for c in test_counts]) \
        if test_counts else np.zeros((0, len(vocab)))
    model = train(spec, X_train, y_train)
    scores = predict_score(model, X_test) if len(X_test) else np.zeros(0)
    return np.atleast_1d(scores), FittedPipeline(model, vocab=vocab)


@dataclass
class CVResult:
    scores: np.ndarray
    labels: np.ndarray
    predictions: np.ndarray
    folds: FoldAssignment
    report: MetricsReport
    per_fold_auc: list[float]
    threshold: float
    vocab_sizes: list[int] = field(default_factory=list)


def cross_validate(
    corpus,
    spec: ModelSpec,
    folds: FoldAssignment,
    config: PipelineConfig = PipelineConfig(),
    *,
    counts=None,
) -> CVResult:
    """Pooled k-fold evaluation of one model under one feature pipeline.

    In GLOBAL leakage mode the top-K features are chosen once on the whole
    corpus; in PER_FOLD mode each fold ranks features on its training part.
    """
    samples = _samples(corpus)
    y = _y([s.label for s in samples])
    if len(folds.folds) != len(samples):
        raise ValueError("fold assignment does not match corpus size")
    if config.features == "skipgram" and counts is None:
        counts = gram_counts(samples, config.feature_set)
    global_vocab = None
    if config.features == "skipgram" and config.leakage is LeakageMode.GLOBAL:
        global_vocab = select_features(samples, counts, config)

    scores = np.zeros(len(samples))
    threshold = None
    per_fold, vocab_sizes = [], []
    for train_idx, test_idx in folds:
        if len(test_idx) == 0:
            continue
        kw = {}
        if config.features == "skipgram":
            kw = dict(train_counts=[counts[i] for i in train_idx],
                      test_counts=[counts[i] for i in test_idx], vocab=global_vocab)
        fold_scores, fitted = fit_and_score(
            [samples[i] for i in train_idx], [samples[i] for i in test_idx], spec, config, **kw
        )
        scores[test_idx] = fold_scores
        threshold = fitted.model.threshold
        if fitted.vocab is not None:
            vocab_sizes.append(len(fitted.vocab))
        if len(set(y[test_idx])) == 2:
            per_fold.append(auc(fold_scores, y[test_idx]))
    report = MetricsReport.from_scores(
        scores, y, threshold, auc_fold_mean=float(np.mean(per_fold)) if per_fold else None
    )
    return CVResult(scores, y, (scores >= threshold).astype(int), folds, report, per_fold,
                    threshold, vocab_sizes)


def permuted_labels(samples: Sequence[TranscriptSample], seed: int) -> list[TranscriptSample]:
    """Copies of ``samples`` with labels shuffled by a seeded permutation."""
    labels = [s.label for s in samples]
    perm = np.random.default_rng(seed).permutation(len(labels))
    return [replace(s, label=labels[p]) for s, p in zip(samples, perm)]


def permutation_aucs(corpus, spec: ModelSpec, config: PipelineConfig = PipelineConfig(), *,
                     n_permutations: int = 20, k: int = 10, seed: int = 0, counts=None) -> list[float]:
    """Pooled-CV AUC under ``n_permutations`` seeded label shuffles."""
    samples = _samples(corpus)
    if config.features == "skipgram" and counts is None:
        counts = gram_counts(samples, config.feature_set)
    out = []
    for r in range(n_permutations):
        shuffled = permuted_labels(samples, seed + r)
        folds = stratified_kfold([s.label for s in shuffled], k, seed + r)
        out.append(cross_validate(shuffled, spec, folds, config, counts=counts).report.auc)
    return out


class PairScore(NamedTuple):
    positive: int
    negative: int
    positive_score: float
    negative_score: float


def leave_pair_out(corpus, spec: ModelSpec, config: PipelineConfig = PipelineConfig(), *,
                   counts=None) -> list[PairScore]:
    """Hold out each (MCI, CONTROL) pair, train on the rest, score both."""
    samples = _samples(corpus)
    y = _y([s.label for s in samples])
    if config.features == "skipgram" and counts is None:
        counts = gram_counts(samples, config.feature_set)
    global_vocab = None
    if config.features == "skipgram" and config.leakage is LeakageMode.GLOBAL:
        global_vocab = select_features(samples, counts, config)
    out = []
    for i in np.flatnonzero(y == 1):
        for j in np.flatnonzero(y == 0):
            rest = [t for t in range(len(samples)) if t not in (i, j)]
            kw = {}
            if config.features == "skipgram":
                kw = dict(train_counts=[counts[t] for t in rest],
                          test_counts=[counts[i], counts[j]], vocab=global_vocab)
            s, _ = fit_and_score([samples[t] for t in rest], [samples[i], samples[j]], spec, config, **kw)
            out.append(PairScore(int(i), int(j), float(s[0]), float(s[1])))
    return out


def leave_pair_out_auc(corpus, spec: ModelSpec, config: PipelineConfig = PipelineConfig(), *,
                       counts=None) -> float:
    """Share of held-out pairs ranked correctly; a tied pair counts one half."""
    pairs = leave_pair_out(corpus, spec, config, counts=counts)
    if not pairs:
        raise ValueError("leave-pair-out needs at least one sample of each class")
    wins = sum(1.0 if p.positive_score > p.negative_score else 0.5 if p.positive_score == p.negative_score else 0.0
               for p in pairs)
    return wins / len(pairs)


# -- grid search ------------------------------------------------------------

def check_disjoint(train_corpus, validation_corpus, *, allow_shared_participants: bool = False) -> None:
    """Refuse corpora that share participants.

    With ``allow_shared_participants`` the same participant may appear in both,
    but never with the same visit.
    """
    tr, va = _samples(train_corpus), _samples(validation_corpus)
    if allow_shared_participants:
        shared = {(s.participant_id, s.visit_index) for s in tr} & {(s.participant_id, s.visit_index) for s in va}
        shared = {f"{p}@visit{v}" for p, v in shared}
    else:
        shared = {s.participant_id for s in tr} & {s.participant_id for s in va}
    if shared:
        raise ParticipantOverlapError(shared)


class GridResult(NamedTuple):
    best: ModelSpec
    results: list[tuple[ModelSpec, float]]


def grid_search(
    train_corpus,
    validation_corpus,
    grid: Sequence[ModelSpec],
    objective: str = "AUC",
    config: PipelineConfig = PipelineConfig(k_top=1000),
    *,
    allow_shared_participants: bool = False,
) -> GridResult:
    """Train each spec on ``train_corpus``, score on ``validation_corpus``, keep the best.

    Ties go to the earliest spec in ``grid``.
    """
    if not grid:
        raise ValueError("empty grid")
    objective = objective.upper()
    if objective not in ("AUC", "F1"):
        raise ValueError(f"objective must be AUC or F1, got {objective}")
    check_disjoint(train_corpus, validation_corpus, allow_shared_participants=allow_shared_participants)
    tr, va = _samples(train_corpus), _samples(validation_corpus)
    y_val = _y([s.label for s in va])
    kw = {}
    if config.features == "skipgram":
        tr_counts = gram_counts(tr, config.feature_set)
        kw = dict(train_counts=tr_counts, test_counts=gram_counts(va, config.feature_set),
                  vocab=select_features(tr, tr_counts, config))
    results = []
    for spec in grid:
        scores, fitted = fit_and_score(tr, va, spec, config, **kw)
        if objective == "AUC":
            value = auc(scores, y_val)
        else:
            value = MetricsReport.from_scores(scores, y_val, fitted.model.threshold).weighted_f1
        results.append((spec, value))
    best = max(range(len(results)), key=lambda i: (results[i][1], -i))
    return GridResult(results[best][0], results)


def default_grid() -> dict[str, list[ModelSpec]]:
    """Per-family grids bracketing the reported hyperparameters."""
    svm = [
        ModelSpec(Variant.SVM_SMO, SVMParams(C=c, gamma=g), name="SVM")
        for c in (0.25, 0.9375, 4.0) for g in (1e-5, 1.0124e-4, 1e-3)
    ]
    logistic = [
        ModelSpec(Variant.LOGISTIC_RIDGE, LogisticParams(ridge=r), name="Logistic")
        for r in (1e-12, 1e-8, 1e-4, 1.0)
    ]
    nb = [ModelSpec(Variant.NAIVE_BAYES_KDE, NBParams(kernel_density=kd), name="NB") for kd in (True, False)]
    tree = [
        ModelSpec(Variant.DECISION_TREE, TreeParams(confidence=cf, min_leaf=m), name="DT")
        for cf in (0.1, 0.25, 0.5) for m in (2, 4)
    ]
    return {"SVM": svm, "NB": nb, "DT": tree, "Logistic": logistic}
