"""Vocabulary construction, feature ranking, top-K selection and vectorization."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .skipgrams import FeatureSetSpec, extract_compound
from .transcripts import Corpus, Label, TranscriptSample


class RankingMethod(str, enum.Enum):
    DOC_FREQ = "DOC_FREQ"
    TOTAL_FREQ = "TOTAL_FREQ"
    INFO_GAIN = "INFO_GAIN"
    CHI2 = "CHI2"

    @property
    def supervised(self) -> bool:
        return self in (RankingMethod.INFO_GAIN, RankingMethod.CHI2)


class LeakageMode(str, enum.Enum):
    GLOBAL = "GLOBAL"
    PER_FOLD = "PER_FOLD"


class Weighting(str, enum.Enum):
    BINARY = "BINARY"
    COUNT = "COUNT"
    L2_NORMALIZED_COUNT = "L2_NORMALIZED_COUNT"


@dataclass
class Vocabulary:
    """Feature keys with corpus statistics.

    Row ``i`` of every array describes ``keys[i]``.  ``class_doc_freq`` holds
    per-class document frequencies as ``[MCI, CONTROL]`` columns, or is None
    when the corpus was unlabeled.
    """

    keys: list[str]
    doc_freq: np.ndarray
    total_freq: np.ndarray
    n_docs: int
    class_doc_freq: np.ndarray | None = None
    class_sizes: tuple[int, int] | None = None
    scores: np.ndarray | None = None
    ranking_method: RankingMethod | None = None
    feature_set: FeatureSetSpec | None = None
    _index: dict[str, int] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.scores is None:
            self.scores = np.zeros(len(self.keys))

    def __len__(self):
        return len(self.keys)

    @property
    def index(self) -> dict[str, int]:
        if self._index is None:
            self._index = {k: i for i, k in enumerate(self.keys)}
        return self._index

    def take(self, rows: Sequence[int]) -> "Vocabulary":
        rows = np.asarray(rows, dtype=int)
        return replace(
            self,
            keys=[self.keys[i] for i in rows],
            doc_freq=self.doc_freq[rows],
            total_freq=self.total_freq[rows],
            class_doc_freq=None if self.class_doc_freq is None else self.class_doc_freq[rows],
            scores=self.scores[rows],
            _index=None,
        )


def gram_counts(samples: Iterable[TranscriptSample], fss: FeatureSetSpec) -> list[Counter[str]]:
    return [extract_compound(s.tokens, fss) for s in samples]


def vocabulary_from_counts(
    counts: Sequence[Counter[str]],
    labels: Sequence[Label | None] | None = None,
    fss: FeatureSetSpec | None = None,
) -> Vocabulary:
    if not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    doc: Counter[str] = Counter()
    total: Counter[str] = Counter()
    doc_mci: Counter[str] = Counter()
    labeled = labels is not None and all(lab is not None for lab in labels)
    for i, c in enumerate(counts):
        doc.update(c.keys())
        total.update(c)
        if labeled and labels[i] is Label.MCI:
            doc_mci.update(c.keys())
    keys = sorted(doc)
    df = np.array([doc[k] for k in keys], dtype=np.int64)
    class_df = class_sizes = None
    if labeled:
        mci = np.array([doc_mci[k] for k in keys], dtype=np.int64)
        class_df = np.column_stack([mci, df - mci]) if keys else np.zeros((0, 2), dtype=np.int64)
        n_mci = sum(1 for lab in labels if lab is Label.MCI)
        class_sizes = (n_mci, len(counts) - n_mci)
    return Vocabulary(
        keys=keys,
        doc_freq=df,
        total_freq=np.array([total[k] for k in keys], dtype=np.int64),
        n_docs=len(counts),
        class_doc_freq=class_df,
        class_sizes=class_sizes,
        feature_set=fss,
    )


def build_vocabulary(corpus: Corpus | Sequence[TranscriptSample], fss: FeatureSetSpec) -> Vocabulary:
    samples = corpus.samples if isinstance(corpus, Corpus) else list(corpus)
    if not samples:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    return vocabulary_from_counts(gram_counts(samples, fss), [s.label for s in samples], fss)


def _xlogx_ratio(joint: np.ndarray, px: np.ndarray, py: float) -> np.ndarray:
    out = np.zeros_like(joint, dtype=float)
    nz = joint > 0
    out[nz] = joint[nz] * np.log2(joint[nz] / (px[nz] * py))
    return out


def information_gain(class_df: np.ndarray, class_sizes: tuple[int, int]) -> np.ndarray:
    """Mutual information (bits) between binary feature presence and the label."""
    n_mci, n_ctl = class_sizes
    n = n_mci + n_ctl
    a = class_df[:, 0].astype(float)  # present, MCI
    b = class_df[:, 1].astype(float)  # present, CONTROL
    c = n_mci - a
    d = n_ctl - b
    p_present = (a + b) / n
    p_absent = (c + d) / n
    mi = (
        _xlogx_ratio(a / n, p_present, n_mci / n)
        + _xlogx_ratio(b / n, p_present, n_ctl / n)
        + _xlogx_ratio(c / n, p_absent, n_mci / n)
        + _xlogx_ratio(d / n, p_absent, n_ctl / n)
    )
    return np.maximum(mi, 0.0)


def chi_squared(class_df: np.ndarray, class_sizes: tuple[int, int]) -> np.ndarray:
    """Pearson chi-squared of the 2x2 presence/label table (0 when a margin is empty)."""
    n_mci, n_ctl = class_sizes
    n = n_mci + n_ctl
    a = class_df[:, 0].astype(float)
    b = class_df[:, 1].astype(float)
    c = n_mci - a
    d = n_ctl - b
    denom = (a + b) * (c + d) * (a + c) * (b + d)
    num = n * (a * d - b * c) ** 2
    out = np.zeros_like(num)
    ok = denom > 0
    out[ok] = num[ok] / denom[ok]
    return out


def rank_features(vocab: Vocabulary, method: RankingMethod | str = RankingMethod.INFO_GAIN) -> Vocabulary:
    """Return the vocabulary reordered best-first, with scores filled in.

    Ties are broken by document frequency (descending), then key.
    """
    method = RankingMethod(method)
    if method.supervised:
        if vocab.class_doc_freq is None or vocab.class_sizes is None:
            raise ValueError(f"{method.value} ranking needs labeled samples")
        fn = information_gain if method is RankingMethod.INFO_GAIN else chi_squared
        scores = fn(vocab.class_doc_freq, vocab.class_sizes)
    elif method is RankingMethod.DOC_FREQ:
        scores = vocab.doc_freq.astype(float)
    else:
        scores = vocab.total_freq.astype(float)
    order = sorted(
        range(len(vocab)),
        key=lambda i: (-scores[i], -vocab.doc_freq[i], vocab.keys[i]),
    )
    ranked = vocab.take(order)
    ranked.scores = scores[np.asarray(order, dtype=int)]
    ranked.ranking_method = method
    return ranked


def select_top(ranked: Vocabulary, k: int) -> Vocabulary:
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    return ranked.take(range(min(k, len(ranked))))


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-D and the same length")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError("index out of range")
            if not np.all(np.isfinite(val)) or np.any(val == 0):
                raise ValueError("values must be finite and nonzero")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def __len__(self):
        return len(self.indices)


def vectorize(
    sample: TranscriptSample | Counter[str],
    vocab: Vocabulary,
    weighting: Weighting | str = Weighting.COUNT,
) -> SparseVector:
    """Project one sample's grams onto ``vocab``; unknown grams are ignored."""
    weighting = Weighting(weighting)
    if isinstance(sample, TranscriptSample):
        if vocab.feature_set is None:
            raise ValueError("vocabulary has no feature set; pass gram counts instead")
        counts = extract_compound(sample.tokens, vocab.feature_set)
    else:
        counts = sample
    index = vocab.index
    pairs = sorted((index[k], float(c)) for k, c in counts.items() if k in index and c)
    idx = [i for i, _ in pairs]
    val = np.array([v for _, v in pairs], dtype=float)
    if weighting is Weighting.BINARY:
        val = np.ones_like(val)
    elif weighting is Weighting.L2_NORMALIZED_COUNT and val.size:
        val = val / math.sqrt(float(np.dot(val, val)))
    return SparseVector(np.array(idx, dtype=np.int64), val, len(vocab))


@dataclass
class Dataset:
    vectors: list[SparseVector]
    labels: list[Label]
    participant_ids: list[str]
    dimension: int
    feature_names: list[str]

    def __post_init__(self):
        if not (len(self.vectors) == len(self.labels) == len(self.participant_ids)):
            raise ValueError("vectors, labels and participant_ids must be parallel")
        if any(v.dim != self.dimension for v in self.vectors):
            raise ValueError("all vectors must share the dataset dimension")
        if len(self.feature_names) != self.dimension:
            raise ValueError("feature_names must have one entry per dimension")

    def __len__(self):
        return len(self.vectors)

    @property
    def X(self) -> np.ndarray:
        out = np.zeros((len(self.vectors), self.dimension))
        for row, v in enumerate(self.vectors):
            out[row, v.indices] = v.values
        return out

    @property
    def y(self) -> np.ndarray:
        return np.array([lab.y for lab in self.labels], dtype=int)

    def subset(self, rows: Sequence[int]) -> "Dataset":
        return Dataset(
            vectors=[self.vectors[i] for i in rows],
            labels=[self.labels[i] for i in rows],
            participant_ids=[self.participant_ids[i] for i in rows],
            dimension=self.dimension,
            feature_names=self.feature_names,
        )


def make_dataset(
    samples: Sequence[TranscriptSample],
    vocab: Vocabulary,
    weighting: Weighting | str = Weighting.COUNT,
    counts: Sequence[Counter[str]] | None = None,
) -> Dataset:
    if counts is None:
        if vocab.feature_set is None:
            raise ValueError("vocabulary has no feature set; pass gram counts")
        counts = gram_counts(samples, vocab.feature_set)
    return Dataset(
        vectors=[vectorize(c, vocab, weighting) for c in counts],
        labels=[s.label for s in samples],
        participant_ids=[s.participant_id for s in samples],
        dimension=len(vocab),
        feature_names=list(vocab.keys),
    )


def write_dataset(dataset: Dataset, path: str | Path, names_path: str | Path | None = None) -> None:
    """Sparse text format: ``dim=<V>`` then ``<label> <participant_id> <i>:<v> ...`` per row.

    The feature-name sidecar (``<index>\\t<key>`` per line) goes to
    ``names_path``, defaulting to ``<path>.names``.
    """
    path = Path(path)
    lines = [f"dim={dataset.dimension}"]
    for vec, lab, pid in zip(dataset.vectors, dataset.labels, dataset.participant_ids):
        if not pid or any(ch.isspace() for ch in pid):
            raise ValueError(f"participant id {pid!r} cannot be written (whitespace)")
        cells = " ".join(f"{i}:{v!r}" for i, v in zip(vec.indices.tolist(), vec.values.tolist()))
        lines.append(f"{lab.value} {pid} {cells}".rstrip())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    names_path = Path(names_path) if names_path else path.with_name(path.name + ".names")
    names_path.write_text(
        "".join(f"{i}\t{k}\n" for i, k in enumerate(dataset.feature_names)), encoding="utf-8"
    )


def read_dataset(path: str | Path, names_path: str | Path | None = None) -> Dataset:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("dim="):
        raise ValueError(f"{path}: missing 'dim=' header")
    dim = int(lines[0][4:])
    vectors, labels, pids = [], [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split()
        labels.append(Label.parse(parts[0]))
        pids.append(parts[1])
        idx, val = [], []
        for cell in parts[2:]:
            i, v = cell.split(":", 1)
            idx.append(int(i))
            val.append(float(v))
        vectors.append(SparseVector(np.array(idx, dtype=np.int64), np.array(val), dim))
    names_path = Path(names_path) if names_path else path.with_name(path.name + ".names")
    names = [""] * dim
    if names_path.exists():
        for line in names_path.read_text(encoding="utf-8").splitlines():
            i, key = line.split("\t", 1)
            names[int(i)] = key
    return Dataset(vectors, labels, pids, dim, names)
