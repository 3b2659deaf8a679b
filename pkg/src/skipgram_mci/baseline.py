"""The seven-feature linguistic/timing baseline.

Text features come from coarse part-of-speech tags (taken from a %mor tier
when the transcript has one, else from a small shipped lexicon); timing
features come from transcript pause codes and timing bullets.  Any feature
that cannot be computed is None ("missing").
"""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .transcripts import COARSE_TAGS, Label, TimingStats, TranscriptSample

OPEN_CLASS = frozenset({"NOUN", "VERB", "ADJ", "ADV"})
START = "<s>"


@lru_cache(maxsize=None)
def load_lexicon(path: str | None = None) -> dict[str, str]:
    """``word<TAB>TAG`` lines; blank lines and ``#`` comments are ignored."""
    if path is None:
        text = resources.files("skipgram_mci").joinpath("data/lexicon.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    lex = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        word, tag = line.split("\t")
        if tag not in COARSE_TAGS:
            raise ValueError(f"lexicon tag {tag!r} not in the coarse tagset")
        lex[word] = tag
    return lex


def lexicon_tag(tokens: Sequence[str], lexicon: dict[str, str] | None = None) -> list[str]:
    lexicon = load_lexicon() if lexicon is None else lexicon
    return [lexicon.get(t, "NUM" if t.isdigit() else "NOUN") for t in tokens]


def pos_tag(sample: TranscriptSample) -> list[list[str]]:
    """Per-utterance coarse tags: %mor-derived where available, lexicon otherwise."""
    out = []
    for i, toks in enumerate(sample.tokens):
        tags = sample.pos_tags[i] if sample.pos_tags is not None else None
        out.append(list(tags) if tags is not None else lexicon_tag(toks))
    return out


def _flat(tags) -> list[str]:
    if tags and isinstance(tags[0], (list, tuple)):
        return [t for utt in tags for t in utt]
    return list(tags)


def content_density(tags) -> float | None:
    """Share of open-class (noun, verb, adjective, adverb) tags."""
    flat = _flat(tags)
    if not flat:
        return None
    return sum(1 for t in flat if t in OPEN_CLASS) / len(flat)


def clause_count(tags: Sequence[str]) -> int:
    """Verb groups in one utterance, at least 1.

    A verb group starts at each VERB not directly preceded by VERB or PART.
    """
    groups = sum(
        1 for i, t in enumerate(tags)
        if t == "VERB" and (i == 0 or tags[i - 1] not in ("VERB", "PART"))
    )
    return max(1, groups)


def words_per_clause(sample: TranscriptSample, tags: list[list[str]] | None = None) -> float | None:
    if sample.n_words == 0:
        return None
    tags = pos_tag(sample) if tags is None else tags
    clauses = sum(clause_count(t) for t in tags if t)
    return sample.n_words / clauses


@dataclass
class PosBigramModel:
    """First-order tag transition model.

    ``probs[r, c]`` is P(tagset[c] | previous), where row 0 is the start
    symbol and row ``r >= 1`` is ``tagset[r - 1]``.
    """

    tagset: tuple[str, ...]
    probs: np.ndarray
    source: str = ""

    def __post_init__(self):
        self.tagset = tuple(self.tagset)
        self.probs = np.asarray(self.probs, dtype=float)
        t = len(self.tagset)
        if self.probs.shape != (t + 1, t):
            raise ValueError(f"probs must have shape {(t + 1, t)}, got {self.probs.shape}")
        if np.any(self.probs < 0) or np.any(np.abs(self.probs.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("each transition row must be a probability distribution")
        self._col = {tag: i for i, tag in enumerate(self.tagset)}

    @classmethod
    def uniform(cls, tagset: Sequence[str] = COARSE_TAGS) -> "PosBigramModel":
        t = len(tagset)
        return cls(tuple(tagset), np.full((t + 1, t), 1.0 / t), "uniform")

    @classmethod
    def fit(
        cls,
        sequences: Iterable[Sequence[str]],
        tagset: Sequence[str] = COARSE_TAGS,
        source: str = "",
    ) -> "PosBigramModel":
        """Add-one smoothed transition estimates; each sequence starts at the start symbol."""
        tagset = tuple(tagset)
        col = {tag: i for i, tag in enumerate(tagset)}
        counts = np.ones((len(tagset) + 1, len(tagset)))
        for seq in sequences:
            prev = 0
            for tag in seq:
                c = col[tag]
                counts[prev, c] += 1
                prev = c + 1
        return cls(tagset, counts / counts.sum(axis=1, keepdims=True), source)

    def prob(self, prev: str | None, tag: str) -> float:
        row = 0 if prev is None or prev == START else self._col[prev] + 1
        return float(self.probs[row, self._col[tag]])


def pos_cross_entropy(tags, model: PosBigramModel) -> float | None:
    """Mean negative log2 transition probability per tag (bits/tag).

    ``tags`` is one sequence or a list of per-utterance sequences; each
    sequence restarts from the start symbol.
    """
    seqs = tags if tags and isinstance(tags[0], (list, tuple)) else [tags]
    total, n = 0.0, 0
    for seq in seqs:
        prev = None
        for tag in seq:
            p = model.prob(prev, tag)
            total += -math.log2(p) if p > 0 else math.inf
            n += 1
            prev = tag
    return total / n if n else None


def phonation_features(timing: TimingStats):
    """(standard pause rate, total phonation time, phonation rate, transformed rate).

    Standard pause rate is words per pause.  The transformed rate is
    arcsin(sqrt(phonation rate)).
    """
    timing.validate()
    spr = timing.word_count / timing.pause_count if timing.pause_count > 0 else None
    if timing.total_time_s is None:
        return spr, None, None, None
    tpt = timing.speech_time_s
    if timing.total_time_s == 0:
        return spr, tpt, None, None
    rate = timing.speech_time_s / timing.total_time_s
    return spr, tpt, rate, math.asin(math.sqrt(rate))


@dataclass
class BaselineVector:
    words_per_clause: float | None = None
    pos_cross_entropy: float | None = None
    content_density: float | None = None
    standard_pause_rate: float | None = None
    total_phonation_time: float | None = None
    phonation_rate: float | None = None
    transformed_phonation_rate: float | None = None

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_array(self) -> np.ndarray:
        return np.array([np.nan if v is None else v for v in astuple(self)], dtype=float)

    @property
    def n_missing(self) -> int:
        return sum(v is None for v in astuple(self))


def baseline_vector(sample: TranscriptSample, model: PosBigramModel | None = None) -> BaselineVector:
    if sample.n_words == 0:
        return BaselineVector()
    tags = pos_tag(sample)
    vec = BaselineVector(
        words_per_clause=words_per_clause(sample, tags),
        pos_cross_entropy=pos_cross_entropy(tags, model) if model is not None else None,
        content_density=content_density(tags),
    )
    if sample.timing is not None:
        (vec.standard_pause_rate, vec.total_phonation_time,
         vec.phonation_rate, vec.transformed_phonation_rate) = phonation_features(sample.timing)
    return vec


def reference_model(train: Sequence[TranscriptSample]) -> PosBigramModel:
    """Tag model fit on the control-group samples of a training partition."""
    seqs = [utt for s in train if s.label is Label.CONTROL for utt in pos_tag(s)]
    return PosBigramModel.fit(seqs, source="control-train")


def baseline_matrix(samples: Sequence[TranscriptSample], model: PosBigramModel | None) -> np.ndarray:
    """Rows of baseline features with NaN marking missing values."""
    rows = [baseline_vector(s, model).as_array() for s in samples]
    return np.vstack(rows) if rows else np.zeros((0, len(BaselineVector.names())))


def impute_train_means(train: np.ndarray, *others: np.ndarray):
    """Replace NaNs in every matrix with the column means of ``train`` alone.

    Columns with no observed training value are filled with 0.
    """
    train = np.asarray(train, dtype=float)
    observed = ~np.isnan(train)
    counts = observed.sum(axis=0)
    sums = np.where(observed, train, 0.0).sum(axis=0)
    means = np.divide(sums, counts, out=np.zeros(train.shape[1]), where=counts > 0)
    fill = lambda m: np.where(np.isnan(m), means, m)
    return (fill(train), *(fill(np.asarray(m, dtype=float)) for m in others))


def write_baseline_csv(samples: Sequence[TranscriptSample], vectors: Sequence[BaselineVector], path) -> None:
    names = BaselineVector.names()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant_id", "label", *names])
        for s, v in zip(samples, vectors):
            cells = ["" if x is None else repr(float(x)) for x in astuple(v)]
            w.writerow([s.participant_id, s.label.value if s.label else "", *cells])
