"""Exact-k skip-n-gram enumeration.

A k-skip-n-gram is read off a window of exactly ``n + k`` consecutive words:
the window's first and last words are always kept and exactly ``k`` of the
interior words are skipped.  For ``k == 0`` this is the ordinary n-gram.

>>> [g.surface for g in extract_skipgrams("take the cookie jar from the cabinet".split(), SkipGramSpec(2, 1))]
['take cookie', 'the jar', 'cookie from', 'jar the', 'from cabinet']
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence


@dataclass(frozen=True, order=True)
class SkipGramSpec:
    n: int
    k: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.n == 1 and self.k != 0:
            raise ValueError("unigrams cannot skip words (skips are interior)")

    @property
    def width(self) -> int:
        return self.n + self.k

    @property
    def namespace(self) -> str:
        return f"{self.n}.{self.k}"

    @property
    def label(self) -> str:
        return f"{self.k}-skip-{self.n}-grams"

    @classmethod
    def parse(cls, text: str) -> "SkipGramSpec":
        """Accepts ``"2.1"``, ``"2,1"`` or ``"1-skip-2-grams"``."""
        text = text.strip()
        m = re.fullmatch(r"(\d+)-skip-(\d+)-grams?", text)
        if m:
            return cls(int(m.group(2)), int(m.group(1)))
        m = re.fullmatch(r"(\d+)\s*[.,:]\s*(\d+)", text)
        if not m:
            raise ValueError(f"cannot parse skip-gram spec {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class SkipGramToken:
    words: tuple[str, ...]

    @property
    def surface(self) -> str:
        return " ".join(self.words)

    @classmethod
    def from_surface(cls, surface: str) -> "SkipGramToken":
        return cls(tuple(surface.split(" ")))


@dataclass(frozen=True)
class FeatureSetSpec:
    specs: tuple[SkipGramSpec, ...]
    name: str = ""

    def __post_init__(self):
        specs = tuple(self.specs)
        if not specs:
            raise ValueError("a feature set needs at least one skip-gram spec")
        if len(set(specs)) != len(specs):
            raise ValueError(f"duplicate specs in feature set: {specs}")
        object.__setattr__(self, "specs", specs)
        if not self.name:
            object.__setattr__(self, "name", "+".join(s.namespace for s in specs))

    @classmethod
    def single(cls, spec: SkipGramSpec) -> "FeatureSetSpec":
        return cls((spec,), spec.label)


ONE_SKIP_BIGRAMS = SkipGramSpec(2, 1)
ONE_SKIP_TRIGRAMS = SkipGramSpec(3, 1)
TWO_SKIP_BIGRAMS = SkipGramSpec(2, 2)
TWO_SKIP_TRIGRAMS = SkipGramSpec(3, 2)

COMPOUND = FeatureSetSpec(
    (ONE_SKIP_BIGRAMS, ONE_SKIP_TRIGRAMS, TWO_SKIP_BIGRAMS, TWO_SKIP_TRIGRAMS),
    "all-skip-grams",
)

FEATURE_SETS: dict[str, FeatureSetSpec] = {
    fs.name: fs
    for fs in (
        FeatureSetSpec.single(ONE_SKIP_BIGRAMS),
        FeatureSetSpec.single(ONE_SKIP_TRIGRAMS),
        FeatureSetSpec.single(TWO_SKIP_BIGRAMS),
        FeatureSetSpec.single(TWO_SKIP_TRIGRAMS),
        COMPOUND,
        FeatureSetSpec((SkipGramSpec(2, 0), SkipGramSpec(3, 0)), "ngrams"),
    )
}


def feature_set(value: str | Sequence) -> FeatureSetSpec:
    """Resolve a preset name or an explicit list of ``(n, k)`` pairs / ``"n.k"`` strings."""
    if isinstance(value, FeatureSetSpec):
        return value
    if isinstance(value, str):
        if value in FEATURE_SETS:
            return FEATURE_SETS[value]
        return FeatureSetSpec(tuple(SkipGramSpec.parse(p) for p in value.split("+")))
    specs = []
    for item in value:
        if isinstance(item, str):
            specs.append(SkipGramSpec.parse(item))
        else:
            n, k = item
            specs.append(SkipGramSpec(int(n), int(k)))
    return FeatureSetSpec(tuple(specs))


def _interior_choices(spec: SkipGramSpec) -> list[tuple[int, ...]]:
    """Window-relative positions kept for each gram, in lexicographic order."""
    if spec.n == 1:
        return [(0,)]
    last = spec.width - 1
    return [(0, *mid, last) for mid in combinations(range(1, last), spec.n - 2)]


def extract_skipgrams(tokens: Sequence[str], spec: SkipGramSpec) -> list[SkipGramToken]:
    """All exact-k skip-n-grams of one sentence, as an ordered multiset.

    Order is by window start, then by the lexicographic order of the kept
    interior positions.
    """
    choices = _interior_choices(spec)
    out = []
    for start in range(len(tokens) - spec.width + 1):
        for pos in choices:
            out.append(SkipGramToken(tuple(tokens[start + p] for p in pos)))
    return out


def expected_gram_count(m: int, spec: SkipGramSpec) -> int:
    """Closed-form size of :func:`extract_skipgrams` on an ``m``-word sentence."""
    windows = max(0, m - spec.width + 1)
    if spec.n == 1:
        return windows
    return windows * math.comb(spec.n + spec.k - 2, spec.k)


def gram_key(spec: SkipGramSpec, gram: SkipGramToken | str) -> str:
    surface = gram if isinstance(gram, str) else gram.surface
    return f"{spec.namespace}|{surface}"


def split_key(key: str) -> tuple[SkipGramSpec, str]:
    ns, _, surface = key.partition("|")
    return SkipGramSpec.parse(ns), surface


def extract_compound(utterances: Iterable[Sequence[str]], fss: FeatureSetSpec) -> Counter[str]:
    """Namespaced multiset of skip-grams over all utterances and all specs.

    Grams never span two utterances.
    """
    counts: Counter[str] = Counter()
    plans = [(spec, spec.namespace + "|", _interior_choices(spec)) for spec in fss.specs]
    for tokens in utterances:
        for spec, prefix, choices in plans:
            for start in range(len(tokens) - spec.width + 1):
                for pos in choices:
                    counts[prefix + " ".join(tokens[start + p] for p in pos)] += 1
    return counts
