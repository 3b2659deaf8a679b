import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skipgram_mci.evaluation import PipelineConfig, fit_and_score
from skipgram_mci.classifiers import table1_models
from skipgram_mci.features import (
    RankingMethod,
    SparseVector,
    Weighting,
    build_vocabulary,
    chi_squared,
    information_gain,
    make_dataset,
    rank_features,
    read_dataset,
    select_top,
    vectorize,
    vocabulary_from_counts,
    write_dataset,
)
from skipgram_mci.skipgrams import FeatureSetSpec, SkipGramSpec
from skipgram_mci.transcripts import Label

from conftest import make_sample

BIGRAMS = FeatureSetSpec((SkipGramSpec(2, 0),))


class TestVocabulary:
    def test_shared_bigram(self):
        v = build_vocabulary([make_sample(["a b"]), make_sample(["a b"])], BIGRAMS)
        i = v.index["2.0|a b"]
        assert (v.doc_freq[i], v.total_freq[i]) == (2, 2)

    def test_repeated_bigram(self):
        v = build_vocabulary([make_sample(["a b a b"])], BIGRAMS)
        assert v.total_freq[v.index["2.0|a b"]] == 2
        assert v.total_freq[v.index["2.0|b a"]] == 1

    def test_disjoint_samples(self):
        v = build_vocabulary([make_sample(["a b c"]), make_sample(["x y"])], BIGRAMS)
        assert len(v) == 3

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            build_vocabulary([], BIGRAMS)


def _labeled_vocab(class_df, sizes):
    """Vocabulary over synthetic counts with the given [MCI, CONTROL] document frequencies."""
    n_mci, n_ctl = sizes
    counts = [Counter() for _ in range(n_mci + n_ctl)]
    labels = [Label.MCI] * n_mci + [Label.CONTROL] * n_ctl
    for f, (a, b) in enumerate(class_df):
        for i in range(a):
            counts[i][f"f{f}"] += 1
        for i in range(b):
            counts[n_mci + i][f"f{f}"] += 1
    return vocabulary_from_counts(counts, labels)


class TestRanking:
    def test_perfect_feature_ranks_first(self):
        v = rank_features(_labeled_vocab([(1, 1), (3, 0), (2, 1)], (3, 3)), RankingMethod.INFO_GAIN)
        assert v.keys[0] == "f1"
        assert v.scores[0] == pytest.approx(1.0)  # one full bit on balanced classes

    def test_ubiquitous_feature_has_zero_gain(self):
        v = rank_features(_labeled_vocab([(3, 3)], (3, 3)))
        assert v.scores[0] == 0.0

    def test_chi_squared_by_hand(self):
        # four samples: 2 MCI, 2 CONTROL
        class_df = [(2, 0), (1, 1), (2, 1), (1, 0)]
        v = rank_features(_labeled_vocab(class_df, (2, 2)), RankingMethod.CHI2)

        def hand(a, b):
            c, d = 2 - a, 2 - b
            num = 4 * (a * d - b * c) ** 2
            den = (a + b) * (c + d) * (a + c) * (b + d)
            return num / den if den else 0.0

        want = {f"f{i}": hand(a, b) for i, (a, b) in enumerate(class_df)}
        assert want == {"f0": 4.0, "f1": 0.0, "f2": pytest.approx(4 / 3), "f3": pytest.approx(4 / 3)}
        assert dict(zip(v.keys, v.scores)) == pytest.approx(want)
        # f2 and f3 tie on score; the larger document frequency wins
        assert v.keys == ["f0", "f2", "f3", "f1"]

    def test_information_gain_by_hand(self):
        a, b, n_mci, n_ctl = 3, 1, 4, 4
        n = n_mci + n_ctl
        cells = [(a, n_mci, a + b), (b, n_ctl, a + b), (n_mci - a, n_mci, n - a - b), (n_ctl - b, n_ctl, n - a - b)]
        want = sum((j / n) * math.log2((j / n) / ((r / n) * (c / n))) for j, r, c in cells if j)
        got = information_gain(np.array([[a, b]]), (n_mci, n_ctl))[0]
        assert got == pytest.approx(want, abs=1e-12)

    @given(st.integers(0, 6), st.integers(0, 6))
    def test_scores_non_negative_and_symmetric(self, a, b):
        sizes = (6, 6)
        ig = information_gain(np.array([[a, b]]), sizes)[0]
        ig_swapped = information_gain(np.array([[b, a]]), sizes)[0]
        assert ig >= 0 and ig == pytest.approx(ig_swapped, abs=1e-12)
        assert chi_squared(np.array([[a, b]]), sizes)[0] >= 0

    def test_frequency_rankings(self):
        counts = [Counter({"x": 5, "y": 1}), Counter({"y": 1})]
        v = vocabulary_from_counts(counts)
        assert rank_features(v, "DOC_FREQ").keys == ["y", "x"]
        assert rank_features(v, "TOTAL_FREQ").keys == ["x", "y"]

    def test_supervised_needs_labels(self):
        with pytest.raises(ValueError):
            rank_features(vocabulary_from_counts([Counter({"x": 1})]), "CHI2")


class TestSelectTop:
    def _vocab(self, size):
        return rank_features(vocabulary_from_counts([Counter({f"k{i:04d}": 1 for i in range(size)})]), "DOC_FREQ")

    def test_top_200_of_350(self):
        top = select_top(self._vocab(350), 200)
        assert len(top) == 200
        assert sorted(top.index.values()) == list(range(200))

    def test_k_exceeds_vocabulary(self):
        assert len(select_top(self._vocab(150), 1000)) == 150

    def test_single_best(self):
        ranked = self._vocab(10)
        assert select_top(ranked, 1).keys == ranked.keys[:1]

    @given(st.integers(1, 40), st.integers(1, 40))
    def test_prefix_property(self, k1, k2):
        ranked = self._vocab(30)
        small, large = sorted((k1, k2))
        assert select_top(ranked, large).keys[:small] == select_top(ranked, small).keys


class TestVectorize:
    def _vocab(self):
        keys = [f"2.0|w{i} w{i}" for i in range(5)] + ["2.0|a b"]
        v = vocabulary_from_counts([Counter(dict.fromkeys(keys, 1))])
        return v.take([v.index[k] for k in keys])  # "2.0|a b" at index 5

    def test_counts(self):
        vec = vectorize(Counter({"2.0|a b": 3}), self._vocab(), Weighting.COUNT)
        assert vec.indices.tolist() == [5] and vec.values.tolist() == [3.0]

    def test_out_of_vocabulary(self):
        vec = vectorize(Counter({"2.0|zz zz": 2}), self._vocab())
        assert len(vec) == 0 and vec.dim == 6

    def test_l2_normalized(self):
        vec = vectorize(Counter({"2.0|w0 w0": 3, "2.0|w1 w1": 4}), self._vocab(), Weighting.L2_NORMALIZED_COUNT)
        assert vec.values.tolist() == pytest.approx([0.6, 0.8])

    def test_binary(self):
        vec = vectorize(Counter({"2.0|w0 w0": 3}), self._vocab(), "BINARY")
        assert vec.values.tolist() == [1.0]

    def test_sparse_vector_validation(self):
        with pytest.raises(ValueError):
            SparseVector(np.array([2, 1]), np.array([1.0, 1.0]), 3)
        with pytest.raises(ValueError):
            SparseVector(np.array([3]), np.array([1.0]), 3)


def test_dataset_round_trip(tmp_path):
    samples = [make_sample(["the boy falls"], Label.MCI, "p1"), make_sample(["the stool"], Label.CONTROL, "p2")]
    vocab = build_vocabulary(samples, BIGRAMS)
    ds = make_dataset(samples, vocab)
    write_dataset(ds, tmp_path / "d.txt", tmp_path / "d.names")
    back = read_dataset(tmp_path / "d.txt", tmp_path / "d.names")
    assert back.participant_ids == ["p1", "p2"]
    assert back.labels == [Label.MCI, Label.CONTROL]
    assert back.feature_names == vocab.keys
    np.testing.assert_array_equal(back.X, ds.X)


def test_per_fold_selection_ignores_test_labels():
    train = [make_sample([f"a{i} b c"], Label.MCI if i % 2 else Label.CONTROL, f"t{i}") for i in range(6)]
    test = [make_sample(["a1 b c"], Label.MCI, "x"), make_sample(["a2 b c"], Label.CONTROL, "y")]
    flipped = [make_sample(["a1 b c"], Label.CONTROL, "x"), make_sample(["a2 b c"], Label.MCI, "y")]
    config = PipelineConfig(feature_set=BIGRAMS, k_top=3, leakage="PER_FOLD")
    spec = table1_models()[3]
    s1, fit1 = fit_and_score(train, test, spec, config)
    s2, fit2 = fit_and_score(train, flipped, spec, config)
    assert fit1.vocab.keys == fit2.vocab.keys
    np.testing.assert_array_equal(s1, s2)
