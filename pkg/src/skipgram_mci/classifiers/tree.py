"""C4.5-style decision tree: gain-ratio threshold splits, pessimistic-error pruning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .spec import ModelSpec, TrainedModel, TreeParams, Variant, check_training_data


@dataclass
class Node:
    counts: tuple[int, int]  # (CONTROL, MCI) training samples reaching the node
    feature: int | None = None
    threshold: float | None = None  # x <= threshold goes left
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def n(self) -> int:
        return self.counts[0] + self.counts[1]

    @property
    def errors(self) -> int:
        return self.n - max(self.counts)

    def make_leaf(self) -> None:
        self.feature = self.threshold = self.left = self.right = None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            yield from self.left.leaves()
            yield from self.right.leaves()

    def to_dict(self) -> dict:
        d = {"counts": list(self.counts)}
        if not self.is_leaf:
            d.update(feature=self.feature, threshold=self.threshold,
                     left=self.left.to_dict(), right=self.right.to_dict())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        node = cls(tuple(d["counts"]))
        if "feature" in d:
            node.feature = int(d["feature"])
            node.threshold = float(d["threshold"])
            node.left = cls.from_dict(d["left"])
            node.right = cls.from_dict(d["right"])
        return node


def _entropy(counts: np.ndarray) -> np.ndarray:
    """Entropy (bits) along the last axis of a count array."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1, keepdims=True)
    p = np.divide(counts, total, out=np.zeros_like(counts), where=total > 0)
    logs = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logs).sum(axis=-1)


def best_threshold(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Highest-gain threshold split of one feature.

    Returns ``(gain, gain_ratio, threshold)`` or None when no cut leaves at
    least ``min_leaf`` samples on both sides.  The threshold is the largest
    value sent left, so the split only depends on the order of values.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    cut = np.flatnonzero(xs[1:] != xs[:-1]) + 1  # left side is xs[:cut]
    cut = cut[(cut >= min_leaf) & (n - cut >= min_leaf)]
    if cut.size == 0:
        return None
    pos_cum = np.cumsum(ys)
    left_pos = pos_cum[cut - 1]
    left = np.column_stack([cut - left_pos, left_pos])
    total = np.array([n - pos_cum[-1], pos_cum[-1]])
    right = total - left
    w_left = cut / n
    cond = w_left * _entropy(left) + (1 - w_left) * _entropy(right)
    gains = _entropy(total) - cond
    best = int(np.argmax(gains))
    gain = max(float(gains[best]), 0.0)
    split_info = float(_entropy(np.array([cut[best], n - cut[best]])))
    ratio = gain / split_info if split_info > 0 else 0.0
    return gain, ratio, float(xs[cut[best] - 1])


def _grow(X: np.ndarray, y: np.ndarray, min_leaf: int) -> Node:
    n_pos = int(y.sum())
    node = Node((len(y) - n_pos, n_pos))
    if n_pos == 0 or n_pos == len(y) or len(y) < 2 * min_leaf:
        return node
    candidates = []
    for f in range(X.shape[1]):
        res = best_threshold(X[:, f], y, min_leaf)
        if res is not None:
            candidates.append((f, *res))
    if not candidates:
        return node
    # C4.5 heuristic: best gain ratio among splits with at least average gain
    avg_gain = sum(c[1] for c in candidates) / len(candidates)
    eligible = [c for c in candidates if c[1] >= avg_gain - 1e-12]
    f, _, _, thr = max(eligible, key=lambda c: (c[2], c[1], -c[0]))
    go_left = X[:, f] <= thr
    node.feature, node.threshold = f, thr
    node.left = _grow(X[go_left], y[go_left], min_leaf)
    node.right = _grow(X[~go_left], y[~go_left], min_leaf)
    return node


def added_errors(n: float, e: float, confidence: float) -> float:
    """Extra errors implied by the upper confidence bound on a leaf's error rate."""
    if e < 1:
        base = n * (1 - confidence ** (1 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1 - confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _estimated_errors(node: Node, confidence: float) -> float:
    return node.errors + added_errors(node.n, node.errors, confidence)


def prune(node: Node, confidence: float) -> float:
    """Bottom-up subtree replacement; returns the node's estimated error count."""
    if node.is_leaf:
        return _estimated_errors(node, confidence)
    subtree = prune(node.left, confidence) + prune(node.right, confidence)
    as_leaf = _estimated_errors(node, confidence)
    if as_leaf <= subtree + 0.1:
        node.make_leaf()
        return as_leaf
    return subtree


class TreeModel(TrainedModel):
    variant = Variant.DECISION_TREE

    def __init__(self, spec: ModelSpec, dim: int, root: Node):
        self.spec = spec
        self.dim = dim
        self.root = root

    def leaf_for(self, x: np.ndarray) -> Node:
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    def scores(self, X: np.ndarray) -> np.ndarray:
        out = []
        for x in np.atleast_2d(X):
            leaf = self.leaf_for(x)
            out.append((leaf.counts[1] + 1.0) / (leaf.n + 2.0))
        return np.array(out)

    def state(self) -> dict:
        return {"root": self.root.to_dict()}

    @classmethod
    def from_state(cls, spec, dim, state):
        return cls(spec, dim, Node.from_dict(state["root"]))


def train_tree(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> TreeModel:
    X, y = check_training_data(X, y)
    p: TreeParams = spec.params
    root = _grow(X, y, p.min_leaf)
    if p.prune:
        prune(root, p.confidence)
    return TreeModel(spec, X.shape[1], root)
