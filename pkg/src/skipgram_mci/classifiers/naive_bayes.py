"""Naive Bayes with Gaussian or kernel-density per-feature likelihoods."""

from __future__ import annotations

import math

import numpy as np

from .spec import ModelSpec, NBParams, TrainedModel, Variant, check_training_data

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def silverman_bandwidth(values: np.ndarray, var_floor: float = 1e-9) -> np.ndarray:
    """Per-column Silverman bandwidth ``0.9 * min(sd, IQR/1.34) * n^(-1/5)``.

    Falls back to the standard deviation when the IQR is zero, and floors the
    squared bandwidth at ``var_floor``.
    """
    n = values.shape[0]
    sd = values.std(axis=0, ddof=1) if n > 1 else np.zeros(values.shape[1])
    q75, q25 = np.percentile(values, [75, 25], axis=0)
    spread = np.minimum(sd, (q75 - q25) / 1.34)
    spread = np.where(spread > 0, spread, sd)
    h = 0.9 * spread * n ** -0.2
    return np.sqrt(np.maximum(h * h, var_floor))


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis) + np.log(np.sum(np.exp(a - m), axis=axis))


class NaiveBayesModel(TrainedModel):
    variant = Variant.NAIVE_BAYES_KDE

    def __init__(self, spec: ModelSpec, dim: int, log_prior: np.ndarray, means=None, variances=None,
                 samples=None, bandwidths=None):
        self.spec = spec
        self.dim = dim
        self.log_prior = np.asarray(log_prior, dtype=float)  # [CONTROL, MCI]
        self.means = None if means is None else [np.asarray(m, dtype=float) for m in means]
        self.variances = None if variances is None else [np.asarray(v, dtype=float) for v in variances]
        self.samples = None if samples is None else [np.asarray(s, dtype=float).reshape(-1, dim) for s in samples]
        self.bandwidths = None if bandwidths is None else [np.asarray(h, dtype=float) for h in bandwidths]

    @property
    def priors(self) -> np.ndarray:
        return np.exp(self.log_prior)

    def _log_likelihood(self, X: np.ndarray, c: int) -> np.ndarray:
        if self.samples is None:
            mu, var = self.means[c], self.variances[c]
            ll = -0.5 * (X - mu) ** 2 / var - 0.5 * np.log(var) - _LOG_SQRT_2PI
            return ll.sum(axis=1)
        V, h = self.samples[c], self.bandwidths[c]
        # (rows, kernels, features)
        z = (X[:, None, :] - V[None, :, :]) / h
        per_kernel = -0.5 * z * z
        ll = _logsumexp(per_kernel, axis=1) - math.log(V.shape[0]) - np.log(h) - _LOG_SQRT_2PI
        return ll.sum(axis=1)

    def joint_log(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([self._log_likelihood(X, c) + self.log_prior[c] for c in (0, 1)])

    def posteriors(self, X: np.ndarray) -> np.ndarray:
        """Columns are P(CONTROL | x), P(MCI | x)."""
        j = self.joint_log(X)
        return np.exp(j - _logsumexp(j, axis=1)[:, None])

    def scores(self, X: np.ndarray) -> np.ndarray:
        j = self.joint_log(X)
        return 1.0 / (1.0 + np.exp(np.clip(j[:, 0] - j[:, 1], -745, 709)))

    def state(self) -> dict:
        lists = lambda arrs: None if arrs is None else [a.tolist() for a in arrs]
        return {
            "log_prior": self.log_prior.tolist(),
            "means": lists(self.means),
            "variances": lists(self.variances),
            "samples": lists(self.samples),
            "bandwidths": lists(self.bandwidths),
        }

    @classmethod
    def from_state(cls, spec, dim, state):
        return cls(spec, dim, state["log_prior"], state["means"], state["variances"],
                   state["samples"], state["bandwidths"])


def train_naive_bayes(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> NaiveBayesModel:
    X, y = check_training_data(X, y)
    p: NBParams = spec.params
    n = len(y)
    counts = np.array([np.sum(y == 0), np.sum(y == 1)], dtype=float)
    log_prior = np.log((counts + 1.0) / (n + 2.0))
    parts = [X[y == c] for c in (0, 1)]
    if p.kernel_density:
        return NaiveBayesModel(
            spec, X.shape[1], log_prior,
            samples=parts,
            bandwidths=[silverman_bandwidth(part, p.var_floor) for part in parts],
        )
    return NaiveBayesModel(
        spec, X.shape[1], log_prior,
        means=[part.mean(axis=0) for part in parts],
        variances=[np.maximum(part.var(axis=0), p.var_floor) for part in parts],
    )
