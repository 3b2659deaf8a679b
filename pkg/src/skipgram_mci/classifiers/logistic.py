"""Ridge-penalized logistic regression fit by damped Newton iterations."""

from __future__ import annotations

import logging

import numpy as np

from .spec import LogisticParams, ModelSpec, TrainedModel, Variant, check_training_data

log = logging.getLogger(__name__)


def _log1pexp(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def sigmoid(z):
    return np.exp(-_log1pexp(-np.asarray(z, dtype=float)))


def objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, ridge: float) -> float:
    """Penalized log-likelihood; ``theta = [w..., b]`` and the intercept is not penalized."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    return float(np.sum(y * z - _log1pexp(z)) - ridge * np.dot(w, w))


def gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    w, b = theta[:-1], theta[-1]
    r = y - sigmoid(X @ w + b)
    return np.append(X.T @ r - 2.0 * ridge * w, r.sum())


def hessian(theta: np.ndarray, X: np.ndarray, ridge: float) -> np.ndarray:
    p = sigmoid(X @ theta[:-1] + theta[-1])
    s = p * (1.0 - p)
    X1 = np.column_stack([X, np.ones(len(X))])
    H = -(X1.T * s) @ X1
    d = np.arange(X.shape[1])
    H[d, d] -= 2.0 * ridge
    return H


class LogisticModel(TrainedModel):
    variant = Variant.LOGISTIC_RIDGE

    def __init__(self, spec: ModelSpec, dim: int, weights, intercept: float):
        self.spec = spec
        self.dim = dim
        self.weights = np.asarray(weights, dtype=float)
        self.intercept = float(intercept)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(np.atleast_2d(X) @ self.weights + self.intercept)

    def state(self) -> dict:
        return {"weights": self.weights.tolist(), "intercept": self.intercept}

    @classmethod
    def from_state(cls, spec, dim, state):
        return cls(spec, dim, state["weights"], state["intercept"])


def fit_logistic(X: np.ndarray, y: np.ndarray, ridge: float, grad_tol: float = 1e-8,
                 max_iter: int = 200) -> tuple[np.ndarray, int]:
    """Maximize the penalized log-likelihood; returns ``(theta, iterations)``."""
    theta = np.zeros(X.shape[1] + 1)
    f = objective(theta, X, y, ridge)
    it = 0
    for it in range(1, max_iter + 1):
        g = gradient(theta, X, y, ridge)
        if np.linalg.norm(g) < grad_tol:
            return theta, it - 1
        H = hessian(theta, X, ridge)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -g, rcond=None)[0]
        if not np.all(np.isfinite(step)) or np.dot(step, g) <= 0:
            step = g  # fall back to steepest ascent
        slope = float(np.dot(step, g))
        t = 1.0
        while True:
            cand = theta + t * step
            fc = objective(cand, X, y, ridge)
            if fc >= f + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                cand = None
                break
        if cand is None:
            break  # no further ascent representable in floating point
        theta, f = cand, fc
    if np.linalg.norm(gradient(theta, X, y, ridge)) >= grad_tol:
        log.debug("logistic fit stopped with gradient norm %.3g", np.linalg.norm(gradient(theta, X, y, ridge)))
    return theta, it


def train_logistic(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> LogisticModel:
    X, y = check_training_data(X, y)
    p: LogisticParams = spec.params
    theta, _ = fit_logistic(X, y.astype(float), p.ridge, p.grad_tol, p.max_iter)
    return LogisticModel(spec, X.shape[1], theta[:-1], theta[-1])
