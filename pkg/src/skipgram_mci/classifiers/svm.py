"""Soft-margin SVM trained by sequential minimal optimization, with Platt scaling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .spec import Kernel, ModelSpec, SVMParams, TrainedModel, Variant, check_training_data

log = logging.getLogger(__name__)


def _signed_pow(base: np.ndarray, exponent: float) -> np.ndarray:
    return np.sign(base) * np.abs(base) ** exponent


def kernel_matrix(A: np.ndarray, B: np.ndarray, params: SVMParams) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if params.kernel is Kernel.LINEAR:
        return A @ B.T
    if params.kernel is Kernel.RBF:
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
        return np.exp(-params.gamma * np.maximum(sq, 0.0))
    # normalized polynomial: k(a, b) / sqrt(k(a, a) k(b, b)); fractional powers keep the sign
    c = 1.0 if params.lower_order else 0.0
    e = params.exponent
    num = _signed_pow(A @ B.T + c, e)
    da = _signed_pow((A * A).sum(1) + c, e)
    db = _signed_pow((B * B).sum(1) + c, e)
    denom = np.sqrt(np.outer(da, db))
    return np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)


@dataclass
class SMOResult:
    alpha: np.ndarray
    b: float
    iterations: int
    gap: float


def _snap(a: float, C: float) -> float:
    eps = 1e-12 * C
    if a < eps:
        return 0.0
    if a > C - eps:
        return C
    return a


def smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3, max_iter: int = 200_000) -> SMOResult:
    """Solve the SVM dual for a precomputed kernel matrix.

    ``y`` holds +/-1 labels.  Each step takes the maximal KKT violator ``i``
    and pairs it with the ``j`` that maximizes ``|E_i - E_j|`` on the other
    side of the violation.  Stops once every KKT condition holds within ``tol``.
    """
    n = len(y)
    y = y.astype(float)
    alpha = np.zeros(n)
    E = -y.copy()  # f(x) - y with the bias left out
    diag = np.diag(K)
    it = 0
    gap = math.inf
    while True:
        up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
        i = int(np.flatnonzero(up)[np.argmin(E[up])])
        j = int(np.flatnonzero(low)[np.argmax(E[low])])
        gap = E[j] - E[i]
        if gap < tol:
            # refresh accumulated rounding before accepting convergence
            E_exact = K @ (alpha * y) - y
            if np.max(np.abs(E_exact - E)) < 1e-10 * max(1.0, np.max(np.abs(E))):
                break
            E = E_exact
            continue
        if it >= max_iter:
            log.warning("SMO stopped after %d iterations with KKT gap %.3g", it, gap)
            break
        it += 1
        eta = diag[i] + diag[j] - 2.0 * K[i, j]
        if eta <= 1e-12:
            eta = 1e-12
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            lo, hi = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - C), min(C, ai + aj)
        # Values within rounding of a bound are put on it; otherwise a multiplier
        # one ulp below C stays selectable while the box allows no step, and the
        # same pair is chosen forever.
        aj_new = _snap(min(hi, max(lo, aj + y[j] * (E[i] - E[j]) / eta)), C)
        ai_new = _snap(ai + y[i] * y[j] * (aj - aj_new), C)
        d_i, d_j = ai_new - ai, aj_new - aj
        alpha[i], alpha[j] = ai_new, aj_new
        E += y[i] * d_i * K[:, i] + y[j] * d_j * K[:, j]
        if it % 1000 == 0:
            E = K @ (alpha * y) - y

    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        b = -float(np.mean(E[free]))
    else:
        up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
        b = -0.5 * float(np.min(E[up]) + np.max(E[low]))
    return SMOResult(alpha, b, it, float(gap))


def fit_platt(f: np.ndarray, y: np.ndarray, max_iter: int = 100) -> tuple[float, float]:
    """Sigmoid P(y=1|f) = 1 / (1 + exp(A f + B)) fit by Newton's method.

    Targets are smoothed toward the class priors; follows Lin, Lin & Weng's
    numerically careful formulation.
    """
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(y == 1, hi, lo)
    A, B = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))

    def objective(A, B):
        z = f * A + B
        return float(np.sum(np.logaddexp(0.0, z) - (1 - t) * z))

    fval = objective(A, B)
    for _ in range(max_iter):
        z = f * A + B
        p = np.exp(-np.logaddexp(0.0, z))
        q = 1 - p
        d2 = p * q
        h11 = float(np.sum(f * f * d2)) + 1e-12
        h22 = float(np.sum(d2)) + 1e-12
        h21 = float(np.sum(f * d2))
        d1 = t - p
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            nA, nB = A + step * dA, B + step * dB
            nf = objective(nA, nB)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step /= 2
        else:
            break
    return A, B


class SVMModel(TrainedModel):
    variant = Variant.SVM_SMO

    def __init__(self, spec: ModelSpec, dim: int, support: np.ndarray, coef: np.ndarray, b: float,
                 mean: np.ndarray, scale: np.ndarray, platt: tuple[float, float] | None,
                 support_indices: np.ndarray | None = None):
        self.spec = spec
        self.dim = dim
        self.support = np.asarray(support, dtype=float).reshape(-1, dim)
        self.coef = np.asarray(coef, dtype=float)  # alpha_i * y_i
        self.b = float(b)
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)
        self.platt = None if platt is None else (float(platt[0]), float(platt[1]))
        self.support_indices = None if support_indices is None else np.asarray(support_indices, dtype=int)

    @property
    def emits_probability(self) -> bool:
        return self.platt is not None

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def decision(self, X: np.ndarray) -> np.ndarray:
        Xs = self._standardize(np.atleast_2d(X))
        if len(self.coef) == 0:
            return np.full(Xs.shape[0], self.b)
        return kernel_matrix(Xs, self.support, self.spec.params) @ self.coef + self.b

    def scores(self, X: np.ndarray) -> np.ndarray:
        f = self.decision(X)
        if self.platt is None:
            return f
        A, B = self.platt
        z = A * f + B
        return np.exp(-np.logaddexp(0.0, z))

    def state(self) -> dict:
        return {
            "support": self.support.tolist(),
            "coef": self.coef.tolist(),
            "b": self.b,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "platt": None if self.platt is None else list(self.platt),
            "support_indices": None if self.support_indices is None else self.support_indices.tolist(),
        }

    @classmethod
    def from_state(cls, spec, dim, state):
        return cls(spec, dim, state["support"], state["coef"], state["b"], state["mean"],
                   state["scale"], state["platt"], state.get("support_indices"))


def train_svm(spec: ModelSpec, X: np.ndarray, y01: np.ndarray) -> SVMModel:
    X, y01 = check_training_data(X, y01)
    p: SVMParams = spec.params
    dim = X.shape[1]
    if p.standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
    else:
        mean, scale = np.zeros(dim), np.ones(dim)
    Xs = (X - mean) / scale
    y = np.where(y01 == 1, 1.0, -1.0)
    K = kernel_matrix(Xs, Xs, p)
    res = smo(K, y, p.C, p.tol, p.max_iter)
    sv = np.flatnonzero(res.alpha > 0)
    model = SVMModel(spec, dim, Xs[sv], res.alpha[sv] * y[sv], res.b, mean, scale, None, sv)
    model.alpha = res.alpha
    if p.platt_calibrate:
        f = K[:, sv] @ model.coef + res.b
        model.platt = fit_platt(f, y01)
    return model
