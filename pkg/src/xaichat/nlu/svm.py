"""Kernel SVM trained by SMO on the dual, one-vs-rest for multi-class.

Working-set selection is the maximal violating pair; iteration stops when the
KKT violation drops below tolerance. Training rows are canonicalized (sorted)
first, so the solution is invariant to the order the data arrived in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateKernelError(ValueError):
    def __init__(self, indices):
        super().__init__(f"all-zero training vectors at rows {list(indices)}")
        self.indices = list(indices)


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def smo_solve(K: np.ndarray, y: np.ndarray, C: float,
              tol: float = 1e-3, max_updates: int = 10_000) -> tuple[np.ndarray, float]:
    """Solve the dual for one binary problem; returns (alpha, bias)."""
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - e'a at a = 0
    for _ in range(max_updates):
        yg = y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        neg_yg = -yg
        i = int(np.flatnonzero(up)[np.argmax(neg_yg[up])])
        j = int(np.flatnonzero(low)[np.argmin(neg_yg[low])])
        m, M = neg_yg[i], neg_yg[j]
        if m - M < tol:
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = (m - M) / max(quad, 1e-12)
        room_i = (C - alpha[i]) if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else (C - alpha[j])
        step = min(step, room_i, room_j)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        # d(grad) = Q[:,i] d(alpha_i) + Q[:,j] d(alpha_j), with Q = (y y') * K
        grad += step * y * (K[:, i] - K[:, j])
    yg = y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    m = np.max(-yg[up]) if up.any() else 0.0
    M = np.min(-yg[low]) if low.any() else 0.0
    bias = (m + M) / 2.0
    return alpha, float(bias)


@dataclass
class SvmParams:
    C: float = 100.0
    gamma: float = 0.1
    tol: float = 1e-3
    max_updates: int = 10_000


class OneVsRestSvm:
    """RBF-kernel SVM per class over a shared precomputed kernel matrix."""

    def __init__(self, params: SvmParams):
        self.params = params
        self.X: np.ndarray | None = None
        self.coef: np.ndarray | None = None  # (n_classes, n_train) alpha * y
        self.bias: np.ndarray | None = None
        self.n_classes = 0

    def fit(self, X: np.ndarray, labels: np.ndarray, n_classes: int | None = None) -> "OneVsRestSvm":
        norms = np.linalg.norm(X, axis=1)
        dead = np.flatnonzero(norms == 0)
        if len(dead):
            raise DegenerateKernelError(dead)
        # canonical row order: by label, then lexicographically by vector
        order = np.lexsort(tuple(X[:, c] for c in reversed(range(X.shape[1]))) + (labels,))
        X = X[order]
        labels = labels[order]
        self.n_classes = n_classes if n_classes is not None else int(labels.max()) + 1
        if len(np.unique(labels)) < 2:
            raise ValueError("one-vs-rest needs at least two classes")
        K = rbf_kernel(X, X, self.params.gamma)
        coef = np.zeros((self.n_classes, len(X)))
        bias = np.zeros(self.n_classes)
        for c in range(self.n_classes):
            y = np.where(labels == c, 1.0, -1.0)
            if not (y > 0).any():
                # class absent from this training split: constant negative machine
                bias[c] = -1.0
                continue
            alpha, b = smo_solve(K, y, self.params.C, self.params.tol, self.params.max_updates)
            coef[c] = alpha * y
            bias[c] = b
        self.X, self.coef, self.bias = X, coef, bias
        return self

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        K = rbf_kernel(np.atleast_2d(X), self.X, self.params.gamma)
        return K @ self.coef.T + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_values(X), axis=1)
