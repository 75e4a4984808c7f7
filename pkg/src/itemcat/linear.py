"""Multinomial logistic regression fit by full-batch gradient descent.

Used as the TF-IDF baseline classifier, the annotation-task category guesser
and the stacking meta-model. Deterministic: zero init plus a convex objective
means no seed is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class LogisticRegressionGD:
    """L2-regularized softmax regression.

    Objective: mean cross-entropy + reg * ||W||^2 / (2N); the bias is not
    penalized. Optimized with full-batch gradient descent using a
    grow-on-success / halve-on-failure step size until the loss delta falls
    below tol.
    """

    reg: float = 1.0
    tol: float = 1e-8
    max_iter: int = 5000
    lr0: float = 1.0
    coef: np.ndarray | None = field(default=None, repr=False)
    intercept: np.ndarray | None = field(default=None, repr=False)
    n_classes: int | None = None
    converged: bool | None = None

    def _loss_grads(self, x, onehot, w, b):
        n = x.shape[0]
        probs = softmax(x @ w + b)
        ce = -np.mean(np.log(np.maximum(probs[np.arange(n), onehot.argmax(axis=1)], 1e-300)))
        loss = ce + self.reg * np.sum(w * w) / (2.0 * n)
        dz = (probs - onehot) / n
        dw = x.T @ dz + self.reg * w / n
        db = dz.sum(axis=0)
        return loss, dw, db

    def fit(self, x: np.ndarray, y: np.ndarray, n_classes: int) -> "LogisticRegressionGD":
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ValueError("x must be (n, d) aligned with y")
        if y.min(initial=0) < 0 or (y.size and y.max() >= n_classes):
            raise ValueError("label index out of range")
        n, d = x.shape
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y] = 1.0
        w = np.zeros((d, n_classes))
        b = np.zeros(n_classes)
        lr = self.lr0
        loss, dw, db = self._loss_grads(x, onehot, w, b)
        self.converged = False
        for _ in range(self.max_iter):
            w_new = w - lr * dw
            b_new = b - lr * db
            loss_new, dw_new, db_new = self._loss_grads(x, onehot, w_new, b_new)
            if loss_new > loss:
                lr *= 0.5
                if lr < 1e-12:
                    break
                continue
            if abs(loss - loss_new) < self.tol:
                w, b, loss = w_new, b_new, loss_new
                self.converged = True
                break
            w, b, loss = w_new, b_new, loss_new
            dw, db = dw_new, db_new
            lr *= 1.05
        self.coef = w
        self.intercept = b
        self.n_classes = n_classes
        return self

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        if self.coef is None:
            raise RuntimeError("model not fitted")
        return softmax(x @ self.coef + self.intercept)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.predict_proba(x).argmax(axis=1)
