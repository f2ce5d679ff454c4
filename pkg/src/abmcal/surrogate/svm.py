"""RBF support vector machines trained by sequential minimal optimisation.

Both the C-classifier and the epsilon-insensitive regressor are reduced
to the same dual::

    min  0.5 a'Qa + p'a   s.t.  y'a = 0,  0 <= a_i <= C

and solved with maximal-violating-pair working sets using second-order
information (Fan, Chen & Lin 2005).
"""
from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(A, B, gamma):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    sq = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def smo(kernel_row, diag, p, y, C, tol=1e-3, max_iter=200_000):
    """Solve the dual above. ``kernel_row(i)`` must return row i of Q.

    Returns ``(alpha, rho, n_iter)``; the decision value of a point with
    kernel column k is ``sum(y * alpha * k) - rho``.
    """
    l = len(p)
    alpha = np.zeros(l)
    grad = np.array(p, dtype=float)
    y = np.asarray(y, dtype=float)
    n_iter = 0
    while n_iter < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        score = -y * grad
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        g_max = score[i]
        g_min = np.min(np.where(low, score, np.inf))
        if g_max - g_min < tol:
            break
        Qi = kernel_row(i)
        b = g_max - score
        cand = low & (b > 0)
        a = diag[i] + diag - 2.0 * y[i] * y * Qi
        a = np.where(a > 0, a, TAU)
        j = int(np.argmin(np.where(cand, -(b**2) / a, np.inf)))
        Qj = kernel_row(j)
        ai_old, aj_old = alpha[i], alpha[j]
        quad = max(diag[i] + diag[j] - 2.0 * y[i] * y[j] * Qi[j], TAU)
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
            elif alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > C:
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total
        # Q already carries the labels: Q_ij = y_i y_j K_ij
        grad += Qi * (alpha[i] - ai_old) + Qj * (alpha[j] - aj_old)
        n_iter += 1
    else:
        log.warning("SMO stopped at max_iter=%d before reaching tol=%g", max_iter, tol)

    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean(yg[free]))
    else:
        ub = np.where(((y < 0) & (alpha >= C)) | ((y > 0) & (alpha <= 0)), yg, np.inf).min()
        lb = np.where(((y > 0) & (alpha >= C)) | ((y < 0) & (alpha <= 0)), yg, -np.inf).max()
        rho = float(0.5 * (ub + lb)) if np.isfinite(ub + lb) else 0.0
    return alpha, rho, n_iter


class SupportVectorMachine:
    """RBF kernel SVM; ``gamma=None`` means ``1 / n_features``."""

    def __init__(self, mode="classifier", C=1.0, gamma=None, epsilon=1e-3, tol=1e-3):
        self.mode = mode
        self.C = C
        self.gamma = gamma
        self.epsilon = epsilon
        self.tol = tol

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = len(X)
        self.gamma_ = self.gamma if self.gamma is not None else 1.0 / X.shape[1]
        K = rbf_kernel(X, X, self.gamma_)
        if self.mode == "classifier":
            sign = np.where(y > 0, 1.0, -1.0)

            def row(i):
                return sign[i] * sign * K[i]

            alpha, rho, self.n_iter_ = smo(row, np.diag(K).copy(), -np.ones(n), sign, self.C, self.tol)
            self.dual_y_ = sign
            coef = sign * alpha
        else:
            sign = np.concatenate((np.ones(n), -np.ones(n)))
            p = np.concatenate((self.epsilon - y, self.epsilon + y))
            diag = np.tile(np.diag(K), 2)

            def row(i):
                return sign[i] * sign * np.tile(K[i % n], 2)

            alpha, rho, self.n_iter_ = smo(row, diag, p, sign, self.C, self.tol)
            self.dual_y_ = sign
            coef = alpha[:n] - alpha[n:]
        self.dual_coef_ = alpha
        keep = np.abs(coef) > 0
        self.support_vectors_ = X[keep]
        self.coef_ = coef[keep]
        self.rho_ = rho
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        if len(self.coef_) == 0:
            return np.full(len(X), -self.rho_)
        return rbf_kernel(X, self.support_vectors_, self.gamma_) @ self.coef_ - self.rho_

    def predict(self, X):
        f = self.decision_function(X)
        if self.mode == "classifier":
            return (f > 0).astype(int)
        return f
