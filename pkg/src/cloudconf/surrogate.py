"""Probabilistic regressors over the normalized configuration grid.

Both surrogates follow the scikit-learn estimator API and additionally
expose ``posterior(X)`` returning the predictive mean and standard deviation.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_points_targets
from .exceptions import NumericError

SQRT5 = np.sqrt(5.0)
JITTER_LADDER = (0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


class Posterior(NamedTuple):
    """Predictive mean and standard deviation (scalars or arrays)."""

    mean: np.ndarray | float
    stddev: np.ndarray | float


def _sq_dists(A, B):
    """Per-dimension squared differences, shape (d, len(A), len(B))."""
    return (A.T[:, :, None] - B.T[:, None, :]) ** 2


def matern52(sq_dists, lengthscales, signal_variance):
    """Matérn-5/2 ARD covariance from per-dimension squared differences."""
    scaled = sq_dists / np.asarray(lengthscales)[:, None, None] ** 2
    r = np.sqrt(scaled.sum(axis=0))
    return signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r**2) * np.exp(-SQRT5 * r)


def _cholesky_with_jitter(K):
    for jitter in JITTER_LADDER:
        try:
            return cholesky(K + jitter * np.eye(len(K)), lower=True, check_finite=False), jitter
        except LinAlgError:
            continue
    raise NumericError("kernel matrix is not positive definite even with 1e-4 jitter")


@njit(cache=True)
def _cholesky_inplace(A):
    n = A.shape[0]
    for j in range(n):
        s = A[j, j]
        for k in range(j):
            s -= A[j, k] * A[j, k]
        if not s > 0.0:
            return False
        A[j, j] = np.sqrt(s)
        for i in range(j + 1, n):
            s = A[i, j]
            for k in range(j):
                s -= A[i, k] * A[j, k]
            A[i, j] = s / A[j, j]
        for i in range(j):
            A[i, j] = 0.0
    return True


@njit(cache=True)
def _lml_kernel(log_params, X, y, eval_gradient, jitters):
    n, d = X.shape
    lengthscales = np.exp(log_params[:d])
    signal_variance = np.exp(log_params[d])
    noise_variance = np.exp(log_params[d + 1])
    grad = np.zeros(d + 2)

    scaled = np.empty((d, n, n))
    r = np.zeros((n, n))
    for k in range(d):
        for i in range(n):
            for j in range(n):
                diff = (X[i, k] - X[j, k]) / lengthscales[k]
                scaled[k, i, j] = diff * diff
                r[i, j] += diff * diff
    r = np.sqrt(r)
    e = np.exp(-SQRT5 * r)
    K = signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * e

    L = np.empty((n, n))
    ok = False
    for jitter in jitters:
        L[:, :] = K
        for i in range(n):
            L[i, i] += noise_variance + jitter
        if _cholesky_inplace(L):
            ok = True
            break
    if not ok:
        return np.nan, grad, False

    # alpha = K^-1 y by forward then backward substitution
    z = np.empty(n)
    for i in range(n):
        s = y[i]
        for k in range(i):
            s -= L[i, k] * z[k]
        z[i] = s / L[i, i]
    alpha = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = z[i]
        for k in range(i + 1, n):
            s -= L[k, i] * alpha[k]
        alpha[i] = s / L[i, i]

    lml = -0.5 * np.dot(y, alpha) - 0.5 * n * np.log(2.0 * np.pi)
    for i in range(n):
        lml -= np.log(L[i, i])
    if not eval_gradient:
        return lml, grad, True

    # K^-1 = L^-T L^-1
    Linv = np.zeros((n, n))
    for c in range(n):
        Linv[c, c] = 1.0 / L[c, c]
        for i in range(c + 1, n):
            s = 0.0
            for k in range(c, i):
                s -= L[i, k] * Linv[k, c]
            Linv[i, c] = s / L[i, i]
    inner = np.outer(alpha, alpha) - Linv.T @ Linv

    # dk/dlog(l_k) = sf2 * 5/3 * (1 + sqrt5 r) exp(-sqrt5 r) * delta_k^2 / l_k^2
    common = signal_variance * 5.0 / 3.0 * (1.0 + SQRT5 * r) * e
    for k in range(d):
        grad[k] = 0.5 * np.sum(inner * common * scaled[k])
    grad[d] = 0.5 * np.sum(inner * K)
    trace = 0.0
    for i in range(n):
        trace += inner[i, i]
    grad[d + 1] = 0.5 * noise_variance * trace
    return lml, grad, True


_JITTERS = np.array(JITTER_LADDER)


def log_marginal_likelihood(log_params, X, y, eval_gradient=False):
    """GP log marginal likelihood of zero-mean targets ``y`` at inputs ``X``.

    ``log_params`` is ``(log l1, ..., log ld, log signal_variance, log noise_variance)``
    and the gradient, when requested, is with respect to those log parameters.
    """
    lml, grad, ok = _lml_kernel(np.asarray(log_params, dtype=np.float64), np.ascontiguousarray(X, dtype=np.float64),
                                np.ascontiguousarray(y, dtype=np.float64), eval_gradient, _JITTERS)
    if not ok:
        raise NumericError("kernel matrix is not positive definite even with 1e-4 jitter")
    return (lml, grad) if eval_gradient else lml


class GaussianProcessSurrogate(RegressorMixin, BaseEstimator):
    """Exact GP regressor with a Matérn-5/2 ARD kernel and a constant mean.

    The constant mean is the average training target. Hyperparameters
    (two lengthscales, signal variance, noise variance) maximize the log
    marginal likelihood with L-BFGS-B from ``n_restarts`` random starts drawn
    log-uniformly inside the bounds. With ``optimizer=None`` the initial
    hyperparameters are used as-is.

    Predictions are of the latent function, so the predictive standard
    deviation at a training point is at most ``sqrt(noise_variance_)``.
    """

    def __init__(self, lengthscales=(0.3, 0.3), signal_variance=1.0, noise_variance=1e-3,
                 lengthscale_bounds=(0.01, 2.0), signal_variance_bounds=(1e-4, 100.0),
                 noise_variance_bounds=(1e-6, 1.0), optimizer="lbfgs", n_restarts=8,
                 random_state=0):
        self.lengthscales = lengthscales
        self.signal_variance = signal_variance
        self.noise_variance = noise_variance
        self.lengthscale_bounds = lengthscale_bounds
        self.signal_variance_bounds = signal_variance_bounds
        self.noise_variance_bounds = noise_variance_bounds
        self.optimizer = optimizer
        self.n_restarts = n_restarts
        self.random_state = random_state

    def _log_bounds(self, d):
        bounds = [self.lengthscale_bounds] * d + [self.signal_variance_bounds, self.noise_variance_bounds]
        return np.log(np.asarray(bounds, dtype=float))

    def fit(self, X, y):
        X, y = check_points_targets(X, y)
        self.X_train_ = X
        self.y_mean_ = float(y.mean())
        self.y_train_ = y - self.y_mean_
        d = X.shape[1]

        theta = np.log(np.r_[np.broadcast_to(self.lengthscales, d), self.signal_variance, self.noise_variance])
        if self.optimizer is not None:
            theta = self._optimize(X, d)

        self.lengthscales_ = np.exp(theta[:d])
        self.signal_variance_ = float(np.exp(theta[d]))
        self.noise_variance_ = float(np.exp(theta[d + 1]))
        K = matern52(_sq_dists(X, X), self.lengthscales_, self.signal_variance_)
        K[np.diag_indices(len(X))] += self.noise_variance_
        self.L_, self.jitter_ = _cholesky_with_jitter(K)
        self.alpha_ = cho_solve((self.L_, True), self.y_train_, check_finite=False)
        self.log_marginal_likelihood_value_ = float(log_marginal_likelihood(theta, X, self.y_train_))
        return self

    def _optimize(self, X, d):
        if self.optimizer != "lbfgs":
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        bounds = self._log_bounds(d)
        rng = np.random.default_rng(self.random_state)
        starts = rng.uniform(bounds[:, 0], bounds[:, 1], size=(max(1, self.n_restarts), d + 2))
        y = self.y_train_

        def objective(theta):
            try:
                lml, grad = log_marginal_likelihood(theta, X, y, eval_gradient=True)
            except NumericError:
                return np.inf, np.zeros_like(theta)
            return -lml, -grad

        best_theta, best_value = None, -np.inf
        for start in starts:
            start_value = -objective(start)[0]
            if start_value > best_value:
                best_theta, best_value = start, start_value
            res = minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds)
            if np.all(np.isfinite(res.x)) and -res.fun > best_value:
                best_theta, best_value = res.x, -res.fun
        if best_theta is None:
            raise NumericError("no start point produced a finite marginal likelihood")
        return np.clip(best_theta, bounds[:, 0], bounds[:, 1])

    def log_marginal_likelihood(self, theta=None, eval_gradient=False):
        """LML of the training data at log-hyperparameters ``theta`` (fitted ones by default)."""
        check_is_fitted(self, "alpha_")
        if theta is None:
            theta = np.log(np.r_[self.lengthscales_, self.signal_variance_, self.noise_variance_])
        return log_marginal_likelihood(theta, self.X_train_, self.y_train_, eval_gradient)

    def posterior(self, X) -> Posterior:
        check_is_fitted(self, "alpha_")
        X = check_points(X)
        K_star = matern52(_sq_dists(self.X_train_, X), self.lengthscales_, self.signal_variance_)
        mean = K_star.T @ self.alpha_ + self.y_mean_
        v = solve_triangular(self.L_, K_star, lower=True, check_finite=False)
        var = self.signal_variance_ - np.einsum("ij,ij->j", v, v)
        return Posterior(mean, np.sqrt(np.clip(var, 0.0, None)))

    def predict(self, X, return_std=False):
        post = self.posterior(X)
        return (post.mean, post.stddev) if return_std else post.mean

    def hyperparameters(self) -> dict:
        check_is_fitted(self, "alpha_")
        out = {f"lengthscale_{k + 1}": float(v) for k, v in enumerate(self.lengthscales_)}
        out.update(signal_variance=self.signal_variance_, noise_variance=self.noise_variance_,
                   log_marginal_likelihood=self.log_marginal_likelihood_value_, jitter=self.jitter_)
        return out


@njit(cache=True)
def _grow_tree(X, y, min_leaf, feature, threshold, left, right, value):
    """Grow one CART regression tree in place; returns the node count.

    Splits minimize the summed squared error of the children; ties go to the
    lower feature index, then the lower threshold. Thresholds sit halfway
    between consecutive distinct values.
    """
    n, d = X.shape
    order = np.arange(n)
    # stack of (node id, start, stop) over the shared ``order`` buffer
    stack = np.empty((2 * n, 3), dtype=np.int64)
    stack[0, 0], stack[0, 1], stack[0, 2] = 0, 0, n
    top = 1
    count = 1
    while top > 0:
        top -= 1
        node, lo, hi = stack[top, 0], stack[top, 1], stack[top, 2]
        m = hi - lo
        total = 0.0
        for k in range(lo, hi):
            total += y[order[k]]
        value[node] = total / m
        feature[node] = -1
        if m < 2 * min_leaf:
            continue
        sq_total = 0.0
        for k in range(lo, hi):
            dev = y[order[k]] - value[node]
            sq_total += dev * dev
        if sq_total <= 1e-14 * max(1.0, abs(value[node])):
            continue

        best_gain, best_f, best_t = 1e-12 * sq_total, -1, 0.0
        for f in range(d):
            idx = order[lo:hi][np.argsort(X[order[lo:hi], f], kind="mergesort")]
            left_sum = 0.0
            for k in range(m - 1):
                left_sum += y[idx[k]]
                n_left = k + 1
                if n_left < min_leaf or m - n_left < min_leaf:
                    continue
                a, b = X[idx[k], f], X[idx[k + 1], f]
                if a == b:
                    continue
                right_sum = total - left_sum
                # SSE reduction equals this between-group term
                gain = left_sum * left_sum / n_left + right_sum * right_sum / (m - n_left) - total * total / m
                if gain > best_gain:
                    best_gain, best_f, best_t = gain, f, 0.5 * (a + b)
        if best_f < 0:
            continue

        # partition order[lo:hi] on the chosen split, stable
        seg = order[lo:hi].copy()
        pos = lo
        for k in range(m):
            if X[seg[k], best_f] <= best_t:
                order[pos] = seg[k]
                pos += 1
        mid = pos
        for k in range(m):
            if X[seg[k], best_f] > best_t:
                order[pos] = seg[k]
                pos += 1

        feature[node] = best_f
        threshold[node] = best_t
        left[node], right[node] = count, count + 1
        stack[top, 0], stack[top, 1], stack[top, 2] = count, lo, mid
        stack[top + 1, 0], stack[top + 1, 1], stack[top + 1, 2] = count + 1, mid, hi
        top += 2
        count += 2
    return count


@njit(cache=True)
def _grow_forest(X, y, bootstrap, min_leaf):
    n_trees, n = bootstrap.shape
    max_nodes = 2 * n - 1
    feature = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    threshold = np.zeros((n_trees, max_nodes))
    left = np.zeros((n_trees, max_nodes), dtype=np.int64)
    right = np.zeros((n_trees, max_nodes), dtype=np.int64)
    value = np.zeros((n_trees, max_nodes))
    for t in range(n_trees):
        idx = bootstrap[t]
        _grow_tree(X[idx], y[idx], min_leaf, feature[t], threshold[t], left[t], right[t], value[t])
    return feature, threshold, left, right, value


@njit(cache=True)
def _forest_predict(X, feature, threshold, left, right, value):
    n_trees = feature.shape[0]
    out = np.empty((n_trees, X.shape[0]))
    for t in range(n_trees):
        for i in range(X.shape[0]):
            node = 0
            while feature[t, node] >= 0:
                if X[i, feature[t, node]] <= threshold[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            out[t, i] = value[t, node]
    return out


class RandomForestSurrogate(RegressorMixin, BaseEstimator):
    """Bagged CART regression trees; uncertainty is the spread of per-tree predictions.

    All features are considered at every split. Tree ``t`` is grown on a
    bootstrap sample drawn from a generator seeded with ``(random_state, t)``.
    Training rows are put in a canonical order first, so the fitted forest
    does not depend on the order in which they were given.
    """

    def __init__(self, n_estimators=100, min_samples_leaf=1, random_state=0):
        self.n_estimators = n_estimators
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def fit(self, X, y):
        if self.n_estimators < 2:
            raise ValueError("n_estimators must be >= 2 to estimate spread across trees")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        X, y = check_points_targets(X, y)
        order = np.lexsort((y, X[:, 1], X[:, 0]))
        X, y = np.ascontiguousarray(X[order]), np.ascontiguousarray(y[order])
        n = len(y)
        seed = 0 if self.random_state is None else int(self.random_state)
        self.bootstrap_indices_ = np.stack([
            np.random.default_rng([seed, t]).integers(0, n, size=n) for t in range(self.n_estimators)
        ])
        self.trees_ = _grow_forest(X, y, self.bootstrap_indices_, int(self.min_samples_leaf))
        self.X_train_, self.y_train_ = X, y
        self.n_features_in_ = X.shape[1]
        return self

    def tree_predictions(self, X) -> np.ndarray:
        """Per-tree predictions, shape (n_estimators, len(X))."""
        check_is_fitted(self, "trees_")
        return _forest_predict(check_points(X), *self.trees_)

    def posterior(self, X) -> Posterior:
        preds = self.tree_predictions(X)
        return Posterior(preds.mean(axis=0), preds.std(axis=0))

    def predict(self, X, return_std=False):
        post = self.posterior(X)
        return (post.mean, post.stddev) if return_std else post.mean


def _as_point(point):
    return np.asarray(point, dtype=float).reshape(1, -1)


def gp_fit(points, targets, **params) -> GaussianProcessSurrogate:
    return GaussianProcessSurrogate(**params).fit(points, targets)


def gp_predict(model: GaussianProcessSurrogate, point) -> Posterior:
    mean, std = model.posterior(_as_point(point))
    return Posterior(float(mean[0]), float(std[0]))


def rf_fit(points, targets, seed=0, **params) -> RandomForestSurrogate:
    return RandomForestSurrogate(random_state=seed, **params).fit(points, targets)


def rf_predict(model: RandomForestSurrogate, point) -> Posterior:
    mean, std = model.posterior(_as_point(point))
    return Posterior(float(mean[0]), float(std[0]))


def make_surrogate(kind: str, random_state=0):
    if kind == "gp":
        return GaussianProcessSurrogate(random_state=random_state)
    if kind == "rf":
        return RandomForestSurrogate(random_state=random_state)
    raise ValueError(f"unknown surrogate {kind!r}; expected 'gp' or 'rf'")
