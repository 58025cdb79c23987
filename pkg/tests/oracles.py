"""Brute-force reference implementations used by the tests."""

import numpy as np


def matern52_dense(A, B, lengthscales, signal_variance):
    K = np.empty((len(A), len(B)))
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            r = np.sqrt(np.sum(((a - b) / lengthscales) ** 2))
            K[i, j] = signal_variance * (1 + np.sqrt(5) * r + 5 * r * r / 3) * np.exp(-np.sqrt(5) * r)
    return K


def gp_posterior_dense(X, y, Xq, lengthscales, signal_variance, noise_variance, jitter=0.0):
    m = y.mean()
    K = matern52_dense(X, X, lengthscales, signal_variance) + (noise_variance + jitter) * np.eye(len(X))
    Ks = matern52_dense(X, Xq, lengthscales, signal_variance)
    Kinv = np.linalg.inv(K)
    mean = m + Ks.T @ Kinv @ (y - m)
    var = signal_variance - np.einsum("ij,ik,kj->j", Ks, Kinv, Ks)
    return mean, np.sqrt(np.maximum(var, 0))


def gp_lml_dense(X, y, lengthscales, signal_variance, noise_variance):
    K = matern52_dense(X, X, lengthscales, signal_variance) + noise_variance * np.eye(len(X))
    _, logdet = np.linalg.slogdet(K)
    return -0.5 * y @ np.linalg.solve(K, y) - 0.5 * logdet - 0.5 * len(y) * np.log(2 * np.pi)


def pareto_bruteforce(points):
    """Indices of points no other point weakly dominates with a strict improvement."""
    keep = []
    for i, (ri, ci) in enumerate(points):
        dominated = any(
            rj <= ri and cj <= ci and (rj < ri or cj < ci) for j, (rj, cj) in enumerate(points) if j != i
        )
        if not dominated:
            keep.append(i)
    return keep


def area_monte_carlo(normalized, samples, rng):
    u = rng.random((samples, 2))
    pts = np.asarray(normalized)
    covered = np.zeros(samples, dtype=bool)
    for x, y in pts:
        covered |= (u[:, 0] <= x) & (u[:, 1] <= y)
    return covered.mean()
