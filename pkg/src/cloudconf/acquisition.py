"""Acquisition functions for minimization and exhaustive next-point selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection

import numpy as np
from scipy.special import ndtr

from .catalog import CloudConfiguration, ConfigurationSpace, normalize_coordinates
from .exceptions import ExhaustedSpaceError, ValidationError

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
KINDS = ("ei", "mpi", "lcb")


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = "ei"
    xi: float = 0.0
    kappa: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.lower())
        if self.kind not in KINDS:
            raise ValidationError(f"unknown acquisition {self.kind!r}; expected one of {KINDS}")
        if self.xi < 0:
            raise ValidationError(f"xi must be >= 0, got {self.xi}")
        if self.kappa < 0:
            raise ValidationError(f"kappa must be >= 0, got {self.kappa}")

    @property
    def maximize(self) -> bool:
        return self.kind != "lcb"


def _improvement(mean, stddev, best, xi):
    mean = np.asarray(mean, dtype=float)
    stddev = np.asarray(stddev, dtype=float)
    gain = best - mean - xi
    positive = stddev > 0
    with np.errstate(over="ignore"):
        z = np.divide(gain, stddev, out=np.zeros_like(gain), where=positive)
    return gain, stddev, positive, z


def _unwrap(value):
    return float(value) if np.ndim(value) == 0 else value


def expected_improvement(post, best: float, xi: float = 0.0):
    """Expected amount by which the cost falls below ``best - xi``."""
    gain, stddev, positive, z = _improvement(post[0], post[1], best, xi)
    with np.errstate(over="ignore"):
        ei = gain * ndtr(z) + stddev * _INV_SQRT_2PI * np.exp(-0.5 * z**2)
    ei = np.where(positive, ei, np.maximum(gain, 0.0))
    # rounding can push tiny values below zero
    return _unwrap(np.maximum(ei, 0.0))


def probability_of_improvement(post, best: float, xi: float = 0.0):
    gain, _, positive, z = _improvement(post[0], post[1], best, xi)
    pi = np.where(positive, ndtr(z), (gain > 0).astype(float))
    return _unwrap(pi)


def lower_confidence_bound(post, kappa: float = 2.0):
    """``mean - kappa * stddev``; smaller is more promising."""
    return _unwrap(np.asarray(post[0], dtype=float) - kappa * np.asarray(post[1], dtype=float))


def score(spec: AcquisitionSpec, post, best: float):
    if spec.kind == "ei":
        return expected_improvement(post, best, spec.xi)
    if spec.kind == "mpi":
        return probability_of_improvement(post, best, spec.xi)
    return lower_confidence_bound(post, spec.kappa)


def pick_best(scores, rng: np.random.Generator, maximize: bool = True) -> int:
    """Index of the best score, breaking exact ties uniformly at random."""
    scores = np.asarray(scores, dtype=float)
    target = scores.max() if maximize else scores.min()
    ties = np.flatnonzero(scores == target)
    return int(ties[rng.integers(len(ties))])


def select_next(surrogate, space: ConfigurationSpace, spec: AcquisitionSpec,
                observed: Collection[CloudConfiguration], infeasible: Collection[CloudConfiguration],
                best: float, rng: np.random.Generator) -> CloudConfiguration:
    """Score every unobserved, not-known-infeasible configuration and return the most promising."""
    excluded = set(observed) | set(infeasible)
    candidates = [c for c in space if c not in excluded]
    if not candidates:
        raise ExhaustedSpaceError("every configuration has been observed or is known infeasible")
    points = np.array([normalize_coordinates(space, c) for c in candidates])
    post = surrogate.posterior(points)
    return candidates[pick_best(score(spec, post, best), rng, spec.maximize)]

