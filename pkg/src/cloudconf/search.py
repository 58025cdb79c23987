"""Random, grid and model-based searches over a configuration space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .acquisition import AcquisitionSpec, select_next
from .catalog import CloudConfiguration, ConfigurationSpace, VmType, normalize_coordinates
from .cost import Mode, Observation, config_cost
from .exceptions import NoSolutionError, ValidationError
from .surrogate import GaussianProcessSurrogate, RandomForestSurrogate
from .trace import DEFAULT_FAILURE_DETECT_S, ObservationBackend

POLICY_KINDS = ("random", "grid", "smbo")
SURROGATE_KINDS = ("gp", "rf")


@dataclass(frozen=True)
class SearchPolicy:
    kind: str = "smbo"
    surrogate: str | None = "gp"
    acquisition: AcquisitionSpec | None = field(default_factory=AcquisitionSpec)

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValidationError(f"unknown policy {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.kind == "smbo":
            if self.surrogate not in SURROGATE_KINDS:
                raise ValidationError(f"smbo needs a surrogate in {SURROGATE_KINDS}, got {self.surrogate!r}")
            if self.acquisition is None:
                raise ValidationError("smbo needs an acquisition function")
        else:
            object.__setattr__(self, "surrogate", None)
            object.__setattr__(self, "acquisition", None)

    @classmethod
    def smbo(cls, surrogate="gp", acquisition="ei", xi=0.0, kappa=2.0):
        return cls("smbo", surrogate, AcquisitionSpec(acquisition, xi, kappa))

    @property
    def name(self) -> str:
        if self.kind != "smbo":
            return self.kind
        return f"{self.surrogate}-{self.acquisition.kind}"

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "smbo":
            out.update(surrogate=self.surrogate, acquisition=self.acquisition.kind,
                       xi=self.acquisition.xi, kappa=self.acquisition.kappa)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SearchPolicy":
        kind = data.get("kind", "smbo")
        if kind != "smbo":
            return cls(kind, None, None)
        return cls.smbo(data.get("surrogate", "gp"), data.get("acquisition", "ei"),
                        float(data.get("xi", 0.0)), float(data.get("kappa", 2.0)))


@dataclass(frozen=True)
class Budget:
    max_observations: int = 32
    init_random: int = 8
    mode: Mode = Mode.FULL

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.init_random <= self.max_observations:
            raise ValidationError(
                f"need 0 < init_random <= max_observations, got {self.init_random} and {self.max_observations}"
            )


@dataclass
class SearchState:
    history: list[Observation] = field(default_factory=list)
    best_so_far: Observation | None = None
    accumulated_charge_usd: float = 0.0

    def record(self, obs: Observation) -> None:
        self.history.append(obs)
        self.accumulated_charge_usd += obs.charged_cost_usd
        if obs.feasible and (self.best_so_far is None
                             or obs.objective_cost_usd < self.best_so_far.objective_cost_usd):
            self.best_so_far = obs

    @property
    def observed(self) -> set[CloudConfiguration]:
        return {obs.config for obs in self.history}

    @property
    def infeasible(self) -> set[CloudConfiguration]:
        return {obs.config for obs in self.history if not obs.feasible}

    @property
    def feasible_history(self) -> list[Observation]:
        return [obs for obs in self.history if obs.feasible]


@dataclass
class SearchResult:
    state: SearchState
    best_curve: list[float]
    charge_curve: list[float]
    policy: SearchPolicy
    seed: int

    @property
    def recommended(self) -> CloudConfiguration:
        return self.state.best_so_far.config

    @property
    def history(self) -> list[Observation]:
        return self.state.history

    def to_dict(self, space: ConfigurationSpace) -> dict:
        best = self.state.best_so_far
        return {
            "policy": self.policy.to_dict(),
            "seed": self.seed,
            "history": [obs.to_dict(space.label(obs.config)) for obs in self.history],
            "best_cost_curve": [None if math.isinf(v) else v for v in self.best_curve],
            "charge_curve": self.charge_curve,
            "accumulated_charge_usd": self.state.accumulated_charge_usd,
            "recommendation": {
                "config": space.label(best.config),
                "vm": space.vm(best.config).name,
                "n": best.config.n,
                "runtime_s": best.runtime_estimate_s,
                "cost_usd": best.objective_cost_usd,
            },
        }


def failure_charge(vm: VmType, n: int, failure_detect_s: float = DEFAULT_FAILURE_DETECT_S) -> float:
    """USD billed for an observation that crashes after ``failure_detect_s`` seconds."""
    return config_cost(failure_detect_s, vm.price_usd_hour, n)


def accumulated_search_cost(state: SearchState) -> float:
    return math.fsum(obs.charged_cost_usd for obs in state.history)


def _surrogate_for(policy: SearchPolicy, seed: int, step: int):
    if policy.surrogate == "gp":
        return GaussianProcessSurrogate(random_state=0)
    rf_seed = int(np.random.SeedSequence([seed, step]).generate_state(1)[0])
    return RandomForestSurrogate(random_state=rf_seed)


def run_search(policy: SearchPolicy, backend: ObservationBackend, budget: Budget = Budget(),
               seed: int = 0, space: ConfigurationSpace | None = None) -> SearchResult:
    """Run one seeded search and return its history and per-step curves.

    The random stream first draws a permutation of the grid; random search
    and the initial phase of a model-based search both consume it in order,
    so they agree on their first ``init_random`` observations. Infeasible
    observations are charged and count against the budget but never train
    the surrogate or become the solution.
    """
    space = backend.space if space is None else space
    if len(space) == 0:
        raise ValidationError("empty configuration space")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(space))
    limit = min(budget.max_observations, len(space))
    state = SearchState()
    best_curve, charge_curve = [], []
    cursor = 0

    def next_unobserved(sequence):
        nonlocal cursor
        observed = state.observed
        while True:
            config = space.config_at(int(sequence[cursor]))
            cursor += 1
            if config not in observed:
                return config

    for step in range(limit):
        if policy.kind == "grid":
            config = space.config_at(step)
        elif policy.kind == "random" or step < budget.init_random or state.best_so_far is None:
            config = next_unobserved(order)
        else:
            train = state.feasible_history
            X = np.array([normalize_coordinates(space, obs.config) for obs in train])
            y = np.log([obs.objective_cost_usd for obs in train])
            model = _surrogate_for(policy, seed, step).fit(X, y)
            config = select_next(model, space, policy.acquisition, state.observed, state.infeasible,
                                 float(y.min()), rng)
        state.record(backend.observe(config, budget.mode))
        best = state.best_so_far
        best_curve.append(math.inf if best is None else best.objective_cost_usd)
        charge_curve.append(state.accumulated_charge_usd)

    if state.best_so_far is None:
        raise NoSolutionError("no feasible configuration was observed", state.accumulated_charge_usd)
    return SearchResult(state, best_curve, charge_curve, policy, seed)


class CloudConfigSearch(BaseEstimator):
    """Estimator-style front end to :func:`run_search`.

    ``fit(backend)`` runs the search; results are exposed as ``result_``,
    ``best_config_`` and ``best_cost_``.
    """

    def __init__(self, policy="smbo", surrogate="gp", acquisition="ei", xi=0.0, kappa=2.0,
                 max_observations=32, init_random=8, mode="full", random_state=0):
        self.policy = policy
        self.surrogate = surrogate
        self.acquisition = acquisition
        self.xi = xi
        self.kappa = kappa
        self.max_observations = max_observations
        self.init_random = init_random
        self.mode = mode
        self.random_state = random_state

    def _policy(self) -> SearchPolicy:
        if self.policy == "smbo":
            return SearchPolicy.smbo(self.surrogate, self.acquisition, self.xi, self.kappa)
        return SearchPolicy(self.policy, None, None)

    def fit(self, backend: ObservationBackend, y=None):
        budget = Budget(self.max_observations, self.init_random, Mode(self.mode))
        self.result_ = run_search(self._policy(), backend, budget, self.random_state)
        self.best_config_ = self.result_.recommended
        self.best_cost_ = self.result_.state.best_so_far.objective_cost_usd
        self.history_ = self.result_.history
        return self
