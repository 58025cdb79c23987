import math

import numpy as np
import pytest

from cloudconf.catalog import VmType, default_space, enumerate_space
from cloudconf.cost import Mode, Observation
from cloudconf.exceptions import NoSolutionError, ValidationError
from cloudconf.search import (
    Budget, CloudConfigSearch, SearchPolicy, SearchState, accumulated_search_cost, failure_charge, run_search,
)
from cloudconf.synthcloud import PRESET_MODELS, AmdahlModel, SyntheticBackend, synth_trace_rows
from cloudconf.trace import Trace, TraceBackend

POLICIES = [
    SearchPolicy("random", None, None),
    SearchPolicy("grid", None, None),
    SearchPolicy.smbo("gp", "ei"),
    SearchPolicy.smbo("rf", "lcb"),
]


@pytest.fixture(scope="module")
def backend():
    return SyntheticBackend(PRESET_MODELS["compute-bound"], default_space())


def test_failure_charge():
    vm = VmType("m5n.large", 2, 8.0, 25.0, 0.119)
    assert failure_charge(vm, 2) == pytest.approx(0.119 * 2 * 120 / 3600, rel=1e-12)
    assert failure_charge(vm, 2) == pytest.approx(0.00793, abs=1e-5)
    assert failure_charge(vm, 2, 0) == 0.0


def test_accumulated_cost():
    assert accumulated_search_cost(SearchState()) == 0
    state = SearchState()
    for charge in (0.1, 0.2):
        state.record(Observation(default_space().config_at(0), 1.0, charge, 1.0, True, Mode.FULL))
    assert accumulated_search_cost(state) == pytest.approx(0.3)


@pytest.mark.parametrize("policy", POLICIES, ids=lambda p: p.name)
def test_invariants(policy, backend):
    result = run_search(policy, backend, Budget(16, 4), seed=3)
    configs = [o.config for o in result.history]
    assert len(configs) == len(set(configs)) == 16
    assert all(b <= a for a, b in zip(result.best_curve, result.best_curve[1:]))
    assert all(b > a for a, b in zip(result.charge_curve, result.charge_curve[1:]))
    feasible = [o.objective_cost_usd for o in result.history if o.feasible]
    assert result.best_curve[-1] == min(feasible)
    assert result.state.best_so_far.feasible


def test_same_seed_same_result(backend):
    policy = SearchPolicy.smbo("gp", "ei")
    a = run_search(policy, backend, Budget(12, 4), seed=5)
    b = run_search(policy, backend, Budget(12, 4), seed=5)
    assert a.history == b.history


def test_init_equals_budget_reduces_to_random(backend):
    smbo = run_search(SearchPolicy.smbo("gp", "ei"), backend, Budget(10, 10), seed=11)
    rand = run_search(SearchPolicy("random", None, None), backend, Budget(10, 10), seed=11)
    assert smbo.history == rand.history


def test_smbo_starts_with_random_prefix(backend):
    smbo = run_search(SearchPolicy.smbo("rf", "ei"), backend, Budget(12, 5), seed=2)
    rand = run_search(SearchPolicy("random", None, None), backend, Budget(12, 5), seed=2)
    assert smbo.history[:5] == rand.history[:5]


def test_grid_scan_finds_global_optimum():
    space = default_space()
    backend = SyntheticBackend(AmdahlModel(noise_sigma=0.0, mem_req_gib=16), space)
    costs = [backend.observe(c).objective_cost_usd for c in space if backend.observe(c).feasible]
    result = run_search(SearchPolicy("grid", None, None), backend, Budget(1000, 8))
    assert len(result.history) == 192
    assert result.best_curve[-1] == min(costs)


def test_single_feasible_configuration(small_space):
    # only c.large x 4 has 128 GiB
    backend = SyntheticBackend(AmdahlModel(mem_req_gib=128), small_space)
    for policy in POLICIES:
        result = run_search(policy, backend, Budget(9, 2), seed=1)
        assert result.recommended == small_space.config_for("c.large", 4)


def test_all_infeasible_raises_with_charge(small_space):
    backend = SyntheticBackend(AmdahlModel(mem_req_gib=1e6), small_space)
    with pytest.raises(NoSolutionError) as info:
        run_search(SearchPolicy("random", None, None), backend, Budget(5, 2))
    expected = sum(failure_charge(small_space.vm(c), c.n) for c in small_space)
    assert 0 < info.value.accumulated_charge_usd < expected


def test_infeasible_excluded_from_training(small_space, monkeypatch):
    backend = SyntheticBackend(AmdahlModel(mem_req_gib=16), small_space)
    seen = []
    from cloudconf import surrogate
    original = surrogate.GaussianProcessSurrogate.fit

    def spy(self, X, y):
        seen.append(len(y))
        assert np.all(np.isfinite(y))
        return original(self, X, y)

    monkeypatch.setattr(surrogate.GaussianProcessSurrogate, "fit", spy)
    result = run_search(SearchPolicy.smbo("gp", "ei"), backend, Budget(9, 3), seed=0)
    n_feasible_before = [sum(o.feasible for o in result.history[:k]) for k in range(3, 9)]
    assert seen == [n for n in n_feasible_before if n > 0][: len(seen)]
    assert any(not o.feasible for o in result.history)


def test_budget_capped_by_space(small_space):
    backend = SyntheticBackend(AmdahlModel(mem_req_gib=0), small_space)
    result = run_search(SearchPolicy("random", None, None), backend, Budget(50, 3))
    assert len(result.history) == len(small_space)


def test_pi_charge_ratio_on_uniform_trace():
    space = default_space()
    trace = Trace(synth_trace_rows(AmdahlModel(mem_req_gib=0), space, pi_fraction=0.14))
    backend = TraceBackend(trace, space)
    full = run_search(SearchPolicy("random", None, None), backend, Budget(32, 8, Mode.FULL), seed=4)
    pi = run_search(SearchPolicy("random", None, None), backend, Budget(32, 8, Mode.PI), seed=4)
    assert [o.config for o in full.history] == [o.config for o in pi.history]
    ratio = pi.state.accumulated_charge_usd / full.state.accumulated_charge_usd
    assert ratio == pytest.approx(0.14, rel=1e-9)


def test_budget_and_policy_validation():
    with pytest.raises(ValidationError):
        Budget(4, 8)
    with pytest.raises(ValidationError):
        SearchPolicy("anneal")
    with pytest.raises(ValidationError):
        SearchPolicy("smbo", "svm")
    p = SearchPolicy.smbo("rf", "mpi", xi=0.1)
    assert SearchPolicy.from_dict(p.to_dict()) == p
    assert p.name == "rf-mpi"


def test_estimator_wrapper(backend):
    est = CloudConfigSearch(max_observations=10, init_random=4, random_state=3).fit(backend)
    direct = run_search(SearchPolicy.smbo(), backend, Budget(10, 4), seed=3)
    assert est.best_config_ == direct.recommended
    assert est.best_cost_ == direct.best_curve[-1]
    assert est.get_params()["surrogate"] == "gp"


def test_result_json_shape(backend):
    out = run_search(SearchPolicy("random", None, None), backend, Budget(6, 2), seed=0).to_dict(backend.space)
    assert set(out) >= {"policy", "seed", "history", "best_cost_curve", "charge_curve", "recommendation"}
    assert len(out["history"]) == 6
