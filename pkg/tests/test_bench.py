import numpy as np
import pytest

from cloudconf.bench import (
    ExperimentSpec, Strategy, export_csv, gap_to_optimum, geometric_mean, normalize_to_random, report_to_dict,
    run_experiment, ExperimentReport, StrategyReport,
)
from cloudconf.catalog import VmType, default_space, enumerate_space
from cloudconf.exceptions import ValidationError
from cloudconf.search import Budget, SearchPolicy, run_search
from cloudconf.synthcloud import PRESET_MODELS, AmdahlModel, SyntheticBackend

RANDOM = SearchPolicy("random", None, None)


def test_geometric_mean():
    assert geometric_mean([1, 1, 1]) == 1
    assert geometric_mean([2, 8]) == pytest.approx(4)
    assert geometric_mean([5]) == pytest.approx(5)
    with pytest.raises(ValidationError):
        geometric_mean([1, 0])
    with pytest.raises(ValidationError):
        geometric_mean([])


@pytest.fixture(scope="module")
def backend():
    return SyntheticBackend(PRESET_MODELS["network-bound"], default_space())


def test_single_repetition_curves_equal_run(backend):
    spec = ExperimentSpec.from_policies([RANDOM], budget=Budget(10, 3), repetitions=1, base_seed=4)
    report = run_experiment(spec, backend)
    run = run_search(RANDOM, backend, Budget(10, 3), seed=4)
    np.testing.assert_allclose(report["random"].best_curve, run.best_curve, rtol=1e-12)
    np.testing.assert_allclose(report["random"].charge_full_curve, run.charge_curve, rtol=1e-12)


def test_identical_policies_identical_sections(backend):
    spec = ExperimentSpec.from_policies([RANDOM, RANDOM], budget=Budget(8, 2), repetitions=3)
    report = run_experiment(spec, backend)
    assert list(report.strategies) == ["random", "random#2"]
    a, b = report["random"], report["random#2"]
    assert a.best_curve == b.best_curve and a.charge_pi_curve == b.charge_pi_curve
    norm = normalize_to_random(report)
    assert norm["random"]["normalized_best_curve"] == [1.0] * 8
    assert norm["random#2"]["improvement_factor"] == 1.0


def test_pi_curve_below_full(backend):
    spec = ExperimentSpec.from_policies([RANDOM, SearchPolicy.smbo("rf", "ei")], budget=Budget(10, 3), repetitions=3)
    report = run_experiment(spec, backend)
    for s in report.strategies.values():
        assert all(p <= f for p, f in zip(s.charge_pi_curve, s.charge_full_curve))
        assert all(b <= a for a, b in zip(s.best_curve, s.best_curve[1:]))


def test_grid_reaches_optimum_noise_free():
    space = default_space()
    backend = SyntheticBackend(AmdahlModel(noise_sigma=0.0), space)
    spec = ExperimentSpec.from_policies([SearchPolicy("grid", None, None)], budget=Budget(192, 8), repetitions=1)
    report = run_experiment(spec, backend)
    assert gap_to_optimum(report)["grid"] == 0.0


def _fake_report(random_final, other_final):
    def sr(label, finals):
        return StrategyReport(label, RANDOM, [geometric_mean(finals)], [1.0], [0.1], finals, [1.0], [0.1])
    spec = ExperimentSpec([Strategy("random", RANDOM), Strategy("x", RANDOM)], repetitions=len(random_final))
    return ExperimentReport(spec, {"random": sr("random", random_final), "x": sr("x", other_final)}, 1.0)


def test_normalization_arithmetic():
    report = _fake_report([2.0, 8.0], [1.0, 4.0])
    norm = normalize_to_random(report)
    assert norm["x"]["improvement_factor"] == pytest.approx(2.0)
    assert norm["x"]["normalized_best_curve"] == [pytest.approx(0.5)]
    del report.strategies["random"]
    with pytest.raises(ValidationError):
        normalize_to_random(report)


def test_gap_definition():
    report = _fake_report([1.13, 1.13], [1.0, 1.0])
    gaps = gap_to_optimum(report)
    assert gaps["random"] == pytest.approx(0.13)
    assert gaps["x"] == 0.0


def test_exhaustive_random_has_zero_gap():
    vms = [VmType(f"v{i}", 2 ** (i % 3), 8.0, 10.0, 0.1 * (i + 1)) for i in range(5)]
    space = enumerate_space(vms, (1, 2))
    backend = SyntheticBackend(AmdahlModel(mem_req_gib=0), space)
    spec = ExperimentSpec.from_policies([RANDOM], budget=Budget(10, 2), repetitions=4)
    assert gap_to_optimum(run_experiment(spec, backend))["random"] == pytest.approx(0.0, abs=1e-15)


def test_report_dict_and_csv(backend):
    spec = ExperimentSpec.from_policies([RANDOM, SearchPolicy.smbo("gp", "ei")], budget=Budget(6, 2), repetitions=2)
    d = report_to_dict(run_experiment(spec, backend), backend.space)
    assert d["schema_version"] == 1 and d["kind"] == "bench_report"
    assert set(d["strategies"]) == {"random", "gp-ei"}
    rows = export_csv(d).strip().splitlines()
    assert rows[0] == "step,strategy,geomean_best,geomean_charge_full,geomean_charge_pi"
    assert len(rows) == 1 + 2 * 6


def test_spec_validation():
    with pytest.raises(ValidationError):
        ExperimentSpec([])
    with pytest.raises(ValidationError):
        ExperimentSpec([Strategy("a", RANDOM), Strategy("a", RANDOM)])
    assert list(ExperimentSpec([Strategy("a", RANDOM)], repetitions=3, base_seed=7).seeds) == [7, 8, 9]
