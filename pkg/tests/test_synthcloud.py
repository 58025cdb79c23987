import math

import numpy as np
import pytest

from cloudconf.catalog import VmType, default_space
from cloudconf.cost import Mode
from cloudconf.exceptions import ParseError, ValidationError
from cloudconf.synthcloud import (
    PRESET_MODELS, AmdahlModel, SyntheticBackend, load_model, synth_runtime, synth_space, synth_trace_rows,
)
from cloudconf.trace import TraceBackend, Trace

VM4 = VmType("v4", 4, 16.0, 25.0, 0.2)


def test_hand_evaluated_runtime():
    model = AmdahlModel(t1_s=1000, serial_fraction=0.1, comm_coeff_s=100, mem_req_gib=0, noise_sigma=0)
    assert synth_runtime(model, VM4, 2) == pytest.approx(216.5, rel=1e-12)


def test_degenerate_models():
    serial = AmdahlModel(t1_s=500, serial_fraction=1.0, comm_coeff_s=0, mem_req_gib=0, noise_sigma=0)
    assert synth_runtime(serial, VM4, 1) == 500
    perfect = AmdahlModel(t1_s=800, serial_fraction=0.0, comm_coeff_s=0, mem_req_gib=0, noise_sigma=0)
    assert synth_runtime(perfect, VmType("v2", 2, 4.0, 10.0, 0.1), 2) == 200


def test_memory_infeasible():
    model = AmdahlModel(mem_req_gib=100, noise_sigma=0)
    assert synth_runtime(model, VM4, 4) is None
    assert synth_runtime(model, VM4, 8) is not None


def test_space_feasibility_extremes(space):
    everything = synth_space(AmdahlModel(mem_req_gib=0), space)
    assert len(everything) == 192 and all(e.feasible for e in everything.values())
    nothing = synth_space(AmdahlModel(mem_req_gib=1e9), space)
    assert not any(e.feasible for e in nothing.values())


def test_seeded_determinism(space):
    a = synth_space(AmdahlModel(seed=9), space)
    b = synth_space(AmdahlModel(seed=9), space)
    c = synth_space(AmdahlModel(seed=10), space)
    assert a == b
    assert a != c


def test_noise_stream_aligned_with_grid(space):
    # infeasible cells still consume a draw, so a feasible cell's noise is the same
    # whatever the memory requirement
    loose = synth_space(AmdahlModel(mem_req_gib=0, seed=4), space)
    tight = synth_space(AmdahlModel(mem_req_gib=64, seed=4), space)
    for config, entry in tight.items():
        if entry.feasible:
            assert entry.runtime_s == loose[config].runtime_s


def test_noise_free_monotone_in_vcpus_without_communication():
    model = AmdahlModel(t1_s=1000, serial_fraction=0.2, comm_coeff_s=0, mem_req_gib=0, noise_sigma=0)
    times = [synth_runtime(model, VM4, n) for n in (1, 2, 4, 8, 16)]
    assert all(b < a for a, b in zip(times, times[1:]))


def test_model_file_formats():
    kv = load_model("# model\nt1_s=100\nserial_fraction=0.5\nseed=3\n")
    assert kv == AmdahlModel(t1_s=100, serial_fraction=0.5, seed=3)
    csv_form = load_model("t1_s,serial_fraction,seed\n100,0.5,3\n")
    assert csv_form == kv
    assert load_model(kv.to_text()) == kv
    with pytest.raises(ParseError):
        load_model("bogus=1\n")
    with pytest.raises(ValidationError):
        load_model("serial_fraction=2\n")


def test_backend_pi_mode(space):
    backend = SyntheticBackend(AmdahlModel(mem_req_gib=0), space, pi_fraction=0.25)
    c = space.config_at(7)
    full = backend.observe(c, Mode.FULL)
    pi = backend.observe(c, Mode.PI)
    assert pi.objective_cost_usd == full.objective_cost_usd
    assert pi.charged_cost_usd == pytest.approx(0.25 * full.charged_cost_usd, rel=1e-12)


def test_trace_rows_uniform_fraction(space):
    rows = synth_trace_rows(AmdahlModel(mem_req_gib=0), space, pi_fraction=0.14)
    backend = TraceBackend(Trace(rows), space)
    for c in list(space)[::17]:
        full, pi = backend.observe(c, Mode.FULL), backend.observe(c, Mode.PI)
        assert pi.charged_cost_usd / full.charged_cost_usd == pytest.approx(0.14, rel=1e-9)


def test_presets_are_mostly_feasible(space):
    assert len(PRESET_MODELS) == 5
    for model in PRESET_MODELS.values():
        entries = synth_space(model, space).values()
        assert sum(e.feasible for e in entries) >= 150
        assert model.noise_sigma == 0.05
