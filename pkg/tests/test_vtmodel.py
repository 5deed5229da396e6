import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faults import base_vta, fault_cases
from vtamp.vtmodel import InfeasibleProfile, bucket_times, stopping_profile, synth_vta, validate


def test_synth_validates_tightly():
    rep = validate(base_vta())
    assert rep.passed
    for s in rep.stages:
        assert max(s.decomposition_residual, s.consistency_residual, s.stopped_identity_residual) <= 1e-10


@pytest.mark.parametrize("name,vta", fault_cases(), ids=[n for n, _ in fault_cases()])
def test_fault_is_detected(name, vta):
    assert not validate(vta).passed, name


def test_all_stop_at_first():
    v = synth_vta([1, 2], [1.0, 0.0], [0.4, 0.4])
    prof = stopping_profile(v)
    assert prof.t_av == pytest.approx(1.0)
    assert prof.p_stop_leq[0] == pytest.approx(1.0)


def test_two_point_t_av():
    prof = stopping_profile(synth_vta([2, 4], [0.5, 0.5], [0.25, 0.5]))
    assert prof.t_av == pytest.approx(math.sqrt(10), abs=1e-12)
    assert prof.p_succ == pytest.approx(0.5)
    assert np.allclose(prof.p_succ_i, [0.25, 0.5])


def test_residual_mass_counts_at_last_stage():
    prof = stopping_profile(synth_vta([1, 2], [0.5, 0.0], [0.1, 0.1]))
    assert prof.p_stop_gt[-1] == pytest.approx(0.5)
    assert prof.t_av == pytest.approx(math.sqrt(0.5 + 0.5 * 4))


def test_infeasible_specs_rejected():
    with pytest.raises(InfeasibleProfile):
        synth_vta([2, 4], [0.2, 0.5], [0.3, 0.5])
    with pytest.raises(InfeasibleProfile):
        synth_vta([2, 4], [0.7, 0.5], [0.1, 0.1])
    with pytest.raises(InfeasibleProfile):
        synth_vta([2, 4], [0.5, 0.5], [0.3, 0.2])
    with pytest.raises(ValueError):
        synth_vta([4, 2], [0.5, 0.5], [0.1, 0.2])


@st.composite
def specs(draw):
    m = draw(st.integers(1, 8))
    w = np.array(draw(st.lists(st.floats(0, 1), min_size=m + 1, max_size=m + 1)))
    if w.sum() == 0:
        w[0] = 1
    p_stop = (w / w.sum())[:m]
    frac = np.array(draw(st.lists(st.floats(0, 1), min_size=m, max_size=m)))
    p_succ = np.cumsum(p_stop * frac)
    times = np.cumsum(np.array(draw(st.lists(st.floats(0.5, 10), min_size=m, max_size=m))))
    return times, p_stop, p_succ


@given(specs(), st.integers(0, 1000))
def test_synth_round_trip(spec, seed):
    times, p_stop, p_succ = spec
    v = synth_vta(times, p_stop, p_succ, seed=seed)
    assert validate(v).passed
    prof = stopping_profile(v)
    assert np.allclose(prof.p_stop_leq, np.cumsum(p_stop), atol=1e-9)
    assert np.allclose(prof.p_succ_i, p_succ, atol=1e-9)
    assert np.all(np.diff(prof.p_stop_leq) >= -1e-12)
    assert np.all(np.diff(prof.p_succ_i) >= -1e-12)
    assert prof.t_av <= prof.t_max * (1 + 1e-12)


def test_bucket_times():
    assert np.array_equal(bucket_times([1, 3, 4, 5.5]), [1, 4, 4, 8])


def test_report_json_fields():
    d = validate(base_vta()).to_dict()
    assert d["passed"] and len(d["stages"]) == 4
    assert set(stopping_profile(base_vta()).to_dict()) >= {"t_av", "t_max", "p_succ", "p_stop_leq"}
