import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vtamp.bench import (
    CSV_FIELDS,
    ScalingRow,
    SpectrumSpec,
    fit_slope,
    gen_instance,
    rows_to_csv,
    rows_to_json,
    run_one,
    scaling_experiment,
    synthetic_suite,
    worker_count,
)
from vtamp.vtmodel import stopping_profile, validate


@given(st.sampled_from(["log-uniform", "bimodal", "clustered"]), st.sampled_from([2.0, 4.0, 16.0, 64.0]),
       st.integers(2, 16), st.integers(0, 10_000))
def test_spectrum_in_range(kind, kappa, n, seed):
    inst, b = gen_instance(n, SpectrumSpec(kind, kappa), seed)
    lam = inst.eigenvalues
    assert lam.min() >= 1 / kappa - 1e-12 and lam.max() <= 1 + 1e-12
    assert abs(np.linalg.norm(b) - 1) < 1e-12
    if kind == "bimodal":
        assert np.sum(lam <= 2 / kappa + 1e-12) >= n // 2
        assert np.sum(lam >= 0.5 - 1e-12) >= n - n // 2


def test_clustered_base():
    inst, _ = gen_instance(8, SpectrumSpec("clustered", 16, a=0.25), 0)
    assert inst.eigenvalues.min() >= 0.25 and inst.eigenvalues.max() <= 0.5
    with pytest.raises(ValueError):
        SpectrumSpec("clustered", 16, a=0.01)
    with pytest.raises(ValueError):
        SpectrumSpec("flat", 16)


def test_b_modes():
    inst, b = gen_instance(8, SpectrumSpec("bimodal", 64), 1, "adversarial")
    alpha = inst.to_eigenbasis(b)
    assert np.allclose(alpha[4:], 0)
    inst, b = gen_instance(8, SpectrumSpec("bimodal", 64), 1, "image")
    alpha = np.abs(inst.to_eigenbasis(b)) ** 2
    assert alpha[4:].sum() > alpha[:4].sum()
    with pytest.raises(ValueError):
        gen_instance(8, SpectrumSpec("bimodal", 64), 1, "other")


def test_fit_slope_exact():
    rows = [ScalingRow("x", k, 4, s, 3.0 * k**1.5 * (1 + 0.01 * s), 1, 1, 1, 1) for k in (4, 8, 16) for s in range(3)]
    fit = fit_slope(rows)
    assert fit.slope == pytest.approx(1.5, abs=1e-9)
    with pytest.raises(ValueError):
        fit_slope(rows[:6])


def test_fit_uses_median():
    rows = [ScalingRow("x", k, 4, 0, k, 1, 1, 1, 1) for k in (4, 8, 16)]
    rows += [ScalingRow("x", k, 4, 1, k, 1, 1, 1, 1) for k in (4, 8, 16)]
    rows += [ScalingRow("x", 16, 4, 2, 1e9, 1, 1, 1, 1)]
    assert fit_slope(rows).slope == pytest.approx(1.0, abs=1e-9)


def test_experiment_deterministic_and_threaded(monkeypatch):
    a = scaling_experiment(["vtaa", "hhl"], [4, 8, 16], 2, 2, seed=3, workers=1)
    monkeypatch.setenv("VTAMP_THREADS", "2")
    assert worker_count() <= 2
    b = scaling_experiment(["vtaa", "hhl"], [4, 8, 16], 2, 2, seed=3)
    assert rows_to_csv(a) == rows_to_csv(b)
    assert rows_to_csv(a).splitlines()[0] == ",".join(CSV_FIELDS)
    for r in a:
        assert 0 <= r.fidelity <= 1 and r.cost > 0
    assert json.loads(rows_to_json(a))[0]["method"] == "vtaa"
    with pytest.raises(ValueError):
        scaling_experiment(["vtaa"], [8, 4], 2, 1)


def test_run_one_unknown_method():
    with pytest.raises(ValueError):
        run_one("magic", 4, 2, 0, "bimodal")


def test_synthetic_suite_regime():
    for v in synthetic_suite(20, seed=0):
        prof = stopping_profile(v)
        assert prof.t_max / prof.t_av >= 8
        assert prof.p_succ <= 0.05
        assert validate(v).passed


def test_synthetic_suite_deterministic():
    a = [stopping_profile(v).p_succ for v in synthetic_suite(3, 4)]
    b = [stopping_profile(v).p_succ for v in synthetic_suite(3, 4)]
    assert a == b and not math.isclose(a[0], a[1])
