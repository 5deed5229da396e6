import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vtamp.bench import SpectrumSpec, gen_instance
from vtamp.phase import (
    UniqueEstConfig,
    candidates,
    circuit_distribution,
    grid,
    grid_position,
    idealized_distribution,
    is_good,
    k_uniq_for,
    majority_distribution,
    pe_forward,
    pe_reverse,
    phase_estimate,
    shifted,
    single_run_distribution,
    unique_est,
    uniqueest_distribution,
)
from vtamp.registers import CostLedger, QuantumState, RegisterLayout, eigendecompose


def fejer(lam, n):
    # closed formula, evaluated independently of the package
    size = 1 << n
    d = lam - grid(n)
    out = np.empty(size)
    for i, x in enumerate(d):
        den = math.sin(math.pi * x / 2) ** 2
        out[i] = 1.0 if abs(den) < 1e-30 else math.sin(size * math.pi * x / 2) ** 2 / den / size**2
    return out


def test_k_uniq_constant():
    assert k_uniq_for(0.1) == 691
    assert k_uniq_for(0.2) == math.ceil(3 * 25 * math.log(5))


def test_on_grid_is_deterministic():
    p = single_run_distribution(0.5, 4)
    assert p[4] == pytest.approx(1.0, abs=1e-12)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_midway_tends_to_four_over_pi_squared():
    vals = []
    for n in (4, 6, 8, 10):
        step = 2.0 ** (1 - n)
        lam = 0.25 + step / 2
        p = single_run_distribution(lam, n)
        k = int(0.25 / step)
        assert p[k] == pytest.approx(p[k + 1], abs=1e-12)
        vals.append(p[k])
    assert abs(vals[-1] - 4 / math.pi**2) < abs(vals[0] - 4 / math.pi**2)
    assert vals[-1] == pytest.approx(4 / math.pi**2, abs=1e-5)


def test_circuit_matches_formula_at_0_3():
    assert np.max(np.abs(circuit_distribution(0.3, 5) - fejer(0.3, 5))) < 1e-10


@given(st.floats(1e-3, 1.0), st.integers(1, 8))
def test_distribution_properties(lam, n):
    p = single_run_distribution(lam, n)
    assert abs(p.sum() - 1) < 1e-12
    x0, _ = grid_position(lam, n)
    assert np.argmax(p) == x0 % (1 << n) or p[np.argmax(p)] == pytest.approx(p[x0 % (1 << n)], abs=1e-12)
    assert np.max(np.abs(p - fejer(lam, n))) < 1e-10


def test_rejects_lambda_out_of_range():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            single_run_distribution(bad, 4)


def test_phase_estimate_state_and_reverse():
    inst = eigendecompose(np.diag([0.3, 0.75]), 4)
    lay = RegisterLayout(2, 1, 5)
    psi = QuantumState.from_input(lay, [1, 0])
    led = CostLedger()
    out = phase_estimate(psi, inst, 5, ledger=led)
    dist = np.abs(out.amplitudes[0, 2, 1, :]) ** 2
    assert np.max(np.abs(dist - fejer(0.3, 5))) < 1e-10
    assert led.evolution_time == 32
    back = phase_estimate(out, inst, 5, reverse=True, ledger=led)
    assert back.allclose(psi, 1e-10)
    assert led.evolution_time == 64
    on_grid = phase_estimate(QuantumState.from_input(lay, [0, 1]), inst, 3)
    assert abs(abs(on_grid.amplitudes[1, 2, 1, 3]) - 1) < 1e-12
    with pytest.raises(ValueError):
        phase_estimate(out, inst, 5)


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=4), st.integers(2, 6))
def test_pe_forward_reverse_inverse(lams, n):
    size = 1 << n
    r = np.random.default_rng(len(lams) * 7 + n)
    v = r.normal(size=(len(lams), size)) + 1j * r.normal(size=(len(lams), size))
    lams = np.array(lams)
    f = pe_forward(v, lams, n)
    assert np.allclose(np.linalg.norm(f, axis=1), np.linalg.norm(v, axis=1), atol=1e-10)
    assert np.allclose(pe_reverse(f, lams, n), v, atol=1e-10)


def test_majority_on_grid():
    res = majority_distribution(0.5, 4, 50, trials=1000)
    assert res.q[4] == 1.0


def test_majority_is_reproducible():
    a = majority_distribution(0.31, 5, 100, trials=2000, seed=3)
    b = majority_distribution(0.31, 5, 100, trials=2000, seed=3)
    assert np.array_equal(a.q, b.q)
    with pytest.raises(ValueError):
        majority_distribution(0.31, 5, 100, trials=10)


def test_majority_cases_small():
    eps, n = 0.2, 5
    k = k_uniq_for(eps)
    step = 2.0 ** (1 - n)
    good = 10 * step + 0.5 * (1 - eps) * step / 2
    q = majority_distribution(good, n, k, trials=4000, seed=1)
    assert q.q[10] >= 1 - eps - 3 * math.sqrt(eps * (1 - eps) / 4000)
    band = 10 * step + 0.95 * step / 2
    q = majority_distribution(band, n, k, trials=4000, seed=2)
    assert q.q[10] + q.q[11] >= 1 - eps - 3 * math.sqrt(eps * (1 - eps) / 4000)


def test_idealized_modes():
    n, eps = 5, 0.2
    step = 2.0 ** (1 - n)
    q = idealized_distribution(8 * step, n, eps)
    assert q[8] == 1.0
    q = idealized_distribution(8 * step + 0.1 * step, n, eps)
    assert q[8] == pytest.approx(1 - eps) and q[7] == q[9] == pytest.approx(eps / 2)
    q = idealized_distribution(8 * step + 0.49 * step, n, eps)
    assert q[8] == q[9] == pytest.approx((1 - eps) / 2)
    assert candidates(8 * step + 0.49 * step, n, eps) == (8, 9)
    assert not is_good(8 * step + 0.49 * step, n, eps)


def test_faithful_vs_idealized_total_variation():
    n, eps = 5, 0.2
    step = 2.0 ** (1 - n)
    for lam in (7 * step + 0.2 * step / 2, 12 * step - 0.6 * step / 2):
        f = uniqueest_distribution(lam, UniqueEstConfig.make(n, eps, "faithful", trials=4000))
        i = uniqueest_distribution(lam, UniqueEstConfig.make(n, eps, "idealized"))
        assert 0.5 * np.abs(f - i).sum() <= 2 * eps


@pytest.mark.parametrize("mode", ["idealized", "faithful"])
def test_unique_est_reversible(mode):
    inst, b = gen_instance(3, SpectrumSpec("log-uniform", 8), seed=1)
    cfg = UniqueEstConfig.make(4, 0.2, mode, trials=1000)
    psi = QuantumState.from_input(RegisterLayout(3, 1, 4), b)
    led = CostLedger()
    out = unique_est(psi, inst, cfg, ledger=led)
    assert abs(out.norm_sq - 1) < 1e-10
    back = unique_est(out, inst, cfg, reverse=True, ledger=led)
    assert back.allclose(psi, 1e-10)
    assert led.evolution_time == 2 * cfg.k_uniq * 16


def test_unique_est_on_grid_lambda():
    inst = eigendecompose(np.diag([0.5, 0.75]), 2)
    psi = QuantumState.from_input(RegisterLayout(2, 1, 3), [1, 0])
    out = unique_est(psi, inst, UniqueEstConfig.make(3, 0.2))
    assert abs(abs(out.amplitudes[0, 2, 1, 2]) - 1) < 1e-12


def test_shifted():
    inst, _ = gen_instance(4, SpectrumSpec("log-uniform", 8), seed=0)
    assert shifted(inst, 0, 5) is inst
    s = shifted(inst, 1, 5)
    assert np.allclose(s.eigenvalues - inst.eigenvalues, 2.0**-4)
    assert np.array_equal(s.eigenvectors, inst.eigenvectors)
    lam = 0.3
    x0, _ = grid_position(lam, 5)
    assert grid_position(lam + 2.0**-4, 5)[0] == x0 + 1
    with pytest.raises(ValueError):
        shifted(inst, 1.5, 5)


def test_boundary_band_fraction_matches_eps():
    r = np.random.default_rng(0)
    eps, n = 0.2, 5
    step = 2.0 ** (1 - n)
    lam = r.uniform(0.1, 0.9, 20000)
    delta = r.uniform(0, 1, 20000)
    frac = np.mean([not is_good(a + d * step, n, eps) for a, d in zip(lam, delta)])
    assert abs(frac - eps) < 0.02
