import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vtamp.bench import SpectrumSpec, gen_instance
from vtamp.registers import (
    CostLedger,
    InstanceError,
    QuantumState,
    RegisterLayout,
    block_decompose,
    eigendecompose,
    evolve,
    instance_from_json,
    instance_to_json,
    project,
    read_instance,
    recombine,
    write_instance,
)


def test_layout_dimension():
    lay = RegisterLayout(3, 4, 5)
    assert lay.step_dim == 10
    assert lay.dim == 3 * 3 * 10 * 32
    assert RegisterLayout.for_solver(2, 16, 0.1).m == math.ceil(math.log2(160))


def test_eigendecompose_diagonal():
    inst = eigendecompose(np.diag([1.0, 0.5]), 2)
    assert np.allclose(inst.eigenvalues, [0.5, 1])
    assert np.allclose(np.abs(inst.eigenvectors[:, 0]), [0, 1])
    assert np.allclose(np.abs(inst.eigenvectors[:, 1]), [1, 0])


def test_eigendecompose_symmetric_2x2():
    inst = eigendecompose(np.array([[0.75, 0.25], [0.25, 0.75]]), 2)
    assert np.allclose(inst.eigenvalues, [0.5, 1])
    v0, v1 = inst.eigenvectors.T
    assert abs(abs(np.vdot(v0, [1, -1])) / math.sqrt(2) - 1) < 1e-12
    assert abs(abs(np.vdot(v1, [1, 1])) / math.sqrt(2) - 1) < 1e-12


def test_eigendecompose_random_reconstruction():
    inst, _ = gen_instance(8, SpectrumSpec("log-uniform", 16), seed=4)
    assert inst.reconstruction_residual() <= 1e-9
    assert inst.orthonormality_residual() <= 1e-9
    assert np.all(np.diff(inst.eigenvalues) >= 0)


def test_eigendecompose_rejects_bad_input():
    with pytest.raises(InstanceError, match="asymmetry"):
        eigendecompose(np.array([[1.0, 0.2], [0.0, 1.0]]), 2)
    with pytest.raises(InstanceError):
        eigendecompose(np.diag([1.0, 0.1]), 2)


def _eigen_state(inst, k, m=1, n_max=2):
    lay = RegisterLayout(inst.n, m, n_max)
    return QuantumState.from_input(lay, inst.eigenvectors[:, k])


def test_evolve_phase_examples():
    inst = eigendecompose(np.diag([0.5, 1.0]), 2)
    for k, t, phase in ((1, 2, 1.0), (0, 1, 1j)):
        psi = _eigen_state(inst, k)
        out = evolve(psi, inst, t)
        assert np.allclose(out.amplitudes, phase * psi.amplitudes, atol=1e-12)
    lay = RegisterLayout(2, 1, 2)
    sup = QuantumState.from_input(lay, (inst.eigenvectors[:, 0] + inst.eigenvectors[:, 1]) / math.sqrt(2))
    want = QuantumState.from_input(lay, (1j * inst.eigenvectors[:, 0] - inst.eigenvectors[:, 1]) / math.sqrt(2))
    assert evolve(sup, inst, 1).allclose(want, 1e-12)


def test_evolve_control_and_ledger():
    inst = eigendecompose(np.diag([0.5, 1.0]), 2)
    lay = RegisterLayout(2, 1, 2)
    amps = np.zeros(lay.shape, dtype=complex)
    amps[0, 0, 1, 0] = amps[0, 1, 1, 0] = 1 / math.sqrt(2)
    led = CostLedger()
    out = evolve(QuantumState(lay, amps), inst, 1, control=lambda o, s: o == 1, ledger=led)
    assert out.amplitudes[0, 0, 1, 0] == amps[0, 0, 1, 0]
    assert np.isclose(out.amplitudes[0, 1, 1, 0], 1j * amps[0, 1, 1, 0])
    assert led.evolution_time == 1
    with pytest.raises(ValueError):
        evolve(QuantumState(lay, amps), inst, 5)


@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 50))
def test_evolve_composes_and_preserves_norm(t1, t2, seed):
    inst, b = gen_instance(4, SpectrumSpec("log-uniform", 8), seed)
    psi = QuantumState.from_input(RegisterLayout(4, 1, 3), b)
    led = CostLedger()
    a = evolve(evolve(psi, inst, t1, ledger=led), inst, t2, ledger=led)
    assert a.allclose(evolve(psi, inst, t1 + t2), 1e-10)
    assert abs(a.norm_sq - 1) < 1e-9
    assert led.evolution_time == abs(t1) + abs(t2)


def test_project_examples(rng):
    lay = RegisterLayout(1, 1, 1)
    amps = np.zeros(lay.shape, dtype=complex)
    amps[0, 0, 1, 0] = amps[0, 1, 1, 0] = 1 / math.sqrt(2)
    psi = QuantumState(lay, amps)
    kept, p = project(psi, lambda o, s, e: o == 0)
    assert abs(p - 0.5) < 1e-12 and abs(kept.norm_sq - 0.5) < 1e-12
    z = rng.normal(size=lay.shape) + 0j
    psi = QuantumState(lay, 0.3 * z / np.linalg.norm(z))
    kept, p = project(psi, lambda o, s, e: np.ones_like(o, dtype=bool))
    assert abs(p - psi.norm_sq) < 1e-15 and kept.allclose(psi, 0)


def test_block_decompose_examples():
    inst = eigendecompose(np.diag([0.5, 1.0]), 2)
    lay = RegisterLayout(2, 1, 1)
    one = QuantumState.from_input(lay, inst.eigenvectors[:, 0])
    norms = [np.linalg.norm(b) ** 2 for b in block_decompose(one, inst)]
    assert np.allclose(norms, [1, 0])
    two = QuantumState.from_input(lay, inst.eigenvectors.sum(axis=1) / math.sqrt(2))
    norms = [np.linalg.norm(b) ** 2 for b in block_decompose(two, inst)]
    assert np.allclose(norms, [0.5, 0.5])


@given(st.integers(0, 200))
def test_block_roundtrip(seed):
    inst, _ = gen_instance(4, SpectrumSpec("bimodal", 16), seed)
    lay = RegisterLayout(4, 1, 2)
    r = np.random.default_rng(seed)
    psi = QuantumState(lay, r.normal(size=lay.shape) + 1j * r.normal(size=lay.shape))
    assert recombine(block_decompose(psi, inst), inst, lay).allclose(psi, 1e-10)


def test_ledger_additive():
    a, b = CostLedger(), CostLedger()
    a.charge("x", 2.5)
    b.charge("x", 1.5, 2)
    b.charge("y", 4)
    a.merge(b)
    assert a.evolution_time == 8.0
    assert a.subroutine_counts == {"x": 3, "y": 1}


def test_instance_json_roundtrip(tmp_path):
    inst, b = gen_instance(4, SpectrumSpec("log-uniform", 8), seed=2)
    path = tmp_path / "inst.json"
    write_instance(path, inst, b)
    inst2, b2 = read_instance(path)
    assert np.array_equal(inst2.matrix, inst.matrix)
    assert np.array_equal(b2, b)
    assert json.dumps(instance_to_json(inst2, b2)) == path.read_text()


def test_instance_reader_validates():
    obj = instance_to_json(eigendecompose(np.diag([0.5, 1.0]), 2), np.array([1.0, 0.0]))
    obj["matrix"][0][1] = [0.3, 0.0]
    with pytest.raises(InstanceError):
        instance_from_json(obj)
    del obj["b"]
    with pytest.raises(InstanceError):
        instance_from_json(obj)
