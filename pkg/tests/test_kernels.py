import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vtamp import _kernels as K

pytestmark = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


@given(st.floats(1e-3, 1.0), st.integers(1, 10))
def test_fejer_parity(lam, n):
    assert np.allclose(K.fejer_probs_numpy(lam, n), K.fejer_probs_numba(lam, n), atol=1e-13)


def test_gate_and_transform_parity(rng):
    state = rng.normal(size=1 << 8) + 1j * rng.normal(size=1 << 8)
    assert np.allclose(K.apply_h_numpy(state.copy(), 3), K.apply_h_numba(state.copy(), 3))
    assert np.allclose(K.apply_cphase_numpy(state.copy(), 1, 6, 0.4), K.apply_cphase_numba(state.copy(), 1, 6, 0.4))
    assert np.allclose(K.apply_swap_numpy(state.copy(), 0, 7), K.apply_swap_numba(state.copy(), 0, 7))
    rows = state.reshape(4, 64)
    assert np.allclose(K.fwht_numpy(rows), K.fwht_numba(rows))


def test_majority_parity(rng):
    counts = rng.integers(0, 5, size=(500, 6)).astype(np.int64)
    assert np.array_equal(K.majority_tally_numpy(counts, 6), K.majority_tally_numba(counts, 6))
