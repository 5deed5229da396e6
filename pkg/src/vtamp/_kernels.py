"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``VTAMP_DISABLE_NUMBA`` is unset (or ``0``).  Both paths are always
importable as ``<name>_numba`` / ``<name>_numpy`` so the benchmark and the
tests can compare them directly.
"""

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


USE_NUMBA = HAVE_NUMBA and os.environ.get("VTAMP_DISABLE_NUMBA", "0") in ("", "0")


# --------------------------------------------------------------------------
# Fejer kernel: single-run phase-estimation outcome law on the lambda grid
# --------------------------------------------------------------------------


def fejer_probs_numpy(lam, n_bits):
    size = 1 << n_bits
    grid = np.arange(size) * (2.0 / size)
    half = np.pi * (lam - grid) / 2.0
    den = np.sin(half)
    num = np.sin(size * half)
    out = np.empty(size)
    exact = np.abs(den) < 1e-14
    out[~exact] = (num[~exact] / den[~exact]) ** 2 / (size * size)
    out[exact] = 1.0
    return out


@njit(cache=True)
def fejer_probs_numba(lam, n_bits):
    size = 1 << n_bits
    out = np.empty(size)
    for k in range(size):
        half = math.pi * (lam - k * (2.0 / size)) / 2.0
        den = math.sin(half)
        if abs(den) < 1e-14:
            out[k] = 1.0
        else:
            r = math.sin(size * half) / den
            out[k] = r * r / (size * size)
    return out


# --------------------------------------------------------------------------
# Orthonormal Walsh-Hadamard transform along the last axis of a 2-D array
# --------------------------------------------------------------------------


def fwht_numpy(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    rows, size = a.shape
    h = 1
    while h < size:
        v = a.reshape(rows, size // (2 * h), 2, h)
        x = v[:, :, 0, :].copy()
        y = v[:, :, 1, :]
        v[:, :, 0, :] = x + y
        v[:, :, 1, :] = x - y
        h *= 2
    return a / math.sqrt(size)


@njit(cache=True)
def fwht_numba(a):
    out = a.astype(np.complex128).copy()
    rows, size = out.shape
    norm = 1.0 / math.sqrt(size)
    for r in range(rows):
        h = 1
        while h < size:
            for start in range(0, size, 2 * h):
                for k in range(start, start + h):
                    x = out[r, k]
                    y = out[r, k + h]
                    out[r, k] = x + y
                    out[r, k + h] = x - y
            h *= 2
        for k in range(size):
            out[r, k] *= norm
    return out


# --------------------------------------------------------------------------
# Gate-level register kernels (qubit q is bit q of the basis index)
# --------------------------------------------------------------------------

_SQRT_HALF = 1.0 / math.sqrt(2.0)


def apply_h_numpy(state, q):
    size = state.shape[0]
    v = state.reshape(size >> (q + 1), 2, 1 << q)
    x = v[:, 0, :].copy()
    y = v[:, 1, :].copy()
    v[:, 0, :] = (x + y) * _SQRT_HALF
    v[:, 1, :] = (x - y) * _SQRT_HALF
    return state


@njit(cache=True)
def apply_h_numba(state, q):
    bit = 1 << q
    for k in range(state.shape[0]):
        if k & bit == 0:
            x = state[k]
            y = state[k | bit]
            state[k] = (x + y) * _SQRT_HALF
            state[k | bit] = (x - y) * _SQRT_HALF
    return state


def apply_cphase_numpy(state, control, target, angle):
    idx = np.arange(state.shape[0])
    mask = ((idx >> control) & 1).astype(bool) & ((idx >> target) & 1).astype(bool)
    state[mask] *= np.exp(1j * angle)
    return state


@njit(cache=True)
def apply_cphase_numba(state, control, target, angle):
    both = (1 << control) | (1 << target)
    phase = complex(math.cos(angle), math.sin(angle))
    for k in range(state.shape[0]):
        if k & both == both:
            state[k] *= phase
    return state


def apply_swap_numpy(state, q1, q2):
    idx = np.arange(state.shape[0])
    b1 = (idx >> q1) & 1
    b2 = (idx >> q2) & 1
    perm = idx ^ ((b1 ^ b2) << q1) ^ ((b1 ^ b2) << q2)
    state[:] = state[perm]
    return state


@njit(cache=True)
def apply_swap_numba(state, q1, q2):
    m1 = 1 << q1
    m2 = 1 << q2
    for k in range(state.shape[0]):
        if (k & m1) != 0 and (k & m2) == 0:
            j = (k ^ m1) | m2
            tmp = state[k]
            state[k] = state[j]
            state[j] = tmp
    return state


# --------------------------------------------------------------------------
# Majority tally over multinomial count rows (ties -> smallest index)
# --------------------------------------------------------------------------


def majority_tally_numpy(counts, size):
    winners = np.argmax(counts, axis=1)
    return np.bincount(winners, minlength=size).astype(np.int64)


@njit(cache=True)
def majority_tally_numba(counts, size):
    tally = np.zeros(size, dtype=np.int64)
    for r in range(counts.shape[0]):
        best = 0
        for k in range(1, counts.shape[1]):
            if counts[r, k] > counts[r, best]:
                best = k
        tally[best] += 1
    return tally


if USE_NUMBA:
    fejer_probs = fejer_probs_numba
    fwht = fwht_numba
    apply_h = apply_h_numba
    apply_cphase = apply_cphase_numba
    apply_swap = apply_swap_numba
    majority_tally = majority_tally_numba
else:
    fejer_probs = fejer_probs_numpy
    fwht = fwht_numpy
    apply_h = apply_h_numpy
    apply_cphase = apply_cphase_numpy
    apply_swap = apply_swap_numpy
    majority_tally = majority_tally_numpy


def backend():
    return "numba" if USE_NUMBA else "numpy"
