"""Eigenvalue estimation: single-run outcome law, circuit simulation, and UniqueEst.

Grid convention: an ``n``-bit estimate register holds ``2**n`` points
``k * 2**(1-n)`` in eigenvalue units; the half-spacing ``2**-n`` is the
precision of one run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _kernels
from .registers import (
    CostLedger,
    HermitianInstance,
    OSPredicate,
    QuantumState,
    _os_mask,
    evolution_operator,
)

C_UNIQ = 3.0
DEFAULT_TRIALS = 10_000

Mode = Literal["faithful", "idealized"]


def grid(n_bits: int) -> np.ndarray:
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    return np.arange(1 << n_bits) * 2.0 ** (1 - n_bits)


def k_uniq_for(eps: float) -> int:
    """Number of repetitions UniqueEst uses for error ``eps``."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return math.ceil(C_UNIQ * eps**-2 * math.log(1 / eps))


@dataclass(frozen=True)
class UniqueEstConfig:
    n_bits: int
    epsilon: float
    k_uniq: int
    mode: Mode = "idealized"
    trials: int = DEFAULT_TRIALS
    seed: int = 0

    @classmethod
    def make(cls, n_bits: int, epsilon: float, mode: Mode = "idealized", trials: int = DEFAULT_TRIALS, seed: int = 0):
        if not 0 < epsilon <= 0.2:
            raise ValueError(f"epsilon must lie in (0, 0.2], got {epsilon}")
        if mode not in ("faithful", "idealized"):
            raise ValueError(f"unknown mode {mode!r}")
        return cls(n_bits, epsilon, k_uniq_for(epsilon), mode, trials, seed)


# ---------------------------------------------------------------------------
# single-run law and the circuit that realizes it
# ---------------------------------------------------------------------------


def single_run_distribution(lam: float, n_bits: int) -> np.ndarray:
    """Outcome probabilities of one n-bit phase estimation on an eigenvalue ``lam``."""
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    return _fejer(lam, n_bits)


def _fejer(lam: float, n_bits: int) -> np.ndarray:
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    return _kernels.fejer_probs(float(lam), int(n_bits))


def qft_gates(n_bits: int) -> list[tuple]:
    """Gate list for the quantum Fourier transform, qubit ``n_bits-1`` most significant."""
    gates: list[tuple] = []
    for t in range(n_bits - 1, -1, -1):
        gates.append(("h", t))
        for c in range(t - 1, -1, -1):
            gates.append(("cp", c, t, 2 * math.pi / 2 ** (t - c + 1)))
    for q in range(n_bits // 2):
        gates.append(("swap", q, n_bits - 1 - q))
    return gates


def inverse_qft_gates(n_bits: int) -> list[tuple]:
    out = []
    for g in reversed(qft_gates(n_bits)):
        out.append(("cp", g[1], g[2], -g[3]) if g[0] == "cp" else g)
    return out


def run_gates(state: np.ndarray, gates) -> np.ndarray:
    for g in gates:
        if g[0] == "h":
            _kernels.apply_h(state, g[1])
        elif g[0] == "cp":
            _kernels.apply_cphase(state, g[1], g[2], g[3])
        elif g[0] == "swap":
            _kernels.apply_swap(state, g[1], g[2])
        else:
            raise ValueError(f"unknown gate {g[0]!r}")
    return state


def circuit_amplitudes(lam: float, n_bits: int) -> np.ndarray:
    """Gate-level phase estimation on an eigenstate; returns estimate-register amplitudes.

    Hadamards, phase kickback from controlled U^(2^q) with U = exp(i pi H),
    then the inverse Fourier transform built from H / controlled-phase / swap gates.
    """
    size = 1 << n_bits
    reg = np.zeros(size, dtype=np.complex128)
    reg[0] = 1.0
    for q in range(n_bits):
        _kernels.apply_h(reg, q)
    idx = np.arange(size)
    for q in range(n_bits):
        reg[(idx >> q) & 1 == 1] *= np.exp(1j * np.pi * lam * 2**q)
    return run_gates(reg, inverse_qft_gates(n_bits))


def circuit_distribution(lam: float, n_bits: int) -> np.ndarray:
    return np.abs(circuit_amplitudes(lam, n_bits)) ** 2


# ---------------------------------------------------------------------------
# phase estimation as a unitary on the E register
# ---------------------------------------------------------------------------


def pe_forward(vecs: np.ndarray, lams: np.ndarray, n_bits: int) -> np.ndarray:
    """Apply phase estimation to rows of ``vecs`` (shape (B, 2**n)), row b at eigenvalue lams[b].

    U = QFT^-1 . D(lam) . H^(x)n ; D multiplies |k> by exp(i pi lam k).
    """
    size = 1 << n_bits
    k = np.arange(size)
    d = np.exp(1j * np.pi * np.outer(lams, k))
    return np.fft.fft(d * _kernels.fwht(np.ascontiguousarray(vecs, dtype=np.complex128)), axis=1) / math.sqrt(size)


def pe_reverse(vecs: np.ndarray, lams: np.ndarray, n_bits: int) -> np.ndarray:
    size = 1 << n_bits
    k = np.arange(size)
    d = np.exp(-1j * np.pi * np.outer(lams, k))
    return _kernels.fwht(np.ascontiguousarray(d * np.fft.ifft(vecs, axis=1) * math.sqrt(size)))


def phase_estimate(
    state: QuantumState,
    instance: HermitianInstance,
    n_bits: int,
    control: OSPredicate | None = None,
    ledger: CostLedger | None = None,
    reverse: bool = False,
) -> QuantumState:
    """Phase estimation on the whole state, driven by controlled evolutions of the I register.

    Acts on components where ``control(o, s)`` holds, using the first ``2**n_bits``
    entries of E.  The forward direction requires E = |0> on the acted part.
    """
    lay = state.layout
    size = 1 << n_bits
    if size > lay.estimate_dim:
        raise ValueError("estimate register too small")
    mask = _os_mask(lay, control)
    amps = state.amplitudes.copy()
    acted = amps[:, mask, :]  # (N, P, E)
    if not reverse and np.max(np.abs(acted[:, :, 1:]), initial=0.0) > 1e-12:
        raise ValueError("phase_estimate requires the E register in |0> on the acted part")
    sub = acted[:, :, :size]
    if not reverse:
        sub = _kernels.fwht(np.ascontiguousarray(sub).reshape(-1, size)).reshape(sub.shape)
        sub = _kernel_evolutions(sub, instance, sign=+1)
        sub = np.fft.fft(sub, axis=2) / math.sqrt(size)
    else:
        sub = np.fft.ifft(sub, axis=2) * math.sqrt(size)
        sub = _kernel_evolutions(sub, instance, sign=-1)
        sub = _kernels.fwht(np.ascontiguousarray(sub).reshape(-1, size)).reshape(sub.shape)
    acted[:, :, :size] = sub
    amps[:, mask, :] = acted
    if ledger is not None:
        ledger.charge("phase_estimate", float(size))
    return state.with_amplitudes(amps)


def _kernel_evolutions(sub: np.ndarray, instance: HermitianInstance, sign: int) -> np.ndarray:
    # E value k controls U^k on I, built by repeated products of the unit-time operator
    step = evolution_operator(instance, sign)
    out = np.empty_like(sub)
    power = np.eye(instance.n, dtype=np.complex128)
    for k in range(sub.shape[2]):
        out[:, :, k] = power @ sub[:, :, k]
        power = step @ power
    return out


# ---------------------------------------------------------------------------
# majority voting (UniqueEst) distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MajorityResult:
    q: np.ndarray
    stderr: np.ndarray
    trials: int


def majority_distribution(
    lam: float, n_bits: int, k_uniq: int, trials: int = DEFAULT_TRIALS, seed: int = 0, top: int = 24
) -> MajorityResult:
    """Monte Carlo law of the most frequent of ``k_uniq`` phase-estimation outcomes.

    Ties go to the smaller grid index.  Outcomes beyond the ``top`` most likely
    ones are pooled into one bucket that cannot win a vote.
    """
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    p = _fejer(lam, n_bits)
    size = p.size
    keep = np.sort(np.argsort(-p, kind="stable")[: min(top, size)])
    probs = np.append(p[keep], max(0.0, 1.0 - p[keep].sum()))
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(k_uniq, probs, size=trials)
    counts[:, -1] = -1
    tally = _kernels.majority_tally(counts, probs.size)
    q = np.zeros(size)
    q[keep] = tally[:-1] / trials
    stderr = np.sqrt(q * (1 - q) / trials)
    return MajorityResult(q, stderr, trials)


def grid_position(lam: float, n_bits: int) -> tuple[int, float]:
    """Nearest grid index and the signed offset from it in half-spacing units."""
    step = 2.0 ** (1 - n_bits)
    x0 = int(np.floor(lam / step + 0.5))
    return x0, (lam - x0 * step) / (step / 2)


def is_good(lam: float, n_bits: int, eps: float) -> bool:
    """True when ``lam`` lies within (1 - eps) half-spacings of a grid point."""
    _, off = grid_position(lam, n_bits)
    return abs(off) <= 1 - eps


def candidates(lam: float, n_bits: int, eps: float) -> tuple[int, ...]:
    """Grid indices UniqueEst returns with probability >= 1 - eps (one or two)."""
    size = 1 << n_bits
    x0, off = grid_position(lam, n_bits)
    if abs(off) <= 1 - eps:
        return (x0 % size,)
    lo = x0 if off > 0 else x0 - 1
    return (lo % size, (lo + 1) % size)


def idealized_distribution(lam: float, n_bits: int, eps: float) -> np.ndarray:
    size = 1 << n_bits
    q = np.zeros(size)
    x0, off = grid_position(lam, n_bits)
    if abs(off) < 1e-12:
        q[x0 % size] = 1.0
    elif abs(off) <= 1 - eps:
        q[x0 % size] += 1 - eps
        q[(x0 - 1) % size] += eps / 2
        q[(x0 + 1) % size] += eps / 2
    else:
        lo = x0 if off > 0 else x0 - 1
        q[lo % size] += (1 - eps) / 2
        q[(lo + 1) % size] += (1 - eps) / 2
        q[(lo - 1) % size] += eps / 2
        q[(lo + 2) % size] += eps / 2
    return q


def uniqueest_distribution(lam: float, config: UniqueEstConfig) -> np.ndarray:
    if config.mode == "idealized":
        return idealized_distribution(lam, config.n_bits, config.epsilon)
    return majority_distribution(lam, config.n_bits, config.k_uniq, config.trials, config.seed).q


def householder_column(q: np.ndarray) -> np.ndarray:
    """Reflection vector u with (I - 2 u u^T) e_0 = sqrt(q); zero when sqrt(q) = e_0."""
    w = np.sqrt(np.clip(q, 0, None))
    w = w / np.linalg.norm(w)
    u = -w
    u[0] += 1.0
    nrm = np.linalg.norm(u)
    return u / nrm if nrm > 1e-15 else np.zeros_like(u)


def householder_apply(vecs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(I - 2 u u^T) applied along the last axis; self-inverse."""
    if not np.any(u):
        return vecs
    return vecs - 2 * np.multiply.outer(vecs @ u, u)


def unique_est(
    state: QuantumState,
    instance: HermitianInstance,
    config: UniqueEstConfig,
    control: OSPredicate | None = None,
    ledger: CostLedger | None = None,
    reverse: bool = False,
) -> QuantumState:
    """UniqueEst realized as the isometry |0> -> sum_x sqrt(q(x)) |x>, per eigenvector.

    The purifying garbage register is implicit: the reflection mapping |0> to the
    vote-outcome superposition is applied on E, and the adjoint is the same map.
    """
    lay = state.layout
    size = 1 << config.n_bits
    if size > lay.estimate_dim:
        raise ValueError("estimate register too small")
    mask = _os_mask(lay, control)
    amps = state.amplitudes.copy()
    acted = amps[:, mask, :]
    if not reverse and np.max(np.abs(acted[:, :, 1:]), initial=0.0) > 1e-12:
        raise ValueError("unique_est requires the E register in |0> on the acted part")
    v = instance.eigenvectors
    coeffs = np.einsum("ij,jpe->ipe", v.conj().T, acted[:, :, :size])
    for k, lam in enumerate(instance.eigenvalues):
        u = householder_column(uniqueest_distribution(float(lam), config))
        coeffs[k] = householder_apply(coeffs[k], u)
    acted[:, :, :size] = np.einsum("ij,jpe->ipe", v, coeffs)
    amps[:, mask, :] = acted
    if ledger is not None:
        ledger.charge("unique_est", float(config.k_uniq * size))
    return state.with_amplitudes(amps)


def shifted(instance: HermitianInstance, delta: float, n_bits: int) -> HermitianInstance:
    """Add ``delta`` grid steps (each 2**(1-n_bits)) to every eigenvalue."""
    if not 0 <= delta <= 1:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if delta == 0:
        return instance
    shift = delta * 2.0 ** (1 - n_bits)
    lam = instance.eigenvalues + shift
    mat = instance.matrix + shift * np.eye(instance.n)
    lam.setflags(write=False)
    mat.setflags(write=False)
    return HermitianInstance(mat, lam, instance.eigenvectors, None)
