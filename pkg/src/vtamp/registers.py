"""State vectors over the I (input) x O (outcome) x S (step) x E (estimate) layout.

Evolution under the Hamiltonian is computed exactly from its eigendecomposition.
One unit of evolution time advances the phase of an eigencomponent with
eigenvalue ``lam`` by ``lam / 2`` turns, so eigenvalues in (0, 1] never wrap.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

UNITARY_TOL = 1e-9
HERMITIAN_TOL = 1e-10

OUTCOME_DIM = 3


class InstanceError(ValueError):
    """Raised for matrices that are not valid solver instances."""


@dataclass(frozen=True)
class RegisterLayout:
    n_input: int
    m: int
    n_max: int

    def __post_init__(self):
        if self.n_input < 1 or self.m < 0 or self.n_max < 0:
            raise ValueError(f"invalid layout {self}")

    @property
    def step_dim(self) -> int:
        return 2 * self.m + 2

    @property
    def estimate_dim(self) -> int:
        return 1 << self.n_max

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.n_input, OUTCOME_DIM, self.step_dim, self.estimate_dim)

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    @classmethod
    def for_solver(cls, n_input: int, kappa: float, eps: float) -> RegisterLayout:
        m = int(np.ceil(np.log2(kappa / eps)))
        return cls(n_input, m, m + 1)


@dataclass
class CostLedger:
    """Simulated Hamiltonian-evolution time plus per-subroutine invocation counts."""

    evolution_time: float = 0.0
    subroutine_counts: Counter = field(default_factory=Counter)

    def charge(self, name: str, units: float, count: int = 1) -> None:
        if units < 0:
            raise ValueError("cost must be nonnegative")
        self.evolution_time += units
        self.subroutine_counts[name] += count

    def merge(self, other: CostLedger) -> None:
        self.evolution_time += other.evolution_time
        self.subroutine_counts.update(other.subroutine_counts)

    def to_dict(self) -> dict:
        return {
            "evolution_time": self.evolution_time,
            "subroutine_counts": dict(sorted(self.subroutine_counts.items())),
        }


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Amplitudes indexed by (i, o, s, e); may be subnormalized."""

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != self.layout.shape:
            raise ValueError(f"amplitude shape {amps.shape} != layout {self.layout.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zeros(cls, layout: RegisterLayout) -> QuantumState:
        return cls(layout, np.zeros(layout.shape, dtype=np.complex128))

    @classmethod
    def from_input(cls, layout: RegisterLayout, vec, o: int = 2, s: int = 1, e: int = 0) -> QuantumState:
        amps = np.zeros(layout.shape, dtype=np.complex128)
        amps[:, o, s, e] = np.asarray(vec, dtype=np.complex128)
        return cls(layout, amps)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq))

    def with_amplitudes(self, amps) -> QuantumState:
        return QuantumState(self.layout, amps)

    def allclose(self, other: QuantumState, atol: float = 1e-8) -> bool:
        return self.layout == other.layout and float(np.max(np.abs(self.amplitudes - other.amplitudes), initial=0.0)) <= atol

    def distance(self, other: QuantumState) -> float:
        return float(np.linalg.norm((self.amplitudes - other.amplitudes).ravel()))


@dataclass(frozen=True, eq=False)
class HermitianInstance:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    kappa: float | None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenpairs(self):
        return [(float(lam), self.eigenvectors[:, k]) for k, lam in enumerate(self.eigenvalues)]

    def to_eigenbasis(self, vec) -> np.ndarray:
        return self.eigenvectors.conj().T @ np.asarray(vec, dtype=np.complex128)

    def from_eigenbasis(self, coeffs) -> np.ndarray:
        return self.eigenvectors @ np.asarray(coeffs, dtype=np.complex128)

    def reconstruction_residual(self) -> float:
        v = self.eigenvectors
        rebuilt = (v * self.eigenvalues) @ v.conj().T
        return float(np.max(np.abs(rebuilt - self.matrix)))

    def orthonormality_residual(self) -> float:
        v = self.eigenvectors
        return float(np.max(np.abs(v.conj().T @ v - np.eye(self.n))))


def eigendecompose(matrix, kappa: float | None = None) -> HermitianInstance:
    """Validate a Hermitian matrix and cache its eigendecomposition (ascending)."""
    a = np.array(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InstanceError(f"expected a square matrix, got shape {a.shape}")
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > HERMITIAN_TOL:
        raise InstanceError(f"matrix is not Hermitian: max asymmetry {asym:.3e}")
    a = (a + a.conj().T) / 2
    lam, vecs = np.linalg.eigh(a)
    if kappa is not None:
        if kappa < 1:
            raise InstanceError(f"kappa must be >= 1, got {kappa}")
        lo, hi = 1.0 / kappa, 1.0
        slack = 1e-9
        bad = (lam < lo - slack) | (lam > hi + slack)
        if np.any(bad):
            raise InstanceError(
                f"eigenvalues {lam[bad].tolist()} outside [1/kappa, 1] = [{lo:.6g}, 1] for kappa={kappa}"
            )
    a.setflags(write=False)
    lam.setflags(write=False)
    vecs.setflags(write=False)
    return HermitianInstance(a, lam, vecs, None if kappa is None else float(kappa))


# predicates take broadcastable integer index grids and return boolean arrays
OSPredicate = Callable[[np.ndarray, np.ndarray], np.ndarray]
OSEPredicate = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _os_mask(layout: RegisterLayout, control: OSPredicate | None) -> np.ndarray:
    o, s = np.meshgrid(np.arange(OUTCOME_DIM), np.arange(layout.step_dim), indexing="ij")
    if control is None:
        return np.ones(o.shape, dtype=bool)
    return np.broadcast_to(np.asarray(control(o, s), dtype=bool), o.shape)


def evolution_operator(instance: HermitianInstance, t: float) -> np.ndarray:
    v = instance.eigenvectors
    return (v * np.exp(1j * np.pi * instance.eigenvalues * t)) @ v.conj().T


def evolve(
    state: QuantumState,
    instance: HermitianInstance,
    t: float,
    control: OSPredicate | None = None,
    ledger: CostLedger | None = None,
) -> QuantumState:
    """Apply exp(i pi H t) on the I register where ``control(o, s)`` holds."""
    if abs(t) > state.layout.estimate_dim:
        raise ValueError(f"|t|={abs(t)} exceeds 2^n_max={state.layout.estimate_dim}")
    u = evolution_operator(instance, t)
    mask = _os_mask(state.layout, control)
    amps = state.amplitudes.copy()
    amps[:, mask, :] = np.einsum("ij,jke->ike", u, amps[:, mask, :])
    if ledger is not None:
        ledger.charge("evolve", abs(t))
    return state.with_amplitudes(amps)


def project(state: QuantumState, predicate: OSEPredicate) -> tuple[QuantumState, float]:
    """Keep the components where ``predicate(o, s, e)`` holds, without renormalizing."""
    lay = state.layout
    o, s, e = np.meshgrid(
        np.arange(OUTCOME_DIM), np.arange(lay.step_dim), np.arange(lay.estimate_dim), indexing="ij"
    )
    keep = np.broadcast_to(np.asarray(predicate(o, s, e), dtype=bool), o.shape)
    amps = np.where(keep[None, ...], state.amplitudes, 0)
    kept = state.with_amplitudes(amps)
    return kept, kept.norm_sq


def block_decompose(state: QuantumState, instance: HermitianInstance) -> list[np.ndarray]:
    """Split ``state`` into per-eigenvector blocks over O x S x E.

    Block ``k`` holds the coefficients c with state = sum_k v_k (x) c_k.
    """
    if instance.n != state.layout.n_input:
        raise ValueError("I-register dimension does not match the instance")
    coeffs = np.einsum("ij,jose->iose", instance.eigenvectors.conj().T, state.amplitudes)
    return [coeffs[k] for k in range(instance.n)]


def recombine(blocks, instance: HermitianInstance, layout: RegisterLayout) -> QuantumState:
    coeffs = np.stack([np.asarray(b, dtype=np.complex128) for b in blocks])
    return QuantumState(layout, np.einsum("ij,jose->iose", instance.eigenvectors, coeffs))


# ---------------------------------------------------------------------------
# instance file format
# ---------------------------------------------------------------------------


def _encode_complex(arr) -> list:
    arr = np.asarray(arr, dtype=np.complex128)
    if arr.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in arr]
    return [_encode_complex(row) for row in arr]


def _decode_complex(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1] != 2:
        raise InstanceError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def instance_to_json(instance: HermitianInstance, b) -> dict:
    return {
        "n": instance.n,
        "kappa": instance.kappa,
        "matrix": _encode_complex(instance.matrix),
        "b": _encode_complex(b),
    }


def instance_from_json(obj: dict) -> tuple[HermitianInstance, np.ndarray]:
    try:
        n = int(obj["n"])
        kappa = float(obj["kappa"])
        matrix = _decode_complex(obj["matrix"])
        b = _decode_complex(obj["b"])
    except KeyError as exc:
        raise InstanceError(f"instance file missing field {exc}") from None
    if matrix.shape != (n, n) or b.shape != (n,):
        raise InstanceError(f"shape mismatch: n={n}, matrix {matrix.shape}, b {b.shape}")
    return eigendecompose(matrix, kappa), b


def write_instance(path, instance: HermitianInstance, b) -> None:
    Path(path).write_text(json.dumps(instance_to_json(instance, b)))


def read_instance(path) -> tuple[HermitianInstance, np.ndarray]:
    return instance_from_json(json.loads(Path(path).read_text()))
