"""Staged state generation for A^-1 b with per-stage unique eigenvalue estimates.

The state is kept in the eigenbasis of A, as an array ``X[i, o, s, l]`` where
``i`` indexes eigenvectors, ``o`` the outcome register (0 fail, 1 success,
2 running), ``s`` the step marker and ``l`` a compact index into the E values
that can ever carry amplitude.  ``to_dense`` expands it into the full
I x O x S x E register state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .phase import (
    DEFAULT_TRIALS,
    UniqueEstConfig,
    grid_position,
    householder_column,
    k_uniq_for,
    shifted,
    unique_est,
    uniqueest_distribution,
)
from .registers import CostLedger, HermitianInstance, QuantumState, RegisterLayout
from .vtmodel import ALIVE, BranchBasis, VariableTimeAlgorithm

FIXED_EPS_RATIO = 5 / 16  # per-stage eps = eps_final * 5/16 (1/16 at eps_final = 0.2)
DECODE_CUT = 1.5  # grid values at or above this decode as negative (value - 2)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    kappa: float
    eps_final: float
    eps: float
    m: int
    shifts: tuple[float, ...]
    seed: int = 0
    mode: Literal["faithful", "idealized"] = "idealized"
    trials: int = DEFAULT_TRIALS

    def __post_init__(self):
        if self.kappa < 1:
            raise ConfigError(f"kappa must be >= 1, got {self.kappa}")
        if not 0 < self.eps < 0.1:
            raise ConfigError(f"per-stage eps must lie in (0, 0.1), got {self.eps}")
        if self.m != stage_count(self.kappa, self.eps):
            raise ConfigError(f"m={self.m} inconsistent with kappa={self.kappa}, eps={self.eps}")
        if len(self.shifts) != self.m or any(not 0 <= x <= 1 for x in self.shifts):
            raise ConfigError("need m shifts in [0, 1]")
        if self.mode not in ("faithful", "idealized"):
            raise ConfigError(f"unknown UniqueEst mode {self.mode!r}")

    @classmethod
    def make(
        cls,
        kappa: float,
        eps_final: float = 0.2,
        seed: int = 0,
        mode: str = "idealized",
        eps: float | None = None,
        eps_rule: Literal["fixed", "per-stage"] = "fixed",
        shifts=None,
        trials: int = DEFAULT_TRIALS,
    ) -> SolverConfig:
        """Pick eps (if not given), m = ceil(log2(kappa/eps)) and uniform random shifts."""
        if eps is None:
            eps = per_stage_eps(kappa, eps_final, eps_rule)
        m = stage_count(kappa, eps)
        if shifts is None:
            shifts = np.random.default_rng([seed, 0x5EED]).uniform(0, 1, size=m)
        return cls(float(kappa), float(eps_final), float(eps), m, tuple(float(x) for x in shifts), seed, mode, trials)

    @property
    def k_uniq(self) -> int:
        return k_uniq_for(self.eps)

    @property
    def n_max(self) -> int:
        return self.m + 1

    def layout(self, n_input: int) -> RegisterLayout:
        return RegisterLayout(n_input, self.m, self.n_max)


def stage_count(kappa: float, eps: float) -> int:
    return max(1, math.ceil(math.log2(kappa / eps) - 1e-12))


def per_stage_eps(kappa: float, eps_final: float, rule: str = "fixed") -> float:
    if rule == "fixed":
        return eps_final * FIXED_EPS_RATIO
    if rule == "per-stage":
        # eps = eps_final / (8 m) with m = ceil(log2(kappa / eps)); iterate to the fixed point
        m = 1
        for _ in range(64):
            new_m = stage_count(kappa, eps_final / (8 * m))
            if new_m == m:
                break
            m = new_m
        return eps_final / (8 * m)
    raise ConfigError(f"unknown eps rule {rule!r}")


# ---------------------------------------------------------------------------
# per-stage primitives
# ---------------------------------------------------------------------------


def stage_condition(lam_hat: float, j: int, eps: float) -> bool:
    """Stop at stage j when eps * lambda_hat exceeds the stage precision 2^-(j+1)."""
    return eps * lam_hat > 2.0 ** -(j + 1)


def decode(index, j: int, shift: float):
    """Grid index at stage j (j+1 bits, spacing 2^-j) to an unshifted eigenvalue estimate."""
    val = np.asarray(index, dtype=float) * 2.0**-j
    val = np.where(val >= DECODE_CUT, val - 2.0, val)
    return val - shift * 2.0**-j


def rotation_coefficient(lam_hat: float, kappa: float) -> tuple[float, bool]:
    """1/(kappa lam_hat), clipped to 1; the flag reports a clip."""
    if lam_hat <= 0 or kappa * lam_hat < 1:
        return 1.0, True
    return 1.0 / (kappa * lam_hat), False


def conditional_rotation(amp, lam_hat: float, kappa: float):
    """Split a running amplitude into (success, fail) amplitudes; also return the clip flag."""
    c, clipped = rotation_coefficient(lam_hat, kappa)
    return c * amp, math.sqrt(max(0.0, 1 - c * c)) * amp, clipped


def stage_ue_config(config: SolverConfig, j: int) -> UniqueEstConfig:
    return UniqueEstConfig(j + 1, config.eps, config.k_uniq, config.mode, config.trials, config.seed * 1009 + j)


def stage_cost(config: SolverConfig, j: int) -> float:
    """Forward plus reverse UniqueEst at stage j."""
    return 2.0 * config.k_uniq * 2 ** (j + 1)


def stage_times(config: SolverConfig) -> np.ndarray:
    return np.cumsum([stage_cost(config, j) for j in range(1, config.m + 1)])


# ---------------------------------------------------------------------------
# classical per-eigenvector trace
# ---------------------------------------------------------------------------


@dataclass
class EigenClassification:
    lam: np.ndarray
    alpha: np.ndarray
    j: np.ndarray
    lam_tilde: np.ndarray
    good: np.ndarray
    eps: float

    @property
    def delta_bad(self) -> float:
        return float(np.sum(np.abs(self.alpha[~self.good]) ** 2))

    def sandwich_violations(self) -> int:
        lo = 1.0 / (self.eps * 2.0 ** (self.j + 1))
        hi = (1.0 / self.eps + 1.5) * 2.0 ** (-self.j.astype(float))
        tol = 1e-12
        return int(np.count_nonzero((self.lam_tilde < lo - tol) | (self.lam_tilde > hi + tol)))

    def to_dict(self) -> dict:
        return {
            "lam": self.lam.tolist(),
            "j": self.j.tolist(),
            "lam_tilde": self.lam_tilde.tolist(),
            "good": self.good.tolist(),
            "delta_bad": self.delta_bad,
        }


def estimate_candidates(lam: float, j: int, config: SolverConfig) -> tuple[float, float | None]:
    """(upper estimate, lower estimate or None) of the stage-j UniqueEst, unshifted."""
    x = config.shifts[j - 1]
    lam_p = lam + x * 2.0**-j
    x0, off = grid_position(lam_p, j + 1)
    if abs(off) <= 1 - config.eps:
        return float(decode(x0, j, x)), None
    upper = x0 + 1 if off > 0 else x0
    return float(decode(upper, j, x)), float(decode(upper - 1, j, x))


def classify(instance: HermitianInstance, b, config: SolverConfig) -> EigenClassification:
    alpha = instance.to_eigenbasis(b)
    n = instance.n
    js = np.zeros(n, dtype=np.int64)
    lt = np.zeros(n)
    good = np.zeros(n, dtype=bool)
    for i, lam in enumerate(instance.eigenvalues):
        for j in range(1, config.m + 1):
            upper, lower = estimate_candidates(float(lam), j, config)
            if stage_condition(upper, j, config.eps) or j == config.m:
                js[i], lt[i], good[i] = j, upper, lower is None
                break
    return EigenClassification(instance.eigenvalues.copy(), alpha, js, lt, good, config.eps)


def ideal_vectors(cls: EigenClassification, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenbasis amplitudes of psi_ideal and psi' (outcome 1, marker 2 j_i, E = 0)."""
    ideal = cls.alpha / (kappa * cls.lam)
    coef = np.array([rotation_coefficient(float(lt), kappa)[0] for lt in cls.lam_tilde])
    prime = cls.alpha * coef
    return ideal, prime


# ---------------------------------------------------------------------------
# compact simulation
# ---------------------------------------------------------------------------


@dataclass
class StageTables:
    """UniqueEst reflection vectors per (stage, eigenvector) on the compact E index."""

    e_index: np.ndarray
    reflect: list[np.ndarray]  # reflect[j-1] has shape (N, L)
    lam_hat: list[np.ndarray]  # lam_hat[j-1][l]: decoded estimate, nan when out of range


def build_tables(instance: HermitianInstance, config: SolverConfig) -> StageTables:
    dists = []
    support = {0}
    for j in range(1, config.m + 1):
        cfg = stage_ue_config(config, j)
        sh = shifted(instance, config.shifts[j - 1], j + 1)
        qs = [uniqueest_distribution(float(lam), cfg) for lam in sh.eigenvalues]
        for q in qs:
            support.update(np.flatnonzero(q > 0).tolist())
        dists.append(qs)
    e_index = np.array(sorted(support), dtype=np.int64)
    pos = {int(e): l for l, e in enumerate(e_index)}
    reflect, lam_hat = [], []
    for j, qs in enumerate(dists, start=1):
        size = 1 << (j + 1)
        u_all = np.zeros((instance.n, e_index.size))
        for i, q in enumerate(qs):
            u = householder_column(q)
            for e in np.flatnonzero(u):
                u_all[i, pos[int(e)]] = u[e]
        reflect.append(u_all)
        lh = np.full(e_index.size, np.nan)
        inside = e_index < size
        lh[inside] = decode(e_index[inside], j, config.shifts[j - 1])
        lam_hat.append(lh)
    return StageTables(e_index, reflect, lam_hat)


def _reflect_rows(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    # rows: (N, L); u: (N, L) per-eigenvector real reflection vectors
    return rows - 2 * (np.sum(rows * u, axis=1))[:, None] * u


@dataclass
class StageStats:
    clipped_mass: float = 0.0
    clip_events: int = 0


def apply_stage(X: np.ndarray, j: int, tables: StageTables, config: SolverConfig, stats: StageStats | None = None) -> np.ndarray:
    """One stage of the generator on the compact array; returns a new array."""
    X = X.copy()
    u = tables.reflect[j - 1]
    X[:, 2, 1] = _reflect_rows(X[:, 2, 1], u)
    lh = tables.lam_hat[j - 1]
    for l in np.flatnonzero(~np.isnan(lh)):
        if not stage_condition(lh[l], j, config.eps):
            continue
        amp = X[:, 2, 1, l].copy()
        succ, fail, clipped = conditional_rotation(amp, float(lh[l]), config.kappa)
        X[:, 1, 2 * j, l] += succ
        X[:, 0, 2 * j, l] += fail
        X[:, 2, 1, l] = 0
        if clipped and stats is not None:
            mass = float(np.sum(np.abs(amp) ** 2))
            if mass > 0:
                stats.clipped_mass += mass
                stats.clip_events += 1
    for o, s in ((2, 1), (1, 2 * j), (0, 2 * j)):
        X[:, o, s] = _reflect_rows(X[:, o, s], u)
    X[:, 0, 2 * j + 1, 1:] += X[:, 2, 1, 1:]
    X[:, 2, 1, 1:] = 0
    return X


@dataclass(eq=False)
class StateGenerator:
    """Algorithm handle: compact shape, tables, the staged algorithm, and helpers."""

    instance: HermitianInstance
    b: np.ndarray
    config: SolverConfig
    tables: StageTables
    vta: VariableTimeAlgorithm
    stats: StageStats = field(default_factory=StageStats)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.instance.n, 3, 2 * self.config.m + 2, self.tables.e_index.size)

    def unflatten(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(self.shape)

    def final_array(self) -> np.ndarray:
        return self.unflatten(self.vta.run()[-1])

    def to_dense(self, X: np.ndarray) -> QuantumState:
        lay = self.config.layout(self.instance.n)
        amps = np.zeros(lay.shape, dtype=np.complex128)
        amps[:, :, :, self.tables.e_index] = np.einsum("ij,josl->iosl", self.instance.eigenvectors, X)
        return QuantumState(lay, amps)


def vt_stategen(instance: HermitianInstance, b, config: SolverConfig) -> StateGenerator:
    b = np.asarray(b, dtype=np.complex128)
    if b.shape != (instance.n,):
        raise ConfigError(f"b has shape {b.shape}, expected ({instance.n},)")
    if abs(np.linalg.norm(b) - 1) > 1e-9:
        raise ConfigError("b must be normalized")
    lo = instance.eigenvalues.min()
    if lo < 1 / config.kappa - 1e-9 or instance.eigenvalues.max() > 1 + 1e-9:
        raise ConfigError(f"spectrum [{lo}, {instance.eigenvalues.max()}] outside [1/kappa, 1]")
    tables = build_tables(instance, config)
    n, m, L = instance.n, config.m, tables.e_index.size
    shape = (n, 3, 2 * m + 2, L)

    ii, oo, ss, ll = np.meshgrid(np.arange(n), np.arange(3), np.arange(2 * m + 2), np.arange(L), indexing="ij")
    stop = np.where(ss >= 2, ss // 2, ALIVE).astype(np.int64)
    basis = BranchBasis(ii.ravel(), oo.ravel(), ss.ravel(), tables.e_index[ll.ravel()], stop.ravel())

    X0 = np.zeros(shape, dtype=np.complex128)
    X0[:, 2, 1, 0] = instance.to_eigenbasis(b)
    gen_stats = StageStats()

    def make_stage(j):
        def stage(flat):
            return apply_stage(np.asarray(flat).reshape(shape), j, tables, config, gen_stats).ravel()

        return stage

    stages = [make_stage(j) for j in range(1, m + 1)]
    vta = VariableTimeAlgorithm(basis, X0.ravel(), stages, stage_times(config), meta={"kind": "stategen", "m": m})
    return StateGenerator(instance, b, config, tables, vta, gen_stats)


# ---------------------------------------------------------------------------
# whole-state reference path on the dense register layout
# ---------------------------------------------------------------------------


def dense_stategen(instance: HermitianInstance, b, config: SolverConfig, ledger: CostLedger | None = None) -> QuantumState:
    """The same stages applied to the full I x O x S x E state (small m only)."""
    lay = config.layout(instance.n)
    state = QuantumState.from_input(lay, b)
    e_vals = np.arange(lay.estimate_dim)
    for j in range(1, config.m + 1):
        cfg = stage_ue_config(config, j)
        sh = shifted(instance, config.shifts[j - 1], j + 1)
        running = lambda o, s: (o == 2) & (s == 1)  # noqa: E731
        state = unique_est(state, sh, cfg, control=running, ledger=ledger)
        amps = state.amplitudes.copy()
        size = 1 << (j + 1)
        lh = decode(e_vals[:size], j, config.shifts[j - 1])
        for e in range(size):
            if not stage_condition(lh[e], j, config.eps):
                continue
            succ, fail, _ = conditional_rotation(amps[:, 2, 1, e].copy(), float(lh[e]), config.kappa)
            amps[:, 1, 2 * j, e] += succ
            amps[:, 0, 2 * j, e] += fail
            amps[:, 2, 1, e] = 0
        state = state.with_amplitudes(amps)
        touched = lambda o, s, j=j: ((o == 2) & (s == 1)) | ((o < 2) & (s == 2 * j))  # noqa: E731
        state = unique_est(state, sh, cfg, control=touched, ledger=ledger, reverse=True)
        amps = state.amplitudes.copy()
        amps[:, 0, 2 * j + 1, 1:] += amps[:, 2, 1, 1:]
        amps[:, 2, 1, 1:] = 0
        state = state.with_amplitudes(amps)
    return state

