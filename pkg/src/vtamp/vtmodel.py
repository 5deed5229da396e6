"""Variable-stopping-time algorithms: stage unitaries, stopped subspaces, stopping statistics.

A state is a flat complex vector over a fixed sparse basis.  Every basis entry
carries labels (block, outcome, marker, e) and the stage at which its branch
stopped (``ALIVE`` for the still-running entries).  Stopped subspaces are the
basis predicates ``stop_stage <= i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ALIVE = np.iinfo(np.int64).max
MODEL_TOL = 1e-8

StageFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class BranchBasis:
    block: np.ndarray
    outcome: np.ndarray
    marker: np.ndarray
    e: np.ndarray
    stop_stage: np.ndarray

    def __post_init__(self):
        n = self.block.size
        for name in ("outcome", "marker", "e", "stop_stage"):
            if getattr(self, name).size != n:
                raise ValueError(f"label array {name} has the wrong length")

    @property
    def size(self) -> int:
        return int(self.block.size)

    def outcome_mask(self, *values: int) -> np.ndarray:
        return np.isin(self.outcome, values)


@dataclass(frozen=True, eq=False)
class VariableTimeAlgorithm:
    """Stage unitaries U_1..U_m with stopping times t_1 < ... < t_m.

    ``stages[i]`` maps the state at time t_{i} to the state at t_{i+1} (0-based,
    with stage 0 starting from ``initial``).  ``stopped[i]`` is the mask of H_{i+1}.
    """

    basis: BranchBasis
    initial: np.ndarray
    stages: Sequence[StageFn]
    times: np.ndarray
    stopped: Sequence[np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.size != len(self.stages) or times.size == 0:
            raise ValueError("need one stopping time per stage")
        if np.any(np.diff(times) <= 0) or times[0] <= 0:
            raise ValueError("stopping times must be positive and strictly increasing")
        object.__setattr__(self, "times", times)
        if self.stopped is None:
            masks = [self.basis.stop_stage <= i + 1 for i in range(times.size)]
            object.__setattr__(self, "stopped", masks)

    @property
    def n_stages(self) -> int:
        return int(self.times.size)

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def run(self, upto: int | None = None, state: np.ndarray | None = None) -> list[np.ndarray]:
        """States after each stage (``upto`` stages, default all)."""
        psi = self.initial if state is None else state
        out = []
        for fn in self.stages[: self.n_stages if upto is None else upto]:
            psi = fn(psi)
            out.append(psi)
        return out

    def with_stages(self, stages: Sequence[StageFn], stopped=None) -> VariableTimeAlgorithm:
        return VariableTimeAlgorithm(self.basis, self.initial, list(stages), self.times, stopped or self.stopped, self.meta)


def bucket_times(times) -> np.ndarray:
    """Round stopping times up to powers of two."""
    t = np.asarray(times, dtype=float)
    return 2.0 ** np.ceil(np.log2(t) - 1e-12)


# ---------------------------------------------------------------------------
# consistency validation
# ---------------------------------------------------------------------------


@dataclass
class StageCheck:
    stage: int
    nesting_violations: int
    decomposition_residual: float
    consistency_residual: float
    stopped_identity_residual: float
    norm_residual: float

    def passed(self, tol: float = MODEL_TOL) -> bool:
        return (
            self.nesting_violations == 0
            and self.decomposition_residual <= tol
            and self.consistency_residual <= tol
            and self.stopped_identity_residual <= tol
            and self.norm_residual <= tol
        )


@dataclass
class ValidationReport:
    stages: list[StageCheck]
    tol: float = MODEL_TOL

    @property
    def passed(self) -> bool:
        return all(s.passed(self.tol) for s in self.stages)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "stages": [dict(vars(s), passed=s.passed(self.tol)) for s in self.stages],
        }


def _nrm(v) -> float:
    return float(np.linalg.norm(v))


def validate(vta: VariableTimeAlgorithm, state: np.ndarray | None = None, tol: float = MODEL_TOL) -> ValidationReport:
    """Check nesting, outcome decomposition, and freezing of the stopped parts, stage by stage."""
    basis = vta.basis
    stopped_out = basis.outcome_mask(0, 1)
    running = basis.outcome == 2
    psi_prev = vta.initial if state is None else state
    states = vta.run(state=psi_prev)
    rows = []
    for i, psi in enumerate(states):
        h_i = vta.stopped[i]
        nest = 0
        if i + 1 < vta.n_stages:
            nest = int(np.count_nonzero(h_i & ~vta.stopped[i + 1]))
        decomp = math.hypot(_nrm(psi[stopped_out & ~h_i]), _nrm(psi[running & h_i]))
        consist = 0.0
        ident = 0.0
        if i + 1 < vta.n_stages:
            nxt = states[i + 1]
            for b in (0, 1):
                sel = h_i & (basis.outcome == b)
                consist = max(consist, _nrm(nxt[sel] - psi[sel]))
            # the next stage must act as the identity on a purely stopped input
            frozen = np.where(h_i & stopped_out, psi, 0)
            ident = _nrm(vta.stages[i + 1](frozen) - frozen)
        norm_res = abs(_nrm(psi) - _nrm(psi_prev))
        rows.append(StageCheck(i + 1, nest, decomp, consist, ident, norm_res))
        psi_prev = psi
    return ValidationReport(rows, tol)


# ---------------------------------------------------------------------------
# stopping statistics
# ---------------------------------------------------------------------------


@dataclass
class StoppingProfile:
    times: np.ndarray
    p_stop_leq: np.ndarray
    p_stop_gt: np.ndarray
    p_succ_i: np.ndarray
    p_succ: float
    t_av: float
    t_max: float

    @property
    def p_stop(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.p_stop_leq]))

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "p_stop_leq": self.p_stop_leq.tolist(),
            "p_stop_gt": self.p_stop_gt.tolist(),
            "p_succ_i": self.p_succ_i.tolist(),
            "p_succ": self.p_succ,
            "t_av": self.t_av,
            "t_max": self.t_max,
        }


def stopping_profile(vta: VariableTimeAlgorithm, state: np.ndarray | None = None) -> StoppingProfile:
    """Stopping and success probabilities per stage plus the l2-average stopping time.

    Mass still running after the last stage is counted as stopping at t_m.
    """
    basis = vta.basis
    psi0 = vta.initial if state is None else state
    total = _nrm(psi0) ** 2
    leq, gt, succ = [], [], []
    for psi in vta.run(state=psi0):
        w = np.abs(psi) ** 2 / total
        leq.append(float(w[basis.outcome != 2].sum()))
        gt.append(float(w[basis.outcome == 2].sum()))
        succ.append(float(w[basis.outcome == 1].sum()))
    leq = np.array(leq)
    gt = np.array(gt)
    p_stop = np.diff(np.concatenate([[0.0], leq]))
    p_stop[-1] += gt[-1]
    t_av = math.sqrt(float(np.sum(np.clip(p_stop, 0, None) * vta.times**2)))
    return StoppingProfile(vta.times.copy(), leq, gt, np.array(succ), succ[-1], t_av, vta.t_max)


# ---------------------------------------------------------------------------
# synthetic algorithms with a prescribed profile
# ---------------------------------------------------------------------------


class InfeasibleProfile(ValueError):
    pass


def synth_vta(times, p_stop, p_succ, seed: int = 0, good_dim: int = 2) -> VariableTimeAlgorithm:
    """Build a variable-time algorithm with the given stopping law.

    ``p_stop[i]`` is the probability of stopping exactly at stage i and
    ``p_succ[i]`` the cumulative success probability by stage i.
    Successful branches carry a random ``good_dim``-dimensional state.
    """
    t = np.asarray(times, dtype=float)
    ps = np.asarray(p_stop, dtype=float)
    pc = np.asarray(p_succ, dtype=float)
    m = t.size
    if ps.size != m or pc.size != m:
        raise InfeasibleProfile("times, p_stop and p_succ must have equal length")
    if np.any(ps < 0) or ps.sum() > 1 + 1e-12:
        raise InfeasibleProfile("stopping probabilities must be >= 0 and sum to <= 1")
    leq = np.cumsum(ps)
    if np.any(pc > leq + 1e-12):
        bad = int(np.argmax(pc > leq + 1e-12))
        raise InfeasibleProfile(f"p_succ[{bad}]={pc[bad]} exceeds p_stop_leq={leq[bad]}")
    dsucc = np.diff(np.concatenate([[0.0], pc]))
    if np.any(dsucc < -1e-12) or np.any(dsucc > ps + 1e-12):
        raise InfeasibleProfile("success increments must lie in [0, p_stop] per stage")
    dsucc = np.clip(dsucc, 0, None)
    dfail = np.clip(ps - dsucc, 0, None)
    rng = np.random.default_rng(seed)

    # basis: entry 0 running; per stage, good_dim success entries and one failure entry
    per = good_dim + 1
    n = 1 + m * per
    outcome = np.full(n, 2)
    stop = np.full(n, ALIVE)
    marker = np.ones(n, dtype=np.int64)
    for i in range(m):
        base = 1 + i * per
        outcome[base : base + good_dim] = 1
        outcome[base + good_dim] = 0
        stop[base : base + per] = i + 1
        marker[base : base + per] = 2 * (i + 1)
    basis = BranchBasis(np.zeros(n, dtype=np.int64), outcome, marker, np.zeros(n, dtype=np.int64), stop)

    alive_before = 1.0 - np.concatenate([[0.0], leq[:-1]])
    stages = []
    for i in range(m):
        a = alive_before[i]
        if a > 1e-300:
            dirn = rng.normal(size=good_dim) + 1j * rng.normal(size=good_dim)
            dirn /= np.linalg.norm(dirn)
            c_s = math.sqrt(dsucc[i] / a) * dirn
            c_f = math.sqrt(dfail[i] / a) * np.exp(2j * math.pi * rng.uniform())
            c_a = math.sqrt(max(0.0, 1 - (dsucc[i] + dfail[i]) / a))
        else:
            c_s, c_f, c_a = np.zeros(good_dim), 0.0, 1.0
        stages.append(_synth_stage(1 + i * per, good_dim, c_s, c_f, c_a))
    initial = np.zeros(n, dtype=np.complex128)
    initial[0] = 1.0
    meta = {"kind": "synthetic", "p_stop": ps.tolist(), "p_succ": pc.tolist(), "seed": seed}
    return VariableTimeAlgorithm(basis, initial, stages, t, meta=meta)


def _synth_stage(base, good_dim, c_s, c_f, c_a) -> StageFn:
    def stage(psi: np.ndarray) -> np.ndarray:
        out = psi.copy()
        a = psi[0]
        out[base : base + good_dim] += a * c_s
        out[base + good_dim] += a * c_f
        out[0] = a * c_a
        return out

    return stage
