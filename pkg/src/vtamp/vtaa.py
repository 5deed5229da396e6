"""Variable-time amplitude amplification over a staged algorithm.

Every intermediate algorithm is represented by its output state plus its cost,
so nested amplification is simulated exactly in the two-dimensional plane of
each stage without re-running earlier stages.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .amplitude import AmplifiableAlgorithm, amp_estimate, amplified_probability, grover_amplify, amplify_lower_bound
from .registers import CostLedger
from .vtmodel import StoppingProfile, VariableTimeAlgorithm, bucket_times, stopping_profile


@dataclass(frozen=True)
class VtaaParams:
    m: int
    c_est: float = 0.1
    p_floor: float = 1e-6
    k_conf: int | None = None
    estimate_mode: Literal["oracle", "faithful"] = "oracle"
    amplify_method: Literal["closed", "reflect"] = "closed"
    target: float = 0.5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0 < self.c_est < 1:
            raise ValueError(f"c_est must lie in (0, 1), got {self.c_est}")
        if not 0 < self.p_floor <= 1:
            raise ValueError(f"p_floor must lie in (0, 1], got {self.p_floor}")
        if self.k_conf is None:
            object.__setattr__(self, "k_conf", default_k_conf(self.m))
        if self.k_conf < math.log2(self.m) + 5:
            raise ValueError(f"k_conf={self.k_conf} below log2(m) + 5")

    @property
    def band(self) -> tuple[float, float]:
        return 1.0 / (9 * self.m), 1.0 / self.m

    @classmethod
    def for_vta(cls, vta: VariableTimeAlgorithm, **kw) -> VtaaParams:
        return cls(m=vta.n_stages, **kw)


def default_k_conf(m: int) -> int:
    return math.ceil(math.log2(m) + 5)


def continuing_mask(vta: VariableTimeAlgorithm) -> np.ndarray:
    """Good set for the intermediate Estimate calls: succeeded or still running."""
    return vta.basis.outcome_mask(1, 2)


def success_mask(vta: VariableTimeAlgorithm) -> np.ndarray:
    return vta.basis.outcome == 1


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------


def compose_B(i: int, prev: AmplifiableAlgorithm | None, vta: VariableTimeAlgorithm, times=None) -> AmplifiableAlgorithm:
    """B_i: run A_{i-1}, then the stage from t_{i-1} to t_i on the still-running part."""
    times = bucket_times(vta.times) if times is None else times
    if not 0 <= i < vta.n_stages:
        raise IndexError(f"stage {i} out of range for {vta.n_stages} stages")
    good = continuing_mask(vta)
    if i == 0:
        return AmplifiableAlgorithm(vta.stages[0](vta.initial), good, float(times[0]))
    if prev is None:
        raise ValueError("B_i for i > 0 needs A_{i-1}")
    return AmplifiableAlgorithm(vta.stages[i](prev.state), good, prev.cost + float(times[i] - times[i - 1]))


def choose_rounds(p: float, m: int) -> int:
    """Smallest k with 1/(9m) <= (2k+1)^2 p <= 1/m (largest k under 1/m if the band is skipped)."""
    lo, hi = 1.0 / (9 * m), 1.0 / m
    if p <= 0:
        raise ValueError("cannot amplify a zero estimate")
    k = 0
    while (2 * k + 1) ** 2 * p < lo:
        k += 1
    while k > 0 and (2 * k + 1) ** 2 * p > hi:
        k -= 1
    return k


def boost_A(i: int, B: AmplifiableAlgorithm, p_i: float, params: VtaaParams) -> tuple[AmplifiableAlgorithm, int]:
    """A_i from B_i and its estimate: unchanged above 1/(9m), otherwise amplified into the band."""
    if p_i > 1.0 / (9 * params.m):
        return B, 0
    k = choose_rounds(p_i, params.m)
    return grover_amplify(B, k, method=params.amplify_method), k


def final_rounds(p: float, target: float = 0.5) -> int:
    """Grover rounds taking an estimated success probability ``p`` closest to certainty."""
    if p >= target:
        return 0
    theta = math.asin(math.sqrt(p))
    return max(0, round(math.pi / (4 * theta) - 0.5))


# ---------------------------------------------------------------------------
# the full procedure
# ---------------------------------------------------------------------------


@dataclass
class StageRecord:
    stage: int
    p_est: float
    r_prime: float
    r: float
    rounds: int
    cost_B: float
    cost_A: float
    estimate_cost: float

    @property
    def amplified(self) -> bool:
        return self.rounds > 0


@dataclass
class VtaaRun:
    stages: list[StageRecord]
    final_state: np.ndarray | None
    alpha_sq: float
    final_estimate: float
    final_rounds: int
    cost_Am: float
    total_cost: float
    ledger: CostLedger
    params: VtaaParams
    no_good: bool = False
    promise_violations: int = 0
    run_cost: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.no_good and self.alpha_sq >= 0.5

    def to_dict(self) -> dict:
        return {
            "stages": [dict(asdict(s), amplified=s.amplified) for s in self.stages],
            "alpha_sq": self.alpha_sq,
            "final_estimate": self.final_estimate,
            "final_rounds": self.final_rounds,
            "cost_Am": self.cost_Am,
            "total_cost": self.total_cost,
            "run_cost": self.run_cost,
            "ledger": self.ledger.to_dict(),
            "no_good": self.no_good,
            "promise_violations": self.promise_violations,
            "params": asdict(self.params),
        }


def run_vtaa(
    vta: VariableTimeAlgorithm,
    params: VtaaParams | None = None,
    seed: int | np.random.Generator | None = 0,
    ledger: CostLedger | None = None,
    charge_run: bool = True,
) -> VtaaRun:
    """Run the staged estimate-and-amplify procedure and the final amplification.

    The ledger receives every Estimate call and, with ``charge_run``, one run of
    the final amplified algorithm (whose cost is also kept as ``run_cost``).
    """
    params = params or VtaaParams.for_vta(vta)
    if params.m != vta.n_stages:
        raise ValueError(f"params.m={params.m} but the algorithm has {vta.n_stages} stages")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ledger = ledger if ledger is not None else CostLedger()
    times = bucket_times(vta.times)
    est_kw = dict(c=params.c_est, p=params.p_floor, k=params.k_conf, mode=params.estimate_mode)
    records: list[StageRecord] = []
    violations = 0
    A = None
    for i in range(vta.n_stages):
        B = compose_B(i, A, vta, times)
        est = amp_estimate(B, seed=rng, ledger=ledger, name="estimate", **est_kw)
        violations += est.promise_violated
        if est.value == 0:
            return _no_good(records, params, ledger, violations)
        A, k = boost_A(i, B, est.value, params)
        records.append(
            StageRecord(i, est.value, B.success_probability, A.success_probability, k, B.cost, A.cost, est.cost)
        )

    final = AmplifiableAlgorithm(A.state, success_mask(vta), A.cost)
    est = amp_estimate(final, seed=rng, ledger=ledger, name="estimate", **est_kw)
    violations += est.promise_violated
    if est.value == 0:
        return _no_good(records, params, ledger, violations)
    kf = final_rounds(est.value, params.target)
    out = grover_amplify(final, kf, method=params.amplify_method)
    if charge_run:
        ledger.charge("run", out.cost)
    return VtaaRun(
        records,
        out.state,
        out.success_probability,
        est.value,
        kf,
        A.cost,
        ledger.evolution_time,
        ledger,
        params,
        promise_violations=violations,
        run_cost=out.cost,
    )


def _no_good(records, params, ledger, violations) -> VtaaRun:
    return VtaaRun(records, None, 0.0, 0.0, 0, 0.0, ledger.evolution_time, ledger, params, True, violations)


# ---------------------------------------------------------------------------
# comparisons and bound checks
# ---------------------------------------------------------------------------


def plain_aa_cost(vta: VariableTimeAlgorithm, profile: StoppingProfile | None = None, target: float = 0.5) -> float:
    """Cost of amplifying the whole algorithm run to completion: T_max per call."""
    profile = profile or stopping_profile(vta)
    t_max = float(bucket_times(vta.times)[-1])
    return t_max * (2 * final_rounds(profile.p_succ, target) + 1)


# frozen after one calibration pass (benchmarks/calibrate.py, seeds 1000+)
C_CAL = 40.0


def vtaa_bound_form(profile: StoppingProfile, times=None) -> float:
    """T_max sqrt(log T_max) + (T_av / sqrt(p_succ)) log^1.5 T_max, logs base 2 floored at 1."""
    t = bucket_times(profile.times) if times is None else np.asarray(times)
    p = np.diff(np.concatenate([[0.0], profile.p_stop_leq]))
    p[-1] += profile.p_stop_gt[-1]
    t_av = math.sqrt(float(np.sum(np.clip(p, 0, None) * t**2)))
    t_max = float(t[-1])
    lg = max(1.0, math.log2(t_max))
    return t_max * math.sqrt(lg) + t_av / math.sqrt(profile.p_succ) * lg**1.5


@dataclass
class BoundCheck:
    name: str
    worst_ratio: float  # observed / allowed; <= 1 passes
    detail: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.worst_ratio <= 1 + 1e-9


def band_check(run: VtaaRun) -> BoundCheck:
    """Amplified stages: estimate lands in the band and the true r_i in the band widened by the amplification slack."""
    m, c = run.params.m, run.params.c_est
    lo, hi = run.params.band
    worst, rows = 0.0, []
    for s in run.stages:
        if not s.amplified:
            continue
        e = (2 * s.rounds + 1) ** 2 * s.p_est
        r_lo = lo * (1 - 1 / (3 * m)) * (1 - c) / (1 + c)
        r_hi = hi * (1 + c)
        ratio = max(lo / e, e / hi, r_lo / s.r, s.r / r_hi)
        rows.append((s.stage, e, s.r, ratio))
        worst = max(worst, ratio)
    return BoundCheck("r_band", worst, rows)


def amplify_law_check(run: VtaaRun) -> BoundCheck:
    """Amplified r_i equals the sin^2 law to 1e-9 and sits above the tight lower bound."""
    worst, rows = 0.0, []
    for s in run.stages:
        if not s.amplified:
            continue
        exact = amplified_probability(s.r_prime, s.rounds)
        bound = amplify_lower_bound(s.r_prime, s.rounds)
        off = abs(exact - s.r)
        ratio = bound / s.r if s.r > 0 else math.inf
        if off > 1e-9:
            ratio = max(ratio, 1 + off)
        rows.append((s.stage, s.r, exact, bound))
        worst = max(worst, ratio)
    return BoundCheck("amplify_law", worst, rows)


def telescoping_check(run: VtaaRun, times=None) -> BoundCheck:
    """T_i <= (1 + 1/(3m-1)) sqrt(r_i / r'_i) (T_{i-1} + dt_i), slack for estimate noise."""
    m, c = run.params.m, run.params.c_est
    slack = math.sqrt((1 - 1 / (3 * m)) / (1 - (1 + c) / (3 * m)))
    worst, rows = 0.0, []
    for s in run.stages:
        allowed = (1 + 1 / (3 * m - 1)) * math.sqrt(s.r / s.r_prime) * s.cost_B * slack
        ratio = s.cost_A / allowed
        rows.append((s.stage, s.cost_A, allowed))
        worst = max(worst, ratio)
    return BoundCheck("telescoping", worst, rows)


def ratio_product_check(run: VtaaRun, profile: StoppingProfile) -> BoundCheck:
    """prod_{j>i} sqrt(r_j / r'_j) <= 3 (1 + sqrt(p_stop>i / p_succ)), widened for estimate noise."""
    m, c = run.params.m, run.params.c_est
    widen = math.sqrt((1 + c) / ((1 - c) * (1 - 1 / (3 * m))))
    ratios = np.array([math.sqrt(s.r / s.r_prime) for s in run.stages])
    worst, rows = 0.0, []
    for i in range(len(run.stages)):
        lhs = float(np.prod(ratios[i + 1 :]))
        rhs = 3 * widen * (1 + math.sqrt(profile.p_stop_gt[i] / profile.p_succ))
        rows.append((i, lhs, rhs))
        worst = max(worst, lhs / rhs)
    return BoundCheck("ratio_product", worst, rows)


def all_checks(run: VtaaRun, profile: StoppingProfile) -> list[BoundCheck]:
    return [band_check(run), amplify_law_check(run), telescoping_check(run), ratio_product_check(run, profile)]
