"""Instance generation with prescribed spectra, kappa sweeps, slope fits, and report writers."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Literal, Sequence

import numpy as np

from .registers import HermitianInstance, eigendecompose
from .solver import solve_hhl, solve_vtaa
from .stategen import SolverConfig

SpectrumKind = Literal["log-uniform", "bimodal", "clustered"]
BMode = Literal["random", "adversarial", "image"]

CSV_FIELDS = ["method", "kappa", "n", "seed", "cost", "fidelity", "accept_rate", "t_av", "p_succ"]


@dataclass(frozen=True)
class SpectrumSpec:
    kind: SpectrumKind
    kappa: float
    a: float | None = None  # clustered base; spectrum inside [a, 2a]

    def __post_init__(self):
        if self.kind not in ("log-uniform", "bimodal", "clustered"):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.kind == "clustered":
            a = self.base
            if a < 1 / self.kappa - 1e-12 or 2 * a > 1 + 1e-12:
                raise ValueError(f"clustered base a={a} needs [a, 2a] inside [1/kappa, 1]")

    @property
    def base(self) -> float:
        return self.a if self.a is not None else 1 / self.kappa

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        k = self.kappa
        if self.kind == "log-uniform":
            lam = np.exp(rng.uniform(-math.log(k), 0, size=n))
            lam[0], lam[-1] = 1 / k, 1.0
        elif self.kind == "bimodal":
            lo = n // 2
            lam = np.concatenate([rng.uniform(1 / k, 2 / k, size=lo), rng.uniform(0.5, 1, size=n - lo)])
            lam[0], lam[-1] = 1 / k, 1.0
        else:
            a = self.base
            lam = rng.uniform(a, 2 * a, size=n)
        return np.sort(np.clip(lam, 1 / k, 1.0))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def gen_instance(n: int, spec: SpectrumSpec, seed: int = 0, b_mode: BMode = "random") -> tuple[HermitianInstance, np.ndarray]:
    """A = V diag(lam) V^dagger with seeded V, and a seeded unit b.

    ``b_mode``: ``random`` (uniform on the sphere), ``adversarial`` (supported on
    the lower half of the spectrum), or ``image`` (b proportional to A y for a
    random y, which puts most weight on large eigenvalues).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    lam = spec.sample(n, rng)
    v = random_unitary(n, rng)
    a = (v * lam) @ v.conj().T
    a = (a + a.conj().T) / 2
    coeff = rng.normal(size=n) + 1j * rng.normal(size=n)
    if b_mode == "adversarial":
        coeff[n // 2 :] = 0
    elif b_mode == "image":
        coeff = lam * coeff
    elif b_mode != "random":
        raise ValueError(f"unknown b_mode {b_mode!r}")
    b = v @ coeff
    b = b / np.linalg.norm(b)
    return eigendecompose(a, spec.kappa), b


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class ScalingRow:
    method: str
    kappa: float
    n: int
    seed: int
    cost: float
    fidelity: float
    accept_rate: float
    t_av: float
    p_succ: float
    failed: bool = False

    def csv_values(self) -> list:
        return [self.method, f"{self.kappa:g}", self.n, self.seed, f"{self.cost:.6g}", f"{self.fidelity:.6f}",
                f"{self.accept_rate:.4f}", f"{self.t_av:.6g}", f"{self.p_succ:.6g}"]


def worker_count() -> int:
    cap = os.environ.get("VTAMP_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def row_seed(seed: int, kappa: float, trial: int) -> int:
    return int(np.random.SeedSequence([seed, int(round(kappa * 1000)), trial]).generate_state(1)[0])


def run_one(method: str, kappa: float, n: int, seed: int, spectrum: SpectrumKind, eps_final: float = 0.2,
            b_mode: BMode = "image", mode: str = "idealized") -> ScalingRow:
    if method not in ("vtaa", "hhl"):
        raise ValueError(f"unknown method {method!r}")
    inst, b = gen_instance(n, SpectrumSpec(spectrum, kappa), seed, b_mode)
    cfg = SolverConfig.make(kappa, eps_final, seed=seed, mode=mode)
    try:
        if method == "vtaa":
            _, rep = solve_vtaa(inst, b, cfg, with_bounds=False)
        else:
            _, rep = solve_hhl(inst, b, kappa, cfg.eps, eps_final, seed=seed)
    except (ValueError, FloatingPointError):
        return ScalingRow(method, kappa, n, seed, math.nan, 0.0, 0.0, math.nan, math.nan, failed=True)
    return ScalingRow(method, kappa, n, seed, rep.cost, rep.fidelity, rep.accept_rate, rep.t_av, rep.p_succ,
                      failed=not rep.accepted)


def scaling_experiment(methods: Sequence[str], kappas: Sequence[float], n: int, trials: int, seed: int = 0,
                       spectrum: SpectrumKind = "bimodal", eps_final: float = 0.2, b_mode: BMode = "image",
                       workers: int | None = None) -> list[ScalingRow]:
    kappas = list(kappas)
    if len(kappas) < 2 or any(b <= a for a, b in zip(kappas, kappas[1:])):
        raise ValueError("kappa list must be strictly ascending with at least two points")
    jobs = [(meth, k, row_seed(seed, k, t)) for meth in methods for k in kappas for t in range(trials)]
    workers = workers or worker_count()

    def go(job):
        meth, k, s = job
        return run_one(meth, k, n, s, spectrum, eps_final, b_mode)

    if workers <= 1:
        return [go(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(go, jobs))


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    kappas: list
    medians: list


def fit_slope(rows: Sequence[ScalingRow]) -> SlopeFit:
    """Least-squares slope of log(median cost) against log(kappa)."""
    by_k: dict[float, list[float]] = {}
    for r in rows:
        if not math.isnan(r.cost):
            by_k.setdefault(r.kappa, []).append(r.cost)
    if len(by_k) < 3:
        raise ValueError("need at least three distinct kappa values to fit a slope")
    ks = sorted(by_k)
    med = [float(np.median(by_k[k])) for k in ks]
    x, y = np.log(ks), np.log(med)
    (slope, icpt), res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(np.sqrt(res[0] / len(ks))) if res.size else 0.0
    return SlopeFit(float(slope), float(icpt), resid, ks, med)


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def rows_to_csv(rows: Sequence[ScalingRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow(r.csv_values())
    return buf.getvalue()


def rows_to_json(rows: Sequence[ScalingRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# synthetic variable-time suite
# ---------------------------------------------------------------------------


def synthetic_profile(rng: np.random.Generator, stages: int = 16) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A stopping law with rare success early, a thin tail running to the end, and most mass failing early.

    Success probability is drawn log-uniformly in [1e-11, 1e-9] and the tail is
    10 to 300 times larger, so T_max / T_av is in the thousands.
    """
    t = 2.0 ** np.arange(stages)
    p_succ = 10 ** rng.uniform(-11, -9)
    tail = p_succ * 10 ** rng.uniform(1, 2.5)
    p_stop = np.zeros(stages)
    succ_inc = np.zeros(stages)
    succ_inc[rng.integers(0, 3)] = p_succ
    early = rng.dirichlet(np.ones(4)) * (1 - tail - p_succ)
    p_stop[:4] += early
    p_stop += succ_inc
    last = rng.integers(stages - 3, stages)
    p_stop[last] += tail
    p_stop[-1] += max(0.0, 1 - p_stop.sum())
    return t, p_stop, np.cumsum(succ_inc)


def synthetic_suite(count: int = 20, seed: int = 0, stages: int = 16):
    from .vtmodel import synth_vta

    rng = np.random.default_rng([seed, 0xC4])
    return [synth_vta(*synthetic_profile(rng, stages), seed=seed * 1000 + i) for i in range(count)]
