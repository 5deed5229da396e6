"""Amplitude amplification with the tight success-probability bound, and amplitude estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .registers import CostLedger


def max_rounds(eps: float) -> int:
    """Largest m with m <= pi / (4 arcsin sqrt(eps)) - 1/2, floored at 0."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    bound = math.pi / (4 * math.asin(math.sqrt(eps))) - 0.5
    # guard exact-integer bounds against rounding below the integer
    return max(0, math.floor(bound + 1e-9))


def amplify_lower_bound(delta: float, m: int) -> float:
    r = (2 * m + 1) ** 2 * delta
    return (1 - r / 3) * r


def amplified_probability(delta: float, m: int) -> float:
    return math.sin((2 * m + 1) * math.asin(math.sqrt(min(max(delta, 0.0), 1.0)))) ** 2


@dataclass(frozen=True)
class AmplifyPlan:
    rounds: int
    initial_prob: float
    predicted_bound: float

    @classmethod
    def for_eps(cls, delta: float, eps: float) -> AmplifyPlan:
        m = max_rounds(eps)
        return cls(m, delta, amplify_lower_bound(delta, m))


@dataclass(frozen=True, eq=False)
class AmplifiableAlgorithm:
    """An algorithm seen through its output state A|0>, a basis-diagonal good set, and a cost.

    ``unitary`` is kept when the algorithm was built from an explicit matrix.
    """

    state: np.ndarray
    good: np.ndarray
    cost: float = 1.0
    unitary: np.ndarray | None = None

    @classmethod
    def from_unitary(cls, unitary, good, cost: float = 1.0) -> AmplifiableAlgorithm:
        u = np.asarray(unitary, dtype=np.complex128)
        dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if dev > 1e-9:
            raise ValueError(f"matrix is not unitary (deviation {dev:.2e})")
        return cls(u[:, 0].copy(), np.asarray(good, dtype=bool), cost, u)

    @property
    def success_probability(self) -> float:
        s = self.state
        return float(np.vdot(s[self.good], s[self.good]).real / np.vdot(s, s).real)


def reflect_good(vec: np.ndarray, good: np.ndarray) -> np.ndarray:
    out = vec.copy()
    out[good] *= -1
    return out


def reflect_about(vec: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """(2|psi><psi| - I) vec for normalized psi."""
    return 2 * psi * np.vdot(psi, vec) - vec


def grover_iterate(vec: np.ndarray, psi: np.ndarray, good: np.ndarray) -> np.ndarray:
    return reflect_about(reflect_good(vec, good), psi)


def grover_amplify(alg: AmplifiableAlgorithm, m: int, method: Literal["reflect", "closed"] = "reflect") -> AmplifiableAlgorithm:
    """Apply ``m`` Grover iterates after one run of ``alg``; costs 2m+1 runs of alg."""
    if m < 0:
        raise ValueError(f"rounds must be >= 0, got {m}")
    if method == "closed":
        new_state = amplify_closed(alg.state, alg.good, m)
    else:
        nrm = np.linalg.norm(alg.state)
        psi = alg.state / nrm
        v = psi.copy()
        for _ in range(m):
            v = grover_iterate(v, psi, alg.good)
        new_state = v * nrm
    new_unitary = None
    if alg.unitary is not None:
        psi = alg.unitary[:, 0]
        q = 2 * np.outer(psi, psi.conj()) - np.eye(psi.size)
        q = q * np.where(alg.good, -1.0, 1.0)[None, :]
        new_unitary = np.linalg.matrix_power(q, m) @ alg.unitary
    return replace(alg, state=new_state, cost=(2 * m + 1) * alg.cost, unitary=new_unitary)


def amplify_closed(vec: np.ndarray, good: np.ndarray, k: int) -> np.ndarray:
    """k Grover iterates about ``vec`` itself, computed in its two-dimensional invariant plane."""
    total = float(np.vdot(vec, vec).real)
    if total == 0 or k == 0:
        return vec.copy()
    pg = float(np.vdot(vec[good], vec[good]).real) / total
    pg = min(max(pg, 0.0), 1.0)
    theta = math.asin(math.sqrt(pg))
    out = vec.copy()
    if pg > 0:
        out[good] *= math.sin((2 * k + 1) * theta) / math.sin(theta)
    if pg < 1:
        out[~good] *= math.cos((2 * k + 1) * theta) / math.cos(theta)
    return out


# ---------------------------------------------------------------------------
# amplitude estimation
# ---------------------------------------------------------------------------


@dataclass
class EstimateResult:
    value: float
    cost: float
    true_value: float
    promise_violated: bool = False
    schedule: list = field(default_factory=list)


def estimate_cost(eps_true: float, p: float, k: int) -> float:
    """Evaluations of A charged for one Estimate call, Theta-constant fixed at 1."""
    loglog = math.log2(math.log2(1 / p)) if 1 / p > 2 else 0.0
    return k * (1 + max(0.0, loglog)) * math.sqrt(1 / max(eps_true, p))


def ae_outcome_distribution(alg: AmplifiableAlgorithm, n_bits: int) -> np.ndarray:
    """Outcome law of phase estimation on the Grover iterate, by direct simulation.

    The register state sum_k |k> Q^k |psi> / sqrt(M) is built by repeated Grover
    iterates and the inverse Fourier transform is applied along the k axis.
    """
    size = 1 << n_bits
    nrm = np.linalg.norm(alg.state)
    psi = alg.state / nrm
    powers = np.empty((size, psi.size), dtype=np.complex128)
    v = psi.copy()
    for k in range(size):
        powers[k] = v
        v = grover_iterate(v, psi, alg.good)
    amps = np.fft.fft(powers, axis=0) / size
    probs = np.sum(np.abs(amps) ** 2, axis=1)
    return probs / probs.sum()


def amp_estimate(
    alg: AmplifiableAlgorithm,
    c: float,
    p: float,
    k: int,
    mode: Literal["faithful", "oracle"] = "faithful",
    seed: int | np.random.Generator | None = 0,
    ledger: CostLedger | None = None,
    name: str = "estimate",
) -> EstimateResult:
    """Relative-error estimate of the good-outcome probability of ``alg``.

    With probability >= 1 - 2**-k the result is within relative error ``c`` when
    the true value is >= ``p``, and exactly 0 when the true value is 0.
    """
    if not 0 < c <= 1 or not 0 < p <= 1 or k < 1:
        raise ValueError(f"invalid estimate parameters c={c}, p={p}, k={k}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    truth = alg.success_probability
    violated = 0 < truth < p * (1 - 1e-12)
    if mode == "oracle":
        if truth == 0:
            value = 0.0
        else:
            ratio = rng.uniform(1 - 0.999 * c, 1 + 0.999 * c)
            value = truth / ratio
        evals = estimate_cost(truth, p, k)
        result = EstimateResult(value, evals * alg.cost, truth, violated)
    elif mode == "faithful":
        result = _faithful_estimate(alg, c, p, k, rng)
        result.promise_violated = violated
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if ledger is not None:
        ledger.charge(name, result.cost)
    return result


def _faithful_estimate(alg, c, p, k, rng) -> EstimateResult:
    reps = 2 * k + 1
    needed = lambda eps: 3 * math.pi / (c * math.sqrt(eps))  # noqa: E731
    cap_bits = max(1, math.ceil(math.log2(2 * needed(p))))
    evals = 0.0
    schedule = []
    truth = alg.success_probability
    for n_bits in range(1, cap_bits + 1):
        size = 1 << n_bits
        probs = ae_outcome_distribution(alg, n_bits)
        ys = rng.choice(size, size=reps, p=probs)
        est = float(np.median(np.sin(np.pi * ys / size) ** 2))
        evals += reps * size
        schedule.append((size, est))
        if est > 0 and size >= needed(est):
            return EstimateResult(est, evals * alg.cost, truth, schedule=schedule)
    return EstimateResult(est, evals * alg.cost, truth, schedule=schedule)
