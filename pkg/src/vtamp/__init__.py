"""Variable-time amplitude amplification and a staged quantum linear-system solver, simulated with numpy."""

from .amplitude import (
    AmplifiableAlgorithm,
    EstimateResult,
    amp_estimate,
    amplified_probability,
    grover_amplify,
    amplify_lower_bound,
    max_rounds,
)
from .bench import SpectrumSpec, fit_slope, gen_instance, scaling_experiment, synthetic_suite
from .phase import (
    UniqueEstConfig,
    circuit_distribution,
    k_uniq_for,
    phase_estimate,
    shifted,
    single_run_distribution,
    unique_est,
)
from .registers import (
    CostLedger,
    HermitianInstance,
    QuantumState,
    RegisterLayout,
    eigendecompose,
    evolve,
    read_instance,
    write_instance,
)
from .solver import SolveReport, fidelity, solve_hhl, solve_vtaa
from .stategen import SolverConfig, classify, dense_stategen, vt_stategen
from .vtaa import VtaaParams, VtaaRun, run_vtaa
from .vtmodel import VariableTimeAlgorithm, stopping_profile, synth_vta, validate

__version__ = "0.1.0"
