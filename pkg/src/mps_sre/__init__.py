"""Stabilizer Renyi entropies of matrix product states.

The package measures how far a quantum state sits from the stabilizer
set by summing powers of its normalized Pauli spectrum.  For matrix
product states that sum is evaluated exactly — without enumerating the
4^N Pauli strings — by contracting a replicated tensor network whose
local dimension stays small; brute-force statevector oracles, a DMRG
ground-state solver for the transverse-field Ising chain, and the
analysis helpers used by the experiment scripts round out the library.
"""

__version__ = "0.1.0"

from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    DegenerateFitError,
    DegenerateOverlapError,
    DimensionMismatchError,
    FixtureError,
    NormalizationError,
    NumericGuardError,
    PositivityError,
    SizeGuardError,
    VariantError,
)
from .mps import (
    MPS,
    T_LOCAL,
    from_statevector,
    ghz_state,
    load_mps,
    mps_sum,
    mps_tensor_product,
    product_state,
    random_mps,
    random_ti_tensor,
    save_mps,
    state_transfer_matrix,
    write_pauli_expectations,
)
from .oracle import (
    clifford_fixtures,
    ed_ground_state,
    ising_dense_hamiltonian,
    pauli_expectation_statevector,
    statevector_sre,
    statevector_sre_reference,
)
from .analysis import (
    BasisRotation,
    GroundStateCache,
    MagicMinimum,
    PowerFit,
    SweepRecord,
    basis_rotation,
    collapse,
    collapse_quality,
    euler_rotation,
    evaluate_point,
    extract_linear,
    find_peak,
    fit_log,
    fit_power_offset,
    minimize_magic,
    parity_project,
    refine_peak,
    rotate_mps,
    rotated_sweep,
    scan_gamma,
    sweep_density,
)
from .config import ExperimentConfig, config_from_dict, load_config, resolved_dict
from .ising import (
    DmrgConfig,
    DmrgResult,
    build_ising_mpo,
    dmrg_ground_state,
    energy_variance,
    expectation_mpo,
    fidelity,
    mpo_dense,
    write_dmrg_log,
)
from .paulis import PauliString, build_lambda, factor_gamma, replica_phys_dim
from .replica import (
    SreResult,
    TiDensityResult,
    append_sre_row,
    build_replica,
    klein_projector,
    klein_rank,
    local_probe,
    replica_transfer,
    sre,
    ti_density,
    ti_finite_sre,
)
from .study import StudyResult, run_study
from .tensors import SpectralResult, contract, dominant_eig, eig_dense, svd_truncate

__all__ = [
    "MPS",
    "BasisRotation",
    "DmrgConfig",
    "DmrgResult",
    "ExperimentConfig",
    "GroundStateCache",
    "MagicMinimum",
    "PowerFit",
    "StudyResult",
    "SweepRecord",
    "TiDensityResult",
    "basis_rotation",
    "build_ising_mpo",
    "collapse",
    "collapse_quality",
    "config_from_dict",
    "dmrg_ground_state",
    "energy_variance",
    "euler_rotation",
    "evaluate_point",
    "expectation_mpo",
    "extract_linear",
    "fidelity",
    "find_peak",
    "fit_log",
    "fit_power_offset",
    "klein_rank",
    "load_config",
    "minimize_magic",
    "mpo_dense",
    "parity_project",
    "refine_peak",
    "replica_transfer",
    "resolved_dict",
    "rotate_mps",
    "rotated_sweep",
    "run_study",
    "scan_gamma",
    "sweep_density",
    "ti_finite_sre",
    "T_LOCAL",
    "PauliString",
    "SpectralResult",
    "SreResult",
    "append_sre_row",
    "build_lambda",
    "build_replica",
    "clifford_fixtures",
    "contract",
    "dominant_eig",
    "ed_ground_state",
    "eig_dense",
    "factor_gamma",
    "from_statevector",
    "ghz_state",
    "ising_dense_hamiltonian",
    "klein_projector",
    "load_mps",
    "local_probe",
    "mps_sum",
    "mps_tensor_product",
    "pauli_expectation_statevector",
    "product_state",
    "random_mps",
    "random_ti_tensor",
    "replica_phys_dim",
    "save_mps",
    "sre",
    "state_transfer_matrix",
    "write_dmrg_log",
    "write_pauli_expectations",
    "statevector_sre",
    "statevector_sre_reference",
    "svd_truncate",
    "ti_density",
    "BracketError",
    "ConfigError",
    "ConvergenceError",
    "DegenerateFitError",
    "DegenerateOverlapError",
    "DimensionMismatchError",
    "FixtureError",
    "NormalizationError",
    "NumericGuardError",
    "PositivityError",
    "SizeGuardError",
    "VariantError",
    "__version__",
]
