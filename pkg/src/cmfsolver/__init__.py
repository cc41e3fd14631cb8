"""Multi-layer cluster mean-field eigensolver for Pauli-string spin Hamiltonians."""

__version__ = "0.1.0"

from .engine import (  # noqa: E402
    CMFConfig,
    CMFError,
    CMFResult,
    CompressedBasis,
    ConfigError,
    EffectiveHamiltonian,
    LabeledEigenstate,
    Partition,
    build_effective,
    initial_env_state,
    multilayer_subsolver,
    schmidt_orthogonalize,
    solve_cmf,
    stage_iterate,
    truncated_ground_state,
)
from .linalg import EigenDecomposition, eigh, ground_state, lowest_states, propagate  # noqa: E402
from .pauli import (  # noqa: E402
    HamiltonianError,
    HamiltonianParseError,
    PauliTerm,
    SiteMap,
    SpinHamiltonian,
    expectation,
    parse_hamiltonian,
    reduce,
    serialize_hamiltonian,
    to_dense,
)
from .states import StateVector, fidelity, z_moment_distribution  # noqa: E402

__all__ = [
    "CMFConfig", "CMFError", "CMFResult", "CompressedBasis", "ConfigError",
    "EffectiveHamiltonian", "EigenDecomposition", "HamiltonianError",
    "HamiltonianParseError", "LabeledEigenstate", "Partition", "PauliTerm", "SiteMap",
    "SpinHamiltonian", "StateVector", "build_effective", "eigh", "expectation",
    "fidelity", "ground_state", "initial_env_state", "lowest_states",
    "multilayer_subsolver", "parse_hamiltonian", "propagate", "reduce",
    "schmidt_orthogonalize", "serialize_hamiltonian", "solve_cmf", "stage_iterate",
    "to_dense", "truncated_ground_state", "z_moment_distribution",
]
