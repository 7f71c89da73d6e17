"""Bosonic and fermionic Gaussian states represented by their Kahler
structures (G, Omega, J) and displacement z."""

from .errors import GaussKError, NonUniqueWarning, NumericPolicyError, ValidationError
from .kahler import (
    BOSON,
    FERMION,
    Convention,
    KahlerTriple,
    Statistics,
    block_standard_form,
    cartan_decompose,
    complete_triple,
    matrix_function,
    relative_structure,
    standard_structures,
    validate_identities,
)
from .policy import NumericPolicy, get_policy, set_policy, use_policy
from .states import (
    MixedGaussianState,
    PureGaussianState,
    mixed_from_q,
    mixed_state,
    number_expectation,
    overlap_abs2,
    pure_state,
    vacuum,
    wick_npoint,
)
from .entanglement import (
    circuit_complexity,
    entanglement_entropy,
    reduce,
    relative_entropy,
    renyi,
)
from .dynamics import (
    DrivenHamiltonian,
    QuadraticHamiltonian,
    adiabatic_vacuum,
    energy,
    evolve_const,
    evolve_driven,
    ground_state,
    hamiltonian,
    vacuum_energy,
)

__version__ = "0.1.0"
