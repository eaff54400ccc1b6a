"""Ensemble anti-Hermitian contracted Schrodinger equation solvers for excited states."""

__version__ = "0.1.0"

from .acse import (
    PauliPool,
    ResidualTensor,
    SeparateEnsemble,
    TwoBodyPool,
    build_a_operator,
    ensemble_energy,
    ensemble_residual,
    exact_state_residual,
    finite_eta_residual,
)
from .exceptions import (
    CapacityError,
    ConfigError,
    CQEError,
    DegeneracyError,
    DomainError,
    FCIDumpParseError,
    GeometryError,
    NumericalError,
    PreconditionError,
    SCFError,
    UnsupportedElementError,
)
from .fcidump import parse_fcidump, read_fcidump, write_fcidump
from .fermion import FermionOperator, compress_to_sector, jordan_wigner, sector_basis
from .hilbert import PurifiedState, QubitRegister, StateVector, WeightVector, purify
from .integrals import Geometry, IntegralSet, build_hamiltonian, hydrogen_chain_integrals
from .pauli import PauliString, PauliSum, random_hamiltonian
from .sampling import RngStream, ShotPlan, multinomial_allocate, sampled_residual
from .solvers import (
    SolverConfig,
    Trajectory,
    exact_diagonalize,
    initial_guesses,
    line_search_theta,
    parallel_cqe,
    warm_start,
    weighted_random_cqe,
)
