"""fockbox: a truncated-Fock-space laboratory for lattice field models,
maximum-entropy statistical operators, exact unitary dynamics, and the
emergence of one-particle quantum mechanics inside field states."""

from .fock import (
    BOSE,
    FERMI,
    DimensionCapError,
    FieldOperator,
    FockBasis,
    annihilation,
    anticommutator,
    build_basis,
    commutator,
    creation,
    field_operator,
    fock_dimension,
    identity,
    number_operator,
    zero_operator,
)
from .lattice import (
    ENERGY,
    MASS,
    MOMENTUM,
    CurrentSet,
    LatticeModel,
    NormalModeSet,
    UnsupportedFamilyError,
    build_hamiltonian,
    current_ops,
    density_ops,
    divergence_ops,
    energy_density_ops,
    momentum_density_ops,
    momentum_op,
    normal_modes,
    pair_preset,
    potential_preset,
)
from .maxent import (
    MatchFailure,
    RelevantSet,
    ZetaField,
    cumulant_expect,
    entropy,
    gibbs_state,
    kubo,
    match_expectations,
    relevant_set,
)
from .propagate import Dresser, evolve_state, heisenberg, propagator
from .subdynamics import (
    OneQuantonState,
    ReducedObservable,
    Region,
    VacuumConditionError,
    embed,
    embed_two_quanton,
    embedding_residual,
    gaussian_packet,
    induced_observable,
    observable_drift,
    one_quanton,
    reduced_schrodinger_step,
    region,
    surface_term,
    vacuum_residual,
)
from .neqso import (
    DecayReport,
    GramConditionError,
    HistorySpec,
    HistoryTerm,
    build_rho_t0,
    cosine_test_function,
    decay_time,
    entropy_monitor,
    evolve_and_rewrite,
    hydro_parametrize,
    macrostate_of,
    zeta_dynamics,
)
from .events import (
    EventMixture,
    EventSpec,
    InactiveSourceError,
    SupportViolationError,
    build_event_mixture,
    memory_witness,
    shielded_expectation,
)

__version__ = "0.1.0"
