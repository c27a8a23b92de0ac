"""Finite-groupoid quantum mechanics: algebras, history sums, qubit propagator.

The package models measurement outcomes and transitions as a finite groupoid,
builds the associated *-algebra with its fundamental matrix representation,
sums amplitudes over discrete histories, and solves the unitarity constraints
of the biased two-outcome propagator, including the phase quantization they
force.
"""

from .groupoid import (
    ALPHA,
    ALPHA_INV,
    AxiomFailure,
    FiniteGroupoid,
    GroupoidParseError,
    NOT_COMPOSABLE,
    NotComposable,
    OUT_MINUS,
    OUT_PLUS,
    OutcomePartition,
    UNIT_MINUS,
    UNIT_PLUS,
    ValidationReport,
    build_a2,
    build_from_table,
    build_pair_groupoid,
    groupoid_to_text,
    multiplication_table,
    pair_element,
    validate_axioms,
)
from .lagrangian import (
    OutcomeBias,
    QLagrangian,
    qubit_bias,
    qubit_lagrangian,
)
from .coarse import coarse_grain, is_principal
from .algebra import (
    AlgebraElement,
    DensityMatrix,
    StateVector,
    algebra_unit,
    commutator,
    convolve,
    delta,
    element_from_lines,
    element_from_matrix,
    element_to_lines,
    evolve_observable,
    fundamental_rep,
    heisenberg_rhs,
    involute,
    is_observable,
    lagrangian_element,
    operator_norm,
    state_expectation,
)
from .histories import (
    DEFAULT_HISTORY_CAP,
    EnumerationCapExceeded,
    History,
    Segment,
    TimeGrid,
    action,
    amplitude_via_reference,
    compose_histories,
    decompose_history,
    enumerate_histories,
    history_amplitude,
    history_from_text,
    history_to_text,
    invert_history,
    is_loop,
    make_history,
    n_step_path_sum,
    normalization,
    single_step_matrix,
    total_variation,
    unit_history,
)
from .propagator import (
    GammaSolution,
    PropagatorModel,
    ScanPoint,
    SignCase,
    UnitarityReport,
    evolve_state,
    power_propagator,
    quantization_scan,
    qubit_propagator,
    sign_case_matrix,
    solve_unitary_gammas,
    special_case_spectrum,
    uniform_free_matrix,
    uniform_free_spectrum,
    unitarity_residuals,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA",
    "ALPHA_INV",
    "AlgebraElement",
    "AxiomFailure",
    "DEFAULT_HISTORY_CAP",
    "DensityMatrix",
    "EnumerationCapExceeded",
    "FiniteGroupoid",
    "GammaSolution",
    "GroupoidParseError",
    "History",
    "NOT_COMPOSABLE",
    "NotComposable",
    "OUT_MINUS",
    "OUT_PLUS",
    "OutcomeBias",
    "OutcomePartition",
    "PropagatorModel",
    "QLagrangian",
    "ScanPoint",
    "Segment",
    "SignCase",
    "StateVector",
    "TimeGrid",
    "UNIT_MINUS",
    "UNIT_PLUS",
    "UnitarityReport",
    "ValidationReport",
    "action",
    "algebra_unit",
    "amplitude_via_reference",
    "build_a2",
    "build_from_table",
    "build_pair_groupoid",
    "coarse_grain",
    "commutator",
    "compose_histories",
    "convolve",
    "decompose_history",
    "delta",
    "element_from_lines",
    "element_from_matrix",
    "element_to_lines",
    "enumerate_histories",
    "evolve_observable",
    "evolve_state",
    "fundamental_rep",
    "groupoid_to_text",
    "heisenberg_rhs",
    "history_amplitude",
    "history_from_text",
    "history_to_text",
    "invert_history",
    "involute",
    "is_loop",
    "is_observable",
    "is_principal",
    "lagrangian_element",
    "make_history",
    "multiplication_table",
    "n_step_path_sum",
    "normalization",
    "operator_norm",
    "pair_element",
    "power_propagator",
    "quantization_scan",
    "qubit_bias",
    "qubit_lagrangian",
    "qubit_propagator",
    "sign_case_matrix",
    "single_step_matrix",
    "solve_unitary_gammas",
    "special_case_spectrum",
    "state_expectation",
    "total_variation",
    "uniform_free_matrix",
    "uniform_free_spectrum",
    "unit_history",
    "unitarity_residuals",
    "validate_axioms",
]
