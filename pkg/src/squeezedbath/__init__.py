"""Damped quantum oscillator thermodynamics with thermal and squeezed baths.

Layers, bottom up: fock (truncated-space states and operators), passivity
(ergotropy and entropies), dynamics (dissipators, propagation, steady
states), ledger (first-law splits and entropy production), engine (Otto
and slow-cycle runners with efficiency bounds), cli (scenario front end).
"""

from .dynamics import (
    Generator,
    HamiltonianSchedule,
    JumpTerm,
    Trajectory,
    apply,
    bath_invariant_state,
    bose_occupation,
    conjugate_generator,
    constant_hamiltonian,
    evolve,
    linear_ramp_schedule,
    oscillator_schedule,
    relax_populations,
    squeezed_generator,
    squeezed_mode_operator,
    steady_state,
    superoperator,
    thermal_generator,
)
from .engine import (
    BathStage,
    CarnotReport,
    CarnotSpec,
    CycleReport,
    CycleSpec,
    OttoClosedForm,
    StrokeLedger,
    closed_form_otto,
    eta_actual,
    eta_bound_combined,
    eta_carnot,
    eta_max,
    eta_sigma,
    matched_carnot_spec,
    multibath_bound,
    required_cutoff,
    run_carnot_like,
    run_otto,
    squeezed_excess,
)
from .errors import (
    ConfigError,
    CutoffLeak,
    LedgerInconsistent,
    NonUniqueSteadyState,
    NotSteady,
    NotUnitary,
    PositivityLoss,
    RegimeViolation,
    SlowDriveViolation,
)
from .fock import (
    DEFAULT_CUTOFF,
    DensityMatrix,
    HilbertDim,
    Operator,
    annihilation,
    coherent_state,
    harmonic_hamiltonian,
    number_operator,
    number_state,
    real_expectation,
    squeeze_operator,
    squeezed_thermal_state,
    thermal_populations,
    thermal_state,
)
from .ledger import (
    EntropyReport,
    FirstLawLedger,
    accumulate_ledger,
    alt_path_energy,
    entropy_bound_report,
    firstlaw_tolerance,
    passive_frame_generator,
    sigma_nonthermal,
    sigma_series,
    spohn_sigma_constH,
    spohn_sigma_timedep,
)
from .passivity import (
    PassiveDecomposition,
    SpectrumOrdering,
    ergotropy,
    majorizes,
    passive_decompose,
    passive_energy,
    relative_entropy,
    trace_distance,
    von_neumann_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "BathStage",
    "CarnotReport",
    "CarnotSpec",
    "ConfigError",
    "CutoffLeak",
    "CycleReport",
    "CycleSpec",
    "DEFAULT_CUTOFF",
    "DensityMatrix",
    "EntropyReport",
    "FirstLawLedger",
    "Generator",
    "HamiltonianSchedule",
    "HilbertDim",
    "JumpTerm",
    "LedgerInconsistent",
    "NonUniqueSteadyState",
    "NotSteady",
    "NotUnitary",
    "Operator",
    "OttoClosedForm",
    "PassiveDecomposition",
    "PositivityLoss",
    "RegimeViolation",
    "SlowDriveViolation",
    "SpectrumOrdering",
    "StrokeLedger",
    "Trajectory",
    "accumulate_ledger",
    "alt_path_energy",
    "annihilation",
    "apply",
    "bath_invariant_state",
    "bose_occupation",
    "closed_form_otto",
    "coherent_state",
    "conjugate_generator",
    "constant_hamiltonian",
    "entropy_bound_report",
    "ergotropy",
    "eta_actual",
    "eta_bound_combined",
    "eta_carnot",
    "eta_max",
    "eta_sigma",
    "evolve",
    "firstlaw_tolerance",
    "harmonic_hamiltonian",
    "linear_ramp_schedule",
    "majorizes",
    "matched_carnot_spec",
    "multibath_bound",
    "number_operator",
    "number_state",
    "oscillator_schedule",
    "passive_decompose",
    "passive_energy",
    "passive_frame_generator",
    "real_expectation",
    "relative_entropy",
    "relax_populations",
    "required_cutoff",
    "run_carnot_like",
    "run_otto",
    "sigma_nonthermal",
    "sigma_series",
    "spohn_sigma_constH",
    "spohn_sigma_timedep",
    "squeeze_operator",
    "squeezed_excess",
    "squeezed_generator",
    "squeezed_mode_operator",
    "squeezed_thermal_state",
    "steady_state",
    "superoperator",
    "thermal_generator",
    "thermal_populations",
    "thermal_state",
    "trace_distance",
    "von_neumann_entropy",
]
