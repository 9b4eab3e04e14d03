"""Simulator for the cavity-mediated geometric entangling gate of charge qubits."""

from .errors import (
    AddressingError,
    ConvergenceError,
    DegenerateDetuningError,
    DesignError,
    DimensionError,
    GeogateError,
    NumericError,
    TruncationError,
)
from .hilbert import (
    HilbertSpace,
    Operator,
    QuantumState,
    cavity_state,
    collective_operator,
    default_cutoff,
    displacement_operator,
    ladder_operator,
    matrix_exponential,
    partial_trace,
    product_state,
    reduce_to_qubits,
    site_operator,
)
from .model import (
    DeviceParams,
    ModelParams,
    build_hamiltonian,
    classical_drive_amplitude,
    derive_qubit_params,
    displaced_frame_residual,
    interaction_hamiltonian,
)
from .propagation import (
    GateDesign,
    StepPolicy,
    closed_form_propagator,
    entangler_design,
    gate_times,
    h3_propagator,
    ideal_gate,
    magnus_coefficients,
    propagate,
)
from .analysis import (
    concurrence,
    conditional_trajectory,
    fidelity,
    ghz_fidelity,
    purity_and_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "AddressingError",
    "ConvergenceError",
    "DegenerateDetuningError",
    "DesignError",
    "DimensionError",
    "GeogateError",
    "NumericError",
    "TruncationError",
    "HilbertSpace",
    "Operator",
    "QuantumState",
    "cavity_state",
    "collective_operator",
    "default_cutoff",
    "displacement_operator",
    "ladder_operator",
    "matrix_exponential",
    "partial_trace",
    "product_state",
    "reduce_to_qubits",
    "site_operator",
    "DeviceParams",
    "ModelParams",
    "build_hamiltonian",
    "classical_drive_amplitude",
    "derive_qubit_params",
    "displaced_frame_residual",
    "interaction_hamiltonian",
    "GateDesign",
    "StepPolicy",
    "closed_form_propagator",
    "entangler_design",
    "gate_times",
    "h3_propagator",
    "ideal_gate",
    "magnus_coefficients",
    "propagate",
    "concurrence",
    "conditional_trajectory",
    "fidelity",
    "ghz_fidelity",
    "purity_and_entropy",
]
