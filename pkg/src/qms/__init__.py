"""State-vector simulation of two qubit measurement models."""

from .errors import NumericalError, QMSError, ValidationError
from .gates import Circuit, Gate, Trajectory, circuit_unitary_check, gate_matrix, run_circuit
from .statevector import (
    Distribution,
    StateVector,
    apply_1q,
    apply_2q_diagonal,
    apply_controlled,
    inner_product,
    new_basis_state,
    probabilities,
    sample,
)

__all__ = [
    "Circuit",
    "Distribution",
    "Gate",
    "NumericalError",
    "QMSError",
    "StateVector",
    "Trajectory",
    "ValidationError",
    "apply_1q",
    "apply_2q_diagonal",
    "apply_controlled",
    "circuit_unitary_check",
    "gate_matrix",
    "inner_product",
    "new_basis_state",
    "probabilities",
    "run_circuit",
    "sample",
]
