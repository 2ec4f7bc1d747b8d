"""Desk-scale simulator for an EPR-assisted one-sided-error proof verifier."""

__version__ = "0.1.0"

from .kernel import (
    DensityOperator,
    MeasurementRecord,
    ProjectiveMeasurement,
    RegisterLayout,
    StateVector,
    apply_unitary,
    basis_state,
    bell_measurement,
    layout,
    make_gate,
    measure,
    partial_trace,
    standard_basis_measurement,
    symmetrize_pairs,
    tensor_product,
    to_density,
    zero_state,
)
from .channels import bell_basis, bell_subspaces, choi_state, pinch_phi
from .protocol import (
    BranchBreakdown,
    ProtocolRun,
    ProtocolState,
    ProverStrategy,
    RunOutcome,
    ToyVerifier,
    accept_operator,
    cheating_proof,
    honest_proof,
    make_toy_verifier,
    post_selection,
    postsel_success_prob,
    rewinding_residual,
    swap_test,
    verifier_w,
)

__all__ = [
    "BranchBreakdown",
    "DensityOperator",
    "MeasurementRecord",
    "ProjectiveMeasurement",
    "ProtocolRun",
    "ProtocolState",
    "ProverStrategy",
    "RegisterLayout",
    "RunOutcome",
    "StateVector",
    "ToyVerifier",
    "accept_operator",
    "apply_unitary",
    "basis_state",
    "bell_basis",
    "bell_measurement",
    "bell_subspaces",
    "cheating_proof",
    "choi_state",
    "honest_proof",
    "layout",
    "make_gate",
    "make_toy_verifier",
    "measure",
    "partial_trace",
    "pinch_phi",
    "post_selection",
    "postsel_success_prob",
    "rewinding_residual",
    "standard_basis_measurement",
    "swap_test",
    "symmetrize_pairs",
    "tensor_product",
    "to_density",
    "verifier_w",
    "zero_state",
]
