"""Quantum-kernel SVM pipeline: statevector fidelity kernels, SMO SVC on
precomputed kernels, kernel eigenspectrum diagnostics, and paired-bootstrap
comparison statistics."""

from qksvm._core import (
    FittedPipeline,
    SvcModel,
    bsp_statevector,
    decision_scores,
    evaluate,
    fidelity,
    linear_kernel,
    normalize_kernel,
    normalize_test_kernel,
    paired_bootstrap,
    pauli_z_features,
    predict,
    projected_kernel,
    quantum_kernel,
    rank_match_gamma,
    rbf_kernel,
    scale_gamma,
    spectrum,
    split_indices,
    svc_train,
    sym_eigen,
)

__all__ = [
    "FittedPipeline",
    "SvcModel",
    "bsp_statevector",
    "decision_scores",
    "evaluate",
    "fidelity",
    "linear_kernel",
    "normalize_kernel",
    "normalize_test_kernel",
    "paired_bootstrap",
    "pauli_z_features",
    "predict",
    "projected_kernel",
    "quantum_kernel",
    "rank_match_gamma",
    "rbf_kernel",
    "scale_gamma",
    "spectrum",
    "split_indices",
    "svc_train",
    "sym_eigen",
]
