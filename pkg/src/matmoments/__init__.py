"""Matrix Hamburger moment problems: solvability, determinacy, and the
full solution family via a Nevanlinna-type linear fractional
transformation, with multiprecision kernels for fast-growing moments."""

from .cayley import (
    CayleyBasis,
    DeterminacyVerdict,
    SectionPolicy,
    classify_determinacy,
    determinacy_residual,
    orthogonalize,
    section_basis,
    unique_solution_atoms,
)
from .coefficients import (
    NevanlinnaCoefficients,
    StructureMatrices,
    coefficients,
    phi_delta,
    resolvent_section,
    structure_matrices,
)
from .embedding import GramModel, ModelVector, embed, x_vector, y_vector
from .moments import (
    BlockHankel,
    MomentSequence,
    SolvabilityReport,
    build_gamma,
    hankel_entry,
    load_moments,
    save_moments,
    validate_solvability,
    with_precision,
)
from .reference import (
    AtomicMatrixMeasure,
    DensityMeasure,
    atomic_moments,
    carleman_hint,
    direct_transform,
    lognormal_pair,
    quadrature_moments,
)
from .transform import (
    ConvergencePolicy,
    ConvergenceResult,
    HerglotzReport,
    InversionResult,
    SchurParameter,
    Section,
    TransformSample,
    build_section,
    convergence_driver,
    evaluate_transform,
    herglotz_scan,
    stieltjes_invert,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicMatrixMeasure",
    "BlockHankel",
    "CayleyBasis",
    "ConvergencePolicy",
    "ConvergenceResult",
    "DensityMeasure",
    "DeterminacyVerdict",
    "GramModel",
    "HerglotzReport",
    "InversionResult",
    "ModelVector",
    "MomentSequence",
    "NevanlinnaCoefficients",
    "SchurParameter",
    "Section",
    "SectionPolicy",
    "SolvabilityReport",
    "StructureMatrices",
    "TransformSample",
    "atomic_moments",
    "build_gamma",
    "build_section",
    "carleman_hint",
    "classify_determinacy",
    "coefficients",
    "convergence_driver",
    "determinacy_residual",
    "direct_transform",
    "embed",
    "evaluate_transform",
    "hankel_entry",
    "herglotz_scan",
    "load_moments",
    "lognormal_pair",
    "orthogonalize",
    "phi_delta",
    "quadrature_moments",
    "resolvent_section",
    "save_moments",
    "section_basis",
    "stieltjes_invert",
    "structure_matrices",
    "unique_solution_atoms",
    "validate_solvability",
    "with_precision",
    "x_vector",
    "y_vector",
]
