"""Saturation of the multiparameter quantum Cramer-Rao bound.

Tools to compute SLDs, quantum and classical Fisher information, decide
whether a rank-one measurement saturates the QCRB outcome by outcome
(simultaneous hollowization of the W/M family), analyze the geometry of the
admissible effects, and construct saturating measurements.
"""

__version__ = "0.1.0"

from .construct import (
    ConstructionResult,
    ProjectorCandidate,
    completeness_weights,
    construct_optimal_measurement,
    find_hollow_vector,
    icpovm_nogo_check,
    iterative_projective_construction,
    projector_from_v,
)
from .errors import *  # noqa: F401,F403
from .geometry import (
    HermitianBasis,
    SubspacePair,
    analyze_subspaces,
    complement_basis,
    dimension_bound_verdict,
    hermitianize_family,
    span_subspace,
    sufficiency_threshold,
)
from .hollowization import (
    SaturationCertificate,
    WMFamily,
    build_wm_family,
    check_outcome,
    check_outcome_reduced,
    check_pcc,
    check_povm,
    hollowize_single,
)
from .model import (
    EstimationModel,
    GeneratorModel,
    RankOnePovm,
    cfim,
    materialize,
    qfim,
    solve_sld,
    solve_slds,
    spectral_decompose,
)
from .quasipure import (
    BranchDerivatives,
    QuasiPureModel,
    branch_sld,
    build_quasipure,
    check_qp_pcc,
    lmcc_measurement,
    paper_two_qubit_example,
)
from .tolerances import Tolerances
