"""Worst-case secrecy-rate-optimal transmit covariance design.

Jointly designs a signal covariance and an artificial-noise covariance for
a multi-antenna transmitter facing multiple single-antenna eavesdroppers
whose channels are known only up to Euclidean-ball uncertainty. The solver
runs a one-dimensional line search over SDP subproblems, recovers a
rank-one beamformer through a power-minimization stage, and cross-checks
everything against an exact worst-case oracle.
"""
from .baselines import isotropic_an, no_an_mrt
from .conic import (
    ClarabelBackend,
    SdpProblem,
    SdpSolution,
    SolveStatus,
    SolveTolerances,
    default_backend,
    embed_complex,
)
from .errors import (
    DimensionMismatch,
    EmptyEveList,
    Infeasible,
    NonHermitianInput,
    NonPositivePower,
    NumericalFailure,
    PipelineVerificationFailed,
    RankExtractionFailed,
    RequiresMultipleAntennas,
    SecrecyOptError,
    SolverFailure,
    ValidationError,
    ZeroBobChannel,
)
from .oracle import WorstCaseEveReport, eve_ratio, evaluate_design, worst_ratio
from .power_min import (
    DualCertificate,
    PmProblemSpec,
    extract_rank_one,
    full_pipeline,
    solve_pm,
)
from .sim import SweepConfig, SweepResult, alpha_to_epsilon, gen_channels, run_sweep
from .srm import (
    CharnesCooperPoint,
    LineSearchTrace,
    SearchOptions,
    SecrecyResult,
    build_tk,
    phi,
    solve_srm,
)
from .types import (
    ComplexMatrix,
    Eavesdropper,
    ProblemInstance,
    TransmitDesign,
    db_to_linear,
    linear_to_db,
    validate,
    zero_design,
)

__version__ = "0.1.0"
