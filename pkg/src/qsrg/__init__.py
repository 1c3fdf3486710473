"""Exact renormalization-group flows on translationally invariant matrix product states."""

__version__ = "0.1.0"

from .classify import (
    DominantPair,
    FixedPointReport,
    canonical_transfer_matrix,
    classify,
    detect_jordan,
    dominant_eigenvectors,
    fixed_point_mps,
)
from .errors import (
    DomainError,
    NonConvergentError,
    NumericalFailure,
    QsrgError,
    SizeCapError,
    UnsupportedCaseError,
)
from .flow import FlowRecord, FlowTrace, flow
from .models import (
    SchmidtSpectrum,
    half_chain_spectrum,
    ising_dimer_spectrum,
    ising_ground_state_ed,
    make_preset,
    random_mps,
    xxz_dimer_spectrum,
)
from .mps import (
    MatrixProductState,
    PureStateVector,
    SchmidtData,
    block_entropy,
    connected_correlator,
    expectation_local,
    schmidt_decompose,
    state_vector,
)
from .rg import (
    RgStepResult,
    TransferMatrix,
    coarse_grain_step,
    fixed_point_operator,
    normalize_leading,
    renormalize_observable,
    transfer_matrix,
)
