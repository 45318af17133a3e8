"""Superpositions of displaced number states on a circle: preparation protocol,
damped Wigner dynamics and coherence measures, with brute-force oracles."""

from .errors import (
    BudgetExhaustedError,
    DegenerateStateError,
    DeltaLimitError,
    ProtocolMismatchError,
    SingularJetError,
    StepSizeUnderflowError,
    TruncationError,
    UsageError,
)
from .phasespace import CompactTime, PhaseGrid, ReservoirParams, wigner0, wigner_t
from .protocol import ProtocolParams, SequencePlan, circle_probability, line_probability, plan_sequence
from .states import FockVector, SuperpositionSpec, build_fock_vector, normalization_constant
from .coherence import CoherenceReport, coherence_measure, diagonal_purity, phonon_distribution, total_purity

__all__ = [
    "BudgetExhaustedError", "CoherenceReport", "CompactTime", "DegenerateStateError", "DeltaLimitError",
    "FockVector", "PhaseGrid", "ProtocolMismatchError", "ProtocolParams", "ReservoirParams",
    "SequencePlan", "SingularJetError", "StepSizeUnderflowError", "SuperpositionSpec", "TruncationError",
    "UsageError", "build_fock_vector", "circle_probability", "coherence_measure", "diagonal_purity",
    "line_probability", "normalization_constant", "phonon_distribution", "plan_sequence",
    "total_purity", "wigner0", "wigner_t",
]
