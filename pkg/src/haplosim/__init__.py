"""Haplotype assembly toolkit: channel simulation, erasure decoding,
spectral partitioning, and the matching closed-form analysis."""

from .channel import (
    ChannelConfig,
    NoiseMatrix,
    prob_disconnected_split,
    prob_uncovered_column,
    sample_mask,
    transmit,
)
from .erasure import overlap_components
from .erasure import decode as erasure_decode
from .model import (
    Haplotype,
    MembershipVector,
    ReadMatrix,
    RecoveryResult,
    encode,
    hamming_up_to_flip,
    project,
)
from .planted import (
    PlantedParams,
    PlantedSpectrum,
    alpha_beta_bounds,
    alpha_exact,
    beta_exact,
    beta_term_ratio,
    binary_entropy,
    fano_min_reads,
    spectrum,
)
from .spectral import (
    NonConvergedError,
    SpectralConfig,
    VoteMatrix,
    build_adjacency,
    infer_memberships,
    partition,
    top_two_eigenpairs,
)
from .spectral import decode as spectral_decode

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig",
    "NoiseMatrix",
    "Haplotype",
    "MembershipVector",
    "ReadMatrix",
    "RecoveryResult",
    "PlantedParams",
    "PlantedSpectrum",
    "SpectralConfig",
    "VoteMatrix",
    "NonConvergedError",
    "encode",
    "project",
    "hamming_up_to_flip",
    "sample_mask",
    "transmit",
    "prob_uncovered_column",
    "prob_disconnected_split",
    "erasure_decode",
    "overlap_components",
    "build_adjacency",
    "top_two_eigenpairs",
    "partition",
    "spectral_decode",
    "infer_memberships",
    "spectrum",
    "alpha_exact",
    "beta_exact",
    "alpha_beta_bounds",
    "beta_term_ratio",
    "binary_entropy",
    "fano_min_reads",
    "__version__",
]
