"""Laplacian pyramids for function extension and non-local means denoising."""

__version__ = "0.1.0"

from ._backend import BACKEND, available_backends
from .errors import (
    DegenerateInput,
    DomainError,
    InvariantViolation,
    LPError,
    ParseError,
    ShapeError,
    UsageError,
)
from .kernels import (
    BandwidthCheck,
    BandwidthSchedule,
    KernelRow,
    MarkovKernel,
    PointSet,
    RadialProfile,
    convergence_bandwidth_check,
    identity_deviation_inf,
    identity_deviation_shortcut,
    kernel_matrix,
    kernel_row,
    min_separation,
)
from .lp_core import (
    FitReport,
    LPModel,
    StabilityCertificate,
    StopReason,
    error_bound_product,
    lp_extend,
    lp_extend_many,
    lp_fit,
    nadaraya_watson,
    residual_operator,
    stability_certificate,
)
from .nl_denoise import (
    DenoiseTrace,
    PatchConfig,
    boosted_kernel_sequence_errors,
    build_nl_kernel,
    denoise_iterate,
    extract_patches,
    spectral_map,
    truncated_lp_kernel,
)
