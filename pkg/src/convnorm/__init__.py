"""Convolutional normalization (ConvNorm) for circular convolution layers.

Per output channel, the conv output is preconditioned by
``(A_k A_k^T)^{-1/2}``, computed in the Fourier domain, which turns each
channel's operator into a tight frame. The package also provides exact
per-frequency spectral analysis of convolution layers and a small
numpy training harness.
"""
from .circulant import (
    build_circulant,
    circular_conv_layer,
    circular_convolve,
    cross_correlate,
    crosscorr_layer,
    cyclic_shift,
    dft,
    linear_convolve_full,
    verify_circulant_decomposition,
)
from .core import (
    DEFAULT_EPS,
    EvalAverageState,
    SingularSpectrumError,
    apply_affine,
    convnorm_crosscorr,
    convnorm_strided,
    normalize_activations,
    precond_spectra,
    precond_spectrum,
    rampdown_momentum,
    reparam_kernels,
    update_eval_average,
)
from .spectral import (
    SpectralReport,
    channel_condition_number,
    check_prop31,
    condition_ratio_rho,
    layer_singular_values,
    spectral_report,
    tight_frame_residual,
)
from .tensor import FormatError, downsample, flip_kernel, read_tensor, tensor_io, write_tensor, zero_pad

__version__ = "0.1.0"
