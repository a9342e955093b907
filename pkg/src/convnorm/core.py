"""Channel-wise ConvNorm: frequency-domain preconditioning of conv outputs.

For output channel k with kernels a_k1..a_kC, the preconditioner
``P_k = (A_k A_k^T)^{-1/2}`` is a circulant whose spectrum is

    v_hat_k = (sum_j |a_hat_kj|^2 + eps)^{-1/2}

so normalizing an output channel is one FFT, a pointwise product and an
inverse FFT. ``P_k`` is never formed densely here; see ``convnorm.dense``
for the materialized oracle.

Spectra are computed fresh from the current kernels on every call. Callers
that need stop-gradient semantics (``convnorm.train``) compute the spectrum
once per forward pass, pass it in via ``spectrum=`` and treat it as a
constant in the backward pass.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circulant import circular_conv_layer, crosscorr_layer, kernel_dft, pad_to
from .tensor import as_batch, as_kernels, downsample

DEFAULT_EPS = 1e-12
# relative floor below which a channel's spectral magnitude counts as zero
SINGULAR_RTOL = 1e-14
DEFAULT_RAMPDOWN_CAP = 40000


class SingularSpectrumError(ValueError):
    """A channel's kernel spectrum vanishes at some frequency and eps = 0."""

    def __init__(self, channel: int, frequency: tuple):
        self.channel = channel
        self.frequency = frequency
        super().__init__(
            f"singular spectrum: sum_j |a_hat_kj|^2 = 0 for channel {channel} "
            f"at frequency index {frequency}; use epsilon > 0"
        )


def channel_power(kernels, shape) -> np.ndarray:
    """``sum_j |a_hat_kj(w)|^2`` for every output channel: (C_O, H, W)."""
    a_hat = kernel_dft(kernels, shape)
    return np.sum(a_hat.real**2 + a_hat.imag**2, axis=1)


def precond_spectra(kernels, shape, epsilon: float = DEFAULT_EPS) -> np.ndarray:
    """Preconditioner spectra ``v_hat_k`` for all output channels, (C_O, H, W).

    Raises
    ------
    SingularSpectrumError
        If ``epsilon == 0`` and some channel's power spectrum vanishes.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    kernels = as_kernels(kernels)
    shape = tuple(int(s) for s in shape)
    if shape[0] < kernels.shape[2] or shape[1] < kernels.shape[3]:
        raise ValueError(f"extents {shape} smaller than kernel {kernels.shape[2:]}")
    power = channel_power(kernels, shape)
    if epsilon == 0:
        mag = np.sqrt(power)
        for k in range(mag.shape[0]):
            bad = mag[k] <= SINGULAR_RTOL * mag[k].max()
            if np.any(bad):
                freq = tuple(int(i) for i in np.argwhere(bad)[0])
                raise SingularSpectrumError(k, freq)
    return 1.0 / np.sqrt(power + epsilon)


def precond_spectrum(kernels, channel: int, shape, epsilon: float = DEFAULT_EPS) -> np.ndarray:
    """Spectrum ``v_hat_k`` of one channel's preconditioner, (H, W)."""
    kernels = as_kernels(kernels)
    return precond_spectra(kernels[channel : channel + 1], shape, epsilon)[0]


def normalize_activations(z, kernels, epsilon: float = DEFAULT_EPS, spectrum=None) -> np.ndarray:
    """Apply ``P_k`` to every output channel of a conv output batch.

    ``z`` has shape (B, C_O, H, W). Each channel is circularly convolved with
    ``v_k``, i.e. ``ifft2(fft2(z_k) * v_hat_k)``. Pass a precomputed
    ``spectrum`` (C_O, H, W) to reuse a frozen preconditioner.
    """
    z = as_batch(z)
    kernels = as_kernels(kernels)
    if z.shape[1] != kernels.shape[0]:
        raise ValueError(f"activations have {z.shape[1]} channels, kernels have C_O={kernels.shape[0]}")
    if spectrum is None:
        spectrum = precond_spectra(kernels, z.shape[2:], epsilon)
    return np.fft.ifft2(np.fft.fft2(z) * spectrum).real


def reparam_kernels(kernels, shape, epsilon: float = DEFAULT_EPS) -> np.ndarray:
    """Reparametrized kernels ``g_kj = v_k * a_kj`` at full extents (C_O, C_I, H, W).

    With ``epsilon = 0`` each channel forms a tight frame:
    ``sum_j |g_hat_kj|^2 == 1`` at every frequency.
    """
    kernels = as_kernels(kernels)
    v_hat = precond_spectra(kernels, shape, epsilon)
    g_hat = kernel_dft(kernels, shape) * v_hat[:, None]
    return np.fft.ifft2(g_hat).real


def apply_affine(z, r) -> np.ndarray:
    """Channel-wise circular convolution ``z_bar_k = r_k * z_k``.

    ``r`` has shape (C, r1, r2) with r1 <= H and r2 <= W.
    """
    z = as_batch(z)
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 3 or r.shape[0] != z.shape[1]:
        raise ValueError(f"affine kernels {r.shape} do not match {z.shape[1]} channels")
    r_hat = np.fft.fft2(pad_to(r, z.shape[2:]))
    return np.fft.ifft2(np.fft.fft2(z) * r_hat).real


def identity_affine(channels: int, k1: int, k2: int) -> np.ndarray:
    """Delta affine kernels (identity transform), shape (C, k1, k2)."""
    r = np.zeros((channels, k1, k2))
    r[:, 0, 0] = 1.0
    return r


def inverse_affine(spectrum) -> np.ndarray:
    """Affine kernels ``r_k`` with ``r_k * v_k = delta``, at full extents."""
    return np.fft.ifft2(1.0 / np.asarray(spectrum)).real


def convnorm_strided(z_in, kernels, stride: int, epsilon: float = DEFAULT_EPS) -> np.ndarray:
    """Unstrided circular conv, ConvNorm, then keep every ``stride``-th sample."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    z_out = circular_conv_layer(as_batch(z_in), kernels)
    return downsample(normalize_activations(z_out, kernels, epsilon), stride)


def convnorm_crosscorr(z_in, kernels, epsilon: float = DEFAULT_EPS) -> np.ndarray:
    """ConvNorm for cross-correlation layers with 'same' output extents.

    Pads the input by m - 1 per side, cross-correlates, normalizes the
    (n + m - 1)-sized output with the kernels' spectra, then drops
    (m - 1) / 2 samples from each side. Kernel extents must be odd.
    """
    z_in = as_batch(z_in)
    kernels = as_kernels(kernels)
    k1, k2 = kernels.shape[2:]
    if k1 % 2 == 0 or k2 % 2 == 0:
        raise ValueError(f"kernel extents must be odd, got {(k1, k2)}")
    z_out = crosscorr_layer(z_in, kernels, pad=(k1 - 1, k2 - 1))
    z_tilde = normalize_activations(z_out, kernels, epsilon)
    t1, t2 = (k1 - 1) // 2, (k2 - 1) // 2
    H, W = z_tilde.shape[2:]
    return z_tilde[:, :, t1 : H - t1, t2 : W - t2]


# -- eval-time moving average ----------------------------------------------


def rampdown_momentum(iteration: int, cap: int = DEFAULT_RAMPDOWN_CAP) -> float:
    """Cosine rampdown ``0.5 * (1 + cos(min(iter, cap) / cap * pi))``."""
    return 0.5 * (1.0 + np.cos(min(iteration, cap) / cap * np.pi))


@dataclass(frozen=True)
class EvalAverageState:
    """Running average of preconditioner spectra used at evaluation time."""

    average: np.ndarray | None = None
    iter: int = 0
    cap: int = DEFAULT_RAMPDOWN_CAP


def update_eval_average(state: EvalAverageState, v_hat, iteration: int) -> EvalAverageState:
    """Blend ``v_hat`` into the running average with rampdown momentum.

    The first observation initializes the average.
    """
    if iteration < state.iter:
        raise ValueError(f"iteration {iteration} precedes state iteration {state.iter}")
    v_hat = np.asarray(v_hat, dtype=np.float64)
    if state.average is None:
        avg = v_hat.copy()
    else:
        mu = rampdown_momentum(iteration, state.cap)
        avg = mu * state.average + (1.0 - mu) * v_hat
    return replace(state, average=avg, iter=iteration)
