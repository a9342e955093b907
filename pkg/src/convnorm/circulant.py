"""Circulant and DFT algebra in 1-D and 2-D.

DFT convention: the forward transform is unnormalized, the inverse carries
the 1/n factor, so a circulant matrix factors as ``C_a = F^{-1} diag(F a) F``.
2-D grids are vectorized row-major wherever a dense matrix is built.

Multi-channel helpers at the bottom operate on kernel stacks of shape
(C_O, C_I, k1, k2) and activation batches of shape (B, C, H, W).
"""
from __future__ import annotations

import itertools

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import as_kernels, as_tensor, zero_pad


def _extents(m, ndim):
    m = tuple(np.atleast_1d(m).astype(int))
    if len(m) != ndim:
        raise ValueError(f"extents {m} do not match a rank-{ndim} kernel")
    return m


def pad_to(a, shape) -> np.ndarray:
    """Zero-pad ``a`` on the trailing side of its last ``len(shape)`` axes."""
    a = np.asarray(a, dtype=np.float64)
    lead = a.ndim - len(shape)
    if any(e > s for e, s in zip(a.shape[lead:], shape)):
        raise ValueError(f"kernel extents {a.shape[lead:]} exceed signal extents {tuple(shape)}")
    pads = [(0, 0)] * lead + [(0, s - e) for e, s in zip(a.shape[lead:], shape)]
    return zero_pad(a, pads)


def cyclic_shift(v, shift) -> np.ndarray:
    """Output index i holds ``v[(i - shift) mod m]`` (per axis for 2-D)."""
    v = np.asarray(v, dtype=np.float64)
    shift = tuple(np.atleast_1d(shift).astype(int))
    return np.roll(v, shift, axis=tuple(range(v.ndim))[-len(shift):])


def build_circulant(a, m) -> np.ndarray:
    """Materialize the circulant matrix of kernel ``a`` on signal extents ``m``.

    Column ``k`` is the zero-padded kernel cyclically shifted by ``k``. For a
    2-D kernel ``m`` is ``(H, W)`` and the result is the (HW x HW) doubly
    block-circulant matrix acting on row-major vectorized grids.
    """
    a = np.asarray(a, dtype=np.float64)
    m = _extents(m, a.ndim)
    padded = pad_to(a, m)
    cols = [cyclic_shift(padded, s).ravel() for s in itertools.product(*map(range, m))]
    return np.stack(cols, axis=1)


def dft(v, inverse: bool = False) -> np.ndarray:
    """Unnormalized DFT (1-D for vectors, 2-D over the last two axes otherwise).

    ``inverse=True`` applies ``n^{-1} F*``. The result is always complex;
    take ``.real`` when the input spectrum is Hermitian.
    """
    v = np.asarray(v)
    if v.ndim == 1:
        return np.fft.ifft(v) if inverse else np.fft.fft(v)
    return np.fft.ifft2(v) if inverse else np.fft.fft2(v)


def dft_matrix(n: int) -> np.ndarray:
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n)


def circular_convolve(a, x, mode: str = "fft") -> np.ndarray:
    """Circular convolution ``a * x`` with ``a`` zero-padded to ``x``'s extents."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if a.size == 0 or x.size == 0:
        raise ValueError("empty input")
    if a.ndim != x.ndim:
        raise ValueError(f"rank mismatch: kernel {a.ndim}, signal {x.ndim}")
    if any(e > s for e, s in zip(a.shape, x.shape)):
        raise ValueError(f"kernel extents {a.shape} exceed signal extents {x.shape}")
    if mode == "direct":
        out = np.zeros_like(x)
        for idx in itertools.product(*map(range, a.shape)):
            if a[idx] != 0.0:
                out += a[idx] * np.roll(x, idx, axis=tuple(range(x.ndim)))
        return out
    if mode == "fft":
        ap = pad_to(a, x.shape)
        axes = tuple(range(x.ndim))
        return np.fft.ifftn(np.fft.fftn(ap, axes=axes) * np.fft.fftn(x, axes=axes), axes=axes).real
    raise ValueError(f"unknown mode {mode!r}")


def linear_convolve_full(a, x) -> np.ndarray:
    """Full linear convolution; output extents are n + m - 1 per axis."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if a.ndim != x.ndim:
        raise ValueError(f"rank mismatch: kernel {a.ndim}, signal {x.ndim}")
    out = np.zeros(tuple(p + q - 1 for p, q in zip(a.shape, x.shape)))
    for idx in itertools.product(*map(range, a.shape)):
        window = tuple(slice(i, i + n) for i, n in zip(idx, x.shape))
        out[window] += a[idx] * x
    return out


def cross_correlate(a, x, pad=0) -> np.ndarray:
    """Sliding-window inner product with the unflipped kernel, stride 1.

    ``pad`` zeros are added to both sides of every axis of ``x`` first (an int,
    or one int per axis). Output extent per axis is ``n + 2*pad - m + 1``.

    Terms are accumulated in reverse kernel order, the same order
    ``linear_convolve_full`` uses for the reversed kernel, so that with
    ``pad = m - 1`` the two agree bit for bit.
    """
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    pads = np.broadcast_to(pad, (x.ndim,))
    xp = zero_pad(x, [(int(p), int(p)) for p in pads])
    if any(e > s for e, s in zip(a.shape, xp.shape)):
        raise ValueError(f"padded signal extents {xp.shape} shorter than kernel {a.shape}")
    out_shape = tuple(s - e + 1 for s, e in zip(xp.shape, a.shape))
    out = np.zeros(out_shape)
    for idx in reversed(list(itertools.product(*map(range, a.shape)))):
        window = tuple(slice(i, i + n) for i, n in zip(idx, out_shape))
        out += a[idx] * xp[window]
    return out


def verify_circulant_decomposition(a, m) -> float:
    """Max entrywise residual of ``C_a - F^{-1} diag(F a) F`` on extents ``m``."""
    a = np.asarray(a, dtype=np.float64)
    m = _extents(m, a.ndim)
    F = dft_matrix(m[0])
    for n in m[1:]:
        F = np.kron(F, dft_matrix(n))
    n_total = F.shape[0]
    a_hat = F @ pad_to(a, m).ravel()
    recon = (F.conj().T / n_total) @ (a_hat[:, None] * F)
    return float(np.max(np.abs(build_circulant(a, m) - recon)))


# -- multi-channel layers ---------------------------------------------------


def kernel_dft(kernels, shape) -> np.ndarray:
    """2-D DFT of every kernel zero-padded to ``shape``: (C_O, C_I, H, W)."""
    kernels = as_kernels(kernels)
    return np.fft.fft2(pad_to(kernels, tuple(shape)))


def circular_conv_layer(z, kernels) -> np.ndarray:
    """``z_out[b, k] = sum_j a_kj * z_in[b, j]`` with circular convolution."""
    z = np.asarray(z, dtype=np.float64)
    kernels = as_kernels(kernels)
    if z.shape[1] != kernels.shape[1]:
        raise ValueError(f"input has {z.shape[1]} channels, kernels expect {kernels.shape[1]}")
    a_hat = kernel_dft(kernels, z.shape[-2:])
    z_hat = np.fft.fft2(z)
    return np.fft.ifft2(np.einsum("kjhw,bjhw->bkhw", a_hat, z_hat)).real


def crosscorr_layer(z, kernels, pad=0) -> np.ndarray:
    """ConvNet-style multi-channel cross-correlation (valid after padding)."""
    z = as_tensor(z, "activations")
    kernels = as_kernels(kernels)
    if z.shape[1] != kernels.shape[1]:
        raise ValueError(f"input has {z.shape[1]} channels, kernels expect {kernels.shape[1]}")
    pads = np.broadcast_to(pad, (2,))
    zp = zero_pad(z, [(0, 0), (0, 0)] + [(int(p), int(p)) for p in pads])
    k1, k2 = kernels.shape[-2:]
    if zp.shape[2] < k1 or zp.shape[3] < k2:
        raise ValueError(f"padded extents {zp.shape[2:]} shorter than kernel {(k1, k2)}")
    windows = sliding_window_view(zp, (k1, k2), axis=(2, 3))
    return np.einsum("bjhwpq,kjpq->bkhw", windows, kernels)
