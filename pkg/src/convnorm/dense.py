"""Dense materializations of convolution layers, for verification only.

These build the explicit (block-)circulant matrices and compute
``(A_k A_k^T)^{-1/2}`` by symmetric eigendecomposition. Cost grows as
O((HW)^3); keep spatial extents small (<= 16 x 16).
"""
from __future__ import annotations

import numpy as np

from .circulant import build_circulant
from .tensor import as_kernels


def channel_operator(kernels, channel: int, shape) -> np.ndarray:
    """``A_k = [C_{a_k1} ... C_{a_kC_I}]``, shape (HW, C_I * HW)."""
    kernels = as_kernels(kernels)
    return np.hstack([build_circulant(a, shape) for a in kernels[channel]])


def layer_operator(kernels, shape) -> np.ndarray:
    """Stacked ``[A_1; ...; A_C_O]``, shape (C_O * HW, C_I * HW)."""
    kernels = as_kernels(kernels)
    return np.vstack([channel_operator(kernels, k, shape) for k in range(kernels.shape[0])])


def inv_sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(m)
    if w.min() <= 0:
        raise np.linalg.LinAlgError(f"matrix not positive definite (min eigenvalue {w.min():.3e})")
    return (u / np.sqrt(w)) @ u.T


def dense_preconditioner(kernels, channel: int, shape) -> np.ndarray:
    a_k = channel_operator(kernels, channel, shape)
    return inv_sqrt_psd(a_k @ a_k.T)


def dense_normalized_output(z_in, kernels, shape=None) -> np.ndarray:
    """``P_k A_k z_in`` for every sample and channel, shape (B, C_O, H, W)."""
    z_in = np.asarray(z_in, dtype=np.float64)
    kernels = as_kernels(kernels)
    shape = tuple(z_in.shape[2:]) if shape is None else tuple(shape)
    flat = z_in.reshape(z_in.shape[0], -1)
    out = []
    for k in range(kernels.shape[0]):
        a_k = channel_operator(kernels, k, shape)
        q_k = inv_sqrt_psd(a_k @ a_k.T) @ a_k
        out.append(flat @ q_k.T)
    return np.stack(out, axis=1).reshape(z_in.shape[0], kernels.shape[0], *shape)


def dense_singular_values(kernels, shape) -> np.ndarray:
    """All singular values of the layer operator, sorted descending."""
    return np.linalg.svd(layer_operator(kernels, shape), compute_uv=False)
