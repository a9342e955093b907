"""Dense float64 tensors, the CNT1 binary format, and basic shape operations.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 with rank 1-4.
Helpers in this module validate that contract (``as_tensor``,
``as_kernels``, ``as_batch``) instead of wrapping arrays in a new class.

CNT1 layout (all little-endian)::

    b"CNT1" | u32 rank | rank x u64 extents | f64 payload, row-major
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CNT1"
MAX_RANK = 4


class FormatError(ValueError):
    """Raised for malformed tensors or CNT1 files."""


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Validate ``x`` as a finite float64 tensor of rank 1-4 and return it."""
    t = np.asarray(x, dtype=np.float64)
    if not 1 <= t.ndim <= MAX_RANK:
        raise FormatError(f"{name}: rank {t.ndim} not in 1..{MAX_RANK}")
    if any(e < 1 for e in t.shape):
        raise FormatError(f"{name}: extents must be positive, got {t.shape}")
    if not np.all(np.isfinite(t)):
        raise FormatError(f"{name}: non-finite values")
    return t


def as_kernels(a, name: str = "kernels") -> np.ndarray:
    """Validate a kernel stack of shape (C_O, C_I, k1, k2).

    A 3-D array (C_O, C_I, k) is promoted to the 1-D convention k2 = 1.
    """
    a = as_tensor(a, name)
    if a.ndim == 3:
        a = a[..., None]
    if a.ndim != 4:
        raise FormatError(f"{name}: expected shape (C_O, C_I, k1, k2), got {a.shape}")
    return a


def as_batch(z, name: str = "activations") -> np.ndarray:
    """Validate an activation batch of shape (B, C, H, W)."""
    z = as_tensor(z, name)
    if z.ndim != 4:
        raise FormatError(f"{name}: expected shape (B, C, H, W), got {z.shape}")
    return z


def write_tensor(path, t) -> None:
    t = as_tensor(t)
    header = MAGIC + struct.pack("<I", t.ndim) + struct.pack(f"<{t.ndim}Q", *t.shape)
    payload = np.ascontiguousarray(t, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header")
    (rank,) = struct.unpack_from("<I", raw, 4)
    if not 1 <= rank <= MAX_RANK:
        raise FormatError(f"{path}: rank {rank} not in 1..{MAX_RANK}")
    off = 8 + 8 * rank
    if len(raw) < off:
        raise FormatError(f"{path}: truncated extents")
    shape = struct.unpack_from(f"<{rank}Q", raw, 8)
    if any(e < 1 for e in shape):
        raise FormatError(f"{path}: extents must be positive, got {shape}")
    n = int(np.prod(shape))
    if len(raw) - off != 8 * n:
        raise FormatError(
            f"{path}: payload has {len(raw) - off} bytes, expected {8 * n} for shape {shape}"
        )
    t = np.frombuffer(raw, dtype="<f8", offset=off).astype(np.float64).reshape(shape)
    if not np.all(np.isfinite(t)):
        raise FormatError(f"{path}: non-finite payload")
    return t


def tensor_io(path, mode: str, t=None):
    """Read or write a CNT1 file; ``mode`` is ``"read"`` or ``"write"``."""
    if mode == "write":
        if t is None:
            raise ValueError("write mode requires a tensor")
        write_tensor(path, t)
        return None
    if mode == "read":
        return read_tensor(path)
    raise ValueError(f"unknown mode {mode!r}")


def write_freq_grid(path_re, path_im, grid) -> None:
    """Export a complex grid as a (real, imaginary) pair of CNT1 files."""
    grid = np.asarray(grid, dtype=np.complex128)
    write_tensor(path_re, grid.real)
    write_tensor(path_im, grid.imag)


def read_freq_grid(path_re, path_im) -> np.ndarray:
    re, im = read_tensor(path_re), read_tensor(path_im)
    if re.shape != im.shape:
        raise FormatError(f"real/imag shape mismatch: {re.shape} vs {im.shape}")
    return re + 1j * im


def zero_pad(t, pads) -> np.ndarray:
    """Pad with zeros; ``pads`` is one ``(left, right)`` pair per axis.

    A single pair is applied to the last axis when ``t`` has higher rank.
    """
    t = np.asarray(t, dtype=np.float64)
    pads = [tuple(p) for p in np.atleast_2d(pads)]
    if len(pads) < t.ndim:
        pads = [(0, 0)] * (t.ndim - len(pads)) + pads
    if len(pads) != t.ndim:
        raise ValueError(f"{len(pads)} pad pairs for rank-{t.ndim} tensor")
    if any(p < 0 for pair in pads for p in pair):
        raise ValueError("pad amounts must be non-negative")
    return np.pad(t, pads, mode="constant")


def downsample(t, stride, axes=None) -> np.ndarray:
    """Keep indices 0, s, 2s, ... along ``axes`` (default: the last two, or
    the only axis of a 1-D tensor)."""
    t = np.asarray(t, dtype=np.float64)
    if axes is None:
        axes = tuple(range(t.ndim))[-2:]
    strides = np.broadcast_to(stride, (len(axes),))
    if np.any(strides < 1):
        raise ValueError(f"stride must be >= 1, got {stride}")
    index = [slice(None)] * t.ndim
    for ax, s in zip(axes, strides):
        index[ax] = slice(None, None, int(s))
    return t[tuple(index)]


def flip_kernel(a) -> np.ndarray:
    """Cyclic reversal on every axis: index 0 stays, the rest reverse."""
    a = np.asarray(a, dtype=np.float64)
    for ax in range(a.ndim):
        a = np.roll(np.flip(a, axis=ax), 1, axis=ax)
    return a
