"""Exact singular values of multi-channel circular convolution layers.

A circular conv layer is block-circulant, so the 2-D DFT block-diagonalizes
it: at each frequency w the layer acts as the C_O x C_I matrix
``M(w)[k, j] = a_hat_kj(w)``. The union of the singular values of all
``M(w)`` is the exact spectrum of the layer operator.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .circulant import kernel_dft
from .core import channel_power
from .tensor import as_kernels

ZERO_SV = 1e-14
PROP31_TOL = 1e-9


def layer_singular_values(kernels, shape) -> np.ndarray:
    """All H*W*min(C_O, C_I) singular values of the layer, descending."""
    a_hat = kernel_dft(kernels, shape)
    per_freq = np.transpose(a_hat, (2, 3, 0, 1))
    sv = np.linalg.svd(per_freq, compute_uv=False).ravel()
    return np.sort(sv)[::-1]


def channel_singular_values(kernels, channel: int, shape) -> np.ndarray:
    """Singular values of the single-output-channel operator ``A_k``."""
    kernels = as_kernels(kernels)
    return np.sqrt(channel_power(kernels[channel : channel + 1], shape)[0]).ravel()


def _kappa(sv) -> float:
    lo, hi = float(np.min(sv)), float(np.max(sv))
    return math.inf if lo <= ZERO_SV else hi / lo


def channel_condition_number(kernels, channel: int, shape) -> float:
    """``sigma_max / sigma_min`` of ``A_k``; ``inf`` when sigma_min <= 1e-14."""
    return _kappa(channel_singular_values(kernels, channel, shape))


def layer_condition_number(kernels, shape) -> float:
    return _kappa(layer_singular_values(kernels, shape))


def tight_frame_residual(kernels, channel: int, shape) -> float:
    """``max |Q_k Q_k^T - I|`` evaluated as ``max_w |sum_j |g_hat_kj(w)|^2 - 1|``."""
    kernels = as_kernels(kernels)
    power = channel_power(kernels[channel : channel + 1], shape)[0]
    return float(np.max(np.abs(power - 1.0)))


class Prop31Check(NamedTuple):
    lhs: float
    rhs: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.slack >= -PROP31_TOL


def check_prop31(kernels, shape) -> Prop31Check:
    """Compare the layer spectral norm with ``sqrt(sum_k ||Q_k||^2)``."""
    kernels = as_kernels(kernels)
    lhs = float(layer_singular_values(kernels, shape)[0])
    channel_norms = np.sqrt(channel_power(kernels, shape).reshape(kernels.shape[0], -1).max(axis=1))
    rhs = float(np.sqrt(np.sum(channel_norms**2)))
    return Prop31Check(lhs, rhs, rhs - lhs)


@dataclass
class SpectralReport:
    channel_condition_numbers: list
    channel_spectral_norms: list
    layer_singular_values: list
    spectral_norm: float
    prop31_bound: float
    prop31_slack: float
    zero_sv_count: int

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinity; an unbounded condition number is written "inf"
        d["channel_condition_numbers"] = ["inf" if math.isinf(x) else x for x in self.channel_condition_numbers]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralReport":
        d = dict(d)
        d["channel_condition_numbers"] = [math.inf if x == "inf" else x for x in d["channel_condition_numbers"]]
        return cls(**d)


def spectral_report(kernels, shape) -> SpectralReport:
    kernels = as_kernels(kernels)
    sv = layer_singular_values(kernels, shape)
    c_out = kernels.shape[0]
    prop = check_prop31(kernels, shape)
    chan_sv = [channel_singular_values(kernels, k, shape) for k in range(c_out)]
    return SpectralReport(
        channel_condition_numbers=[_kappa(s) for s in chan_sv],
        channel_spectral_norms=[float(s.max()) for s in chan_sv],
        layer_singular_values=[float(s) for s in sv],
        spectral_norm=prop.lhs,
        prop31_bound=prop.rhs,
        prop31_slack=prop.slack,
        zero_sv_count=int(np.sum(sv <= ZERO_SV)),
    )


@dataclass
class RhoMetric:
    ratios: list
    rho: float
    excluded: int = 0


def condition_ratio_rho(baseline, method) -> RhoMetric:
    """Mean over layers of ``kappa_baseline / kappa_method``.

    Layers where both condition numbers are infinite are dropped and counted
    in ``excluded``.
    """
    baseline, method = list(baseline), list(method)
    if len(baseline) != len(method):
        raise ValueError(f"length mismatch: {len(baseline)} baseline vs {len(method)} method layers")
    ratios, excluded = [], 0
    for b, m in zip(baseline, method):
        if math.isinf(b) and math.isinf(m):
            excluded += 1
            continue
        ratios.append(b / m)
    if excluded:
        warnings.warn(f"{excluded} layer(s) with infinite condition number on both sides excluded")
    rho = float(np.mean(ratios)) if ratios else math.nan
    return RhoMetric(ratios=ratios, rho=rho, excluded=excluded)
