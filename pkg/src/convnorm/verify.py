"""Oracle equivalence checks: fast FFT paths against dense or direct routes.

Each ``check_*`` function runs one property on deterministic random
instances and returns a :class:`CheckResult`. ``run_all`` runs them in
order; the CLI ``verify`` subcommand prints one line per result.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .circulant import (
    circular_conv_layer,
    circular_convolve,
    cross_correlate,
    linear_convolve_full,
)
from .core import (
    convnorm_crosscorr,
    normalize_activations,
    precond_spectra,
    rampdown_momentum,
    reparam_kernels,
)
from .dense import channel_operator, dense_normalized_output, dense_singular_values
from .spectral import channel_condition_number, check_prop31, layer_singular_values
from .tensor import zero_pad
from .train import MODES, generate_synthetic_task, gradcheck_report, init_net


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float = 0.0
    detail: str = ""

    def summary(self) -> str:
        extra = f" ({self.detail})" if self.detail else ""
        return f"{self.name}: {self.value:.3e} vs tol {self.tolerance:.1e} in {self.seconds:.2f}s{extra}"

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.summary()}"


def _random_layers(rng, count, k=3):
    for _ in range(count):
        c_out, c_in = rng.integers(1, 5, size=2)
        yield rng.normal(size=(c_out, c_in, k, k))


def check_tight_frame(seed: int = 0, count: int = 50, shape=(8, 8)) -> CheckResult:
    """Dense ``max |Q_k Q_k^T - I|`` over random reparametrized layers."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    n = shape[0] * shape[1]
    for a in _random_layers(rng, count):
        g = reparam_kernels(a, shape, epsilon=0)
        for k in range(g.shape[0]):
            q = channel_operator(g, k, shape)
            worst = max(worst, float(np.max(np.abs(q @ q.T - np.eye(n)))))
    dt = time.perf_counter() - t0
    passed = worst < 1e-8 and dt < 10.0
    return CheckResult("tight frame Q_k Q_k^T = I (dense)", passed, worst, 1e-8, dt, f"{count} layers")


def check_channel_condition(seed: int = 0, count: int = 50, shape=(8, 8)) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    in_range = True
    for a in _random_layers(rng, count):
        g = reparam_kernels(a, shape, epsilon=0)
        for k in range(g.shape[0]):
            kappa = channel_condition_number(g, k, shape)
            in_range &= 1.0 <= kappa <= 1.0 + 1e-6
            worst = max(worst, kappa - 1.0)
    return CheckResult(
        "channel condition number = 1 after ConvNorm", bool(in_range), worst, 1e-6, time.perf_counter() - t0
    )


def check_prop31_bound(seed: int = 1, count: int = 100, dense_count: int = 10, shape=(8, 8)) -> CheckResult:
    """Layer norm bound on raw and reparametrized layers, with dense SVD spot checks."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    min_slack, min_reparam_slack, dense_err = math.inf, math.inf, 0.0
    for i, a in enumerate(_random_layers(rng, count)):
        p = check_prop31(a, shape)
        min_slack = min(min_slack, p.slack)
        g = reparam_kernels(a, shape, epsilon=0)
        lhs = check_prop31(g, shape).lhs
        min_reparam_slack = min(min_reparam_slack, math.sqrt(a.shape[0]) - lhs)
        if i < dense_count:
            dense_err = max(dense_err, abs(dense_singular_values(a, shape)[0] - p.lhs))
    passed = min_slack >= -1e-9 and min_reparam_slack >= -1e-9 and dense_err < 1e-8
    detail = f"min slack {min_slack:.3e}, min reparam slack {min_reparam_slack:.3e}"
    return CheckResult("layer norm <= sqrt(sum ||Q_k||^2)", passed, dense_err, 1e-8, time.perf_counter() - t0, detail)


def check_fft_dense(seed: int = 2, count: int = 20) -> CheckResult:
    """``normalize_activations`` vs dense ``(A_k A_k^T)^{-1/2} A_k z``."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        c_out, c_in = rng.integers(1, 5, size=2)
        H, W = rng.integers(3, 9, size=2)
        a = rng.normal(size=(c_out, c_in, 3, 3))
        z = rng.normal(size=(2, c_in, H, W))
        fast = normalize_activations(circular_conv_layer(z, a), a, epsilon=0)
        worst = max(worst, float(np.max(np.abs(fast - dense_normalized_output(z, a)))))
    return CheckResult("FFT ConvNorm = dense preconditioner", worst < 1e-10, worst, 1e-10, time.perf_counter() - t0)


def crosscorr_reference(z_in, a, epsilon=0.0):
    """Flipped-kernel circular pipeline on the zero-padded signal."""
    c_out, c_in, m1, m2 = a.shape
    B, _, n1, n2 = z_in.shape
    N1, N2 = n1 + m1 - 1, n2 + m2 - 1
    flipped = a[:, :, ::-1, ::-1]
    out = np.zeros((B, c_out, N1, N2))
    for b in range(B):
        for k in range(c_out):
            for j in range(c_in):
                zp = zero_pad(z_in[b, j], [(0, m1 - 1), (0, m2 - 1)])
                out[b, k] += circular_convolve(flipped[k, j], zp, "direct")
    v_hat = precond_spectra(flipped, (N1, N2), epsilon)
    out = np.fft.ifft2(np.fft.fft2(out) * v_hat).real
    t1, t2 = (m1 - 1) // 2, (m2 - 1) // 2
    return out[:, :, t1 : N1 - t1, t2 : N2 - t2]


def check_conventions(seed: int = 3, count: int = 20) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    exact = True
    lin_err, cc_err = 0.0, 0.0
    for _ in range(count):
        n = int(rng.integers(4, 17))
        m = int(rng.integers(1, n + 1))
        a, x = rng.normal(size=m), rng.normal(size=n)
        exact &= bool(np.array_equal(cross_correlate(a, x, pad=m - 1), linear_convolve_full(a[::-1], x)))
        L = n + m - 1
        circ = circular_convolve(zero_pad(a, (0, L - m)), zero_pad(x, (0, L - n)), mode="fft")
        lin_err = max(lin_err, float(np.max(np.abs(circ - linear_convolve_full(a, x)))))
        c_out, c_in = rng.integers(1, 4, size=2)
        k = int(rng.choice([1, 3, 5]))
        kern = rng.normal(size=(c_out, c_in, k, k))
        z = rng.normal(size=(2, c_in, 6, 7))
        cc_err = max(cc_err, float(np.max(np.abs(convnorm_crosscorr(z, kern, 0) - crosscorr_reference(z, kern, 0)))))
    passed = exact and lin_err < 1e-12 and cc_err < 1e-10
    detail = f"crosscorr==flipped linear exact: {exact}, linear vs circular {lin_err:.1e} (tol 1e-12)"
    return CheckResult("convolution convention adapters", passed, cc_err, 1e-10, time.perf_counter() - t0, detail)


def check_reparam_invariances(seed: int = 4, count: int = 20, shape=(8, 8)) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for a in _random_layers(rng, count):
        g = reparam_kernels(a, shape, epsilon=0)
        worst = max(worst, float(np.max(np.abs(reparam_kernels(g, shape, epsilon=0) - g))))
        for c in (0.1, 10.0):
            worst = max(worst, float(np.max(np.abs(reparam_kernels(c * a, shape, epsilon=0) - g))))
    return CheckResult(
        "reparametrization idempotent and scale invariant", worst < 1e-10, worst, 1e-10, time.perf_counter() - t0
    )


def check_singular_values(seed: int = 5, count: int = 10, shape=(6, 6)) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        dims = [int(rng.integers(1, 3)), int(rng.integers(1, 3)), int(rng.integers(1, 4)), int(rng.integers(1, 4))]
        a = rng.normal(size=dims)
        worst = max(worst, float(np.max(np.abs(layer_singular_values(a, shape) - dense_singular_values(a, shape)))))
    return CheckResult("per-frequency SVD = dense SVD", worst < 1e-8, worst, 1e-8, time.perf_counter() - t0)


def check_gradients(seeds=range(5), batch: int = 2, task_seed: int = 0) -> CheckResult:
    """Central differences vs manual backward, spectra frozen, every mode."""
    t0 = time.perf_counter()
    task = generate_synthetic_task(task_seed)
    worst, skipped, checked = 0.0, 0, 0
    for mode in MODES:
        for seed in seeds:
            net = init_net(seed, mode)
            idx = np.random.default_rng(seed).choice(len(task.y_train), batch, replace=False)
            rep = gradcheck_report(net, task.x_train[idx], task.y_train[idx])
            worst = max(worst, rep.max_error)
            skipped += rep.skipped
            checked += rep.checked
    detail = f"{checked} entries, {skipped} skipped at ReLU kinks"
    passed = worst < 1e-5 and skipped <= 0.01 * (checked + skipped)
    return CheckResult("gradcheck with stop-gradient", passed, worst, 1e-5, time.perf_counter() - t0, detail)


def check_rampdown() -> CheckResult:
    t0 = time.perf_counter()
    errs = [
        abs(rampdown_momentum(0) - 1.0),
        abs(rampdown_momentum(20000) - 0.5),
        abs(rampdown_momentum(40000) - 0.0),
        abs(rampdown_momentum(80000) - 0.0),
    ]
    worst = max(errs)
    return CheckResult("cosine rampdown momentum", worst <= 1e-15, worst, 1e-15, time.perf_counter() - t0)


CHECKS = (
    check_tight_frame,
    check_channel_condition,
    check_prop31_bound,
    check_fft_dense,
    check_conventions,
    check_reparam_invariances,
    check_singular_values,
    check_gradients,
    check_rampdown,
)


def run_all(callback=None) -> list:
    results = []
    for check in CHECKS:
        res = check()
        results.append(res)
        if callback is not None:
            callback(res)
    return results
