"""A two-layer circular ConvNet in numpy, with optional ConvNorm.

Architecture: conv(1->8, 3x3) -> [ConvNorm [-> affine]] -> ReLU ->
conv(8->8, 3x3) -> [ConvNorm [-> affine]] -> [stride] -> ReLU ->
global average pool -> dense -> softmax cross-entropy.

Gradients are hand-written. The preconditioner spectra are computed from
the kernels at the start of each forward pass and are constants for the
matching backward pass (stop-gradient), so ``backward`` is the exact
gradient of the loss with the spectra frozen. ``gradcheck`` verifies this
against central differences.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .circulant import pad_to
from .core import DEFAULT_EPS, EvalAverageState, identity_affine, precond_spectra, update_eval_average

MODES = ("none", "convnorm", "convnorm-affine")


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


@dataclass
class ToyConvNet:
    conv1: np.ndarray
    conv2: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray
    mode: str = "none"
    affine1: np.ndarray | None = None
    affine2: np.ndarray | None = None
    epsilon: float = DEFAULT_EPS
    stride: int = 1

    def __post_init__(self):
        _check_mode(self.mode)
        if self.conv2.shape[1] != self.conv1.shape[0]:
            raise ValueError(f"conv2 expects {self.conv2.shape[1]} inputs, conv1 gives {self.conv1.shape[0]}")
        if self.head_w.shape[1] != self.conv2.shape[0]:
            raise ValueError("dense head width does not match conv2 channels")
        has_affine = self.affine1 is not None and self.affine2 is not None
        if has_affine != (self.mode == "convnorm-affine"):
            raise ValueError(f"affine kernels present={has_affine} inconsistent with mode {self.mode!r}")

    @property
    def normalized(self) -> bool:
        return self.mode != "none"

    def params(self) -> dict:
        p = {"conv1": self.conv1, "conv2": self.conv2, "head_w": self.head_w, "head_b": self.head_b}
        if self.mode == "convnorm-affine":
            p["affine1"] = self.affine1
            p["affine2"] = self.affine2
        return p

    def num_params(self) -> int:
        return sum(v.size for v in self.params().values())


def _xavier(rng, shape, fan_in, fan_out):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_net(
    seed: int = 0,
    mode: str = "none",
    channels=(1, 8, 8),
    classes: int = 4,
    kernel: int = 3,
    epsilon: float = DEFAULT_EPS,
    stride: int = 1,
) -> ToyConvNet:
    """Xavier-uniform init; affine kernels start at the delta (identity)."""
    _check_mode(mode)
    rng = np.random.default_rng(seed)
    c0, c1, c2 = channels
    ksq = kernel * kernel
    conv1 = _xavier(rng, (c1, c0, kernel, kernel), c0 * ksq, c1 * ksq)
    conv2 = _xavier(rng, (c2, c1, kernel, kernel), c1 * ksq, c2 * ksq)
    head_w = _xavier(rng, (classes, c2), c2, classes)
    affine = mode == "convnorm-affine"
    return ToyConvNet(
        conv1=conv1,
        conv2=conv2,
        head_w=head_w,
        head_b=np.zeros(classes),
        mode=mode,
        affine1=identity_affine(c1, kernel, kernel) if affine else None,
        affine2=identity_affine(c2, kernel, kernel) if affine else None,
        epsilon=epsilon,
        stride=stride,
    )


def net_spectra(net: ToyConvNet, shape) -> tuple:
    """Current preconditioner spectra (v_hat) for both layers, or Nones."""
    if not net.normalized:
        return (None, None)
    return (precond_spectra(net.conv1, shape, net.epsilon), precond_spectra(net.conv2, shape, net.epsilon))


def _rfft(x):
    return np.fft.rfft2(x)


def _half(v_hat):
    # real-FFT half of a full (.., H, W) spectrum
    return v_hat[..., : v_hat.shape[-1] // 2 + 1]


def _mix(m, z):
    """Per-frequency channel mixing ``out[b, k] = sum_j m[k, j] * z[b, j]``."""
    out = np.transpose(m, (2, 3, 0, 1)) @ np.transpose(z, (2, 3, 1, 0))
    return np.transpose(out, (3, 2, 0, 1))


def forward(net: ToyConvNet, x, spectra=None):
    """Return ``(logits, cache)``.

    ``spectra`` overrides the preconditioners (used for eval with moving
    averages); by default they are recomputed from the current kernels.
    Each layer runs in the frequency domain: conv, ConvNorm and affine are
    pointwise products between one real FFT and one inverse.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[1] != net.conv1.shape[1]:
        raise ValueError(f"input shape {x.shape} does not match net input channels {net.conv1.shape[1]}")
    shape = x.shape[2:]
    if spectra is None:
        spectra = net_spectra(net, shape)
    affines = (net.affine1, net.affine2) if net.mode == "convnorm-affine" else (None, None)
    cache = {"spectra": spectra, "shape": shape, "layers": []}
    h = x
    for idx, (a, v_hat, r) in enumerate(zip((net.conv1, net.conv2), spectra, affines)):
        h_hat = _rfft(h)
        u_hat = _mix(_rfft(pad_to(a, shape)), h_hat)
        if v_hat is not None:
            u_hat = u_hat * _half(v_hat)
        layer = {"h_in_hat": h_hat}
        if r is not None:
            layer["pre_affine_hat"] = u_hat
            u_hat = u_hat * _rfft(pad_to(r, shape))
        u = np.fft.irfft2(u_hat, s=shape)
        if idx == 1 and net.stride > 1:
            u = u[:, :, :: net.stride, :: net.stride]
        layer["pre_relu"] = u
        h = np.maximum(u, 0.0)
        cache["layers"].append(layer)
    pooled = h.mean(axis=(2, 3))
    cache["pooled"] = pooled
    cache["pool_hw"] = h.shape[2:]
    logits = pooled @ net.head_w.T + net.head_b
    return logits, cache


def cross_entropy(logits, labels) -> float:
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(labels)), labels].mean())


def softmax(logits):
    z = np.exp(logits - logits.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def accuracy(logits, labels) -> float:
    # argmax breaks ties toward the lower class index
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def backward(net: ToyConvNet, cache: dict, labels) -> dict:
    """Gradients of the mean cross-entropy, spectra held constant."""
    if cache is None or "layers" not in cache:
        raise ValueError("backward needs the cache returned by forward")
    labels = np.asarray(labels)
    logits = cache["pooled"] @ net.head_w.T + net.head_b
    B = logits.shape[0]
    dlogits = softmax(logits)
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B
    grads = {"head_w": dlogits.T @ cache["pooled"], "head_b": dlogits.sum(axis=0)}
    ph, pw = cache["pool_hw"]
    dh = np.broadcast_to((dlogits @ net.head_w)[:, :, None, None] / (ph * pw), (B, net.head_w.shape[1], ph, pw))

    shape = cache["shape"]
    affines = (net.affine1, net.affine2) if net.mode == "convnorm-affine" else (None, None)
    kernels = (net.conv1, net.conv2)
    for idx in (1, 0):
        layer = cache["layers"][idx]
        du = dh * (layer["pre_relu"] > 0)
        if idx == 1 and net.stride > 1:
            full = np.zeros(du.shape[:2] + shape)
            full[:, :, :: net.stride, :: net.stride] = du
            du = full
        du_hat = _rfft(du)
        r = affines[idx]
        if r is not None:
            corr = np.fft.irfft2((du_hat * np.conj(layer["pre_affine_hat"])).sum(axis=0), s=shape)
            grads[f"affine{idx + 1}"] = corr[:, : r.shape[1], : r.shape[2]]
            du_hat = du_hat * np.conj(_rfft(pad_to(r, shape)))
        v_hat = cache["spectra"][idx]
        if v_hat is not None:
            # P_k is symmetric: its spectrum is real
            du_hat = du_hat * _half(v_hat)
        a = kernels[idx]
        # ga[k, j] = sum_b du[b, k] conj(h[b, j])
        swap = (1, 0, 2, 3)
        ga_hat = _mix(du_hat.transpose(swap), np.conj(layer["h_in_hat"]).transpose(swap)).transpose(swap)
        ga = np.fft.irfft2(ga_hat, s=shape)
        grads[f"conv{idx + 1}"] = ga[:, :, : a.shape[2], : a.shape[3]]
        if idx > 0:
            a_hat = _rfft(pad_to(a, shape))
            dh = np.fft.irfft2(_mix(np.conj(a_hat).transpose(1, 0, 2, 3), du_hat), s=shape)
    return grads


def loss_with_frozen_spectra(net: ToyConvNet, x, labels, spectra) -> float:
    logits, _ = forward(net, x, spectra=spectra)
    return cross_entropy(logits, labels)


def cross_entropy_difference(logits_a, logits_b, labels) -> float:
    """``cross_entropy(logits_a) - cross_entropy(logits_b)`` without cancellation.

    Works on the logit differences through ``expm1``/``log1p``, so the
    round-off scales with the logits rather than with the loss value.
    """
    d = logits_a - logits_b
    w = np.exp(logits_b - logits_b.max(axis=1, keepdims=True))
    ratio = (w * np.expm1(d)).sum(axis=1) / w.sum(axis=1)
    return float(np.mean(np.log1p(ratio) - d[np.arange(len(labels)), labels]))


def relative_error(fd: float, g: float) -> float:
    return abs(fd - g) / max(1e-8, abs(fd) + abs(g))


def finite_difference_check(loss_fn, params: dict, grads: dict, h: float = 1e-6) -> float:
    """Max over entries of ``|g_fd - g| / max(1e-8, |g_fd| + |g|)``.

    ``loss_fn()`` must read the arrays in ``params``; entries are perturbed
    in place and restored.
    """
    worst = 0.0
    for name, p in params.items():
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            up = loss_fn()
            p[i] = old - h
            down = loss_fn()
            p[i] = old
            worst = max(worst, relative_error((up - down) / (2 * h), grads[name][i]))
    return worst


@dataclass
class GradcheckReport:
    max_error: float
    checked: int
    skipped: int


def gradcheck_report(net: ToyConvNet, x, labels, h: float = 1e-6) -> GradcheckReport:
    """Central differences of the loss vs ``backward``, spectra frozen at ``net``.

    Entries whose +-h stencil flips any ReLU on/off pattern straddle a kink
    where the loss is not differentiable; they are counted in ``skipped``
    and left out of ``max_error``.
    """
    spectra = net_spectra(net, np.shape(x)[2:])
    _, cache = forward(net, x, spectra=spectra)
    grads = backward(net, cache, labels)

    def probe():
        logits, c = forward(net, x, spectra=spectra)
        return logits, [layer["pre_relu"] > 0 for layer in c["layers"]]

    worst, checked, skipped = 0.0, 0, 0
    for name, p in net.params().items():
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            up, mask_up = probe()
            p[i] = old - h
            down, mask_down = probe()
            p[i] = old
            if any(np.any(a != b) for a, b in zip(mask_up, mask_down)):
                skipped += 1
                continue
            fd = cross_entropy_difference(up, down, labels) / (2 * h)
            worst = max(worst, relative_error(fd, grads[name][i]))
            checked += 1
    return GradcheckReport(worst, checked, skipped)


def gradcheck(net: ToyConvNet, x, labels, h: float = 1e-6) -> float:
    return gradcheck_report(net, x, labels, h).max_error


# -- data ----------------------------------------------------------------------


@dataclass
class SyntheticTask:
    seed: int
    classes: int
    noise: float
    templates: np.ndarray
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray


def _template(rng, grid, modes=3):
    H, W = grid
    ii, jj = np.meshgrid(np.arange(H), np.arange(W), indexing="ij")
    t = np.zeros(grid)
    for _ in range(modes):
        f1, f2 = rng.integers(0, H), rng.integers(0, W)
        t += np.cos(2 * np.pi * (f1 * ii / H + f2 * jj / W) + rng.uniform(0, 2 * np.pi))
    return t / np.sqrt(np.mean(t**2))


def generate_synthetic_task(
    seed: int = 0, classes: int = 4, grid=(16, 16), n_train: int = 256, n_test: int = 128, noise: float = 0.5
) -> SyntheticTask:
    """Per-class templates (a few random Fourier modes, unit RMS) plus
    Gaussian noise. Labels are balanced and shuffled; identical seeds give
    bit-identical tasks."""
    if classes < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    grid = tuple(grid)
    templates = np.stack([_template(rng, grid) for _ in range(classes)])

    def split(n):
        y = rng.permutation(np.arange(n) % classes)
        x = templates[y] + noise * rng.normal(size=(n,) + grid)
        return x[:, None], y

    x_train, y_train = split(n_train)
    x_test, y_test = split(n_test)
    return SyntheticTask(seed, classes, noise, templates, x_train, y_train, x_test, y_test)


# -- training ---------------------------------------------------------------------


@dataclass
class TrainConfig:
    lr: float = 0.1
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    mode: str = "none"
    epsilon: float = DEFAULT_EPS
    stride: int = 1
    # rampdown horizon for the eval average; None -> total training iterations
    eval_cap: int | None = None


@dataclass
class TrainTrace:
    config: dict
    iteration: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    test_acc: list = field(default_factory=list)
    diverged: bool = False

    def iterations_to(self, target: float) -> int | None:
        """First iteration (1-based) whose train accuracy reaches ``target``."""
        for it, acc in zip(self.iteration, self.train_acc):
            if acc >= target:
                return it
        return None

    def header(self) -> dict:
        return {
            "config": self.config,
            "iterations": len(self.iteration),
            "test_acc": self.test_acc,
            "diverged": self.diverged,
            "iterations_to_90": self.iterations_to(0.9),
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["iteration", "loss", "train_acc"])
            for it, lo, acc in zip(self.iteration, self.loss, self.train_acc):
                w.writerow([it, f"{lo:.17g}", f"{acc:.17g}"])

    def write_header(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.header(), f, indent=2, sort_keys=True)
            f.write("\n")


def train(net: ToyConvNet, task: SyntheticTask, config: TrainConfig) -> TrainTrace:
    """Minibatch SGD without momentum or weight decay.

    Each trace row holds the minibatch loss before the step and the
    full-training-set accuracy after it. Test accuracy is measured once per
    epoch, with the eval-time moving average of the spectra in ConvNorm modes.
    """
    trace = TrainTrace(config=asdict(config))
    rng = np.random.default_rng(config.seed)
    n = len(task.y_train)
    steps_per_epoch = math.ceil(n / config.batch_size)
    cap = config.eval_cap or max(1, steps_per_epoch * config.epochs)
    eval_states = [EvalAverageState(cap=cap), EvalAverageState(cap=cap)]
    shape = task.x_train.shape[2:]
    it = 0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = task.x_train[idx], task.y_train[idx]
            logits, cache = forward(net, xb)
            loss = cross_entropy(logits, yb)
            if not math.isfinite(loss):
                trace.diverged = True
                return trace
            grads = backward(net, cache, yb)
            for name, p in net.params().items():
                p -= config.lr * grads[name]
            if not all(np.all(np.isfinite(p)) for p in net.params().values()):
                trace.diverged = True
                return trace
            if net.normalized:
                for i, v_hat in enumerate(cache["spectra"]):
                    eval_states[i] = update_eval_average(eval_states[i], v_hat, it)
            it += 1
            logits_all, _ = forward(net, task.x_train)
            trace.iteration.append(it)
            trace.loss.append(loss)
            trace.train_acc.append(accuracy(logits_all, task.y_train))
        eval_spectra = tuple(s.average for s in eval_states) if net.normalized else None
        test_logits, _ = forward(net, task.x_test, spectra=eval_spectra)
        trace.test_acc.append(accuracy(test_logits, task.y_test))
    return trace


def run_config(task: SyntheticTask, config: TrainConfig) -> TrainTrace:
    net = init_net(seed=config.seed, mode=config.mode, epsilon=config.epsilon, stride=config.stride)
    return train(net, task, config)
