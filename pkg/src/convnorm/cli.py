"""Command-line interface: ``convnorm {analyze,normalize,train-demo,verify}``.

Exit codes: 0 success, 1 singular spectrum, 2 usage or file format error.
``CONVNORM_EPS`` sets the default ``--eps``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .core import DEFAULT_EPS, SingularSpectrumError, reparam_kernels
from .spectral import spectral_report
from .tensor import FormatError, as_kernels, read_tensor, write_tensor
from .train import MODES, TrainConfig, generate_synthetic_task, run_config

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_eps() -> float:
    raw = os.environ.get("CONVNORM_EPS")
    if raw is None:
        return DEFAULT_EPS
    try:
        eps = float(raw)
    except ValueError:
        raise UsageError(f"CONVNORM_EPS={raw!r} is not a number") from None
    return eps


def _write_json(path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _check_input(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    return p


def _check_output(path) -> None:
    if path is None or str(path) == "-":
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"{path}: directory {parent} does not exist")


def _load_kernels(path):
    return as_kernels(read_tensor(_check_input(path)), name=str(path))


def _extents(args, kernels) -> tuple:
    if args.hw is None:
        return tuple(kernels.shape[2:])
    hw = tuple(args.hw)
    if hw[0] < kernels.shape[2] or hw[1] < kernels.shape[3]:
        raise UsageError(f"--hw {hw} smaller than kernel extents {kernels.shape[2:]} in {args.input}")
    return hw


def cmd_analyze(args) -> int:
    _check_output(args.out)
    kernels = _load_kernels(args.input)
    report = spectral_report(kernels, _extents(args, kernels))
    _write_json(args.out, report.to_dict())
    return EXIT_OK


def cmd_normalize(args) -> int:
    if args.out is None:
        raise UsageError("normalize needs --out for the reparametrized kernels")
    _check_output(args.out)
    _check_output(args.report)
    kernels = _load_kernels(args.input)
    shape = _extents(args, kernels)
    eps = _default_eps() if args.eps is None else args.eps
    g = reparam_kernels(kernels, shape, eps)
    write_tensor(args.out, g)
    if args.report is not None:
        pair = {"before": spectral_report(kernels, shape).to_dict(), "after": spectral_report(g, shape).to_dict()}
        _write_json(args.report, pair)
    return EXIT_OK


def cmd_train_demo(args) -> int:
    out = Path(args.out or ".")
    if not out.is_dir():
        raise UsageError(f"{out}: output directory does not exist")
    if args.mode == "none":
        raise UsageError("--mode must be a ConvNorm mode to compare against none")
    eps = _default_eps() if args.eps is None else args.eps
    task = generate_synthetic_task(args.seed)
    summary = {"task_seed": args.seed, "modes": ["none", args.mode]}
    traces = {}
    for mode in ("none", args.mode):
        cfg = TrainConfig(epochs=args.epochs, seed=args.seed, mode=mode, epsilon=eps, stride=args.stride)
        trace = run_config(task, cfg)
        trace.write_csv(out / f"trace_{mode}.csv")
        trace.write_header(out / f"trace_{mode}.json")
        traces[mode] = trace
    n_base, n_mode = (traces[m].iterations_to(0.9) for m in ("none", args.mode))
    summary["iterations_to_90"] = {m: traces[m].iterations_to(0.9) for m in traces}
    summary["final_train_acc"] = {m: traces[m].train_acc[-1] if traces[m].train_acc else None for m in traces}
    summary["final_test_acc"] = {m: traces[m].test_acc[-1] if traces[m].test_acc else None for m in traces}
    summary["diverged"] = {m: traces[m].diverged for m in traces}
    summary["half_iterations_met"] = n_base is not None and n_mode is not None and 2 * n_mode <= n_base
    _write_json(out / "comparison.json", summary)
    print(f"iterations to 90% train accuracy: none={n_base} {args.mode}={n_mode}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    _check_output(args.report)
    results = run_all(lambda r: print(r.line(), flush=True))
    if args.report is not None:
        rows = [
            {"name": r.name, "passed": r.passed, "value": r.value, "tolerance": r.tolerance, "detail": r.detail}
            for r in results
        ]
        _write_json(args.report, rows)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return EXIT_OK if failed == 0 else EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convnorm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def kernel_args(p):
        p.add_argument("--in", dest="input", required=True, help="CNT1 kernel tensor (C_O, C_I, k1, k2)")
        p.add_argument("--hw", nargs=2, type=int, metavar=("H", "W"), help="spatial extents (default: kernel extents)")

    p = sub.add_parser("analyze", help="spectral report of a kernel tensor")
    kernel_args(p)
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("normalize", help="write reparametrized (tight frame) kernels")
    kernel_args(p)
    p.add_argument("--out", help="output CNT1 path")
    p.add_argument("--eps", type=float, help="epsilon (default $CONVNORM_EPS or 1e-12)")
    p.add_argument("--report", help="before/after report JSON path")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("train-demo", help="train none vs a ConvNorm mode on the synthetic task")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=MODES, default="convnorm")
    p.add_argument("--eps", type=float)
    p.add_argument("--stride", type=int, default=1, help="stride of the second conv layer")
    p.add_argument("--epochs", type=int, default=10)
    p.set_defaults(func=cmd_train_demo)

    p = sub.add_parser("verify", help="run the oracle equivalence suite")
    p.add_argument("--report", help="results JSON path")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        if getattr(args, "eps", None) is not None and args.eps < 0:
            raise UsageError(f"--eps must be >= 0, got {args.eps}")
        if getattr(args, "stride", 1) < 1:
            raise UsageError(f"--stride must be >= 1, got {args.stride}")
        return args.func(args)
    except SingularSpectrumError as e:
        print(f"convnorm: {getattr(args, 'input', '')}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (UsageError, FormatError, OSError) as e:
        print(f"convnorm: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
