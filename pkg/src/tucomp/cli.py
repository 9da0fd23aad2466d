"""Command-line interface: ``tucomp {synth,complete,sweep,decompose}``.

Modes are 1-based on the command line. ``complete`` exits with 0 when the
solver converged and 2 when it stopped at ``max_iter``; usage errors exit
with 64.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import experiments as ex
from .decomposition import tdsl_decompose
from .images import export_images, ingest_images
from .solver import SolverConfig
from .synthetic import SyntheticSpec, gen_mask, gen_synthetic
from .tensor import load_tensor, save_tensor
from .transforms import TransformFamily

EXIT_OK = 0
EXIT_MAX_ITER = 2
EXIT_USAGE = 64

log = logging.getLogger("tucomp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        payload = {"level": record.levelname, "logger": record.name, "message": record.getMessage()}
        if isinstance(record.args, dict):
            payload.update(record.args)
        return json.dumps(payload)


def _setup_logging(json_logs):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if json_logs else logging.Formatter("%(levelname)s %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO)


def _floats(text):
    return [float(v) for v in text.split(",") if v]


def _ints(text):
    out = []
    for part in filter(None, text.split(",")):
        lo, _, hi = part.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if hi else [int(lo)])
    return out


def _solver_config(args):
    if args.config:
        config, names = ex.load_config(args.config)
    else:
        config, names = SolverConfig(), {}
    updates = {}
    if args.model:
        updates["model"] = args.model
    if args.pair:
        updates["slice_pair"] = ex.parse_modes(args.pair)
    if args.max_iter:
        updates["max_iter"] = args.max_iter
    if args.seed is not None:
        updates["seed"] = args.seed
    return dataclasses.replace(config, **updates), names


def _resolve_pair(config, order):
    if config.model == "tcsl" and config.slice_pair is None:
        return dataclasses.replace(config, slice_pair=ex.default_slice_pair(order))
    return config


def _family(args, shape, config, names, fixed="dcm"):
    if args.transforms:
        return TransformFamily.parse(args.transforms, shape, seed=args.seed)
    if names:
        return TransformFamily.from_names(shape, names, seed=args.seed)
    return TransformFamily.from_names(
        shape, ex.default_transforms(len(shape), config.model, fixed, config.slice_pair))


def _parse_synthetic(text):
    """``"R=3"`` or ``"R=3,source=orth"`` -> kwargs for SyntheticSpec."""
    out = {}
    for item in filter(None, text.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            out["rank"] = int(key)
            continue
        key = key.strip().lower()
        if key in ("r", "rank"):
            out["rank"] = int(value)
        elif key == "source":
            out["source"] = value
        else:
            raise UsageError(f"unknown synthetic option {key!r}")
    return out


def cmd_synth(args):
    spec = SyntheticSpec(shape=ex.parse_shape(args.shape), rank=args.rank,
                         seed=args.seed or 0, source=args.source)
    M = gen_synthetic(spec)
    save_tensor(args.out, M)
    summary = {"shape": list(M.shape), "rank": spec.rank, "seed": spec.seed,
               "source": spec.source, "fro": float(np.linalg.norm(M))}
    if args.p is not None:
        mask = gen_mask(M.shape, args.p, args.mask_seed)
        save_tensor(args.mask_out or args.out + ".mask", mask.astype(float))
        summary["p"] = args.p
    print(json.dumps(summary))
    return EXIT_OK


def cmd_complete(args):
    if args.mask is None and args.p is None:
        raise UsageError("either --mask or --p is required")
    sources = [x is not None for x in (args.input, args.images, args.synthetic)]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --input, --images, --synthetic")
    config, names = _solver_config(args)
    truth, peak, fixed = None, None, "dcm"
    image_input = False
    if args.input:
        M = load_tensor(args.input)
        if args.truth:
            truth = load_tensor(args.truth)
    elif args.images:
        M, _ = ingest_images(args.images, shuffle=args.shuffle, seed=args.seed)
        truth, peak, fixed, image_input = M, 1.0, "dfm", True
    else:
        spec = SyntheticSpec(shape=ex.parse_shape(args.shape), seed=args.seed or 0,
                             **_parse_synthetic(args.synthetic))
        M = gen_synthetic(spec)
        truth = M
    if args.mask:
        mask = load_tensor(args.mask).real != 0
        if mask.shape != M.shape:
            raise ValueError(f"mask shape {mask.shape} does not match tensor shape {M.shape}")
    else:
        mask = gen_mask(M.shape, args.p, args.mask_seed if args.mask_seed is not None else args.seed)
    config = _resolve_pair(config, M.ndim)
    family = _family(args, M.shape, config, names, fixed)

    callback = None
    if args.json_logs:
        def callback(state, record):
            log.info("iteration", {k: record[k] for k in ex.DIAGNOSTIC_FIELDS})

    result, metrics = ex.complete(M, mask, family, config, truth=truth, peak=peak, callback=callback)
    metrics.update(model=config.model, transforms=family.names(), shape=list(M.shape))
    os.makedirs(args.out, exist_ok=True)
    save_tensor(os.path.join(args.out, "recovered.tu1t"), result.X)
    ex.write_diagnostics_csv(result.history, os.path.join(args.out, "diagnostics.csv"))
    with open(os.path.join(args.out, "metrics.json"), "w") as fh:
        json.dump(metrics, fh, indent=2)
    if image_input:
        export_images(np.clip(result.X, 0, 1), os.path.join(args.out, "images"))
    shown = {k: v for k, v in metrics.items() if k != "wall_time"}
    print(json.dumps(shown))
    return EXIT_OK if result.converged else EXIT_MAX_ITER


def cmd_sweep(args):
    config, names = _solver_config(args)
    if args.long:
        shape, ranks = ex.LONG_SHAPE, list(range(1, 11))
    else:
        shape, ranks = ex.parse_shape(args.shape), _ints(args.ranks)
    rates = _floats(args.ps)
    config = _resolve_pair(config, len(shape))
    transforms = None
    if args.transforms:
        transforms = dict(enumerate(TransformFamily.parse(args.transforms, shape).names()))
    elif names:
        transforms = names
    records = ex.sweep(ranks, rates, args.out, shape=shape, trials=args.trials,
                       seed=args.seed or 0, config=config, transforms=transforms,
                       workers=args.workers)
    for r in records:
        print(f"R={r['R']:>2} p={r['p']:.2f} re={r['re_mean']:.3e} "
              f"{'success' if r['success'] else 'fail'}")
    return EXIT_OK


def cmd_decompose(args):
    A = load_tensor(args.input)
    pair = ex.parse_modes(args.pair)
    if args.transforms:
        family = TransformFamily.parse(args.transforms, A.shape, seed=args.seed)
    else:
        family = TransformFamily.from_names(
            A.shape, {k: "learnable" for k in range(A.ndim) if k not in pair})
    res = tdsl_decompose(A, family, pair, args.rank, iters=args.iters)
    os.makedirs(args.out, exist_ok=True)
    save_tensor(os.path.join(args.out, "core.tu1t"), res.core)
    files = {}
    for k, U in res.factors.items():
        name = f"factor_mode{k + 1}.tu1t"
        save_tensor(os.path.join(args.out, name), U)
        files[k + 1] = name
    summary = {"shape": list(A.shape), "pair": [k + 1 for k in pair], "rank": res.rank,
               "residual": res.residual, "relative_residual": res.residual / np.linalg.norm(A),
               "iterations": len(res.residuals) - 1, "transforms": family.names(),
               "factors": files}
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary))
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="tucomp", description=__doc__.splitlines()[0])
    parser.add_argument("--json-logs", action="store_true", help="log JSON lines to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_opts(p):
        p.add_argument("--model", choices=("tcu1", "tcsl"))
        p.add_argument("--pair", help="tcsl slice modes, e.g. 2,3")
        p.add_argument("--transforms", help='per-mode transforms, e.g. "1=dfm,2=dfm,3=learnable"')
        p.add_argument("--config", help="INI config file with [solver] and [transforms]")
        p.add_argument("--max-iter", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--json-logs", action="store_true", default=argparse.SUPPRESS,
                       help="log per-iteration diagnostics as JSON lines on stderr")

    p = sub.add_parser("synth", help="generate a synthetic low-rank tensor")
    p.add_argument("--shape", default="20,20,20,20")
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--source", choices=("dcm", "orth"), default="dcm")
    p.add_argument("--seed", type=int)
    p.add_argument("--p", type=float, help="also write a sampling mask with this rate")
    p.add_argument("--mask-seed", type=int)
    p.add_argument("--mask-out")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("complete", help="complete a tensor or image stack")
    p.add_argument("--input", help="tensor file")
    p.add_argument("--truth", help="ground-truth tensor file for --input")
    p.add_argument("--images", help="directory of equally sized images")
    p.add_argument("--shuffle", action="store_true", help="shuffle image order (uses --seed)")
    p.add_argument("--synthetic", help="synthetic spec, e.g. R=3")
    p.add_argument("--shape", default="20,20,20,20", help="shape for --synthetic")
    p.add_argument("--mask", help="mask tensor file (nonzero = observed)")
    p.add_argument("--p", type=float, help="sampling rate for a random mask")
    p.add_argument("--mask-seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    solver_opts(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("sweep", help="(R, p) phase-transition sweep")
    p.add_argument("--ranks", default="1-10")
    p.add_argument("--ps", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    p.add_argument("--shape", default="20,20,20,20")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--long", action="store_true", help="30x30x30x30 grid with R=1..10")
    p.add_argument("--out", required=True, help="CSV file (resumed if present)")
    solver_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("decompose", help="approximate TDSL decomposition")
    p.add_argument("--input", required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--pair", default="1,2")
    p.add_argument("--transforms")
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.json_logs)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tucomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"tucomp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
