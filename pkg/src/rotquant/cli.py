"""Command-line interface.

Subcommands: gen-rot, synth, detect, eval, optimize, invariance.  Every
run writes a RunManifest JSON next to its primary output recording the
resolved parameters, seeds, inputs/outputs, tool version and wall time.
Exit codes: 0 success, 2 usage, 3 data error, 4 numerical error,
5 invariance check failed.
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, InvarianceError, RotquantError
from .massive import MassiveMask, detect_massive
from .optimizer import OptimizerConfig, optimize
from .quantizer import QuantConfig, quant_error
from .rotations import hadamard_randomized, orthogonal_random
from .storage import read_dfat, read_dfrm, write_dfat, write_dfrm
from .svgplot import write_scatter_svg
from .synth import DEFAULT_SPEC, SynthSpec, generate
from .toyblock import block_forward, fold_rotation, random_weights, stack_forward


def _manifest_path(args, primary):
    if getattr(args, "manifest", None):
        return Path(args.manifest)
    if primary is not None:
        return Path(str(primary) + ".manifest.json")
    return Path(f"{args.subcommand}.manifest.json")


def _write_manifest(args, primary, inputs, outputs, started):
    skip = {"func", "subcommand", "manifest"}
    params = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        params[key] = value if not isinstance(value, Path) else str(value)
    manifest = {
        "subcommand": args.subcommand,
        "parameters": params,
        "seeds": {k: v for k, v in params.items() if "seed" in k},
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    path = _manifest_path(args, primary)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_mask(path, tokens):
    mask = MassiveMask.from_json(Path(path).read_text())
    if mask.flags.shape[0] != tokens:
        raise DataError(
            f"mask covers {mask.flags.shape[0]} tokens, activations have {tokens}"
        )
    return mask


def _cmd_gen_rot(args):
    started = time.monotonic()
    make = hadamard_randomized if args.kind == "rh" else orthogonal_random
    rot = make(args.dim, args.seed)
    write_dfrm(args.out, rot, dtype=args.dtype)
    _write_manifest(args, args.out, [], [args.out], started)
    print(f"wrote {args.kind} rotation dim={args.dim} det={rot.det_sign:+d} to {args.out}")
    return 0


def _spec_from_args(args):
    if args.spec and args.spec != "default":
        try:
            base = SynthSpec(**json.loads(Path(args.spec).read_text()))
        except (TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"bad synth spec file {args.spec}: {exc}") from exc
    else:
        base = DEFAULT_SPEC
    overrides = {
        name: getattr(args, name)
        for name in (
            "tokens",
            "dim",
            "outlier_channels",
            "outlier_scale",
            "massive_count",
            "massive_scale",
            "noise_sigma",
            "normalize_l2",
            "seed",
        )
        if getattr(args, name) is not None
    }
    try:
        return SynthSpec(**{**base.__dict__, **overrides})
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _cmd_synth(args):
    started = time.monotonic()
    spec = _spec_from_args(args)
    matrix, mask = generate(spec)
    write_dfat(args.out, matrix, dtype=args.dtype)
    outputs = [args.out]
    if args.mask_out:
        Path(args.mask_out).write_text(mask.to_json() + "\n")
        outputs.append(args.mask_out)
    _write_manifest(args, args.out, [], outputs, started)
    print(f"wrote {spec.tokens}x{spec.dim} activations ({mask.count} massive) to {args.out}")
    return 0


def _cmd_detect(args):
    started = time.monotonic()
    matrix = read_dfat(args.activations)
    mask = detect_massive(matrix.as_f64(), tau_rel=args.tau_rel, tau_abs=args.tau_abs)
    Path(args.out).write_text(mask.to_json() + "\n")
    _write_manifest(args, args.out, [args.activations], [args.out], started)
    print(f"flagged {mask.count} of {matrix.rows} tokens")
    return 0


def _cmd_eval(args):
    started = time.monotonic()
    matrix = read_dfat(args.activations)
    inputs = [args.activations]
    rotation = None
    if args.rotation:
        rotation = read_dfrm(args.rotation)
        inputs.append(args.rotation)
    mask = None
    if args.mask:
        mask = _load_mask(args.mask, matrix.rows)
        inputs.append(args.mask)
    config = QuantConfig(bits=args.bits, alpha=args.alpha, beta=args.beta)
    report = quant_error(matrix.as_f64(), rotation, config, mask)
    Path(args.report).write_text(report.to_json() + "\n")
    outputs = [args.report]
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
        outputs.append(args.csv)
    if args.svg:
        write_scatter_svg(args.svg, report.per_token, mask)
        outputs.append(args.svg)
    _write_manifest(args, args.report, inputs, outputs, started)
    print(
        f"mean_sq_error={report.mean_sq_error!r} "
        f"bulk={report.bulk_mean_sq_error!r} massive={report.massive_mean_sq_error!r}"
    )
    return 0


def _parse_gamma(text):
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad gamma {text!r}") from exc
    if not value >= 0.0:
        raise argparse.ArgumentTypeError("gamma must be >= 0 (or 'inf')")
    return value


def _cmd_optimize(args):
    started = time.monotonic()
    matrix = read_dfat(args.activations)
    inputs = [args.activations]
    mask = None
    if args.mask:
        mask = _load_mask(args.mask, matrix.rows)
        inputs.append(args.mask)
    init, init_entries = args.init, None
    if init.startswith("file:"):
        path = init[len("file:") :]
        init_entries = read_dfrm(path).entries
        init = "file"
        inputs.append(path)
    config = OptimizerConfig(
        iterations=args.iters,
        gamma=args.gamma,
        quant=QuantConfig(bits=args.bits, alpha=args.alpha, beta=args.beta),
        init=init,
        seed=args.seed,
        enforce_det_plus_one=not args.no_det_fix,
        early_stop=args.early_stop,
        init_entries=init_entries,
    )
    rot, trace = optimize(matrix.as_f64(), mask, config)
    write_dfrm(args.out, rot)
    outputs = [args.out]
    if args.trace:
        Path(args.trace).write_text(trace.to_jsonl())
        outputs.append(args.trace)
    _write_manifest(args, args.out, inputs, outputs, started)
    best = trace.records[trace.best_iteration].loss_before
    print(
        f"best iterate {trace.best_iteration}/{len(trace.records) - 1} "
        f"weighted_loss={best!r}"
    )
    return 0


def _relative_deviation(got, want):
    scale = np.abs(want).max()
    return float(np.abs(got - want).max() / (scale if scale > 0 else 1.0))


def _cmd_invariance(args):
    started = time.monotonic()
    rng = np.random.default_rng(args.seed)
    x = rng.standard_normal((args.tokens, args.dim))
    blocks = [
        random_weights(args.dim, args.hidden, seed=args.seed + 1 + i) for i in range(2)
    ]
    rot = orthogonal_random(args.dim, args.seed + 101)
    folded = [fold_rotation(w, rot) for w in blocks]

    one_plain = block_forward(x, blocks[0])
    one_fold = block_forward(x @ rot.entries, folded[0], rotated_residual=True)
    dev_one = _relative_deviation(one_fold, one_plain @ rot.entries)
    two_plain = stack_forward(x, blocks)
    two_fold = stack_forward(x @ rot.entries, folded, rotated_residual=True)
    dev_two = _relative_deviation(two_fold, two_plain @ rot.entries)
    print(f"relative deviation: 1 block {dev_one:.3e}, 2 blocks {dev_two:.3e} (tol {args.tol:.1e})")

    if args.quant_bits:
        quant = QuantConfig(bits=args.quant_bits)
        drifts = {}
        for kind, make in (("rh", hadamard_randomized), ("ro", orthogonal_random)):
            r = make(args.dim, args.seed + 202)
            f = fold_rotation(blocks[0], r)
            out = block_forward(x @ r.entries, f, rotated_residual=True, quant=quant)
            drifts[kind] = _relative_deviation(out, one_plain @ r.entries)
        print(
            f"quantized drift ({args.quant_bits}-bit): "
            f"rh {drifts['rh']:.3e}, ro {drifts['ro']:.3e}"
        )
    _write_manifest(args, None, [], [], started)
    if dev_one > args.tol or dev_two > args.tol:
        raise InvarianceError(
            f"folded network deviates beyond tolerance: {max(dev_one, dev_two):.3e} > {args.tol:.1e}"
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rotquant",
        description="Rotate activations so low-bit per-token quantization stays accurate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(
            name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
        p.set_defaults(func=func)
        p.add_argument("--manifest", help="manifest path (default: <output>.manifest.json)")
        return p

    p = add("gen-rot", _cmd_gen_rot, "generate a seeded rotation matrix")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--kind", choices=("rh", "ro"), required=True,
                   help="rh = randomized Hadamard, ro = Haar-random orthogonal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", choices=("f32", "f64"), default="f64")
    p.add_argument("--out", required=True, help="output .dfrm path")

    p = add("synth", _cmd_synth, "generate synthetic activations with massive tokens")
    p.add_argument("--spec", default="default",
                   help="'default' or a JSON file of generator fields")
    p.add_argument("--tokens", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--outlier-channels", type=int, dest="outlier_channels")
    p.add_argument("--outlier-scale", type=float, dest="outlier_scale")
    p.add_argument("--massive-count", type=int, dest="massive_count")
    p.add_argument("--massive-scale", type=float, dest="massive_scale")
    p.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    p.add_argument("--normalize-l2", action=argparse.BooleanOptionalAction,
                   dest="normalize_l2", default=None,
                   help="scale every row to L2 norm sqrt(dim)")
    p.add_argument("--seed", type=int)
    p.add_argument("--dtype", choices=("f32", "f64"), default="f64")
    p.add_argument("--out", required=True, help="output .dfat path")
    p.add_argument("--mask-out", dest="mask_out", help="ground-truth mask JSON path")

    p = add("detect", _cmd_detect, "flag massive-activation tokens")
    p.add_argument("--activations", required=True, help="input .dfat path")
    p.add_argument("--tau-rel", type=float, default=15.0, dest="tau_rel",
                   help="flag tokens with l-inf >= tau_rel * median l-inf")
    p.add_argument("--tau-abs", type=float, default=None, dest="tau_abs",
                   help="additional absolute l-inf floor")
    p.add_argument("--out", required=True, help="output mask JSON path")

    p = add("eval", _cmd_eval, "quantization error report, optionally rotated")
    p.add_argument("--activations", required=True, help="input .dfat path")
    p.add_argument("--rotation", help="optional .dfrm rotation to apply first")
    p.add_argument("--mask", help="mask JSON for bulk/massive aggregate split")
    p.add_argument("--bits", type=int, default=4)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--report", required=True, help="output report JSON path")
    p.add_argument("--csv", help="optional per-token CSV path")
    p.add_argument("--svg", help="optional scatter SVG path")

    p = add("optimize", _cmd_optimize, "optimize a rotation for weighted quantization loss")
    p.add_argument("--activations", required=True, help="input .dfat path")
    p.add_argument("--mask", help="mask JSON of massive tokens")
    p.add_argument("--gamma", type=_parse_gamma, default=100.0,
                   help="massive-token loss weight; 'inf' optimizes massive only")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--init", default="rh", help="rh, ro, or file:PATH.dfrm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", type=int, default=4)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--early-stop", action="store_true", dest="early_stop",
                   help="stop after 10 iterations of <1e-8 relative change")
    p.add_argument("--no-det-fix", action="store_true", dest="no_det_fix",
                   help="allow det = -1 rotation steps")
    p.add_argument("--out", required=True, help="output .dfrm path")
    p.add_argument("--trace", help="optional per-iteration JSONL path")

    p = add("invariance", _cmd_invariance, "check folded-rotation equivalence on a toy network")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--tokens", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9,
                   help="max relative deviation before exit 5")
    p.add_argument("--quant-bits", type=int, default=None, dest="quant_bits",
                   help="also report activation-quantized drift at this bit width")

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except RotquantError as exc:
        print(f"rotquant {args.subcommand}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"rotquant {args.subcommand}: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
