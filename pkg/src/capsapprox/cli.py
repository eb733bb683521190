"""Command-line entry point.

    capsapprox gen-luts      --out DIR
    capsapprox eval-softmax  [--variant b2] [--n 10] [--out report.txt|.jsonl]
    capsapprox eval-squash   [--variant pow2] [--n 16] [--curve coeff.tsv]
    capsapprox route-agree   [--variant b2+pow2] [--trials 1000]
    capsapprox show-config

Exit status: 0 on success, 1 on a domain/config error, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import med_report, report_to_json, report_to_kv
from .config import RunConfig, parse_range
from .fixedpoint import FixedPointError, QFormat, quantize_raw
from .kernels import taylor_tables
from .lutgen import LutError, save_lut
from .routing import routing_agreement
from .softmax import APPROX_SOFTMAX, SOFTMAX_VARIANTS, softmax_exact, softmax_rows
from .squash import APPROX_SQUASH, SQUASH_VARIANTS, coeff_raw, coefficient, squash_exact, squash_rows


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--fmt", metavar="Qa.b", help="datapath format, e.g. Q16.10")
    common.add_argument("--seed", type=int, help="RNG seed for generated inputs")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout); gen-luts takes a directory")

    p = argparse.ArgumentParser(prog="capsapprox", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("gen-luts", parents=[common], help="write every lookup table (default dir: luts)")

    for name, variants in (("eval-softmax", APPROX_SOFTMAX), ("eval-squash", APPROX_SQUASH)):
        e = sub.add_parser(name, parents=[common], help=f"Mean-Error-Distance sweep of the {name[5:]} units")
        e.add_argument("--variant", choices=variants, action="append", help="repeatable; default all")
        e.add_argument("--n", type=int, action="append", help="vector length (repeatable)")
        e.add_argument("--count", type=int, help="vectors per length")
        e.add_argument("--range", metavar="lo:hi", help="uniform input range")
        if name == "eval-squash":
            e.add_argument("--curve", metavar="PATH", help="write coefficient curve TSV")

    r = sub.add_parser("route-agree", parents=[common], help="routing agreement study")
    r.add_argument("--variant", action="append", metavar="SOFTMAX+SQUASH", help="repeatable; default all 15 pairs")
    r.add_argument("--trials", type=int, help="random prediction tensors")
    r.add_argument("--iterations", type=int, help="routing iterations")

    sub.add_parser("show-config", parents=[common], help="print the effective config")
    return p


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    over = {
        "fmt": QFormat.parse(args.fmt) if args.fmt else None,
        "seed": args.seed,
        "count": getattr(args, "count", None),
        "trials": getattr(args, "trials", None),
        "iterations": getattr(args, "iterations", None),
    }
    rng = getattr(args, "range", None)
    if rng is not None:
        key = "softmax_range" if args.command == "eval-softmax" else "squash_range"
        over[key] = parse_range(rng)
    return cfg.with_overrides(**over)


def _emit(blocks: list[str], out: str | None, stdout) -> None:
    text = "".join(blocks)
    if out is None:
        stdout.write(text)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="\n") as f:
        f.write(text)


def _is_json(out: str | None) -> bool:
    return out is not None and out.endswith((".json", ".jsonl"))


def _cmd_gen_luts(cfg: RunConfig, args, stdout) -> None:
    out = Path(args.out or "luts")
    out.mkdir(parents=True, exist_ok=True)
    taylor = taylor_tables(cfg.fmt, cfg.taylor_split())
    tables = cfg.squash_impl("exp").tables
    luts = {
        "taylor_exp_int": taylor.exp_int,
        "taylor_exp_frac": taylor.exp_frac,
        "sqrt_lo": tables.sqrt_lo,
        "sqrt_hi": tables.sqrt_hi,
        "coeff_lo": tables.coeff_lo,
        "coeff_hi": tables.coeff_hi,
    }
    for name, lut in luts.items():
        path = out / f"{name}.lut"
        save_lut(lut, path)
        stdout.write(f"{path}\t{lut.size} entries\t{lut.fmt}\t[{lut.domain_lo}, {lut.domain_hi})\n")


def _cmd_eval(cfg: RunConfig, args, stdout) -> None:
    kind = "softmax" if args.command == "eval-softmax" else "squash"
    variants = args.variant or list(APPROX_SOFTMAX if kind == "softmax" else APPROX_SQUASH)
    sizes = args.n or list(cfg.softmax_sizes if kind == "softmax" else cfg.squash_lengths)
    as_json = _is_json(args.out)
    blocks = []
    for variant in variants:
        for n in sizes:
            spec = cfg.sweep(kind, n)
            if kind == "softmax":
                impl = cfg.softmax_impl(variant)
                exact, run = softmax_exact, softmax_rows
            else:
                impl = cfg.squash_impl(variant)
                exact, run = squash_exact, squash_rows

            def approx(x, impl=impl, run=run):
                return run(impl, quantize_raw(x, impl.fmt))

            report = med_report(exact, approx, spec)
            meta = {
                "kind": kind,
                "variant": variant,
                "n": n,
                "count": spec.count,
                "range": f"{spec.lo!r}:{spec.hi!r}",
                "seed": spec.seed,
                "fmt": str(spec.fmt),
            }
            if as_json:
                blocks.append(report_to_json(report, meta) + "\n")
            else:
                blocks.append(("\n" if blocks else "") + report_to_kv(report, meta))
    _emit(blocks, args.out, stdout)

    if kind == "squash" and getattr(args, "curve", None):
        _write_curves(cfg, variants, args.curve)


def _write_curves(cfg: RunConfig, variants, path: str) -> None:
    fmt = cfg.fmt
    step = 1 << max(fmt.frac_bits - 6, 0)
    t = np.arange(0, 8 << fmt.frac_bits, step, dtype=np.int64)
    x = np.ldexp(t.astype(np.float64), -fmt.frac_bits)
    base = Path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    for variant in variants:
        target = base if len(variants) == 1 else base.with_name(f"{base.stem}_{variant}{base.suffix}")
        approx = np.ldexp(coeff_raw(variant, t, cfg.squash_impl(variant)).astype(float), -fmt.frac_bits)
        exact = coefficient(x)
        with open(target, "w", newline="\n") as f:
            f.write("x\texact\tapprox\tabs_err\n")
            for row in zip(x, exact, approx, np.abs(approx - exact)):
                f.write("\t".join(repr(float(v)) for v in row) + "\n")


def _parse_pair(text: str) -> tuple[str, str]:
    parts = text.split("+")
    if len(parts) != 2 or parts[0] not in SOFTMAX_VARIANTS or parts[1] not in SQUASH_VARIANTS:
        raise UsageError(
            f"bad --variant {text!r}: expected SOFTMAX+SQUASH with SOFTMAX in "
            f"{SOFTMAX_VARIANTS} and SQUASH in {SQUASH_VARIANTS}"
        )
    return parts[0], parts[1]


def default_routing_pairs() -> list[tuple[str, str]]:
    pairs = [(s, "exact") for s in APPROX_SOFTMAX] + [("exact", q) for q in APPROX_SQUASH]
    pairs += [(s, q) for s in APPROX_SOFTMAX for q in APPROX_SQUASH]
    return pairs


def _cmd_route(cfg: RunConfig, args, stdout) -> None:
    pairs = [_parse_pair(v) for v in args.variant] if args.variant else default_routing_pairs()
    reference = cfg.routing(cfg.softmax_impl("exact"), cfg.squash_impl("exact"))
    as_json = _is_json(args.out)
    blocks = []
    for s, q in pairs:
        other = cfg.routing(cfg.softmax_impl(s), cfg.squash_impl(q))
        frac = routing_agreement(reference, other, cfg.trials, cfg.seed)
        meta = {
            "config": f"{s}+{q}",
            "reference": "exact+exact",
            "trials": cfg.trials,
            "seed": cfg.seed,
            "iterations": cfg.iterations,
            "shape": f"{cfg.num_lower}x{cfg.num_upper}x{cfg.dim}",
            "fmt": str(cfg.fmt),
            "agreement": frac,
        }
        if as_json:
            blocks.append(json.dumps(meta) + "\n")
        else:
            body = "\n".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in meta.items())
            blocks.append(("\n" if blocks else "") + "[routing]\n" + body + "\n")
    _emit(blocks, args.out, stdout)


def run_command(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load_config(args)
        if args.command == "show-config":
            _emit([cfg.to_ini()], args.out, stdout)
        elif args.command == "gen-luts":
            _cmd_gen_luts(cfg, args, stdout)
        elif args.command in ("eval-softmax", "eval-squash"):
            _cmd_eval(cfg, args, stdout)
        elif args.command == "route-agree":
            _cmd_route(cfg, args, stdout)
    except UsageError as exc:
        stderr.write(f"capsapprox: error: {exc}\n")
        return 2
    except (ValueError, FixedPointError, LutError, OSError) as exc:
        stderr.write(f"capsapprox: {exc}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
