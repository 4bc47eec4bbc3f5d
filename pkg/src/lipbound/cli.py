"""Command-line front end.

Subcommands:

- ``gen``      generate a random network file
- ``compute``  compute a Lipschitz bound and write a JSON report
- ``verify``   independently check a report against its network
- ``bench``    sweep depth/width/seed grids and emit a CSV

Exit codes: 0 success, 2 invalid arguments or unreadable input format,
3 I/O failure, 4 definiteness lost without a sweep fallback,
5 all sweep points infeasible, 6 validation failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bounds import (
    METHODS,
    StrategyConfig,
    best_of,
    expand_grid,
    product_bound,
    report_from_dict,
    report_to_dict,
    run_recursion,
    sweep_c,
)
from .certify import (
    DEFAULT_DIM_CAP,
    DEFAULT_RADIUS,
    validate,
    verify_feasibility,
)
from .errors import (
    AllInfeasible,
    DefinitenessLost,
    DimensionCapExceeded,
    DimensionChainError,
    LipboundError,
    ParseError,
    ValidationFailed,
)
from .network import generate_random, load_network, save_network

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEFINITENESS = 4
EXIT_INFEASIBLE = 5
EXIT_VALIDATION = 6

_BENCH_DEFAULT_C = {"sn": 1.0, "gc": 1.0, "gcs": 1.0, "shift": 2.0}


def _manifest(command: str, args: argparse.Namespace) -> dict:
    skip = {"func"}
    return {
        "command": command,
        "args": {k: v for k, v in vars(args).items() if k not in skip},
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "tool_version": __version__,
    }


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipbound",
        description="Certified Lipschitz upper bounds for feedforward networks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random network file")
    gen.add_argument("--layers", type=int, required=True, help="hidden layer count")
    gen.add_argument("--width", type=int, required=True)
    gen.add_argument("--in", dest="in_dim", type=int, required=True)
    gen.add_argument("--out", dest="out_dim", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--activation", default="tanh", choices=("relu", "tanh", "sigmoid"))
    gen.add_argument("--binary", action="store_true", help="write LNET binary format")
    gen.add_argument("--o", dest="output", default="net.json")

    comp = sub.add_parser("compute", help="compute a Lipschitz bound")
    comp.add_argument("--net", required=True)
    comp.add_argument("--method", required=True, choices=METHODS + ("best",))
    comp.add_argument("--c", type=float, default=None)
    comp.add_argument("--sweep", default=None, metavar="LO:HI:STEP")
    comp.add_argument("--theta", type=float, default=0.5)
    comp.add_argument("--d-tilde", type=float, default=1.0)
    comp.add_argument("--certified", action="store_true")
    comp.add_argument("--jobs", type=int, default=1)
    comp.add_argument("--o", dest="output", default=None)

    ver = sub.add_parser("verify", help="verify a bound report")
    ver.add_argument("--net", required=True)
    ver.add_argument("--report", required=True)
    ver.add_argument("--samples", type=int, default=200)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--radius", type=float, default=DEFAULT_RADIUS)
    ver.add_argument("--lmi", action="store_true",
                     help="force the feasibility check even past the size cap")
    ver.add_argument("--lmi-cap", type=int, default=DEFAULT_DIM_CAP)
    ver.add_argument("--o", dest="output", default=None)

    bench = sub.add_parser("bench", help="benchmark bound methods over a grid")
    bench.add_argument("--depths", required=True, help="comma-separated depths")
    bench.add_argument("--widths", required=True, help="comma-separated widths")
    bench.add_argument("--seeds", default="0", help="comma-separated seeds")
    bench.add_argument(
        "--methods", default="product,fast,sn,gc,gcs,shift",
        help="comma-separated method names",
    )
    bench.add_argument("--activation", default="tanh", choices=("relu", "tanh", "sigmoid"))
    bench.add_argument("--certified", action="store_true")
    bench.add_argument("--jobs", type=int, default=1)
    for m, c in _BENCH_DEFAULT_C.items():
        bench.add_argument(f"--c-{m}", type=float, default=c, dest=f"c_{m}")
    bench.add_argument("--o", dest="output", default="bench.csv")
    return parser


def _parse_int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_gen(args: argparse.Namespace) -> int:
    if args.layers < 1 or min(args.width, args.in_dim, args.out_dim) < 1:
        print("gen: layers/width/in/out must all be >= 1", file=sys.stderr)
        return EXIT_USAGE
    net = generate_random(
        args.layers, args.width, args.in_dim, args.out_dim, args.seed,
        activation=args.activation,
    )
    save_network(net, args.output, binary=args.binary)
    print(f"wrote {args.output}: dims {' -> '.join(str(d) for d in net.dims)}")
    return EXIT_OK


def cmd_compute(args: argparse.Namespace) -> int:
    net = load_network(args.net)
    t0 = time.perf_counter()
    if args.method == "best":
        report = best_of(net, jobs=args.jobs, d_tilde=args.d_tilde,
                         certified=args.certified)
    elif args.method == "product":
        report = product_bound(net, certified=args.certified)
    elif args.method == "fast":
        report = run_recursion(
            net, StrategyConfig("fast", d_tilde=args.d_tilde,
                                certified=args.certified)
        )
    elif args.c is not None:
        cfg = StrategyConfig(
            args.method, c=args.c, theta=args.theta, d_tilde=args.d_tilde,
            certified=args.certified,
        )
        report = run_recursion(net, cfg)
    else:
        grid = None
        if args.sweep is not None:
            lo, hi, step = (float(v) for v in args.sweep.split(":"))
            grid = expand_grid({"lo": lo, "hi": hi, "step": step})
        report = sweep_c(
            net, args.method, grid=grid, jobs=args.jobs, theta=args.theta,
            d_tilde=args.d_tilde, certified=args.certified,
        )
    elapsed = time.perf_counter() - t0
    payload = report_to_dict(report)
    payload["manifest"] = _manifest("compute", args)
    if args.output:
        Path(args.output).write_text(json.dumps(payload, indent=2) + "\n")
    print(
        f"method={report.method} c={report.config.c:g} "
        f"bound={report.bound:.12g} time={elapsed:.3f}s"
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    net = load_network(args.net)
    payload = json.loads(Path(args.report).read_text())
    report = report_from_dict(payload)
    vr = validate(
        net, report, n_samples=args.samples, seed=args.seed,
        radius=args.radius, dim_cap=args.lmi_cap,
    )
    if args.lmi and vr.lmi is None:
        try:
            vr.lmi = verify_feasibility(net, report.multipliers, dim_cap=args.lmi_cap)
        except DimensionCapExceeded as exc:
            print(f"feasibility check skipped: {exc}", file=sys.stderr)
    out = {
        "bound": vr.bound,
        "empirical_lower": vr.empirical_lower,
        "samples": vr.samples,
        "margin": vr.margin,
        "lmi": None if vr.lmi is None else {
            "dimension": vr.lmi.dimension,
            "shift_used": vr.lmi.shift_used,
            "psd": vr.lmi.psd,
            "min_pivot_estimate": vr.lmi.min_pivot_estimate,
        },
        "manifest": _manifest("verify", args),
    }
    if args.output:
        Path(args.output).write_text(json.dumps(out, indent=2) + "\n")
    psd_note = "n/a" if vr.lmi is None else str(vr.lmi.psd)
    print(
        f"bound={vr.bound:.12g} empirical={vr.empirical_lower:.12g} "
        f"margin={vr.margin:.3e} psd={psd_note}"
    )
    return EXIT_OK


def _bench_one(task: tuple, args: argparse.Namespace) -> dict:
    depth, width, seed, method = task
    row = {
        "depth": depth, "width": width, "seed": seed, "method": method,
        "c": "", "bound": "", "seconds": "", "certified": args.certified,
        "status": "ok",
    }
    try:
        net = generate_random(depth, width, width, width, seed,
                              activation=args.activation)
        t0 = time.perf_counter()
        if method == "product":
            report = product_bound(net, certified=args.certified)
        else:
            c = getattr(args, f"c_{method}", 1.0)
            cfg = StrategyConfig(method, c=c, certified=args.certified)
            report = run_recursion(net, cfg)
        row["seconds"] = f"{time.perf_counter() - t0:.6f}"
        row["bound"] = f"{report.bound:.12g}"
        row["c"] = "" if method == "product" else f"{report.config.c:g}"
    except LipboundError as exc:
        row["status"] = f"error: {exc}"
    return row


def cmd_bench(args: argparse.Namespace) -> int:
    depths = _parse_int_list(args.depths)
    widths = _parse_int_list(args.widths)
    seeds = _parse_int_list(args.seeds)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not depths or not widths or not seeds:
        print(f"bench: invalid grid or methods {bad}", file=sys.stderr)
        return EXIT_USAGE
    tasks = [
        (d, w, s, m) for d in depths for w in widths for s in seeds for m in methods
    ]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(lambda t: _bench_one(t, args), tasks))
    else:
        rows = [_bench_one(t, args) for t in tasks]
    rows.sort(key=lambda r: (r["depth"], r["width"], r["seed"], r["method"]))
    fields = ["depth", "width", "seed", "method", "c", "bound", "seconds",
              "certified", "status"]
    with open(args.output, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    manifest_path = Path(args.output).with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(_manifest("bench", args), indent=2) + "\n")
    n_ok = sum(1 for r in rows if r["status"] == "ok")
    print(f"wrote {args.output}: {n_ok}/{len(rows)} rows ok")
    return EXIT_OK if n_ok > 0 else 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "gen": cmd_gen,
        "compute": cmd_compute,
        "verify": cmd_verify,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except (ParseError, DimensionChainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DefinitenessLost as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEFINITENESS
    except AllInfeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationFailed as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
