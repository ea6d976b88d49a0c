"""Command-line entry point: ``plgraph {generate,params,rho,uniformity,bench}``."""

from __future__ import annotations

import argparse
import csv
import io
import statistics
import sys
import time

import numpy as np

from . import degree_model as dm
from .light_stage import compute_rho_table, rho_extended
from .oracle import TooFewSamples, TooLarge, enumerate_simple_graphs, graph_key, uniformity_test
from .pairing import Rng
from .sampler import BudgetExceeded, RunStats, Sampler, sample_batch

EXIT_IO, EXIT_VALIDATION, EXIT_DELTA, EXIT_BUDGET = 1, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--degrees", metavar="PATH")
    common.add_argument("--gamma", type=float)
    common.add_argument("--K", type=float, default=1.0)
    common.add_argument("--delta", type=float)
    common.add_argument("--mode", choices=("simple", "pld-star", "pld-exact"), default="pld-star")
    common.add_argument("--samples", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--stats", metavar="PATH")
    common.add_argument("--max-restarts", type=int, default=10 ** 6)
    common.add_argument("--override-unsafe", action="store_true")

    parser = argparse.ArgumentParser(prog="plgraph", description="Uniform sampling of graphs with a power-law degree sequence.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="sample graphs and write edge lists")
    sub.add_parser("params", parents=[common], help="print derived parameters")
    sub.add_parser("rho", parents=[common], help="dump the phase-5 type-selection table")
    sub.add_parser("uniformity", parents=[common], help="chi-square test against exhaustive enumeration")
    bench = sub.add_parser("bench", parents=[common], help="wall time on synthetic power-law sequences")
    bench.add_argument("sizes", nargs="*", type=int, default=[10 ** 4, 10 ** 5, 10 ** 6])
    return parser


class _Usage(Exception):
    pass


def _mode(args) -> str:
    return args.mode.replace("-", "_")


def _degrees(args):
    if not args.degrees:
        raise _Usage("--degrees is required")
    return dm.load_and_validate(dm.read_degree_file(args.degrees))


def _need_gamma(args):
    if args.gamma is None:
        raise _Usage("--gamma is required")
    return args.gamma


def _params(args, d):
    return dm.derive_params(d, _need_gamma(args), args.K, args.delta, args.override_unsafe)


def _sampler(args, d) -> Sampler:
    mode = _mode(args)
    gamma = None if mode == "simple" else _need_gamma(args)
    return Sampler(d, gamma, args.K, mode, delta=args.delta, override=args.override_unsafe,
                   max_restarts=args.max_restarts)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_stats(stats: RunStats, path: str | None) -> None:
    if path:
        # wall time would make repeated runs differ byte-wise, so it is not recorded
        stats.wall_time = None
        with open(path, "w") as fh:
            fh.write(stats.to_json() + "\n")


def cmd_generate(args) -> int:
    d = _degrees(args)
    if args.samples < 1:
        raise _Usage("--samples must be >= 1")
    s = _sampler(args, d)
    graphs, stats = sample_batch(d, N=args.samples, master_seed=args.seed, sampler=s)
    buf = io.StringIO()
    for t, edges in enumerate(graphs):
        if t:
            buf.write("---\n")
        buf.write(f"# {d.n} {len(edges)} {args.seed}\n")
        for u, v in edges:
            buf.write(f"{u} {v}\n")
    _emit(buf.getvalue(), args.out)
    _write_stats(stats, args.stats)
    return 0


def cmd_params(args) -> int:
    d = _degrees(args)
    p = _params(args, d)
    w = dm.delta_window(p.gamma) if 2.5 < p.gamma < 3 else None
    ok, bad = dm.plib_check(d, p.gamma, p.K)
    lines = [f"n {d.n}", f"Delta {d.Delta}"]
    for k in dm.MOMENT_ORDERS:
        lines.append(f"M_{k} {p.M[k]}  H_{k} {p.H[k]}  L_{k} {p.L[k]}")
    lines += [
        f"delta_window {w.lo:.10g} {w.hi:.10g}" if w else "delta_window n/a",
        f"delta {p.delta:.10g}",
        f"h {p.h}",
        f"eta {p.eta:.10g}",
    ]
    lines += [f"U_{k} {p.U[k]:.10g}" for k in range(1, 5)]
    lines += [
        f"B_L {p.B_L:.10g}", f"B_D {p.B_D:.10g}", f"B_T {p.B_T:.10g}",
        f"xi_raw {p.xi_raw:.10g}", f"xi_eff {p.xi_eff:.10g}",
        f"plib_check {'pass' if ok else f'fail at i={bad}'}",
    ]
    lines += [f"note {t}" for t in p.notes]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_rho(args) -> int:
    d = _degrees(args)
    p = _params(args, d)
    table = compute_rho_table(p)
    rows = ["i x rho_I rho_III"]
    for i in range(table.i1 + 1):
        rows.append(f"{i} {table.x[i]:.17g} {table.rho_I[i]:.17g} {table.rho_III[i]:.17g}")
    rx, r3 = table.residuals(p)
    extra = [f"# xi_eff {table.xi_eff:.17g}", f"# max residual x {rx:.3g} rho_III {r3:.3g}"]
    if table.clamped:
        extra.append(f"# classes with nonpositive doublet lower bound: {len(table.clamped)}")
    if table.fallback:
        extra.append(f"# classes with type III disabled: {len(table.fallback)}")
    masses = [sum(rho_extended(table, p, t, i) for t in ("IV", "V", "VI", "VII")) for i in range(1, table.i1)]
    finite = [m for m in masses if m != float("inf")]
    if finite:
        extra.append(f"# max extended-type mass {max(finite):.6g}")
    if len(finite) < len(masses):
        extra.append(f"# extended-type mass undefined in {len(masses) - len(finite)} classes (nonpositive pre-state bound)")
    _emit("\n".join(rows + extra) + "\n", args.out)
    return 0


def cmd_uniformity(args) -> int:
    d = _degrees(args)
    universe = enumerate_simple_graphs(d)
    s = _sampler(args, d)
    rng = Rng.from_seed(args.seed)
    stats = RunStats()
    keys = [graph_key(s.sample(rng, stats)) for _ in range(args.samples)]
    rep = uniformity_test(keys, universe)
    _emit(f"graphs {len(universe.graphs)}\nsamples {rep.n}\nchi2 {rep.chi2:.6g}\n"
          f"dof {rep.dof}\np {rep.p:.6g}\ntv {rep.tv:.6g}\nrestarts {stats.restarts}\n", args.out)
    _write_stats(stats, args.stats)
    return 0


def cmd_bench(args) -> int:
    gamma = _need_gamma(args)
    mode = _mode(args)
    runs = max(args.samples, 1)
    rows = []
    for n in args.sizes:
        seed_rng = np.random.default_rng([args.seed, n])
        for r in range(runs):
            degrees = dm.synthetic_plib(n, gamma, seed_rng)
            stats = RunStats()
            t0 = time.perf_counter()
            s = Sampler(degrees, None if mode == "simple" else gamma, args.K, mode, delta=args.delta,
                        override=args.override_unsafe, max_restarts=args.max_restarts)
            s.sample(Rng.from_seed(args.seed, r), stats)
            rows.append((n, time.perf_counter() - t0, stats.restarts))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "wall_time", "restarts"])
            w.writerows(rows)
    for n in args.sizes:
        times = [t for m, t, _ in rows if m == n]
        print(f"n={n} runs={len(times)} median_wall_time={statistics.median(times):.4f}s")
    return 0


COMMANDS = {"generate": cmd_generate, "params": cmd_params, "rho": cmd_rho,
            "uniformity": cmd_uniformity, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except dm.EmptyDeltaWindowError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DELTA
    except BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (_Usage, ValueError, TooLarge, TooFewSamples) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
