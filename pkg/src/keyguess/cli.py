"""Command line front end: ``keyguess <command> [options]``.

Commands print CSV or JSON to stdout (or ``--out``).  Exit status is 0 on
success, 1 when a verification suite fails or a simulation hits its
doubling cap, and 2 for invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .cost import grover_queries, speedup
from .distributions import (AtomDistribution, DistributionError, ProductDistribution, _decode_number,
                            load_dist)
from .ranking import (DEFAULT_CLASS_BUDGET, BudgetExceeded, build_rank_table, core_set_size,
                      cumulative_mass, get_key, load_rank_table, rank_of_key, save_rank_table)
from .report import cost_report, dict_to_csv, entropy_rows, to_json
from .simulate import DoublingLimitExceeded, SimConfig, multi_key_guess, quantum_multi_key_guess, trace_csv
from .suites import SUITES, run_suite
from .sweeps import COLUMNS, PRESETS, SweepSpec, rows_to_csv, rows_to_json, run_sweep

log = logging.getLogger("keyguess")

_GLOBAL_DEFAULTS = {
    "dist": None,
    "seed": 0,
    "out": None,
    "format": None,
    "bounds_only": False,
    "quantum": False,
    "trace": False,
    "budget": DEFAULT_CLASS_BUDGET,
}


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    def default(name):
        return argparse.SUPPRESS if suppress else _GLOBAL_DEFAULTS[name]

    g = p.add_argument_group("global options")
    g.add_argument("--dist", default=default("dist"),
                   help="distribution literal as JSON, or a path to a JSON file")
    g.add_argument("--seed", type=int, default=default("seed"), help="64-bit RNG seed")
    g.add_argument("--out", default=default("out"), help="output path (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=default("format"),
                   help="output format (default: json; verify defaults to plain text)")
    g.add_argument("--bounds-only", action="store_true", default=default("bounds_only"),
                   help="fall back to Arikan bounds when the exact bracket is infeasible")
    g.add_argument("--quantum", action="store_true", default=default("quantum"),
                   help="simulate the Grover-based multi-key algorithm")
    g.add_argument("--trace", action="store_true", default=default("trace"),
                   help="include the per-phase trace of a simulation")
    g.add_argument("--budget", type=int, default=default("budget"),
                   help="maximum number of type classes in a rank table")


def _add_sweep_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("sweep options")
    g.add_argument("--preset", choices=sorted(PRESETS), help="named figure sweep")
    g.add_argument("--family", help="distribution family to sweep")
    g.add_argument("--axis", help="family parameter to vary")
    g.add_argument("--start", type=float)
    g.add_argument("--stop", type=float)
    g.add_argument("--steps", type=int)
    g.add_argument("--scale", choices=("linear", "log"))
    g.add_argument("--fixed", action="append", default=[], metavar="NAME=VALUE",
                   help="hold another family parameter fixed")
    g.add_argument("--columns", help=f"comma separated subset of {','.join(COLUMNS)}")
    g.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="keyguess",
        description="Entropy bounds and simulated cost of classical and quantum key guessing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def command(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        _add_globals(p, suppress=True)
        return p

    p = command("entropy", "Renyi, Shannon and min-entropy of a distribution")
    p.add_argument("--alpha", type=float, nargs="+", default=[0.5, 2.0 / 3.0])
    p.add_argument("-n", type=int, default=1, help="product power of the atom")
    p.add_argument("--sweep", action="store_true", help="sweep a family parameter instead")
    _add_sweep_args(p)

    p = command("speedup", "asymptotic and finite-size quantum speed-up")
    p.add_argument("-n", type=int, default=1)
    p.add_argument("--sweep", action="store_true")
    _add_sweep_args(p)

    p = command("cost", "bracket on the guessing moment plus Arikan bounds")
    p.add_argument("-n", type=int, default=1)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--cache", help="rank table cache file (read if present, else written)")

    p = command("simulate", "run the classical or quantum multi-key guessing simulator")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-m", type=int, required=True, help="number of keys")
    p.add_argument("-c", type=float, required=True, help="target fraction in (0, 1)")
    p.add_argument("--max-doublings", type=int)
    p.add_argument("--skip-found", action="store_true",
                   help="do not re-run searches for keys already found")

    p = command("rank", "convert between ranks and keys")
    p.add_argument("-n", type=int, default=1)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--rank", type=int, help="1-based rank to unrank")
    grp.add_argument("--key", help="comma separated key symbols to rank")
    grp.add_argument("--mass", type=int, metavar="T", help="log2 mass of the T most likely keys")
    grp.add_argument("--core-delta", type=float, metavar="DELTA", help="core set size")
    grp.add_argument("--grover", type=int, metavar="T", help="Grover query count for T items")
    p.add_argument("--cache", help="rank table cache file")

    p = command("verify", "run a seeded property suite")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])

    p = command("sweep", "evaluate entropy or speed-up columns along a family parameter")
    _add_sweep_args(p)
    return parser


# -- helpers ------------------------------------------------------------------


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need_dist(args):
    if args.dist is None:
        raise DistributionError("--dist is required for this command")
    return load_dist(args.dist)


def _product(args):
    d = _need_dist(args)
    n = getattr(args, "n", 1)
    if n == 1 and not isinstance(d, AtomDistribution):
        return d
    if not isinstance(d, AtomDistribution):
        raise DistributionError("only atom distributions can be raised to a power n > 1")
    return ProductDistribution(d, n)


def _table(args, d: ProductDistribution):
    cache = getattr(args, "cache", None)
    if cache:
        try:
            return load_rank_table(cache, expect=d)
        except FileNotFoundError:
            tbl = build_rank_table(d, args.budget)
            save_rank_table(tbl, cache)
            return tbl
    return build_rank_table(d, args.budget)


def _parse_number(v: str):
    v = v.strip()
    if v.lstrip("-").isdigit():
        return int(v)
    return _decode_number(v)


def sweep_spec_from_args(args, default_preset: str | None = None) -> SweepSpec:
    base = PRESETS.get(args.preset or default_preset) if (args.preset or default_preset) else None
    if base is not None and args.family and args.family != base.family:
        base = None
    if base is None and not (args.family and args.axis):
        raise DistributionError("a sweep needs --preset, or --family and --axis")
    fixed = dict(base.fixed) if base else {}
    for item in args.fixed:
        name, sep, value = item.partition("=")
        if not sep:
            raise DistributionError(f"--fixed expects NAME=VALUE, got {item!r}")
        fixed[name] = _parse_number(value)
    columns = tuple(args.columns.split(",")) if args.columns else (base.columns if base else None)
    kwargs = dict(
        family=args.family or base.family,
        axis=args.axis or base.axis,
        start=args.start if args.start is not None else (base.start if base else None),
        stop=args.stop if args.stop is not None else (base.stop if base else None),
        fixed=fixed,
        n=getattr(args, "n", 1),
    )
    if kwargs["start"] is None or kwargs["stop"] is None:
        raise DistributionError("a custom sweep needs --start and --stop")
    if args.steps is not None or base:
        kwargs["steps"] = args.steps if args.steps is not None else base.steps
    if columns:
        kwargs["columns"] = columns
    if args.scale or base:
        kwargs["scale"] = args.scale or base.scale
    return SweepSpec(**kwargs)


def _sweep_output(args, spec: SweepSpec) -> str:
    rows = run_sweep(spec, jobs=args.jobs)
    if args.format == "json":
        return rows_to_json(rows)
    return rows_to_csv(rows, [spec.axis, *spec.columns])


# -- commands -----------------------------------------------------------------


def cmd_entropy(args) -> int:
    if args.sweep:
        spec = sweep_spec_from_args(args, default_preset="fig1")
        _emit(args, _sweep_output(args, spec))
        return 0
    rows = entropy_rows(_need_dist(args), args.alpha, args.n)
    if args.format == "json":
        _emit(args, to_json({r["measure"]: r["bits"] for r in rows}))
    else:
        _emit(args, rows_to_csv(rows, ["measure", "bits"]))
    return 0


def cmd_speedup(args) -> int:
    if args.sweep or args.preset or args.family:
        _emit(args, _sweep_output(args, sweep_spec_from_args(args)))
        return 0
    rep = speedup(_product(args))
    if rep.lower_bound_vacuous:
        log.warning("finite-size bound is not positive for this key space size")
    doc = rep.to_dict()
    _emit(args, to_json(doc) if args.format == "json" else dict_to_csv(doc))
    return 0


def cmd_cost(args) -> int:
    d = _need_dist(args)
    table = None
    if args.cache and isinstance(d, AtomDistribution):
        table = _table(args, ProductDistribution(d, args.n))
    rep, warning = cost_report(d, args.n, args.rho, budget=args.budget,
                               bounds_only=args.bounds_only, table=table)
    if warning:
        log.warning(warning)
    doc = rep.to_dict()
    _emit(args, to_json(doc) if args.format == "json" else dict_to_csv(doc))
    return 0


def cmd_simulate(args) -> int:
    d = _product(args)
    if not isinstance(d, ProductDistribution):
        d = ProductDistribution(d, 1) if isinstance(d, AtomDistribution) else d
    if not isinstance(d, ProductDistribution):
        raise DistributionError("simulation needs a product distribution (an atom and -n)")
    cfg = SimConfig(seed=args.seed, m=args.m, c=args.c, max_doublings=args.max_doublings,
                    skip_found=args.skip_found)
    run = quantum_multi_key_guess if args.quantum else multi_key_guess
    try:
        outcome = run(d, cfg)
    except DoublingLimitExceeded as exc:
        print(f"keyguess: {exc}", file=sys.stderr)
        return 1
    if args.format == "csv":
        _emit(args, trace_csv(outcome) if args.trace else dict_to_csv(outcome.to_dict()))
    else:
        _emit(args, to_json(outcome.to_dict(trace=args.trace)))
    return 0


def cmd_rank(args) -> int:
    d = _product(args)
    if not isinstance(d, ProductDistribution):
        d = ProductDistribution(d, 1)
    if args.grover is not None:
        doc = {"t": args.grover, "queries": grover_queries(args.grover)}
    elif args.core_delta is not None:
        doc = {"delta": args.core_delta, "core_set_size": core_set_size(_table(args, d), args.core_delta)}
    else:
        tbl = _table(args, d)
        if args.rank is not None:
            key = get_key(tbl, args.rank)
            doc = {"rank": args.rank, "key": list(key), "log2_prob": d.log_prob(key)}
        elif args.key is not None:
            key = tuple(int(s) for s in args.key.split(","))
            doc = {"rank": rank_of_key(tbl, key), "key": list(key), "log2_prob": d.log_prob(key)}
        else:
            doc = {"t": args.mass, "log2_mass": cumulative_mass(tbl, args.mass)}
    if args.format == "json":
        # ranks exceed 2**53 quickly; keep them exact
        _emit(args, to_json(doc))
    else:
        flat = {k: (";".join(map(str, v)) if isinstance(v, list) else v) for k, v in doc.items()}
        _emit(args, dict_to_csv(flat))
    return 0


def cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    chunks = []
    for name in names:
        rep = run_suite(name, args.seed)
        ok &= rep.passed
        if args.format == "json":
            chunks.append({"suite": rep.name, "seed": rep.seed, "passed": rep.passed,
                           "checks": [c.__dict__ for c in rep.checks]})
        else:
            chunks.append(rep.render())
    _emit(args, to_json(chunks) if args.format == "json" else "".join(chunks))
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    spec = sweep_spec_from_args(args)
    _emit(args, _sweep_output(args, spec))
    return 0


_COMMANDS = {
    "entropy": cmd_entropy,
    "speedup": cmd_speedup,
    "cost": cmd_cost,
    "simulate": cmd_simulate,
    "rank": cmd_rank,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None and args.command != "verify":
        args.format = "json"
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="keyguess: %(levelname)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (DistributionError, BudgetExceeded, ValueError, IndexError, KeyError) as exc:
        print(f"keyguess: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
