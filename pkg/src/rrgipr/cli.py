"""Command-line entry point: ``rrgipr <subcommand> ...``.

Exit status is 0 on success, 1 when a verification or a cell fails, and 2
for invalid input or configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, FigureDataError, InvalidSpecError, ResourceLimitError
from .figures import FIGURES, emit_figure_data
from .graphgen import GraphSpec, RegularGraph, enumerate_connected_regular, generate_regular
from .harness import _csv_text, load_config, load_record, run_ensemble
from .iprstats import graph_ipr_summary
from .spectra import eigendecompose, laplacian, zero_mode_index
from .verify import DEFAULT_MC_SAMPLES, verify_analytics

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def cmd_generate(args) -> int:
    g = generate_regular(GraphSpec(args.n, args.z, args.seed))
    _emit(g.to_text(), args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if args.graph:
        g = RegularGraph.from_text(Path(args.graph).read_text())
    elif args.n is not None and args.z is not None:
        g = generate_regular(GraphSpec(args.n, args.z, args.seed))
    else:
        raise ConfigError("spectrum needs --graph FILE or both --n and --z")
    d = eigendecompose(laplacian(g), method=args.method)
    zero = zero_mode_index(d)
    iprs = iter(graph_ipr_summary(d, g.z).mode_iprs)
    rows = [(k, ev, "nan" if k == zero else next(iprs)) for k, ev in enumerate(d.eigenvalues)]
    _emit(_csv_text(("mode_index", "eigenvalue", "ipr"), rows), args.out)
    return EXIT_OK


def _load_cfg(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg.validate()


def cmd_ensemble(args) -> int:
    record = run_ensemble(_load_cfg(args))
    status = EXIT_OK
    for c in record.cells:
        if c.ok:
            s = c.stats
            print(f"{c.kind} n={c.n} z={c.z} N_G={s.graph_count} mean_ipr={s.mean_ipr:.6f} "
                  f"mu1={s.mu1:.6f} delta1={s.delta1:.4g} mean_var={s.mean_var:.6f} "
                  f"mu2={s.mu2:.6f} delta2={s.delta2:.4g}")
        else:
            print(f"{c.kind} n={c.n} z={c.z} FAILED: {c.error}")
            status = EXIT_FAIL
    if record.verification is not None and not record.verification.passed:
        status = EXIT_FAIL
    print(f"output written to {record.config.out_dir}")
    return status


def cmd_sphere_verify(args) -> int:
    seed = 0 if args.seed is None else args.seed
    report = verify_analytics(_int_list(args.n), seed=seed, mc_samples=args.samples)
    sys.stdout.write(report.to_text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sphere_verify.txt").write_text(report.to_text())
        (out / "sphere_verify.json").write_text(report.to_json())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_enumerate(args) -> int:
    result = enumerate_connected_regular(args.n, args.z, max_vertices=args.max_vertices)
    print(f"n={args.n} z={args.z} connected graphs: {result.count}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"graphs_n{args.n}_z{args.z}.txt").write_text("".join(g.to_text() for g in result.graphs))
    return EXIT_OK


def cmd_figure_data(args) -> int:
    wanted = FIGURES if "all" in args.figure else args.figure
    for f in wanted:
        if str(f) not in map(str, FIGURES):
            raise ConfigError(f"unknown figure {f!r}; available: {', '.join(map(str, FIGURES))}")
    if args.config:
        record = run_ensemble(_load_cfg(args))
    elif args.out:
        record = load_record(args.out)
    else:
        raise ConfigError("figure-data needs --out DIR (an existing run) or --config PATH")
    out = Path(record.config.out_dir if args.config else args.out)
    status = EXIT_OK
    for f in wanted:
        try:
            for path in emit_figure_data(record, f, out):
                print(path)
        except FigureDataError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = EXIT_FAIL
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rrgipr", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=False):
        if config:
            sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--workers", type=int, metavar="K")
        sp.add_argument("--out", metavar="DIR")

    sp = sub.add_parser("generate", help="sample one random regular graph")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--z", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_generate, seed=0)

    sp = sub.add_parser("spectrum", help="Laplacian spectrum and per-mode IPR of one graph")
    sp.add_argument("--graph", metavar="FILE")
    sp.add_argument("--n", type=int)
    sp.add_argument("--z", type=int)
    sp.add_argument("--method", choices=("ql", "dc", "native"), default="ql")
    common(sp)
    sp.set_defaults(func=cmd_spectrum, seed=0)

    sp = sub.add_parser("ensemble", help="run the cells of a configuration file")
    common(sp, config=True)
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("sphere-verify", help="check the sphere-average identities")
    sp.add_argument("--n", default="3-8", help="sizes, e.g. 3-8 or 5,10,20")
    sp.add_argument("--samples", type=int, default=DEFAULT_MC_SAMPLES)
    common(sp)
    sp.set_defaults(func=cmd_sphere_verify)

    sp = sub.add_parser("enumerate", help="list all connected regular graphs up to isomorphism")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--z", type=int, required=True)
    sp.add_argument("--max-vertices", type=int, default=16)
    common(sp)
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("figure-data", help="write the tables behind a figure")
    sp.add_argument("--figure", action="append", required=True,
                    help=f"one of {', '.join(map(str, FIGURES))} or 'all'; repeatable")
    common(sp, config=True)
    sp.set_defaults(func=cmd_figure_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "config", None) is None and args.command == "ensemble":
        print("error: ensemble needs --config PATH", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, InvalidSpecError, ResourceLimitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
