"""Command-line entry point: build catalogs, make images, identify, benchmark.

Exit status: 0 success, 1 usage error, 2 data or build error.  Any flag can
be pre-seeded from a key=value config file via ``--config``; explicit flags
win over file values.  The STARID_CATALOG environment variable supplies a
default catalog directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import benchmark as bench
from . import catalog as cat
from . import identification as ident
from . import synthesis as synth

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_EXPERIMENTS = ("query", "pivot", "verify", "e2e-gauss", "e2e-spike", "tune")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise cat.CatalogError(f"cannot read config file {path}: {exc}") from exc
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _column(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def _build_parser():
    parser = _Parser(prog="starid", description=__doc__)
    parser.add_argument("--config", help="key=value file pre-seeding any flag")
    sub = parser.add_subparsers(dest="command")
    subparsers = {}

    p = sub.add_parser("build-catalog", help="build the indexed feature catalogs")
    p.add_argument("--source", required=True, help="delimited star table")
    p.add_argument("--mag-cutoff", type=float, default=6.0)
    p.add_argument("--fov", type=float, default=20.0,
                   help="pair/trio separation bound psi, degrees")
    p.add_argument("--out", required=True)
    p.add_argument("--moment-depth", type=int, default=3)
    p.add_argument("--delimiter", default=",",
                   help="source delimiter; 'ws' for any whitespace")
    p.add_argument("--id-col", type=_column, default="id")
    p.add_argument("--ra-col", type=_column, default="ra")
    p.add_argument("--dec-col", type=_column, default="dec")
    p.add_argument("--mag-col", type=_column, default="mag")
    p.add_argument("--overwrite", action="store_true")

    p = sub.add_parser("gen-images", help="generate ground-truth labeled images")
    p.add_argument("--catalog", default=os.environ.get("STARID_CATALOG"))
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--fov", type=float, default=20.0)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--spikes", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-stars", type=int, default=4)
    p.add_argument("--out", required=True)

    p = sub.add_parser("identify", help="run one method on one image")
    p.add_argument("--method", required=True, choices=ident.METHOD_TAGS)
    p.add_argument("--catalog", default=os.environ.get("STARID_CATALOG"))
    p.add_argument("--image", required=True)
    p.add_argument("--sigma-theta", type=float)
    p.add_argument("--sigma-phi", type=float)
    p.add_argument("--sigma-a", type=float)
    p.add_argument("--sigma-tau", type=float)
    p.add_argument("--sigma-o", type=float)
    p.add_argument("--access-limit", type=int, default=500)
    p.add_argument("--no-verification", action="store_true")
    p.add_argument("--out", help="also write the result as key=value lines")

    p = sub.add_parser("tune-sigma", help="grid-search query deviations")
    p.add_argument("--method", required=True, choices=ident.METHOD_TAGS)
    p.add_argument("--catalog", default=os.environ.get("STARID_CATALOG"))
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="run one of the paper-style experiments")
    p.add_argument("--experiment", required=True, choices=_EXPERIMENTS)
    p.add_argument("--methods", default="ang,int,sph,pln,pyr,com")
    p.add_argument("--catalog", default=os.environ.get("STARID_CATALOG"))
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-stars", type=int, default=4)
    p.add_argument("--rho-grid", default=None,
                   help="comma-separated noise levels for e2e-gauss/verify")
    p.add_argument("--out", required=True)
    p.add_argument("--plots", action="store_true")

    p = sub.add_parser("report", help="re-aggregate result CSVs and plot")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--plots", action="store_true")

    for name, action in sub.choices.items():
        subparsers[name] = action
    return parser, subparsers


def _require_catalog(args) -> cat.CatalogStore:
    if not args.catalog:
        raise cat.CatalogError("no catalog directory (flag --catalog or STARID_CATALOG)")
    return cat.CatalogStore(args.catalog)


def _cmd_build_catalog(args) -> int:
    delimiter = None if args.delimiter == "ws" else args.delimiter
    stats: dict = {}
    stars = cat.parse_source(args.source, args.mag_cutoff, delimiter=delimiter,
                             id_col=args.id_col, ra_col=args.ra_col,
                             dec_col=args.dec_col, mag_col=args.mag_col,
                             stats=stats)
    if not stars:
        raise cat.CatalogError(f"no stars below magnitude {args.mag_cutoff} in {args.source}")
    out = cat.build_store(stars, args.out, psi_max=args.fov,
                          moment_depth=args.moment_depth,
                          magnitude_cutoff=args.mag_cutoff,
                          source_path=args.source, overwrite=args.overwrite)
    manifest = cat.read_manifest(out)
    print(f"catalog written to {out}")
    for key in ("n_stars", "n_pairs", "n_trios", "n_trio_perms"):
        print(f"{key} {manifest[key]}")
    if stats.get("malformed"):
        print(f"warnings {stats['malformed']} malformed rows skipped")
    return EXIT_OK


def _cmd_gen_images(args) -> int:
    store = _require_catalog(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index in range(args.count):
        seed = bench.trial_seed(args.seed, index)
        image = bench.make_trial_image(store, seed, psi=args.fov, rho=args.rho,
                                       omega=args.spikes, min_stars=args.min_stars)
        path = out_dir / f"image_{index:04d}.txt"
        synth.save_image(image, path)
        print(f"{path} stars {image.star_count}")
    return EXIT_OK


def _cmd_identify(args) -> int:
    store = _require_catalog(args)
    try:
        image = synth.load_image(args.image)
    except (OSError, ValueError, KeyError) as exc:
        raise cat.CatalogError(f"cannot read image {args.image}: {exc}") from exc
    cfg = ident.default_config(args.method)
    for name in ("sigma_theta", "sigma_phi", "sigma_a", "sigma_tau", "sigma_o"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    cfg.access_limit = args.access_limit
    cfg.verification = not args.no_verification
    result = ident.identify(args.method, image, store, cfg)
    lines = [f"outcome {result.outcome}"]
    for image_index in sorted(result.mapping):
        lines.append(f"map {image_index} -> {result.mapping[image_index]}")
    lines.append(f"accesses_query {result.accesses_query}")
    lines.append(f"accesses_total {result.accesses_total}")
    lines.append(f"elapsed_ms {result.elapsed_ms:.3f}")
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_tune_sigma(args) -> int:
    store = _require_catalog(args)
    chosen, _ = bench.tune_sigma(args.method, store, trials=args.trials,
                                 master_seed=args.seed)
    for name, value in chosen.items():
        print(f"{name} {value:g}")
    return EXIT_OK


def _parse_rho_grid(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _cmd_bench(args) -> int:
    from . import report as rep

    store = _require_catalog(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    for method in methods:
        if method not in ident.METHOD_TAGS:
            raise _UsageError(f"unknown method {method!r}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.experiment == "query":
        stats = bench.run_query_experiment(methods, store, args.trials, args.seed,
                                           min_stars=args.min_stars)
        rep.emit_report(out_dir, query=stats, plots=args.plots)
        for method in methods:
            s = stats[method]
            print(f"{method} f {s.f:.4f} S {s.singles} mean_ms {s.mean_ms:.3f}")
    elif args.experiment == "pivot":
        triangle = tuple(m for m in methods if m in ("sph", "pln", "com"))
        stats = bench.run_pivot_experiment(store, args.trials, args.seed,
                                           methods=triangle or ("sph", "pln", "com"),
                                           min_stars=args.min_stars)
        rep.emit_report(out_dir, pivot=stats, plots=args.plots)
        for method, s in sorted(stats.items()):
            print(f"{method} n {s.n} mean_accesses {s.mean_accesses:.2f}")
    elif args.experiment == "verify":
        rhos = _parse_rho_grid(args.rho_grid) if args.rho_grid else (0.0, 1e-6, 1e-3)
        records = bench.run_verification_ablation(store, args.trials, args.seed,
                                                  rhos=rhos, min_stars=args.min_stars)
        rep.emit_report(out_dir, verify=records, plots=args.plots)
        for key, row in bench.aggregate(records, keys=("method", "rho")).items():
            print(f"{key[0]} rho {key[1]:g} accuracy {row['h_accuracy']:.4f}")
    elif args.experiment == "e2e-gauss":
        rhos = _parse_rho_grid(args.rho_grid) if args.rho_grid \
            else (0.0,) + bench.GAUSSIAN_RHO_GRID
        grid = [(rho, 0) for rho in rhos]
        records = bench.run_end_to_end(methods, store, grid, args.trials, args.seed,
                                       min_stars=args.min_stars)
        rep.emit_report(out_dir, e2e_gauss=records, plots=args.plots)
        for method in methods:
            pts = [(rho, bench.accuracy(records, method=method, rho=rho))
                   for rho, _ in grid if rho > 0]
            fit = bench.fit_trend(pts, model="log")
            if fit.no_decay:
                print(f"{method} trend no-decay")
            else:
                print(f"{method} trend c {fit.c:.5f} d {fit.d:.5f} "
                      f"rho_star {fit.rho_star:g}")
    elif args.experiment == "e2e-spike":
        grid = [(0.0, w) for w in (0,) + bench.SPIKE_OMEGA_GRID]
        records = bench.run_end_to_end(methods, store, grid, args.trials, args.seed,
                                       min_stars=args.min_stars)
        rep.emit_report(out_dir, e2e_spike=records, plots=args.plots)
        for (method, _, omega), row in bench.aggregate(records).items():
            print(f"{method} omega {omega} accuracy {row['h_accuracy']:.4f}")
    elif args.experiment == "tune":
        rows = []
        for method in methods:
            chosen, _ = bench.tune_sigma(method, store, trials=min(args.trials, 30),
                                         master_seed=args.seed)
            rows.append((method, chosen))
            text = " ".join(f"{k} {v:g}" for k, v in chosen.items())
            print(f"{method} {text}")
        with (out_dir / "tune.csv").open("w", encoding="utf-8") as handle:
            handle.write("method,param,value\n")
            for method, chosen in rows:
                for key, value in chosen.items():
                    handle.write(f"{method},{key},{value!r}\n")
    return EXIT_OK


def _cmd_report(args) -> int:
    from . import report as rep

    in_dir = Path(args.in_dir)
    if not in_dir.is_dir():
        raise cat.CatalogError(f"no such result directory: {in_dir}")
    found = False
    for name in ("e2e_gauss", "e2e_spike", "verify"):
        path = in_dir / f"{name}.csv"
        if not path.exists():
            continue
        found = True
        records = bench.read_records_csv(path)
        rep.write_aggregates(records, in_dir / f"aggregates_{name}.csv")
        if args.plots and records:
            plotter = {"e2e_gauss": rep.plot_gaussian_accuracy,
                       "e2e_spike": rep.plot_spike_accuracy,
                       "verify": rep.plot_verification}[name]
            plotter(records, in_dir / f"{name}.png")
        for key, row in bench.aggregate(records).items():
            print(f"{name} {key[0]} rho {key[1]:g} omega {key[2]} "
                  f"n {row['n']} accuracy {row['h_accuracy']:.4f}")
    pivot_path = in_dir / "pivot.csv"
    if pivot_path.exists():
        found = True
        stats = rep.read_pivot_stats(pivot_path)
        if args.plots:
            rep.plot_pivot_accesses(stats, in_dir / "pivot_accesses.png")
        for method, s in sorted(stats.items()):
            print(f"pivot {method} n {s.n} mean_accesses {s.mean_accesses:.2f}")
    query_path = in_dir / "query.csv"
    if query_path.exists():
        found = True
        for method, s in sorted(rep.read_query_stats(query_path).items()):
            print(f"query {method} f {s.f:.4f} S {s.singles}")
    if not found:
        raise cat.CatalogError(f"no result CSVs found in {in_dir}")
    return EXIT_OK


_COMMANDS = {
    "build-catalog": _cmd_build_catalog,
    "gen-images": _cmd_gen_images,
    "identify": _cmd_identify,
    "tune-sigma": _cmd_tune_sigma,
    "bench": _cmd_bench,
    "report": _cmd_report,
}


def dispatch(argv=None) -> int:
    """Parse argv, run the subcommand, and return the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    try:
        # --config pre-seeds parser defaults so explicit flags still win.
        if "--config" in argv:
            config_path = argv[argv.index("--config") + 1]
            defaults = _load_config(config_path)
            for subparser in subparsers.values():
                for action in subparser._actions:
                    if action.dest not in defaults:
                        continue
                    raw = defaults[action.dest]
                    if isinstance(action, argparse._StoreTrueAction):
                        value = raw.lower() in ("1", "true", "yes", "on")
                    elif action.type is not None:
                        value = action.type(raw)
                    else:
                        value = raw
                    subparser.set_defaults(**{action.dest: value})
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (cat.CatalogError, synth.EmptyFieldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except IndexError:
        print("error: --config needs a file argument", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
