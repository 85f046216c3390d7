"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 validation error (bad config,
model or expression, or a failed equivalence check), 3 runtime error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io as rio
from . import svg
from .config import load_config
from .errors import CTMCError, ValidationError
from .model import ModelGraph
from .rng import UniformStream, check_seed, draw_seed_vector, draw_seeds
from .simulate import RepresentationKind, sample_path, simulate
from .study import extinction_time, functional_report, run_functional_study, run_scalar_study, welch_test

REPRESENTATIONS = [k.value for k in RepresentationKind]
PLOT_KINDS = ("boxplot", "dynamical", "fan", "extinction")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, study: bool = True):
    p.add_argument("--config", default="seiarhd", help="YAML config path or bundled name (sir, seiarhd)")
    p.add_argument("--seed", type=int, help="master seed in [1, 10^9]")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument(
        "--representation", action="append", choices=REPRESENTATIONS, help="simulator representation (repeatable)"
    )
    if study:
        p.add_argument("--n", type=int, help="pick-freeze design size")
        p.add_argument("--reps", type=int, help="number of replications")
        p.add_argument("--paper-scale", action="store_true", help="use the config's paper-scale n and reps")
        p.add_argument("--study", help="study block name in the config")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctmcgsa", description="Sobol sensitivity analysis of stochastic compartmental models")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate trajectories at the nominal parameters")
    _common(p, study=False)
    p.add_argument("--t-end", type=float, default=math.inf, help="time horizon (default: until absorption)")
    p.add_argument("--runs", type=int, default=1, help="number of independent runs")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE", help="override a model parameter")
    p.add_argument("--grid-end", type=float, default=60.0, help="end of the sampling grid for multi-run output")
    p.add_argument("--points", type=int, default=121, help="sampling grid size for multi-run output")

    p = sub.add_parser("validate", help="cross-simulator equivalence suite")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("gsa-scalar", help="replicated Sobol indices of a scalar QoI")
    _common(p)
    p = sub.add_parser("gsa-functional", help="dynamical and aggregated Sobol indices of a curve QoI")
    _common(p)

    p = sub.add_parser("compare-reps", help="Welch tests on total-index numerators of two index CSVs")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--attr", choices=("numerator_total", "total", "first_order"), default="numerator_total")
    p.add_argument("--out", help="output CSV (default: <out-dir>/welch_<first>_vs_<second>.csv)")
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("plot", help="SVG charts from result CSVs")
    p.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p.add_argument("inputs", nargs="+", help="result CSV files")
    p.add_argument("--out-dir", default=".")
    return parser


# ---------------------------------------------------------------- commands


def _representations(args, default):
    return tuple(RepresentationKind.parse(r) for r in args.representation) if args.representation else default


def _theta(model: ModelGraph, cfg, overrides) -> np.ndarray:
    theta = cfg.inputs.nominal_theta()
    for item in overrides:
        name, sep, value = item.partition("=")
        if not sep or name not in theta:
            raise ValidationError(f"bad --param {item!r} (known: {', '.join(theta)})")
        try:
            theta[name] = float(value)
        except ValueError:
            raise ValidationError(f"bad --param value {value!r}") from None
    return model.parameter_vector(theta)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    model = cfg.model
    out = Path(args.out_dir)
    seed = check_seed(args.seed if args.seed is not None else 1)
    if args.runs < 1:
        raise ValidationError("--runs must be >= 1")
    theta = _theta(model, cfg, args.param)
    stop = None
    scalar = [s for s in cfg.studies.values() if s.qoi.is_scalar]
    if scalar:
        stop = scalar[0].qoi.compartments
    for kind in _representations(args, (RepresentationKind.MNRM,)):
        master = UniformStream(seed)
        if args.runs == 1:
            traj = simulate(model, kind, theta, draw_seed_vector(master, kind.n_streams(model)), args.t_end)
            path = out / f"trajectory_{kind.value}.csv"
            out.mkdir(parents=True, exist_ok=True)
            path.write_text(traj.to_csv())
            print(f"wrote {path} ({traj.n_jumps} jumps, {traj.terminal_reason})")
            continue
        seeds = draw_seeds(master, (args.runs, kind.n_streams(model)))
        rows, paths = [], []
        grid = np.linspace(0.0, args.grid_end, args.points)
        for r in range(args.runs):
            traj = simulate(model, kind, theta, seeds[r], args.t_end)
            ext = float("nan")
            if stop is not None:
                try:
                    ext = extinction_time(traj, stop)
                except CTMCError:
                    ext = math.inf
            rows.append([r, ext, traj.n_jumps, *traj.final_state.tolist()])
            for t, state in zip(grid, sample_path(traj, grid)):
                paths.append([r, float(t), *state.tolist()])
        rio.write_table(out / f"runs_{kind.value}.csv", ["run", "extinction_time", "n_jumps", *model.compartments], rows)
        rio.write_table(out / f"paths_{kind.value}.csv", ["run", "time", *model.compartments], paths)
        print(f"wrote {out / f'runs_{kind.value}.csv'} and paths_{kind.value}.csv ({args.runs} runs)")
    return 0


def cmd_validate(args) -> int:
    from .validation import cross_simulator_suite

    check_seed(args.seed)
    results = cross_simulator_suite(args.runs, args.seed, args.alpha)
    rows = [[r.model, r.qoi, r.rep1, r.rep2, r.test, r.statistic, r.p, r.reject] for r in results]
    path = rio.write_table(
        Path(args.out_dir) / "validate.csv", ["model", "qoi", "rep1", "rep2", "test", "statistic", "p", "reject"], rows
    )
    failed = [r for r in results if r.reject]
    for r in results:
        print(f"{'FAIL' if r.reject else 'ok  '} {r.model:10s} {r.qoi:16s} {r.rep1:>14s} vs {r.rep2:<14s} {r.test:4s} p={r.p:.4f}")
    print(f"wrote {path}")
    if failed:
        print(f"{len(failed)} of {len(results)} equivalence tests rejected at alpha={args.alpha}", file=sys.stderr)
        return 2
    return 0


def _study(args, default_name: str, scalar: bool):
    cfg = load_config(args.config)
    name = args.study or default_name
    study = cfg.study(name, paper_scale=args.paper_scale)
    if study.qoi.is_scalar != scalar:
        raise ValidationError(f"study {name!r} has a {study.qoi.kind} QoI")
    return study.with_overrides(
        n=args.n,
        reps=args.reps,
        seed=check_seed(args.seed) if args.seed is not None else None,
        representations=_representations(args, None),
    )


def cmd_gsa_scalar(args) -> int:
    study = _study(args, "scalar", True)
    result = run_scalar_study(study)
    for kind in study.representations:
        path = rio.write_index_csv(result.estimates(kind.value), Path(args.out_dir) / f"scalar_{kind.value}.csv")
        print(f"wrote {path}")
    return 0


def cmd_gsa_functional(args) -> int:
    study = _study(args, "functional", False)
    result = run_functional_study(study)
    out = Path(args.out_dir)
    for kind in study.representations:
        report = functional_report(result, kind.value)
        p1 = rio.write_dynamical_csv(report, out / f"functional_{kind.value}_dynamical.csv")
        p2 = rio.write_index_csv(result.estimates(kind.value), out / f"functional_{kind.value}_aggregated.csv")
        print(f"wrote {p1} and {p2}")
    return 0


def cmd_compare(args) -> int:
    a = rio.samples_by_group(rio.read_index_csv(args.first), args.attr)
    b = rio.samples_by_group(rio.read_index_csv(args.second), args.attr)
    if list(a) != list(b):
        raise ValidationError("the two index CSVs have different groups")
    results = [welch_test(a[g], b[g], args.alpha, g) for g in a]
    out = Path(args.out) if args.out else Path(args.out_dir) / f"welch_{Path(args.first).stem}_vs_{Path(args.second).stem}.csv"
    rio.write_welch_csv(results, out)
    for w in results:
        print(f"{w.group:10s} t={w.t:9.3f} df={w.df:7.2f} p={w.p:.3g}{'  reject' if w.reject else ''}")
    print(f"wrote {out}")
    return 0


def _label(path: Path) -> str:
    stem = path.stem
    for prefix in ("scalar_", "functional_", "runs_", "paths_"):
        if stem.startswith(prefix):
            stem = stem[len(prefix):]
    return stem.replace("_aggregated", "").replace("_dynamical", "")


def cmd_plot(args) -> int:
    out = Path(args.out_dir)
    paths = [Path(p) for p in args.inputs]
    if args.kind == "boxplot":
        for attr, title in (("first_order", "First-order Sobol indices"), ("total", "Total Sobol indices")):
            data = {_label(p): rio.samples_by_group(rio.read_index_csv(p), attr) for p in paths}
            target = svg.write_svg(svg.boxplot_svg(data, title, "index"), out / f"boxplot_{attr}.svg")
            print(f"wrote {target}")
    elif args.kind == "dynamical":
        for p in paths:
            grid, curves, _ = rio.read_dynamical_csv(p)
            for k, attr in enumerate(("first_order", "total")):
                series = {g: c[k] for g, c in curves.items()}
                title = f"Dynamical {attr.replace('_', '-')} indices ({_label(p)})"
                target = svg.write_svg(
                    svg.line_chart_svg(grid, series, title, "time", "index"), out / f"dynamical_{attr}_{_label(p)}.svg"
                )
                print(f"wrote {target}")
    elif args.kind == "fan":
        for p in paths:
            header, rows = rio.read_table(p)
            if header[:2] != ["run", "time"]:
                raise ValidationError(f"{p}: expected a paths CSV (run,time,...)")
            runs = sorted({int(r["run"]) for r in rows})
            for comp in header[2:]:
                values = np.array([float(r[comp]) for r in rows]).reshape(len(runs), -1)
                grid = np.array([float(r["time"]) for r in rows[: values.shape[1]]])
                text = svg.fan_svg(grid, values, f"{comp} over time ({_label(p)}, {len(runs)} runs)", ylabel=comp)
                target = svg.write_svg(text, out / f"fan_{comp}_{_label(p)}.svg")
                print(f"wrote {target}")
    else:
        data = {}
        for p in paths:
            header, rows = rio.read_table(p)
            if "extinction_time" not in header:
                raise ValidationError(f"{p}: expected a runs CSV with an extinction_time column")
            data[_label(p)] = {"extinction time": [float(r["extinction_time"]) for r in rows]}
        target = svg.write_svg(svg.boxplot_svg(data, "Extinction times", "days"), out / "extinction.svg")
        print(f"wrote {target}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "gsa-scalar": cmd_gsa_scalar,
    "gsa-functional": cmd_gsa_functional,
    "compare-reps": cmd_compare,
    "plot": cmd_plot,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CTMCError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli_main())
