"""Command-line entry point.

``simulate`` runs the experiment described by a config file and writes CSV
(and SVG unless ``--no-plot``); ``crossover`` locates the chain length where
the cavity-only channel overtakes hopping; ``verify`` runs the built-in
numerical checks.

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 failed checks.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import verify as _verify
from .config import ConfigError, RunConfig, parse_config
from .dynamics import SolverError
from .experiments import (
    NoCrossoverError,
    SweepRow,
    SweepSpec,
    SweepTable,
    disorder_study,
    feedback_panels,
    find_crossover,
    omega_sweep,
    run_sweep,
)
from .observables import Channel, NumericalInconsistencyError

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("exciton_feedback")


class InputError(Exception):
    pass


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exciton-feedback", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the experiment described by a config file")
    sim.add_argument("config", type=Path)
    sim.add_argument("--out", type=Path, help="output directory (overrides the config)")
    sim.add_argument("--seed", type=_u64, help="random seed (overrides the config)")
    sim.add_argument("--no-plot", action="store_true", help="write CSV only")
    sim.add_argument("--workers", type=_positive, help="worker processes for sweeps")

    cross = sub.add_parser("crossover", help="find the hopping / cavity crossover chain length")
    cross.add_argument("config", type=Path)
    cross.add_argument("--out", type=Path, help="also write the two curves here")
    cross.add_argument("--workers", type=_positive)

    sub.add_parser("verify", help="run the numerical self-checks")
    return parser


def load_config(path: Path) -> RunConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _channels(names) -> tuple:
    return tuple(Channel.parse(c) for c in names)


def _write(table: SweepTable, out: Path, stem: str, config: RunConfig, title: str, x=None) -> list:
    from . import report

    out.mkdir(parents=True, exist_ok=True)
    header = config.resolved_text()
    paths = [out / f"{stem}.csv"]
    report.write_csv(table, paths[0], header)
    if config.plot and table.rows:
        paths.append(out / f"{stem}.svg")
        report.write_svg_plot(table, paths[1], x=x, title=title, config=header)
    return paths


def run_experiment(config: RunConfig) -> dict:
    """Compute the tables for ``config``; keys are output file stems."""
    settings = config.settings()
    p = config.params
    w = config.workers
    kind = config.experiment
    if kind == "omega_sweep":
        return {"omega_sweep": omega_sweep(settings, p["n_values"], p["grid"], _channels(p["channels"]), w)}
    if kind == "n_sweep":
        spec = SweepSpec(settings, "n_molecules", tuple(p["n_values"]), _channels(p["channels"]))
        return {"n_sweep": run_sweep(spec, w)}
    if kind == "crossover":
        return {"crossover": _crossover_table(settings, p, w)[1]}
    if kind == "disorder":
        settings = settings.replace(fix_ends=p["fix_ends"])
        clean = run_sweep(SweepSpec(settings, "omega_rabi", tuple(p["grid"]), _channels(p["channels"])), w)
        noisy = disorder_study(settings, p["q"], p["ensemble"], config.seed, p["grid"], _channels(p["channels"]), w)
        return {"disorder_clean": clean, "disorder": noisy}
    if kind == "feedback":
        panels = feedback_panels(settings, p["targets"], p["omega_grid"], p["lambda_grid"], p["eta_grid"], p["lam"], w)
        return {f"feedback_{name}": table for name, table in panels.items()}
    if kind == "single_point":
        spec = SweepSpec(settings, "omega_rabi", (settings.omega_rabi,), _channels(p["channels"]))
        return {"single_point": run_sweep(spec, w)}
    raise AssertionError(kind)


def _crossover_table(settings, params, workers):
    result = find_crossover(settings, (params["n_min"], params["n_max"]), settings.omega_rabi, workers)
    table = SweepTable(("n_molecules",), meta={"n_star": result.n_star})
    for n, nh, wc in zip(result.n_values, result.sigma_nh, result.sigma_wc):
        table.rows.append(SweepRow((int(n),), Channel.NH, float(nh), 0.0, 1))
        table.rows.append(SweepRow((int(n),), Channel.WC, float(wc), 0.0, 1))
    return result, table


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output"] = str(args.out)
    if args.no_plot:
        changes["plot"] = False
    if args.workers is not None:
        changes["workers"] = args.workers
    config = config.replace(**changes)
    if config.experiment == "verify":
        return cmd_verify(args)
    tables = run_experiment(config)
    out = Path(config.output)
    failed = 0
    for stem, table in tables.items():
        for path in _write(table, out, stem, config, title=stem.replace("_", " ")):
            print(path)
        for row in table.errors():
            failed += 1
            print(f"error at {dict(zip(table.coord_names, row.coords))} [{row.channel.value}]: {row.error}", file=sys.stderr)
        if "n_star" in table.meta:
            print(f"N* = {table.meta['n_star']}")
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_crossover(args) -> int:
    config = load_config(args.config)
    if args.workers is not None:
        config = config.replace(workers=args.workers)
    params = config.params if config.experiment == "crossover" else {"n_min": 5, "n_max": 40}
    try:
        result, table = _crossover_table(config.settings(), params, config.workers)
    except NoCrossoverError as exc:
        print(f"no crossover: {exc}", file=sys.stderr)
        for n, nh, wc in zip(exc.n_values, exc.sigma_nh, exc.sigma_wc):
            print(f"  N={n:3d}  sigma_NH={nh:.6g}  sigma_WC={wc:.6g}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"N* = {result.n_star}")
    if result.sign_changes != 1:
        print(f"warning: sigma_NH - sigma_WC changes sign {result.sign_changes} times", file=sys.stderr)
    if args.out is not None:
        for path in _write(table, args.out, "crossover", config.replace(output=str(args.out)), "crossover", x="n_molecules"):
            print(path)
    return EXIT_OK


def cmd_verify(args=None) -> int:
    results = _verify.run_checks()
    print(_verify.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {"simulate": cmd_simulate, "crossover": cmd_crossover, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, NumericalInconsistencyError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
