"""Command-line front end.

Exit codes: 0 success, 2 bad input (unreadable or malformed files, invalid
settings), 3 numerical failure inside a solver.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import json
import logging
import random
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .engine import CMFConfig, CMFError, ConfigError
from .linalg import EigenError, ground_state
from .models import (chain_config, experiment_cluster_hamiltonian, experiment_config,
                     three_spin_config, three_spin_hamiltonian)
from .pauli import HamiltonianError, SpinHamiltonian, parse_hamiltonian
from .reports import (CSV_COLUMNS, THREESPIN_PRESETS, RunReport, Timer, chain_scan,
                      cmf_results, hamiltonian_digest, oracle_results, threespin_scan,
                      truncation_rows, write_csv, write_json)
from .states import StateError
from .stateprep import (StatePrepError, VQEConfig, adiabatic_drag, default_drives,
                        extended_hamiltonian, min_eigenvalue, split_drives, vqe_compressed,
                        DragSchedule)

log = logging.getLogger("cmfsolver")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

PRESETS = {"chain": chain_config, "three_spin": three_spin_config,
           "experiment": experiment_config}


class InputError(Exception):
    pass


# --- inputs ---------------------------------------------------------------------

def load_hamiltonian(path: str | None, fallback=None) -> SpinHamiltonian:
    if path is None:
        if fallback is None:
            raise InputError("--hamiltonian is required")
        return fallback()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return parse_hamiltonian(text)


def load_config(path: str | None, default_preset: str) -> tuple[CMFConfig, dict, dict]:
    """Read a JSON settings file: CMF keys at the top level, an optional
    ``preset`` name, and optional ``drag`` and ``vqe`` sections."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot load config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
    data = dict(data)
    drag = data.pop("drag", {}) or {}
    vqe = data.pop("vqe", {}) or {}
    preset = data.pop("preset", default_preset)
    if preset not in PRESETS:
        raise InputError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    merged = PRESETS[preset]().to_dict()
    merged.update(data)
    try:
        return CMFConfig.from_dict(merged), drag, vqe
    except TypeError as exc:
        raise InputError(f"bad config value: {exc}") from exc


def drag_schedule(settings: dict) -> DragSchedule:
    known = {"waypoints", "steps_per_segment", "dt", "drive1", "drive2"}
    unknown = set(settings) - known
    if unknown:
        raise InputError(f"unknown drag keys: {sorted(unknown)}")
    kwargs = {k: settings[k] for k in ("waypoints", "steps_per_segment", "dt") if k in settings}
    try:
        return DragSchedule(**kwargs)
    except (StatePrepError, TypeError, ValueError) as exc:
        raise InputError(f"bad drag settings: {exc}") from exc


def vqe_config(settings: dict) -> VQEConfig:
    try:
        return VQEConfig(**settings)
    except (StatePrepError, TypeError) as exc:
        raise InputError(f"bad vqe settings: {exc}") from exc


@contextlib.contextmanager
def no_rng():
    """Make any use of numpy or stdlib random generators raise."""
    def forbidden(*args, **kwargs):
        raise AssertionError("random number generation used in a seedless run")

    targets = [(np.random, name) for name in ("default_rng", "seed", "random", "rand",
                                               "randn", "normal", "uniform", "RandomState")]
    targets += [(random, name) for name in ("random", "seed", "uniform", "gauss", "choice")]
    saved = [(mod, name, getattr(mod, name)) for mod, name in targets]
    try:
        for mod, name, _ in saved:
            setattr(mod, name, forbidden)
        yield
    finally:
        for mod, name, original in saved:
            setattr(mod, name, original)


# --- commands ---------------------------------------------------------------------
# Each returns (json document, csv rows, csv schema key).

def _three_spin_fallback(args):
    return lambda: three_spin_hamiltonian(1.0, args.g2, args.g3)


def cmd_solve(args):
    h = load_hamiltonian(args.hamiltonian)
    config, _, _ = load_config(args.config, "chain")
    with Timer() as t:
        results, _ = cmf_results(h, config)
    report = RunReport("solve", hamiltonian_digest(h), config.to_dict(), results, t.elapsed)
    return report.to_dict(), None, None


def cmd_oracle(args):
    h = load_hamiltonian(args.hamiltonian)
    with Timer() as t:
        results = oracle_results(h, args.levels)
    report = RunReport("oracle", hamiltonian_digest(h), {"levels": args.levels}, results, t.elapsed)
    rows = [{"level": k, "energy": e} for k, e in enumerate(results["energies"])]
    return report.to_dict(), rows, "oracle"


def cmd_chain_scan(args):
    config, _, _ = load_config(args.config, "chain")
    ns = range(args.n_min, args.n_max + 1)
    if not ns or args.n_min < 2 or args.n_max > 12:
        raise InputError("N range must be non-empty and within 2..12")
    with Timer() as t:
        rows, summary = chain_scan(ns, args.g2, config, log=log.info)
    echo = {"cmf": config.to_dict(), "n": list(ns), "g2": args.g2}
    report = RunReport("chain-scan", None, echo, {"rows": rows, "summary": summary}, t.elapsed)
    log.info("fit E_cmf vs N: %s", summary["fit_e_cmf"])
    return report.to_dict(), rows, "chain-scan"


def cmd_threespin_scan(args):
    config, _, _ = load_config(args.config, "three_spin")
    if args.g2 or args.g3:
        g2s = args.g2 or [2.0]
        g3s = args.g3 or [0.1]
        points = [(a, b) for a in g2s for b in g3s]
    else:
        points = list(THREESPIN_PRESETS[args.preset])
    with Timer() as t:
        rows, summary = threespin_scan(points, config, log=log.info)
    echo = {"cmf": config.to_dict(), "points": [list(p) for p in points]}
    report = RunReport("threespin-scan", None, echo, {"rows": rows, "summary": summary}, t.elapsed)
    return report.to_dict(), rows, "threespin-scan"


def cmd_truncate(args):
    h = load_hamiltonian(args.hamiltonian, _three_spin_fallback(args))
    config, _, _ = load_config(args.config, "experiment")
    with Timer() as t:
        results, result = cmf_results(h, config)
        keeps = args.keep or list(range(1, result.basis_dim + 1))
        for k in keeps:
            if not 1 <= k <= result.basis_dim:
                raise InputError(f"--keep {k} outside 1..{result.basis_dim}")
        rows = truncation_rows(h, result, keeps)
    results = {"full": results, "rows": rows}
    report = RunReport("truncate", hamiltonian_digest(h), config.to_dict(), results, t.elapsed)
    return report.to_dict(), rows, "truncate"


def cmd_drag(args):
    h = load_hamiltonian(args.hamiltonian,
                         lambda: experiment_cluster_hamiltonian(1.0, args.g2, args.g3))
    _, drag, _ = load_config(args.config, "experiment")
    if args.steps is not None:
        drag = {**drag, "steps_per_segment": args.steps}
    schedule = drag_schedule(drag)
    try:
        if "drive1" in drag or "drive2" in drag:
            decomp = split_drives(h, drag.get("drive1", []), drag.get("drive2", []))
        else:
            decomp = default_drives(h)
    except StatePrepError as exc:
        raise InputError(str(exc)) from exc
    with Timer() as t:
        _, target = ground_state(extended_hamiltonian(decomp, *schedule.waypoints[-1]))
        result = adiabatic_drag(decomp, schedule, target=target)
    rows = result.trace.to_rows()
    summary = {"fidelity": result.fidelity, "target_energy": result.target_energy,
               "final_energy": rows[-1]["energy"], "steps": schedule.total_steps,
               "duration": schedule.duration,
               "drive1": [t.axes for t in decomp.drive1.terms],
               "drive2": [t.axes for t in decomp.drive2.terms]}
    echo = {"waypoints": [list(w) for w in schedule.waypoints],
            "steps_per_segment": schedule.steps_per_segment, "dt": schedule.dt}
    report = RunReport("drag", hamiltonian_digest(h), echo,
                       {"summary": summary, "trace": rows}, t.elapsed)
    return report.to_dict(), rows, "trace"


def cmd_vqe(args):
    h = load_hamiltonian(args.hamiltonian, _three_spin_fallback(args))
    config, _, vqe = load_config(args.config, "experiment")
    settings = vqe_config(vqe)
    with Timer() as t:
        results, result = cmf_results(h, config)
        oracle = ground_state(h)[1] if results["oracle_energy"] is not None else None
        run = vqe_compressed(result.effective, settings, oracle=oracle)
        target = min_eigenvalue(result.effective.matrix)
    rows = run.trace.to_rows()
    summary = {"energy": run.energy, "min_eigenvalue": target,
               "abs_error": abs(run.energy - target), "converged": run.converged,
               "iterations": run.iterations, "basis_dim": result.basis_dim,
               "fidelity": rows[-1]["fidelity"] if oracle is not None else None}
    echo = {"cmf": config.to_dict(), "vqe": asdict(settings)}
    report = RunReport("vqe", hamiltonian_digest(h), echo,
                       {"summary": summary, "trace": rows}, t.elapsed)
    return report.to_dict(), rows, "trace"


# --- parser ---------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, formats=("json", "csv")):
    p.add_argument("--hamiltonian", metavar="PATH", help="Pauli-term Hamiltonian file")
    p.add_argument("--config", metavar="PATH", help="JSON settings file")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--seedless", action="store_true",
                   help="fail if any random number generator is touched")
    p.add_argument("-v", "--verbose", action="store_true", help="log one line per point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmfsolver", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="CMF ground state of one Hamiltonian")
    _common(p, ("json",))
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exact ground state by dense diagonalization")
    _common(p)
    p.add_argument("--levels", type=int, default=1, help="number of lowest levels")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("chain-scan", help="CMF against exact results over chain lengths")
    _common(p, ("csv", "json"))
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--g2", type=float, default=2.0, help="coupling ratio g2/g1")
    p.set_defaults(func=cmd_chain_scan)

    p = sub.add_parser("threespin-scan", help="three-spin network over coupling ratios")
    _common(p, ("csv", "json"))
    p.add_argument("--preset", choices=sorted(THREESPIN_PRESETS), default="g2-sweep")
    p.add_argument("--g2", type=float, nargs="+", help="g2/g1 values (overrides preset)")
    p.add_argument("--g3", type=float, nargs="+", help="g3/g1 values (overrides preset)")
    p.set_defaults(func=cmd_threespin_scan)

    for name, func, help_text in (
            ("truncate", cmd_truncate, "re-solve in the k heaviest compressed basis vectors"),
            ("drag", cmd_drag, "digitized adiabatic drag of a cluster Hamiltonian"),
            ("vqe", cmd_vqe, "variational minimization in the compressed space")):
        p = sub.add_parser(name, help=help_text)
        _common(p, ("csv", "json"))
        p.add_argument("--g2", type=float, default=1.0,
                       help="g2/g1 of the default three-spin instance")
        p.add_argument("--g3", type=float, default=0.1,
                       help="g3/g1 of the default three-spin instance")
        p.set_defaults(func=func)
        if name == "truncate":
            p.add_argument("--keep", type=int, nargs="+", help="basis sizes to keep")
        if name == "drag":
            p.add_argument("--steps", type=int, help="steps per segment (overrides config)")
    return parser


def _emit(args, doc, rows, schema):
    buf = io.StringIO()
    if args.format == "csv":
        write_csv(rows, CSV_COLUMNS[schema], buf)
    else:
        write_json(doc, buf)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    guard = no_rng() if args.seedless else contextlib.nullcontext()
    try:
        with guard:
            doc, rows, schema = args.func(args)
        _emit(args, doc, rows, schema)
    except (InputError, HamiltonianError, ConfigError, StateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CMFError, EigenError, StatePrepError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
