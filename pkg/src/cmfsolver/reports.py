"""Machine-readable results: JSON run reports and CSV row tables.

Every CSV produced by the command line has a fixed column schema listed in
``CSV_COLUMNS``; bump ``SCHEMA_VERSION`` whenever one of them changes.
Energies are in units of the single-spin field (``g1 = 1``).
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from . import __version__
from .engine import CMFConfig, CMFResult, solve_cmf, truncated_ground_state
from .linalg import ground_state, lowest_states
from .models import chain_hamiltonian, three_spin_hamiltonian
from .pauli import SpinHamiltonian, serialize_hamiltonian
from .states import StateVector, fidelity, moment_mean_variance, z_moment_distribution

SCHEMA_VERSION = 1
ORACLE_MAX_SITES = 12
N8_REFERENCE_COUNTS = {2: 50, 3: 5, 4: 16}

MZ3 = (-3, -1, 1, 3)

CSV_COLUMNS = {
    "chain-scan": ("n", "g2", "e_cmf", "e_exact", "rel_error", "fidelity", "basis_dim",
                   "n_products", "solves_2", "solves_3", "solves_4", "solves_other"),
    "threespin-scan": ("g2", "g3", "fidelity", "e_cmf", "e_exact", "basis_dim",
                       *(f"mz_cmf_{m:+d}" for m in MZ3), *(f"mz_exact_{m:+d}" for m in MZ3),
                       "mz_var_cmf", "mz_var_exact"),
    "truncate": ("keep", "energy", "fidelity", "e_exact"),
    "trace": ("step", "energy", "fidelity"),
    "oracle": ("level", "energy"),
}

THREESPIN_PRESETS = {
    "g2-sweep": tuple((g2, 0.1) for g2 in (0.1, 1.0, 2.0)),
    "g3-sweep": tuple((2.0, g3) for g3 in (0.1, 1.0, 2.0)),
}


def hamiltonian_digest(h: SpinHamiltonian) -> str:
    return hashlib.sha256(serialize_hamiltonian(h).encode()).hexdigest()


def make_run_id(command: str, digest: str, config: dict) -> str:
    blob = json.dumps([command, digest, config, __version__], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def histogram_json(hist: dict[int, float]) -> dict[str, float]:
    return {f"{m:+d}": float(p) for m, p in sorted(hist.items())}


@dataclass
class RunReport:
    """Schema-versioned record of one command invocation.

    ``results`` holds only quantities that are reproducible bit for bit;
    wall-clock time lives separately in ``duration_s``.
    """

    command: str
    hamiltonian_digest: str | None
    config: dict
    results: dict
    duration_s: float = 0.0
    version: str = __version__
    schema_version: int = SCHEMA_VERSION
    run_id: str = field(init=False)

    def __post_init__(self):
        self.run_id = make_run_id(self.command, self.hamiltonian_digest or "", self.config)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "run_id": self.run_id,
            "command": self.command,
            "version": self.version,
            "units": {"g1": 1.0},
            "hamiltonian_digest": self.hamiltonian_digest,
            "config": self.config,
            "results": self.results,
            "duration_s": self.duration_s,
        }


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False


# --- single-instance results --------------------------------------------------

def oracle_for(h: SpinHamiltonian) -> tuple[float, StateVector] | None:
    if h.n_sites > ORACLE_MAX_SITES:
        return None
    return ground_state(h)


def cmf_results(h: SpinHamiltonian, config: CMFConfig) -> tuple[dict, CMFResult]:
    """Run the solver (with the dense oracle when affordable) and flatten the result."""
    oracle = oracle_for(h)
    result = solve_cmf(h, config, oracle=oracle)
    out = {
        "n_sites": h.n_sites,
        "energy": result.energy,
        "basis_dim": result.basis_dim,
        "n_products": result.n_products,
        "partitions": [[list(p.a_sites), list(p.b_sites)] for p in result.partitions],
        "provenance": [list(tag) for tag in result.effective.basis.provenance],
        "diagnostics": {str(k): v for k, v in result.diagnostics.items()},
        "dense_solves": {str(k): v for k, v in result.dense_solves.items()},
        "recursive_solves": {str(k): v for k, v in result.recursive_solves.items()},
        "mz_cmf": histogram_json(z_moment_distribution(result.state)),
        "oracle_energy": None,
        "fidelity": None,
        "rel_energy_error": None,
        "mz_exact": None,
    }
    if oracle is not None:
        e0, psi0 = oracle
        out["oracle_energy"] = e0
        out["fidelity"] = result.fidelity_vs_oracle
        out["rel_energy_error"] = abs(result.energy - e0) / abs(e0) if e0 else abs(result.energy)
        out["mz_exact"] = histogram_json(z_moment_distribution(psi0))
    if h.n_sites == 8:
        out["reference_counts_n8"] = {str(k): v for k, v in N8_REFERENCE_COUNTS.items()}
    return out, result


def oracle_results(h: SpinHamiltonian, levels: int = 1) -> dict:
    levels = min(levels, 1 << h.n_sites)
    states = lowest_states(h, levels)
    e0, psi0 = states[0]
    mean, var = moment_mean_variance(z_moment_distribution(psi0))
    return {
        "n_sites": h.n_sites,
        "energies": [e for e, _ in states],
        "mz_exact": histogram_json(z_moment_distribution(psi0)),
        "mz_mean": mean,
        "mz_variance": var,
    }


def truncation_rows(h: SpinHamiltonian, result: CMFResult, keeps: Iterable[int]) -> list[dict]:
    e0, psi0 = ground_state(h)
    rows = []
    for k in keeps:
        energy, state = truncated_ground_state(result, k)
        rows.append({"keep": k, "energy": energy, "fidelity": fidelity(psi0, state), "e_exact": e0})
    return rows


# --- scans ---------------------------------------------------------------------

def linear_fit(x: Sequence[float], y: Sequence[float]) -> dict:
    """Least-squares line with coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return {"slope": None, "intercept": None, "r2": None}
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


def chain_scan(ns: Iterable[int], g2: float, config: CMFConfig, log=None) -> tuple[list[dict], dict]:
    rows = []
    for n in ns:
        if not 2 <= n <= ORACLE_MAX_SITES:
            raise ValueError(f"chain length must be in 2..{ORACLE_MAX_SITES}, got {n}")
        res, _ = cmf_results(chain_hamiltonian(n, 1.0, g2), config)
        counts = {int(k): v for k, v in res["diagnostics"].items()}
        rows.append({
            "n": n, "g2": g2, "e_cmf": res["energy"], "e_exact": res["oracle_energy"],
            "rel_error": res["rel_energy_error"], "fidelity": res["fidelity"],
            "basis_dim": res["basis_dim"], "n_products": res["n_products"],
            "solves_2": counts.get(2, 0), "solves_3": counts.get(3, 0), "solves_4": counts.get(4, 0),
            "solves_other": sum(v for k, v in counts.items() if k not in (2, 3, 4)),
        })
        if log:
            log(f"N={n}: fidelity {res['fidelity']:.6f}, rel error {res['rel_energy_error']:.2e}")
    summary = {
        "min_fidelity": min(r["fidelity"] for r in rows),
        "max_rel_error": max(r["rel_error"] for r in rows),
        "fit_e_cmf": linear_fit([r["n"] for r in rows], [r["e_cmf"] for r in rows]),
        "fit_e_exact": linear_fit([r["n"] for r in rows], [r["e_exact"] for r in rows]),
    }
    return rows, summary


def threespin_scan(points: Iterable[tuple[float, float]], config: CMFConfig,
                   log=None) -> tuple[list[dict], dict]:
    rows = []
    for g2, g3 in points:
        res, result = cmf_results(three_spin_hamiltonian(1.0, g2, g3), config)
        row = {"g2": g2, "g3": g3, "fidelity": res["fidelity"], "e_cmf": res["energy"],
               "e_exact": res["oracle_energy"], "basis_dim": res["basis_dim"]}
        for tag in ("cmf", "exact"):
            hist = res[f"mz_{tag}"]
            for m in MZ3:
                row[f"mz_{tag}_{m:+d}"] = hist[f"{m:+d}"]
            _, var = moment_mean_variance({int(k): p for k, p in hist.items()})
            row[f"mz_var_{tag}"] = var
        rows.append(row)
        if log:
            log(f"g2={g2:g}, g3={g3:g}: fidelity {res['fidelity']:.6f}")
    summary = {"min_fidelity": min(r["fidelity"] for r in rows)}
    return rows, summary


# --- output ----------------------------------------------------------------------

def write_csv(rows: Sequence[dict], columns: Sequence[str], stream: IO[str]):
    writer = csv.DictWriter(stream, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(row.get(k)) for k in columns})


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_json(doc: dict, stream: IO[str]):
    json.dump(doc, stream, indent=2, sort_keys=False, default=_json_default)
    stream.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
