"""Multi-spin Pauli Hamiltonians: representation, text format, dense realization
and partial averaging over an environment state.

Site ``k`` of an ``n``-site Hamiltonian maps to bit ``n - 1 - k`` of a basis
index, so site 0 is the most significant bit.  ``Z|0> = +|0>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .states import StateVector

AXES = "IXYZ"
MAX_DENSE_SITES = 12
MERGE_TOL = 1e-14
IMAG_TOL = 1e-10


class HamiltonianError(ValueError):
    """Invalid Hamiltonian data."""


class HamiltonianParseError(HamiltonianError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PauliTerm:
    coeff: float
    axes: str

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise HamiltonianError(f"non-finite coefficient for {self.axes!r}")
        bad = set(self.axes) - set(AXES)
        if bad:
            raise HamiltonianError(f"invalid Pauli axes {sorted(bad)} in {self.axes!r}")

    @property
    def is_identity(self) -> bool:
        return set(self.axes) <= {"I"}


@dataclass(frozen=True)
class SpinHamiltonian:
    """Real-weighted sum of Pauli strings on ``n_sites`` spins.

    Terms are kept sorted by axes string with duplicates merged; build instances
    through :meth:`from_terms` (or the arithmetic operators) to get that
    normalization.
    """

    n_sites: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        if self.n_sites < 0:
            raise HamiltonianError("n_sites must be non-negative")
        seen = set()
        for t in self.terms:
            if len(t.axes) != self.n_sites:
                raise HamiltonianError(
                    f"term {t.axes!r} has length {len(t.axes)}, expected {self.n_sites}")
            if t.axes in seen:
                raise HamiltonianError(f"duplicate axis pattern {t.axes!r}")
            seen.add(t.axes)

    @classmethod
    def from_terms(cls, n_sites: int,
                   terms: Iterable[tuple[float, str]] | Mapping[str, float]) -> "SpinHamiltonian":
        if isinstance(terms, Mapping):
            terms = [(c, a) for a, c in terms.items()]
        merged: dict[str, float] = {}
        for coeff, axes in terms:
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise HamiltonianError(f"non-finite coefficient for {axes!r}")
            if len(axes) != n_sites:
                raise HamiltonianError(
                    f"term {axes!r} has length {len(axes)}, expected {n_sites}")
            merged[axes] = merged.get(axes, 0.0) + coeff
        kept = tuple(PauliTerm(c, a) for a, c in sorted(merged.items()) if abs(c) >= MERGE_TOL)
        return cls(n_sites, kept)

    @classmethod
    def zero(cls, n_sites: int) -> "SpinHamiltonian":
        return cls(n_sites, ())

    @property
    def coeffs(self) -> dict[str, float]:
        return {t.axes: t.coeff for t in self.terms}

    def coeff(self, axes: str) -> float:
        return self.coeffs.get(axes, 0.0)

    def __add__(self, other: "SpinHamiltonian") -> "SpinHamiltonian":
        if not isinstance(other, SpinHamiltonian):
            return NotImplemented
        if other.n_sites != self.n_sites:
            raise HamiltonianError("site counts differ")
        return SpinHamiltonian.from_terms(
            self.n_sites, [(t.coeff, t.axes) for t in self.terms + other.terms])

    def __sub__(self, other: "SpinHamiltonian") -> "SpinHamiltonian":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "SpinHamiltonian":
        return SpinHamiltonian.from_terms(
            self.n_sites, [(scalar * t.coeff, t.axes) for t in self.terms])

    __rmul__ = __mul__

    def __neg__(self) -> "SpinHamiltonian":
        return -1.0 * self

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class SiteMap:
    """Split of a Hamiltonian's sites into a cluster and its environment."""

    cluster_sites: tuple[int, ...]
    env_sites: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "cluster_sites", tuple(sorted(self.cluster_sites)))
        object.__setattr__(self, "env_sites", tuple(sorted(self.env_sites)))
        if set(self.cluster_sites) & set(self.env_sites):
            raise HamiltonianError("cluster and environment sites overlap")

    @classmethod
    def complement(cls, cluster: Sequence[int], n_sites: int) -> "SiteMap":
        env = [k for k in range(n_sites) if k not in set(cluster)]
        return cls(tuple(cluster), tuple(env))

    def covers(self, n_sites: int) -> bool:
        return sorted(self.cluster_sites + self.env_sites) == list(range(n_sites))


# --- text format -------------------------------------------------------------

def parse_hamiltonian(text: str) -> SpinHamiltonian:
    """Parse ``<coeff> <axes>`` lines into a normalized Hamiltonian.

    ``#`` starts a comment and blank lines are skipped.  Duplicate axis
    patterns are summed.
    """
    terms = []
    n_sites = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise HamiltonianParseError("expected '<coeff> <axes>'", lineno)
        try:
            coeff = float(parts[0])
        except ValueError:
            raise HamiltonianParseError(f"bad coefficient {parts[0]!r}", lineno) from None
        if not math.isfinite(coeff):
            raise HamiltonianParseError(f"non-finite coefficient {parts[0]!r}", lineno)
        axes = parts[1]
        bad = set(axes) - set(AXES)
        if bad:
            raise HamiltonianParseError(f"invalid axes string {axes!r}", lineno)
        if n_sites is None:
            n_sites = len(axes)
        elif len(axes) != n_sites:
            raise HamiltonianParseError(
                f"axes string {axes!r} has length {len(axes)}, expected {n_sites}", lineno)
        terms.append((coeff, axes))
    if n_sites is None:
        raise HamiltonianParseError("no terms")
    return SpinHamiltonian.from_terms(n_sites, terms)


def serialize_hamiltonian(h: SpinHamiltonian) -> str:
    lines = [f"{t.coeff:.17g} {t.axes}" for t in sorted(h.terms, key=lambda t: t.axes)]
    return "\n".join(lines) + "\n"


# --- dense realization -------------------------------------------------------

def _masks(axes: str) -> tuple[int, int, int]:
    n = len(axes)
    xmask = zmask = 0
    n_y = 0
    for k, a in enumerate(axes):
        bit = 1 << (n - 1 - k)
        if a in "XY":
            xmask |= bit
        if a in "ZY":
            zmask |= bit
        if a == "Y":
            n_y += 1
    return xmask, zmask, n_y


def _parity(values: np.ndarray) -> np.ndarray:
    return np.bitwise_count(values).astype(np.int64) & 1


def pauli_action(axes: str) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(rows, phases)`` with ``P|c> = phases[c] |rows[c]>``."""
    xmask, zmask, n_y = _masks(axes)
    cols = np.arange(1 << len(axes), dtype=np.int64)
    phases = (1j ** n_y) * (1 - 2 * _parity(cols & zmask))
    return cols ^ xmask, phases.astype(complex)


def apply_pauli(axes: str, amplitudes: np.ndarray) -> np.ndarray:
    rows, phases = pauli_action(axes)
    out = np.empty_like(amplitudes, dtype=complex)
    out[rows] = phases * amplitudes
    return out


def to_dense(h: SpinHamiltonian, max_sites: int = MAX_DENSE_SITES) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``h``."""
    if h.n_sites > max_sites:
        raise HamiltonianError(f"{h.n_sites} sites exceeds the dense cap of {max_sites}")
    dim = 1 << h.n_sites
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for t in h.terms:
        rows, phases = pauli_action(t.axes)
        out[rows, cols] += t.coeff * phases
    return out


def _check_dim(h: SpinHamiltonian, state: StateVector):
    if state.n_sites != h.n_sites:
        raise HamiltonianError(
            f"state has {state.n_sites} sites, Hamiltonian has {h.n_sites}")


def pauli_expectation(axes: str, state: StateVector) -> float:
    if len(axes) != state.n_sites:
        raise HamiltonianError("Pauli string and state sizes differ")
    psi = state.amplitudes
    value = np.vdot(psi, apply_pauli(axes, psi))
    if abs(value.imag) > IMAG_TOL:
        raise HamiltonianError(f"<{axes}> has imaginary part {value.imag:.3g}")
    return float(value.real)


def expectation(h: SpinHamiltonian, state: StateVector) -> float:
    """``<state|h|state>`` as a real number."""
    _check_dim(h, state)
    psi = state.amplitudes
    total = 0j
    for t in h.terms:
        total += t.coeff * np.vdot(psi, apply_pauli(t.axes, psi))
    scale = max(1.0, sum(abs(t.coeff) for t in h.terms))
    if abs(total.imag) > IMAG_TOL * scale:
        raise HamiltonianError(
            f"expectation has imaginary part {total.imag:.3g}; Hamiltonian not Hermitian?")
    return float(total.real)


def reduce(h: SpinHamiltonian, site_map: SiteMap, env_state: StateVector) -> SpinHamiltonian:
    """Average ``h`` over ``env_state`` on ``site_map.env_sites``.

    Each term's environment factor is replaced by its expectation value; the
    result lives on ``site_map.cluster_sites`` (renumbered 0..k-1 in ascending
    order).  Terms whose cluster part is the identity become the scalar offset.
    """
    if not site_map.covers(h.n_sites):
        raise HamiltonianError("site map does not partition the Hamiltonian's sites")
    env = site_map.env_sites
    if env_state.n_sites != len(env):
        raise HamiltonianError(
            f"environment state has {env_state.n_sites} sites, expected {len(env)}")
    if not env:
        return h
    cluster = site_map.cluster_sites
    cache: dict[str, float] = {}
    reduced = []
    for t in h.terms:
        env_axes = "".join(t.axes[k] for k in env)
        if env_axes not in cache:
            cache[env_axes] = pauli_expectation(env_axes, env_state)
        reduced.append((t.coeff * cache[env_axes], "".join(t.axes[k] for k in cluster)))
    return SpinHamiltonian.from_terms(len(cluster), reduced)


def hamiltonian_norm(h: SpinHamiltonian) -> float:
    return float(sum(abs(t.coeff) for t in h.terms))
