"""Statevectors over labelled spin sites, products and simple observables."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-10


class StateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitudes over the computational basis of ``sites``.

    ``sites`` is ascending; the first site is the most significant bit.
    """

    sites: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if list(sites) != sorted(set(sites)):
            raise StateError(f"sites must be strictly ascending, got {sites}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 1 << len(sites):
            raise StateError(f"{amps.size} amplitudes for {len(sites)} sites")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state norm {norm!r} is not 1")
        amps.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, sites: Sequence[int] | None = None,
                        canonical: bool = False) -> "StateVector":
        """Normalize ``amplitudes`` (and optionally fix the phase) into a state."""
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise StateError("zero vector")
        amps = amps / norm
        if canonical:
            amps = canonical_phase(amps)
        if sites is None:
            sites = range(int(np.log2(amps.size)))
        return cls(tuple(sites), amps)

    @classmethod
    def basis(cls, bits: str, sites: Sequence[int] | None = None) -> "StateVector":
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2) if bits else 0] = 1.0
        return cls(tuple(range(len(bits)) if sites is None else sites), amps)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def relabel(self, sites: Sequence[int]) -> "StateVector":
        """Same amplitudes on new (ascending) site labels."""
        return StateVector(tuple(sites), self.amplitudes)

    def __repr__(self):
        return f"StateVector(sites={self.sites}, dim={self.dim})"


def canonical_phase(amps: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate so the first largest-magnitude amplitude is real and positive."""
    mags = np.abs(amps)
    idx = int(np.argmax(mags >= mags.max() - tol))
    if mags[idx] == 0:
        return amps
    return amps * (np.conj(amps[idx]) / mags[idx])


def fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap ``|<a|b>|^2``."""
    if a.sites != b.sites:
        raise StateError(f"site sets differ: {a.sites} vs {b.sites}")
    value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, value))


def embed_product(a: StateVector, b: StateVector) -> StateVector:
    """Tensor product of states on disjoint site sets, in ascending site order."""
    if set(a.sites) & set(b.sites):
        raise StateError(f"overlapping sites {sorted(set(a.sites) & set(b.sites))}")
    sites = a.sites + b.sites
    n = len(sites)
    tensor = np.kron(a.amplitudes, b.amplitudes).reshape((2,) * n)
    order = np.argsort(sites)
    amps = np.transpose(tensor, order).reshape(-1)
    return StateVector(tuple(sorted(sites)), amps)


def basis_probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def z_moment_distribution(state: StateVector) -> dict[int, float]:
    """Distribution of the total Z moment ``sum_i Z_i`` over ``state``.

    Keys run over ``-N, -N+2, ..., N`` (every bin present, possibly zero).
    """
    n = state.n_sites
    idx = np.arange(state.dim, dtype=np.int64)
    ones = np.bitwise_count(idx).astype(np.int64)
    moments = n - 2 * ones
    probs = basis_probabilities(state)
    hist = {m: 0.0 for m in range(-n, n + 1, 2)}
    for m, p in zip(moments.tolist(), probs.tolist()):
        hist[m] += p
    return hist


def moment_mean_variance(hist: dict[int, float]) -> tuple[float, float]:
    mean = sum(m * p for m, p in hist.items())
    var = sum((m - mean) ** 2 * p for m, p in hist.items())
    return mean, var
