"""Dense Hermitian eigensolver and the exact-diagonalization helpers built on it.

The eigensolver is a cyclic complex Jacobi method.  Each sweep visits every
index pair once using a round-robin schedule, so the rotations of one round
act on disjoint pairs and are applied together with array operations.
Matrices larger than ``JACOBI_MAX_DIM`` go to LAPACK (``numpy.linalg.eigh``);
both paths share the same ordering and phase conventions.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import SpinHamiltonian, to_dense
from .states import StateVector, canonical_phase

MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-12
HERMITIAN_TOL = 1e-10
DEGENERACY_TOL = 1e-10
MAX_DIM = 1 << 12
JACOBI_MAX_DIM = 64


class EigenError(ArithmeticError):
    pass


class NotHermitianError(EigenError, ValueError):
    pass


class ConvergenceError(EigenError):
    pass


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    values: np.ndarray   # ascending
    vectors: np.ndarray  # columns, canonical phase

    def __len__(self):
        return self.values.size

    def vector(self, k: int) -> np.ndarray:
        return self.vectors[:, k]


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Pairs (p, q) grouped into rounds of disjoint pairs covering all p < q."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < n and q < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _offdiag_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def _sort_key(vec: np.ndarray) -> tuple:
    # lexicographically largest amplitude sequence first
    rounded = np.round(vec, 10)
    return tuple(x for z in rounded for x in (-z.real, -z.imag))


def eigh(a, *, max_sweeps: int = MAX_SWEEPS, tol: float = OFFDIAG_TOL,
         method: str = "auto") -> EigenDecomposition:
    """Full eigendecomposition of a Hermitian matrix.

    Returns ascending eigenvalues and orthonormal eigenvector columns with the
    largest component of each vector real and positive.  Within a degenerate
    eigenvalue cluster vectors are ordered lexicographically (largest leading
    amplitudes first), so output is reproducible.

    Raises
    ------
    NotHermitianError
        If ``a`` deviates from its conjugate transpose by more than 1e-10
        (relative to its largest entry).
    ConvergenceError
        If the off-diagonal norm is still above ``tol * ||a||_F`` after
        ``max_sweeps`` sweeps.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_DIM``).
    """
    if method not in ("auto", "jacobi", "lapack"):
        raise ValueError(f"unknown method {method!r}")
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds cap {MAX_DIM}")
    scale = max(1.0, float(np.max(np.abs(a)))) if n else 1.0
    if n and np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOL * scale:
        raise NotHermitianError("matrix is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    frob = float(np.linalg.norm(a))
    if method == "lapack" or (method == "auto" and n > JACOBI_MAX_DIM):
        values, v = np.linalg.eigh(a)
        return _finalize(values, v, frob)
    v = np.eye(n, dtype=complex)
    if n > 1 and frob > 0:
        rounds = _round_robin(n)
        for sweep in range(max_sweeps + 1):
            if _offdiag_norm(a) <= tol * frob:
                break
            if sweep == max_sweeps:
                raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
            for p, q in rounds:
                _rotate(a, v, p, q)
    return _finalize(np.real(np.diag(a)).copy(), v, frob)


def _finalize(values: np.ndarray, v: np.ndarray, frob: float) -> EigenDecomposition:
    n = values.size
    v = np.array(v, dtype=complex)
    order = np.argsort(values, kind="stable")
    values = values[order]
    v = v[:, order]
    for k in range(n):
        v[:, k] = canonical_phase(v[:, k])
    # deterministic ordering inside degenerate clusters
    deg_tol = DEGENERACY_TOL * max(1.0, frob)
    start = 0
    for k in range(1, n + 1):
        if k == n or values[k] - values[k - 1] > deg_tol:
            if k - start > 1:
                block = sorted(range(start, k), key=lambda j: _sort_key(v[:, j]))
                v[:, start:k] = v[:, block]
            start = k
    return EigenDecomposition(values, v)


def _rotate(a: np.ndarray, v: np.ndarray, p: np.ndarray, q: np.ndarray):
    app = a[p, p].real
    aqq = a[q, q].real
    apq = a[p, q]
    r = np.abs(apq)
    phase = np.exp(-1j * np.angle(apq))
    theta = 0.5 * np.arctan2(2.0 * r, aqq - app)
    theta = np.where(theta > np.pi / 4, theta - np.pi / 2, theta)
    c = np.cos(theta)
    s = np.sin(theta)
    # G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on columns (p, q)
    g00, g01 = c, s
    g10, g11 = -s * phase, c * phase
    cp = a[:, p].copy()
    cq = a[:, q]
    a[:, p] = cp * g00 + cq * g10
    a[:, q] = cp * g01 + cq * g11
    rp = a[p, :].copy()
    rq = a[q, :]
    a[p, :] = np.conj(g00)[:, None] * rp + np.conj(g10)[:, None] * rq
    a[q, :] = np.conj(g01)[:, None] * rp + np.conj(g11)[:, None] * rq
    a[q, p] = 0.0
    a[p, q] = 0.0
    vp = v[:, p].copy()
    vq = v[:, q]
    v[:, p] = vp * g00 + vq * g10
    v[:, q] = vp * g01 + vq * g11


def hamiltonian_eigh(h: SpinHamiltonian) -> EigenDecomposition:
    return eigh(to_dense(h))


def lowest_states(h: SpinHamiltonian, count: int) -> list[tuple[float, StateVector]]:
    """The ``count`` lowest eigenpairs of ``h`` as (energy, state) pairs."""
    dec = hamiltonian_eigh(h)
    if count > len(dec):
        raise EigenError(f"requested {count} states from a {len(dec)}-dimensional space")
    sites = tuple(range(h.n_sites))
    return [(float(dec.values[k]), StateVector(sites, dec.vector(k))) for k in range(count)]


def ground_state(h: SpinHamiltonian) -> tuple[float, StateVector]:
    """Exact ground energy and state of ``h`` by full diagonalization."""
    return lowest_states(h, 1)[0]


def propagate(h: SpinHamiltonian, t: float, state: StateVector) -> StateVector:
    """Apply ``exp(-i h t)`` to ``state``."""
    if state.n_sites != h.n_sites:
        raise ValueError("state and Hamiltonian sizes differ")
    if t == 0:
        return state
    dec = hamiltonian_eigh(h)
    vecs = dec.vectors
    coeffs = vecs.conj().T @ state.amplitudes
    out = vecs @ (np.exp(-1j * dec.values * t) * coeffs)
    return StateVector(state.sites, out / np.linalg.norm(out))


def projected_ground_energy(h_dense: np.ndarray, basis: np.ndarray) -> float:
    """Lowest eigenvalue of ``h_dense`` restricted to the row-span of ``basis``."""
    sub = basis.conj() @ h_dense @ basis.T
    return float(eigh(sub).values[0])
