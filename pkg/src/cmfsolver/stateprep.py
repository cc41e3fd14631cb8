"""Classical stand-ins for hardware state preparation.

``adiabatic_drag`` moves a ground state along a piecewise-linear path in the
two drive strengths of :class:`DriveDecomposition`, evolving exactly under the
instantaneous Hamiltonian at each step.  ``vqe_compressed`` minimizes the
energy of a hyperspherically parameterized vector in the compressed space
by finite-difference gradient descent.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .engine import EffectiveHamiltonian
from .linalg import eigh, ground_state, propagate
from .pauli import SpinHamiltonian, expectation
from .states import StateVector, fidelity

PRECONDITION_FIDELITY = 0.999
DEFAULT_WAYPOINTS = ((0.0, 0.0), (0.0, 0.1), (0.0, 0.5), (1.0, 1.0))
METRIC_FLOOR = 1e-8


class StatePrepError(ValueError):
    pass


class DriveDecomposition(NamedTuple):
    """``H(l1, l2) = base + l1 * drive1 + l2 * drive2``."""

    base: SpinHamiltonian
    drive1: SpinHamiltonian
    drive2: SpinHamiltonian


def split_drives(h: SpinHamiltonian, drive1: Sequence[str],
                 drive2: Sequence[str]) -> DriveDecomposition:
    """Split ``h`` by axis pattern: terms named in ``drive1``/``drive2`` become
    the two drives and everything else the base."""
    overlap = set(drive1) & set(drive2)
    if overlap:
        raise StatePrepError(f"patterns in both drives: {sorted(overlap)}")
    for pattern in list(drive1) + list(drive2):
        if len(pattern) != h.n_sites:
            raise StatePrepError(f"pattern {pattern!r} does not have {h.n_sites} sites")
    parts: dict[str, list] = {"base": [], "d1": [], "d2": []}
    for t in h.terms:
        key = "d1" if t.axes in drive1 else "d2" if t.axes in drive2 else "base"
        parts[key].append((t.coeff, t.axes))
    return DriveDecomposition(*(SpinHamiltonian.from_terms(h.n_sites, parts[k])
                                for k in ("base", "d1", "d2")))


def extended_hamiltonian(decomp: DriveDecomposition, lam1: float, lam2: float) -> SpinHamiltonian:
    base, d1, d2 = decomp
    if not (base.n_sites == d1.n_sites == d2.n_sites):
        raise StatePrepError("drive terms have mismatched site counts")
    return base + lam1 * d1 + lam2 * d2


@dataclass(frozen=True)
class DragSchedule:
    waypoints: tuple[tuple[float, float], ...] = DEFAULT_WAYPOINTS
    steps_per_segment: int = 100
    dt: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "waypoints",
                           tuple((float(a), float(b)) for a, b in self.waypoints))
        if len(self.waypoints) < 2:
            raise StatePrepError("a schedule needs at least two waypoints")
        if self.steps_per_segment < 1:
            raise StatePrepError("steps_per_segment must be >= 1")
        if not self.dt > 0:
            raise StatePrepError("dt must be positive")

    @property
    def total_steps(self) -> int:
        return self.steps_per_segment * (len(self.waypoints) - 1)

    @property
    def duration(self) -> float:
        return self.total_steps * self.dt

    def path(self):
        """Yield the (lam1, lam2) used at each step."""
        n = self.steps_per_segment
        for (a1, a2), (b1, b2) in zip(self.waypoints, self.waypoints[1:]):
            for s in range(1, n + 1):
                x = s / n
                yield a1 + (b1 - a1) * x, a2 + (b2 - a2) * x


@dataclass(frozen=True)
class TracePoint:
    step: int
    energy: float
    fidelity: float | None = None


@dataclass(frozen=True)
class EnergyTrace:
    points: tuple[TracePoint, ...]

    def __len__(self):
        return len(self.points)

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.points])

    def to_rows(self) -> list[dict]:
        return [{"step": p.step, "energy": p.energy,
                 "fidelity": "" if p.fidelity is None else p.fidelity} for p in self.points]


@dataclass(frozen=True)
class DragResult:
    final: StateVector
    trace: EnergyTrace
    fidelity: float          # against the ground state at the last waypoint
    target_energy: float


def adiabatic_drag(decomp: DriveDecomposition, schedule: DragSchedule,
                   initial: StateVector | None = None,
                   target: StateVector | None = None) -> DragResult:
    """Drag ``initial`` (default: ground state at the first waypoint) along
    ``schedule``.  Trace fidelities are taken against ``target`` when given."""
    h0 = extended_hamiltonian(decomp, *schedule.waypoints[0])
    start_energy, start_state = ground_state(h0)
    if initial is None:
        initial = start_state
    if initial.n_sites != h0.n_sites:
        raise StatePrepError("initial state does not match the Hamiltonian size")
    if fidelity(initial, start_state) < PRECONDITION_FIDELITY:
        raise StatePrepError("initial state is not the ground state of the starting Hamiltonian")
    points = [TracePoint(0, expectation(h0, initial),
                         None if target is None else fidelity(target, initial))]
    state = initial
    for step, (l1, l2) in enumerate(schedule.path(), start=1):
        h = extended_hamiltonian(decomp, l1, l2)
        state = propagate(h, schedule.dt, state)
        points.append(TracePoint(step, expectation(h, state),
                                 None if target is None else fidelity(target, state)))
    end_energy, end_state = ground_state(extended_hamiltonian(decomp, *schedule.waypoints[-1]))
    return DragResult(state, EnergyTrace(tuple(points)), fidelity(end_state, state), end_energy)


# --- compressed-space VQE ----------------------------------------------------

@dataclass(frozen=True)
class VQEConfig:
    max_iters: int = 200
    fd_step: float = 1e-6
    learning_rate: float = 0.5
    convergence_tol: float = 1e-8
    max_halvings: int = 30
    initial_angle: float = np.pi / 4

    def __post_init__(self):
        for name in ("max_iters", "fd_step", "learning_rate", "convergence_tol", "max_halvings"):
            if not getattr(self, name) > 0:
                raise StatePrepError(f"{name} must be positive")


def hyperspherical_vector(params: np.ndarray, dim: int, complex_phases: bool) -> np.ndarray:
    """Unit vector from ``dim-1`` angles (plus ``dim-1`` phases if complex)."""
    angles = params[:dim - 1]
    vec = np.ones(dim, dtype=complex)
    sin_prod = 1.0
    for k in range(dim - 1):
        vec[k] = sin_prod * np.cos(angles[k])
        sin_prod *= np.sin(angles[k])
    vec[dim - 1] = sin_prod
    if complex_phases:
        vec[1:] *= np.exp(1j * params[dim - 1:])
    return vec


def _chart_metric(params: np.ndarray, dim: int, complex_phases: bool) -> np.ndarray:
    """Diagonal of the round-sphere metric in hyperspherical coordinates.

    Dividing the gradient by it gives the gradient on the sphere itself, which
    stays well conditioned when the state sits near a coordinate pole.
    """
    angles = params[:dim - 1]
    sin2 = np.sin(angles) ** 2
    metric = np.concatenate([[1.0], np.cumprod(sin2[:-1])])
    if complex_phases:
        weights = np.abs(hyperspherical_vector(params, dim, True)[1:]) ** 2
        metric = np.concatenate([metric, weights])
    return np.maximum(metric, METRIC_FLOOR)


@dataclass(frozen=True)
class VQEResult:
    coefficients: np.ndarray     # unit vector in compressed coordinates
    energy: float
    trace: EnergyTrace
    converged: bool
    iterations: int
    params: np.ndarray

    def lift(self, effective: EffectiveHamiltonian) -> StateVector:
        amps = self.coefficients @ effective.basis.vectors
        return StateVector.from_amplitudes(amps, effective.basis.sites, canonical=True)


def vqe_compressed(effective: EffectiveHamiltonian | np.ndarray, config: VQEConfig | None = None,
                   oracle: StateVector | None = None) -> VQEResult:
    """Minimize the Rayleigh quotient of the effective matrix.

    Gradients are central finite differences rescaled by the chart metric
    (see :func:`_chart_metric`); each step starts at
    ``learning_rate`` and is halved until the energy decreases, so accepted
    energies never increase.  Stops when the decrease drops below
    ``convergence_tol``; reaching ``max_iters`` returns ``converged=False``.
    ``oracle`` (a full-space state) adds fidelities to the trace and needs an
    :class:`EffectiveHamiltonian` input.
    """
    config = config or VQEConfig()
    matrix = effective.matrix if isinstance(effective, EffectiveHamiltonian) else np.asarray(effective)
    basis = effective.basis if isinstance(effective, EffectiveHamiltonian) else None
    if oracle is not None and basis is None:
        raise StatePrepError("fidelity tracking needs the compressed basis")
    dim = matrix.shape[0]
    if dim < 1:
        raise StatePrepError("empty effective Hamiltonian")
    is_complex = bool(np.max(np.abs(matrix.imag), initial=0.0) > 1e-12)

    def energy(p):
        v = hyperspherical_vector(p, dim, is_complex)
        return float(np.real(np.vdot(v, matrix @ v)))

    def point(step, p, e):
        fid = None
        if oracle is not None:
            amps = hyperspherical_vector(p, dim, is_complex) @ basis.vectors
            fid = fidelity(oracle, StateVector.from_amplitudes(amps, basis.sites))
        return TracePoint(step, e, fid)

    n_params = (dim - 1) * (2 if is_complex else 1)
    params = np.concatenate([np.full(dim - 1, config.initial_angle),
                             np.zeros(n_params - (dim - 1))])
    current = energy(params)
    points = [point(0, params, current)]
    converged = n_params == 0
    it = 0
    while not converged and it < config.max_iters:
        it += 1
        grad = np.empty(n_params)
        for k in range(n_params):
            shift = np.zeros(n_params)
            shift[k] = config.fd_step
            grad[k] = (energy(params + shift) - energy(params - shift)) / (2 * config.fd_step)
        grad /= _chart_metric(params, dim, is_complex)
        rate = config.learning_rate
        accepted = False
        for _ in range(config.max_halvings):
            trial = params - rate * grad
            e_trial = energy(trial)
            if e_trial < current:
                accepted = True
                break
            rate /= 2
        if not accepted:
            converged = True
            it -= 1
            break
        decrease = current - e_trial
        params, current = trial, e_trial
        points.append(point(it, params, current))
        if decrease < config.convergence_tol:
            converged = True
    coeffs = hyperspherical_vector(params, dim, is_complex)
    return VQEResult(coeffs, current, EnergyTrace(tuple(points)), converged, it, params)


def min_eigenvalue(matrix: np.ndarray) -> float:
    return float(eigh(matrix).values[0])


def default_drives(h: SpinHamiltonian) -> DriveDecomposition:
    """Off-diagonal single-site terms as drive 1, off-diagonal couplings as drive 2.

    Terms made only of I and Z stay in the base, whose ground state is then a
    computational basis state.
    """
    d1, d2 = [], []
    for t in h.terms:
        if set(t.axes) & {"X", "Y"}:
            weight = sum(c != "I" for c in t.axes)
            (d1 if weight == 1 else d2).append(t.axes)
    return split_drives(h, d1, d2)
