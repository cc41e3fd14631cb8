"""Cluster mean-field eigensolver.

A system is split into two clusters A and B.  Starting from a guess for B,
reduced Hamiltonians are diagonalized alternately on A and B, each averaged
over a state of the other cluster.  The retained products of cluster
eigenstates span a compressed space in which the full Hamiltonian is
diagonalized.  Clusters above ``max_cluster_size`` are themselves solved this
way, recursively.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linalg import eigh, lowest_states
from .pauli import SiteMap, SpinHamiltonian, reduce, to_dense
from .states import StateVector, embed_product, fidelity

log = logging.getLogger(__name__)

SCHMIDT_TOL = 1e-8
HERMITIAN_TOL = 1e-10


class CMFError(RuntimeError):
    """Failure inside the CMF pipeline, annotated with where it happened."""


class ConfigError(ValueError):
    pass


class RecursionDepthError(CMFError):
    pass


# --- partitions and configuration -------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Split of sites into cluster A (solved first) and cluster B."""

    a_sites: tuple[int, ...]
    b_sites: tuple[int, ...]

    def __post_init__(self):
        a = tuple(sorted(int(s) for s in self.a_sites))
        b = tuple(sorted(int(s) for s in self.b_sites))
        if not a or not b:
            raise ConfigError("both clusters of a partition must be non-empty")
        if set(a) & set(b):
            raise ConfigError(f"clusters overlap: {a} and {b}")
        object.__setattr__(self, "a_sites", a)
        object.__setattr__(self, "b_sites", b)

    def swapped(self) -> "Partition":
        return Partition(self.b_sites, self.a_sites)

    def check(self, n_sites: int):
        if sorted(self.a_sites + self.b_sites) != list(range(n_sites)):
            raise ConfigError(f"partition {self} does not cover sites 0..{n_sites - 1}")

    def __str__(self):
        return f"{list(self.a_sites)}|{list(self.b_sites)}"


def chain_partitions(n_sites: int) -> list[Partition]:
    """First-two/rest and last-two/rest splits of a chain.

    The second split takes the last two sites as its A cluster, i.e. the
    mirror image of the first.
    """
    if n_sites < 2:
        raise ConfigError("a partition needs at least two sites")
    sites = list(range(n_sites))
    if n_sites == 2:
        return [Partition([0], [1]), Partition([1], [0])]
    return [Partition(sites[:2], sites[2:]), Partition(sites[-2:], sites[:-2])]


def first_two_partitions(n_sites: int) -> list[Partition]:
    if n_sites < 3:
        return chain_partitions(n_sites)[:1]
    return [Partition([0, 1], range(2, n_sites))]


SUBPARTITION_RULES: dict[str, Callable[[int], list[Partition]]] = {
    "chain": chain_partitions,
    "first_two": first_two_partitions,
}


@dataclass(frozen=True)
class CMFConfig:
    """Settings for :func:`solve_cmf`.

    ``partitions=None`` means the chain rule for the system size.
    ``init_env`` is ``"uniform_x"`` or a bitstring; a one-character bitstring
    is repeated over the whole environment.  ``first_stage_states`` limits
    how many A states are kept in the first stage (defaults to
    ``states_per_cluster``).  With ``role_selection="variational"`` every
    partition after the first is also tried with A and B swapped, keeping
    whichever order gives the lower compressed-space energy.
    """

    partitions: tuple[Partition, ...] | None = None
    states_per_cluster: int = 2
    first_stage_states: int | None = None
    max_cluster_size: int = 4
    init_env: str = "uniform_x"
    stage_count: int = 3
    role_selection: str = "fixed"
    subpartition: str = "chain"
    max_depth: int = 8
    schmidt_tol: float = SCHMIDT_TOL

    def __post_init__(self):
        if self.partitions is not None:
            object.__setattr__(self, "partitions", tuple(self.partitions))
        if self.states_per_cluster < 1:
            raise ConfigError("states_per_cluster must be >= 1")
        if self.first_stage_states is not None and not (
                1 <= self.first_stage_states <= self.states_per_cluster):
            raise ConfigError("first_stage_states must be in 1..states_per_cluster")
        if self.max_cluster_size < 1:
            raise ConfigError("max_cluster_size must be >= 1")
        if self.stage_count < 1:
            raise ConfigError("stage_count must be >= 1")
        if self.role_selection not in ("fixed", "variational"):
            raise ConfigError(f"unknown role_selection {self.role_selection!r}")
        if self.subpartition not in SUBPARTITION_RULES:
            raise ConfigError(f"unknown subpartition rule {self.subpartition!r}")
        if self.init_env != "uniform_x" and (
                not self.init_env or set(self.init_env) - {"0", "1"}):
            raise ConfigError(f"init_env must be 'uniform_x' or a bitstring, got {self.init_env!r}")
        if self.schmidt_tol <= 0:
            raise ConfigError("schmidt_tol must be positive")

    @property
    def stage1_states(self) -> int:
        return self.first_stage_states or self.states_per_cluster

    def partitions_for(self, n_sites: int) -> list[Partition]:
        parts = list(self.partitions) if self.partitions is not None else chain_partitions(n_sites)
        for p in parts:
            p.check(n_sites)
        return parts

    @classmethod
    def from_dict(cls, data: dict) -> "CMFConfig":
        data = dict(data)
        parts = data.pop("partitions", None)
        if parts == "chain":
            parts = None
        elif parts is not None:
            parsed = []
            for p in parts:
                if isinstance(p, dict):
                    parsed.append(Partition(p["a"], p["b"]))
                else:
                    a, b = p
                    parsed.append(Partition(a, b))
            parts = tuple(parsed)
        known = {f for f in cls.__dataclass_fields__} - {"partitions"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(partitions=parts, **data)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "partitions"}
        out["partitions"] = (None if self.partitions is None else
                             [[list(p.a_sites), list(p.b_sites)] for p in self.partitions])
        return out


# --- data produced by the pipeline ------------------------------------------

_NAMES = ("g", "e")


def index_name(k: int) -> str:
    return _NAMES[k] if k < 2 else f"e{k}"


def name_index(name: str) -> int:
    if name == "g":
        return 0
    if name == "e":
        return 1
    if name.startswith("e") and name[1:].isdigit():
        return int(name[1:])
    raise ValueError(f"bad eigenstate label {name!r}")


@dataclass(frozen=True)
class LabeledEigenstate:
    """Cluster eigenstate with its lineage, e.g. ``"e_g"``: the first excited
    state obtained against the environment state labelled ``"g"``."""

    sites: tuple[int, ...]
    label: str
    state: StateVector
    energy: float

    @property
    def index(self) -> int:
        return name_index(self.label.split("_")[0])

    @property
    def depth(self) -> int:
        return len(self.label.split("_"))


@dataclass(frozen=True)
class ProductPair:
    a: LabeledEigenstate
    b: LabeledEigenstate

    @property
    def state(self) -> StateVector:
        return embed_product(self.a.state, self.b.state)


@dataclass(frozen=True, eq=False)
class CompressedBasis:
    vectors: np.ndarray              # rows, orthonormal
    sites: tuple[int, ...]
    provenance: tuple[tuple, ...]    # (partition index, A label, B label) per row

    def __len__(self):
        return self.vectors.shape[0]

    def gram(self) -> np.ndarray:
        return self.vectors.conj() @ self.vectors.T

    def state(self, k: int) -> StateVector:
        return StateVector(self.sites, self.vectors[k])


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    matrix: np.ndarray
    basis: CompressedBasis

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class CMFResult:
    energy: float
    state: StateVector
    effective: EffectiveHamiltonian
    eff_values: np.ndarray
    eff_vectors: np.ndarray          # columns: eigenvectors of the effective matrix
    partitions: tuple[Partition, ...]  # after role selection
    n_products: int
    dense_solves: dict[int, int]
    recursive_solves: dict[int, int]
    oracle_energy: float | None = None
    fidelity_vs_oracle: float | None = None

    @property
    def basis_dim(self) -> int:
        return self.effective.dim

    @property
    def diagnostics(self) -> dict[int, int]:
        """Reduced-Hamiltonian diagonalizations keyed by cluster size."""
        total = Counter(self.dense_solves)
        total.update(self.recursive_solves)
        return dict(sorted(total.items()))

    def excited_state(self, k: int) -> tuple[float, StateVector]:
        coeffs = self.eff_vectors[:, k]
        return float(self.eff_values[k]), _lift(coeffs, self.effective.basis)


# --- building blocks ---------------------------------------------------------

def initial_env_state(config: CMFConfig, sites: Sequence[int]) -> StateVector:
    """Starting environment state on ``sites``."""
    sites = tuple(sorted(sites))
    if not sites:
        raise ConfigError("environment must have at least one site")
    if config.init_env == "uniform_x":
        dim = 1 << len(sites)
        return StateVector(sites, np.full(dim, 1 / np.sqrt(dim), dtype=complex))
    bits = config.init_env
    if len(bits) == 1:
        bits = bits * len(sites)
    if len(bits) != len(sites):
        raise ConfigError(f"bitstring {config.init_env!r} does not match {len(sites)} sites")
    return StateVector.basis(bits, sites)


def schmidt_orthogonalize(vectors: Sequence[StateVector], tol: float = SCHMIDT_TOL,
                          provenance: Sequence | None = None) -> CompressedBasis:
    """Modified Gram-Schmidt in input order, dropping near-dependent vectors.

    Each vector is projected twice against the accepted ones; vectors left with
    norm below ``tol`` are discarded.
    """
    if not vectors:
        raise CMFError("no vectors to orthogonalize")
    sites = vectors[0].sites
    prov = list(provenance) if provenance is not None else [(k,) for k in range(len(vectors))]
    kept: list[np.ndarray] = []
    kept_prov = []
    for vec, tag in zip(vectors, prov):
        if vec.sites != sites:
            raise CMFError("vectors live on different site sets")
        w = vec.amplitudes.copy()
        for _ in range(2):
            for u in kept:
                w -= np.vdot(u, w) * u
        norm = np.linalg.norm(w)
        if norm < tol:
            continue
        kept.append(w / norm)
        kept_prov.append(tuple(tag))
    if not kept:
        raise CMFError("all vectors dropped during orthogonalization")
    return CompressedBasis(np.array(kept), sites, tuple(kept_prov))


def build_effective(h: SpinHamiltonian, basis: CompressedBasis,
                    h_dense: np.ndarray | None = None) -> EffectiveHamiltonian:
    """Project ``h`` onto the compressed basis."""
    if len(basis.sites) != h.n_sites:
        raise CMFError(f"basis has {len(basis.sites)} sites, Hamiltonian {h.n_sites}")
    if h_dense is None:
        h_dense = to_dense(h)
    q = basis.vectors
    m = q.conj() @ h_dense @ q.T
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
        raise CMFError("effective Hamiltonian is not Hermitian")
    return EffectiveHamiltonian(0.5 * (m + m.conj().T), basis)


def _lift(coeffs: np.ndarray, basis: CompressedBasis) -> StateVector:
    amps = coeffs @ basis.vectors
    return StateVector.from_amplitudes(amps, basis.sites, canonical=True)


# --- the staged iteration ----------------------------------------------------

class _ClusterSolver:
    """Diagonalizes cluster Hamiltonians: dense up to the size cap, CMF above."""

    def __init__(self, config: CMFConfig, depth: int = 0,
                 dense: Counter | None = None, recursive: Counter | None = None):
        self.config = config
        self.depth = depth
        self.dense = Counter() if dense is None else dense
        self.recursive = Counter() if recursive is None else recursive

    def __call__(self, h: SpinHamiltonian, count: int) -> list[tuple[float, StateVector]]:
        if h.n_sites <= self.config.max_cluster_size:
            self.dense[h.n_sites] += 1
            return lowest_states(h, count)
        self.recursive[h.n_sites] += 1
        states = _multilayer(h, self.config, count, self.depth + 1, self.dense, self.recursive)
        return [(s.energy, s.state) for s in states]


def _solve_cluster(h, cluster, env, env_state, count, parent_label, solver):
    reduced = reduce(h, SiteMap(cluster, env), env_state)
    out = []
    for k, (energy, state) in enumerate(solver(reduced, count)):
        label = index_name(k) if parent_label is None else f"{index_name(k)}_{parent_label}"
        out.append(LabeledEigenstate(tuple(cluster), label, state.relabel(cluster), energy))
    return out


def stage_iterate(h: SpinHamiltonian, partition: Partition, config: CMFConfig,
                  cluster_solver=None) -> list[ProductPair]:
    """Run the alternating A/B stages for one partition.

    Stage 1 reduces over the initial environment on B and keeps the lowest
    ``stage1_states`` A states.  Each later stage diagonalizes the other
    cluster against every state from the previous stage.  At the last stage
    only the eigenstate whose index matches the environment state's own index
    is kept (the other "crossing" products are dropped), so with J states per
    cluster and three stages a partition yields J**2 products.  Pairs come
    back ordered by A index, then by B lineage.
    """
    partition.check(h.n_sites)
    solver = cluster_solver or _ClusterSolver(config)
    a, b = partition.a_sites, partition.b_sites
    J = config.states_per_cluster
    env0 = initial_env_state(config, b)
    stage = 1
    try:
        current = _solve_cluster(h, a, b, env0, config.stage1_states, None, solver)
        if config.stage_count == 1:
            init = LabeledEigenstate(b, "init", env0, float("nan"))
            return [ProductPair(s, init) for s in current]
        pairs = []
        for stage in range(2, config.stage_count + 1):
            cluster, env = (a, b) if stage % 2 else (b, a)
            last = stage == config.stage_count
            following = []
            for parent in current:
                states = _solve_cluster(h, cluster, env, parent.state, J, parent.label, solver)
                if last:
                    if parent.index >= len(states):
                        raise CMFError(f"no eigenstate {parent.index} to pair with {parent.label}")
                    kept = states[parent.index]
                    pairs.append(ProductPair(kept, parent) if cluster == a
                                 else ProductPair(parent, kept))
                else:
                    following.extend(states)
            current = following
    except CMFError as exc:
        raise CMFError(f"partition {partition}, stage {stage}: {exc}") from exc
    except (ArithmeticError, ValueError) as exc:
        raise CMFError(f"partition {partition}, stage {stage}: {exc}") from exc
    if not pairs:
        raise CMFError(f"partition {partition}: no product states selected")
    return sorted(pairs, key=_pair_key)


def _label_key(label: str) -> tuple[int, ...]:
    return tuple(name_index(part) for part in label.split("_")) if label != "init" else ()


def _pair_key(pair: ProductPair) -> tuple:
    # A index first, then the B lineage, read left to right
    return pair.a.index, _label_key(pair.b.label), _label_key(pair.a.label)


def _pool(h: SpinHamiltonian, h_dense: np.ndarray, partitions: Sequence[Partition],
          config: CMFConfig, solver: _ClusterSolver):
    """Collect product states from all partitions (with optional role choice)."""
    vectors: list[StateVector] = []
    prov: list[tuple] = []
    chosen = []
    for k, part in enumerate(partitions):
        options = [part]
        if config.role_selection == "variational" and k > 0:
            options.append(part.swapped())
        best = None
        for option in options:
            pairs = stage_iterate(h, option, config, solver)
            cand_vecs = vectors + [p.state for p in pairs]
            cand_prov = prov + [(k, p.a.label, p.b.label) for p in pairs]
            if len(options) == 1:
                best = (None, option, cand_vecs, cand_prov)
                break
            basis = schmidt_orthogonalize(cand_vecs, config.schmidt_tol, cand_prov)
            energy = float(eigh(build_effective(h, basis, h_dense).matrix).values[0])
            log.debug("partition %d as %s: energy %.12g", k, option, energy)
            if best is None or energy < best[0] - 1e-12:
                best = (energy, option, cand_vecs, cand_prov)
        _, option, vectors, prov = best
        chosen.append(option)
    return vectors, prov, chosen


def _compress(h, config, partitions, solver):
    h_dense = to_dense(h)
    vectors, prov, chosen = _pool(h, h_dense, partitions, config, solver)
    basis = schmidt_orthogonalize(vectors, config.schmidt_tol, prov)
    eff = build_effective(h, basis, h_dense)
    dec = eigh(eff.matrix)
    return eff, dec, chosen, len(vectors)


def _multilayer(h, config, count, depth, dense, recursive) -> list[LabeledEigenstate]:
    if depth > config.max_depth:
        raise RecursionDepthError(f"recursion depth {depth} exceeds {config.max_depth}")
    solver = _ClusterSolver(config, depth, dense, recursive)
    parts = SUBPARTITION_RULES[config.subpartition](h.n_sites)
    eff, dec, _, _ = _compress(h, config, parts, solver)
    if count > eff.dim:
        raise CMFError(f"{count} states requested from a {eff.dim}-dimensional compressed space")
    sites = tuple(range(h.n_sites))
    return [LabeledEigenstate(sites, index_name(k), _lift(dec.vector(k), eff.basis),
                              float(dec.values[k])) for k in range(count)]


def multilayer_subsolver(h_cluster: SpinHamiltonian, config: CMFConfig,
                         count: int | None = None) -> list[LabeledEigenstate]:
    """Lowest ``count`` (default J) approximate eigenstates of a cluster.

    Clusters within ``max_cluster_size`` are diagonalized exactly; larger ones
    are solved by CMF with the configured subpartition rule, recursively.
    """
    count = count or config.states_per_cluster
    if h_cluster.n_sites <= config.max_cluster_size:
        sites = tuple(range(h_cluster.n_sites))
        return [LabeledEigenstate(sites, index_name(k), s, e)
                for k, (e, s) in enumerate(lowest_states(h_cluster, count))]
    return _multilayer(h_cluster, config, count, 1, Counter(), Counter())


def solve_cmf(h: SpinHamiltonian, config: CMFConfig | None = None,
              oracle: tuple[float, StateVector] | None = None) -> CMFResult:
    """Approximate ground state of ``h`` in the CMF compressed space.

    ``oracle`` is an exact ``(energy, state)`` pair; when given, the result
    carries the fidelity against it.
    """
    config = config or CMFConfig()
    dense, recursive = Counter(), Counter()
    if h.n_sites < 2:
        # nothing to partition: the compressed space is the full space
        dec_full = eigh(to_dense(h))
        basis = CompressedBasis(np.eye(1 << h.n_sites, dtype=complex),
                                tuple(range(h.n_sites)),
                                tuple((0, "full", str(k)) for k in range(1 << h.n_sites)))
        eff = EffectiveHamiltonian(to_dense(h), basis)
        dec, chosen, n_products = dec_full, [], len(basis)
    else:
        parts = config.partitions_for(h.n_sites)
        solver = _ClusterSolver(config, 0, dense, recursive)
        eff, dec, chosen, n_products = _compress(h, config, parts, solver)
    energy = float(dec.values[0])
    state = _lift(dec.vector(0), eff.basis)
    fid = None
    oracle_energy = None
    if oracle is not None:
        oracle_energy = float(oracle[0])
        fid = fidelity(oracle[1], state)
    return CMFResult(energy=energy, state=state, effective=eff, eff_values=dec.values,
                     eff_vectors=dec.vectors, partitions=tuple(chosen),
                     n_products=n_products, dense_solves=dict(sorted(dense.items())),
                     recursive_solves=dict(sorted(recursive.items())),
                     oracle_energy=oracle_energy, fidelity_vs_oracle=fid)


def truncated_ground_state(result: CMFResult, keep: int) -> tuple[float, StateVector]:
    """Re-solve in the ``keep`` basis vectors with the largest weight in the
    CMF ground state."""
    eff = result.effective
    if not 1 <= keep <= eff.dim:
        raise ValueError(f"keep must be in 1..{eff.dim}, got {keep}")
    weights = np.abs(result.eff_vectors[:, 0]) ** 2
    order = sorted(range(eff.dim), key=lambda g: (-round(weights[g], 12), g))
    idx = np.array(sorted(order[:keep]))
    sub = eff.matrix[np.ix_(idx, idx)]
    dec = eigh(sub)
    sub_basis = CompressedBasis(eff.basis.vectors[idx], eff.basis.sites,
                                tuple(eff.basis.provenance[i] for i in idx))
    return float(dec.values[0]), _lift(dec.vector(0), sub_basis)
