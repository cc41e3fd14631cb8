"""Model Hamiltonians and the CMF settings used to study them.

Couplings are in units of the single-spin field ``g1``.
"""
from __future__ import annotations

from .engine import CMFConfig, Partition
from .pauli import SiteMap, SpinHamiltonian, reduce
from .states import StateVector


def _axes(n: int, ops: dict[int, str]) -> str:
    return "".join(ops.get(k, "I") for k in range(n))


def chain_hamiltonian(n: int, g1: float = 1.0, g2: float = 2.0) -> SpinHamiltonian:
    """``g1 * sum Z_i + g2 * sum X_i X_{i+1}`` on an open chain."""
    terms = [(g1, _axes(n, {i: "Z"})) for i in range(n)]
    terms += [(g2, _axes(n, {i: "X", i + 1: "X"})) for i in range(n - 1)]
    return SpinHamiltonian.from_terms(n, terms)


def three_spin_hamiltonian(g1: float = 1.0, g2: float = 1.0, g3: float = 0.1) -> SpinHamiltonian:
    """``g1 (Z1+Z2+Z3) + g2 (X1X2 + X2X3) + g3 X1X2X3``."""
    return SpinHamiltonian.from_terms(3, [
        (g1, "ZII"), (g1, "IZI"), (g1, "IIZ"),
        (g2, "XXI"), (g2, "IXX"), (g3, "XXX"),
    ])


def chain_config(**overrides) -> CMFConfig:
    """Chain study: uniform-X start, J=2, both end splits, 4-spin dense cap.

    Which cluster of the second split is solved first is chosen variationally.
    """
    settings = dict(partitions=None, states_per_cluster=2, max_cluster_size=4,
                    init_env="uniform_x", role_selection="variational")
    settings.update(overrides)
    return CMFConfig(**settings)


THREE_SPIN_PARTITIONS = (Partition([0, 1], [2]), Partition([1, 2], [0]))


def three_spin_config(**overrides) -> CMFConfig:
    """Three-spin network with J=2 throughout, starting from B = |1>."""
    settings = dict(partitions=THREE_SPIN_PARTITIONS, states_per_cluster=2,
                    init_env="1", role_selection="fixed")
    settings.update(overrides)
    return CMFConfig(**settings)


def experiment_config(**overrides) -> CMFConfig:
    """Three-spin protocol keeping only the first-stage ground state of A,
    which leaves two products per split and a 4-D compressed space."""
    return three_spin_config(first_stage_states=1, **overrides)


def experiment_cluster_hamiltonian(g1: float = 1.0, g2: float = 1.0,
                                   g3: float = 0.1) -> SpinHamiltonian:
    """First-stage A Hamiltonian of the three-spin protocol: sites {0, 1}
    averaged over B = |1> on site 2."""
    h = three_spin_hamiltonian(g1, g2, g3)
    return reduce(h, SiteMap([0, 1], [2]), StateVector.basis("1", [2]))
