"""Z-moment behaviour of the three-spin ground state across coupling ratios."""
import numpy as np
import pytest

from cmfsolver.linalg import ground_state
from cmfsolver.models import three_spin_hamiltonian
from cmfsolver.states import moment_mean_variance, z_moment_distribution


def exact_hist(g2, g3):
    return z_moment_distribution(ground_state(three_spin_hamiltonian(1.0, g2, g3))[1])


def entropy(hist):
    p = np.array([v for v in hist.values() if v > 0])
    return float(-(p * np.log(p)).sum())


def test_weak_coupling_is_ferromagnetic():
    assert exact_hist(0.1, 0.1)[-3] > 0.99


def test_variance_grows_with_pair_coupling():
    var = [moment_mean_variance(exact_hist(g2, 0.1))[1] for g2 in (0.1, 1.0, 2.0)]
    assert var[0] <= var[1] <= var[2]


def test_distribution_spreads_with_three_body_coupling():
    ent = [entropy(exact_hist(2.0, g3)) for g3 in (0.1, 1.0, 2.0)]
    assert ent[0] < ent[1] < ent[2]


@pytest.mark.xfail(strict=True, reason="exact variance falls slightly (3.54, 3.27, 3.26) "
                                       "while the distribution spreads over more bins")
def test_variance_grows_with_three_body_coupling():
    var = [moment_mean_variance(exact_hist(2.0, g3))[1] for g3 in (0.1, 1.0, 2.0)]
    assert var[0] <= var[1] <= var[2]
