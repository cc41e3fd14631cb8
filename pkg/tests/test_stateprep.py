import numpy as np
import pytest

from cmfsolver.engine import solve_cmf
from cmfsolver.linalg import eigh, ground_state
from cmfsolver.models import experiment_cluster_hamiltonian, experiment_config, three_spin_hamiltonian
from cmfsolver.pauli import SpinHamiltonian, parse_hamiltonian, to_dense
from cmfsolver.states import StateVector, fidelity
from cmfsolver.stateprep import (DragSchedule, DriveDecomposition, StatePrepError, VQEConfig,
                                 adiabatic_drag, default_drives, extended_hamiltonian,
                                 hyperspherical_vector, split_drives, vqe_compressed)

# a cluster Hamiltonian with both drives present
GENERIC_HA = parse_hamiltonian("-0.5 II\n1 ZI\n1 IZ\n0.7 IX\n1.3 XX")


def test_split_and_endpoints():
    d = split_drives(GENERIC_HA, ["IX"], ["XX"])
    assert d.base.coeffs == {"II": -0.5, "ZI": 1.0, "IZ": 1.0}
    assert extended_hamiltonian(d, 0, 0).coeffs == d.base.coeffs
    assert extended_hamiltonian(d, 1, 1).coeffs == GENERIC_HA.coeffs
    h1 = extended_hamiltonian(d, 0, 0.1)
    assert h1.coeff("XX") == pytest.approx(0.13) and h1.coeff("IX") == 0
    assert default_drives(GENERIC_HA) == d


def test_split_errors():
    with pytest.raises(StatePrepError):
        split_drives(GENERIC_HA, ["XX"], ["XX"])
    with pytest.raises(StatePrepError):
        split_drives(GENERIC_HA, ["X"], [])
    bad = DriveDecomposition(GENERIC_HA, SpinHamiltonian.zero(3), SpinHamiltonian.zero(2))
    with pytest.raises(StatePrepError):
        extended_hamiltonian(bad, 1, 1)


@pytest.mark.parametrize("a, b", [((0.3, 0.2), (0.5, 0.9)), ((1, 0), (0, 1)), ((-1, 2), (2, -1))])
def test_extended_hamiltonian_is_affine(a, b):
    d = default_drives(GENERIC_HA)
    lhs = extended_hamiltonian(d, *a) + extended_hamiltonian(d, *b)
    rhs = extended_hamiltonian(d, a[0] + b[0], a[1] + b[1]) + d.base
    np.testing.assert_allclose(to_dense(lhs), to_dense(rhs), atol=1e-12)


def test_experiment_cluster_hamiltonian():
    h = experiment_cluster_hamiltonian(1.0, 1.0, 0.1)
    assert h.coeffs == {"II": -1.0, "ZI": 1.0, "IZ": 1.0, "XX": 1.0}


def test_schedule_validation():
    with pytest.raises(StatePrepError):
        DragSchedule(waypoints=((0, 0),))
    with pytest.raises(StatePrepError):
        DragSchedule(steps_per_segment=0)
    with pytest.raises(StatePrepError):
        DragSchedule(dt=0)
    s = DragSchedule(steps_per_segment=2)
    path = list(s.path())
    assert len(path) == s.total_steps == 6
    assert path[1] == (0.0, 0.1) and path[-1] == (1.0, 1.0)


def test_drag_reaches_ground_state_and_preserves_norm():
    d = default_drives(GENERIC_HA)
    res = adiabatic_drag(d, DragSchedule(steps_per_segment=400))
    assert res.fidelity >= 0.999
    assert res.target_energy == pytest.approx(ground_state(GENERIC_HA)[0])
    assert len(res.trace) == 1201
    assert np.all(np.isfinite(res.trace.energies))
    assert abs(np.linalg.norm(res.final.amplitudes) - 1) < 1e-9


def test_drag_intermediate_norms():
    from cmfsolver.linalg import propagate
    d = default_drives(GENERIC_HA)
    sched = DragSchedule(steps_per_segment=20)
    state = ground_state(d.base)[1]
    for l1, l2 in sched.path():
        state = propagate(extended_hamiltonian(d, l1, l2), sched.dt, state)
        assert abs(np.linalg.norm(state.amplitudes) - 1) < 1e-9


def test_sudden_limit():
    d = default_drives(GENERIC_HA)
    sched = DragSchedule(waypoints=((0, 0), (1, 1)), steps_per_segment=1, dt=1e-9)
    res = adiabatic_drag(d, sched)
    start = ground_state(d.base)[1]
    assert fidelity(res.final, start) == pytest.approx(1.0, abs=1e-12)
    assert res.fidelity < 0.99


def test_zero_drives_are_stationary():
    base = parse_hamiltonian("1 ZI\n0.5 IZ\n0.2 ZZ")
    zero = SpinHamiltonian.zero(2)
    d = DriveDecomposition(base, zero, zero)
    start = ground_state(base)[1]
    for sched in (DragSchedule(), DragSchedule(steps_per_segment=7, dt=0.9)):
        res = adiabatic_drag(d, sched)
        assert fidelity(res.final, start) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(res.trace.energies, res.trace.energies[0], atol=1e-12)


def test_drag_precondition():
    d = default_drives(GENERIC_HA)
    with pytest.raises(StatePrepError):
        adiabatic_drag(d, DragSchedule(), initial=StateVector.basis("00"))


@pytest.mark.parametrize("g2", [0.1, 1.0, 2.0])
def test_doubling_drag_time_does_not_hurt(g2):
    # holds for the three-spin cluster instances; a generic drive can oscillate
    d = default_drives(experiment_cluster_hamiltonian(1.0, g2, 0.1))
    fids = [adiabatic_drag(d, DragSchedule(steps_per_segment=s)).fidelity for s in (100, 200, 400)]
    assert fids[1] >= fids[0] - 1e-6
    assert fids[2] >= fids[1] - 1e-6


# --- VQE ---------------------------------------------------------------------------------

def test_hyperspherical_vector_is_unit(rng):
    for dim in (1, 2, 5):
        for complex_ in (False, True):
            n = (dim - 1) * (2 if complex_ else 1)
            v = hyperspherical_vector(rng.normal(size=n), dim, complex_)
            assert np.linalg.norm(v) == pytest.approx(1.0)


def test_vqe_one_dimensional():
    res = vqe_compressed(np.array([[-1.25]]))
    assert res.energy == -1.25
    assert res.iterations == 0 and res.converged


def test_vqe_two_level_closed_form():
    res = vqe_compressed(np.diag([0.0, 1.0]))
    assert res.converged
    assert res.energy == pytest.approx(0.0, abs=1e-7)


def test_vqe_complex_matrix(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    a = (a + a.conj().T) / 2
    res = vqe_compressed(a)
    assert res.params.size == 4
    assert res.energy == pytest.approx(eigh(a).values[0], abs=1e-6)


def test_vqe_experiment_space():
    h = three_spin_hamiltonian(1.0, 1.0, 0.1)
    e0, psi = ground_state(h)
    result = solve_cmf(h, experiment_config())
    res = vqe_compressed(result.effective, oracle=psi)
    emin = eigh(result.effective.matrix).values[0]
    assert res.converged and res.iterations <= 200
    assert emin - 1e-9 <= res.energy <= emin + 1e-6
    assert np.all(np.diff(res.trace.energies) <= 0)
    lifted = res.lift(result.effective)
    assert fidelity(lifted, psi) == pytest.approx(result.fidelity_vs_oracle or
                                                  fidelity(result.state, psi), abs=1e-5)
    assert res.trace.points[-1].fidelity is not None


def test_vqe_iteration_cap_flags_result():
    res = vqe_compressed(np.diag([0.0, 1.0, 2.0, 3.0]), VQEConfig(max_iters=1))
    assert not res.converged
    assert res.iterations == 1


def test_vqe_config_and_input_validation():
    with pytest.raises(StatePrepError):
        VQEConfig(max_iters=0)
    with pytest.raises(StatePrepError):
        vqe_compressed(np.diag([0.0, 1.0]), oracle=StateVector.basis("0"))
