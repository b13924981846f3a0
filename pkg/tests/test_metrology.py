import math

import numpy as np
import pytest

from quantumness.extremal import find_king
from quantumness.metrology import (
    avg_crb_cv,
    avg_crb_spin,
    avg_crb_spin_quadrature,
    avg_qfi_cv,
    avg_qfi_cv_quadrature,
    avg_qfi_spin,
    avg_qfi_spin_quadrature,
    cv_covariance,
    husimi_moment_cv,
    isotropy_defect,
    qfi_displacement,
    qfi_rotation,
    spin_covariance,
)
from quantumness.states import (
    SphereVec,
    make_cat,
    make_coherent_cv,
    make_dicke,
    make_fock,
    make_spin_coherent,
    make_squeezed,
    random_fock_state,
    random_spin_state,
)

Z = SphereVec(0.0, 0.0)
X = SphereVec(math.pi / 2, 0.0)


@pytest.fixture(scope="module")
def tetra_king():
    return find_king(4, 2, restarts=16, seed=3).state


def test_qfi_displacement_examples():
    for th in (0.0, 0.4, 2.0):
        assert qfi_displacement(make_coherent_cv(0.3 + 1j), th) == pytest.approx(2.0, abs=1e-10)
        assert qfi_displacement(make_fock(3), th) == pytest.approx(14.0, abs=1e-12)
    sq = make_squeezed(1.0)
    a, b = qfi_displacement(sq, 0.0), qfi_displacement(sq, math.pi / 2)
    assert sorted([a, b]) == pytest.approx([2 * math.exp(-2), 2 * math.exp(2)], abs=1e-10)
    assert a * b == pytest.approx(4.0, abs=1e-10)


def test_avg_qfi_cv_examples():
    assert avg_qfi_cv(make_coherent_cv(1.5)) == pytest.approx(2.0, abs=1e-12)
    assert avg_qfi_cv(make_fock(3)) == 14.0
    assert avg_qfi_cv(make_cat(1.0, 1)) == pytest.approx(2 + 4 * math.tanh(1.0), abs=1e-10)
    assert 2 + 4 * math.tanh(1.0) == pytest.approx(5.0463767, abs=1e-7)


def test_avg_qfi_cv_matches_phase_average(rng):
    for psi in [make_coherent_cv(0.4j), make_squeezed(0.7, 0.3), random_fock_state(6, rng)]:
        assert avg_qfi_cv(psi) == pytest.approx(avg_qfi_cv_quadrature(psi), abs=1e-10)


def test_avg_crb_cv_examples():
    assert avg_crb_cv(make_coherent_cv(1 - 1j)) == pytest.approx(0.5, abs=1e-10)
    assert avg_crb_cv(make_squeezed(1.3, 0.2)) == pytest.approx(0.5, abs=1e-9)
    assert avg_crb_cv(make_fock(1)) == pytest.approx(1 / 6, abs=1e-12)


def test_cv_covariance_psd(rng):
    for _ in range(10):
        C = cv_covariance(random_fock_state(8, rng))
        assert np.allclose(C, C.T)
        assert np.linalg.eigvalsh(C).min() > -1e-10


def test_qfi_rotation_examples():
    top = make_dicke(4, 4)
    assert abs(qfi_rotation(top, Z)) < 1e-14
    assert qfi_rotation(top, X) == pytest.approx(4.0, abs=1e-12)
    assert qfi_rotation(make_dicke(2, 0), X) == pytest.approx(4.0, abs=1e-12)


def test_avg_qfi_spin_examples(tetra_king):
    assert avg_qfi_spin(make_spin_coherent(2, SphereVec(0.5, 0.5))) == pytest.approx(4 / 3, abs=1e-12)
    assert avg_qfi_spin(make_dicke(2, 0)) == pytest.approx(8 / 3, abs=1e-12)
    assert avg_qfi_spin(tetra_king) == pytest.approx(8.0, abs=1e-9)


def test_avg_qfi_spin_matches_axis_average(rng):
    for tS in (1, 4, 7):
        psi = random_spin_state(tS, rng)
        assert avg_qfi_spin(psi) == pytest.approx(avg_qfi_spin_quadrature(psi), abs=1e-10)


def test_avg_crb_spin_examples(tetra_king):
    assert avg_crb_spin(make_spin_coherent(3, SphereVec(1.0, 1.0))) == math.inf
    assert avg_crb_spin(make_dicke(2, 0)) == math.inf
    assert avg_crb_spin(tetra_king) == pytest.approx(0.125, abs=1e-6)


def test_avg_crb_spin_quadrature_cross_check(rng):
    checked = 0
    while checked < 3:
        psi = random_spin_state(6, rng)
        if np.linalg.eigvalsh(spin_covariance(psi)).min() > 0.2:
            assert avg_crb_spin(psi) == pytest.approx(avg_crb_spin_quadrature(psi), rel=1e-8)
            checked += 1


def test_jensen_chain_cv(rng):
    for _ in range(50):
        psi = random_fock_state(int(rng.integers(1, 10)), rng)
        assert avg_crb_cv(psi) >= 1 / avg_qfi_cv(psi) - 1e-10


def test_jensen_chain_spin(rng, tetra_king):
    for _ in range(50):
        psi = random_spin_state(int(rng.integers(1, 10)), rng)
        assert avg_crb_spin(psi) >= 1 / avg_qfi_spin(psi) - 1e-10
    # equality on isotropic covariance
    assert avg_crb_spin(tetra_king) == pytest.approx(1 / avg_qfi_spin(tetra_king), abs=1e-8)


def test_jensen_equality_for_isotropic_cv():
    psi = make_fock(2)
    assert avg_crb_cv(psi) == pytest.approx(1 / avg_qfi_cv(psi), abs=1e-12)


def test_avg_qfi_spin_bound(rng, tetra_king):
    for _ in range(30):
        tS = int(rng.integers(1, 10))
        psi = random_spin_state(tS, rng)
        S = tS / 2
        assert avg_qfi_spin(psi) <= 4 / 3 * S * (S + 1) + 1e-10
    assert avg_qfi_spin(tetra_king) == pytest.approx(4 / 3 * 2 * 3, abs=1e-9)


def test_isotropy_defect(tetra_king):
    assert isotropy_defect(spin_covariance(tetra_king)) == pytest.approx(1.0, abs=1e-6)
    assert isotropy_defect(spin_covariance(make_dicke(2, 0))) == math.inf


def test_husimi_moments_of_fock_vanish():
    for n in (0, 1, 4):
        psi = make_fock(n)
        for k in (1, 2, 3):
            assert abs(husimi_moment_cv(psi, k)) < 1e-10


def test_vanishing_moments_give_isotropic_covariance():
    # a superposition of |0> and |3> has <a> = <a^2> = 0
    from quantumness.states import FockState

    psi = FockState(np.array([0.6, 0, 0, 0.8j]))
    assert abs(husimi_moment_cv(psi, 1)) < 1e-10 and abs(husimi_moment_cv(psi, 2)) < 1e-10
    C = cv_covariance(psi)
    assert abs(C[0, 0] - C[1, 1]) < 1e-9 and abs(C[0, 1]) < 1e-9
