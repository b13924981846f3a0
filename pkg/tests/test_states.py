import math

import numpy as np
import pytest

from quantumness.husimi import integrate_sphere, sphere_grid, spin_coherent_bras
from quantumness.measures import m_infinity_spin
from quantumness.states import (
    FockState,
    GaussianPure,
    SphereVec,
    SpinDensity,
    SpinState,
    TruncationError,
    cat_normalization,
    coherent_overlaps,
    displace,
    make_cat,
    make_coherent_cv,
    make_dicke,
    make_fock,
    make_gaussian_fock,
    make_photon_added,
    make_spin_coherent,
    make_squeezed,
    make_yurke_stoler,
    photon_added_mean_number,
    random_spin_state,
    rotate_spin,
    spin_matrices,
)
from quantumness.stellar import extract_constellation, match_points, rotation_matrix


def test_coherent_vacuum_and_alpha1():
    assert np.allclose(make_coherent_cv(0).amplitudes, [1.0])
    psi = make_coherent_cv(1.0, 1e-12)
    assert psi.amplitudes[0] == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert psi.amplitudes[1] == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_coherent_overlap_law(rng):
    for _ in range(10):
        a, b = (rng.uniform(-2, 2) + 1j * rng.uniform(-2, 2) for _ in range(2))
        if abs(a) > 3 or abs(b) > 3:
            continue
        pa, pb = make_coherent_cv(a), make_coherent_cv(b)
        assert abs(pa.overlap(pb)) ** 2 == pytest.approx(math.exp(-abs(a - b) ** 2), abs=1e-10)
    ov = make_coherent_cv(0.5).overlap(make_coherent_cv(1.0))
    assert abs(ov) ** 2 == pytest.approx(0.7788008, abs=1e-7)


def test_coherent_tolerance_validation():
    with pytest.raises(ValueError):
        make_coherent_cv(1.0, cutoff_tol=0.5)


def test_fock():
    assert np.allclose(make_fock(0).amplitudes, [1])
    a = make_fock(3).amplitudes
    assert a.size == 4 and a[3] == 1
    assert make_fock(3).family == {"family": "fock", "n": 3}


def test_states_are_immutable():
    psi = make_fock(2)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1


def test_normalization_enforced():
    with pytest.raises(ValueError):
        FockState(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        SpinState(1, np.array([1.0, 0.0, 0.0]))


def test_cat_parity_and_normalizer():
    even = make_cat(1.0, +1)
    odd = make_cat(1.0, -1)
    assert np.allclose(even.amplitudes[1::2], 0)
    assert np.allclose(odd.amplitudes[0::2], 0)
    assert cat_normalization(1.0, +1) == pytest.approx(2 * (1 + math.exp(-2)), abs=1e-12)
    assert cat_normalization(1.0, +1) == pytest.approx(2.2706706, abs=1e-7)


def test_cat_odd_at_zero_is_degenerate():
    with pytest.raises(ValueError):
        make_cat(0.0, -1)


def test_yurke_stoler_endpoints():
    b = 0.8 + 0.3j
    assert abs(make_yurke_stoler(b, 0.0).overlap(make_cat(b, +1))) == pytest.approx(1, abs=1e-12)
    assert abs(make_yurke_stoler(b, math.pi).overlap(make_cat(b, -1))) == pytest.approx(1, abs=1e-12)
    assert abs(make_yurke_stoler(b, math.pi / 2).overlap(make_coherent_cv(b))) == pytest.approx(1, abs=1e-12)


def test_photon_added():
    b = 0.7 - 0.2j
    assert abs(make_photon_added(b, 0).overlap(make_coherent_cv(b))) == pytest.approx(1, abs=1e-12)
    assert abs(make_photon_added(0, 2).overlap(make_fock(2))) == pytest.approx(1, abs=1e-14)
    psi = make_photon_added(1.0, 1)
    assert psi.mean_number() == pytest.approx(2.5, abs=1e-10)
    assert photon_added_mean_number(1.0, 1) == pytest.approx(2.5, abs=1e-12)
    for m in (1, 2, 3):
        psi = make_photon_added(1.3, m)
        assert psi.mean_number() == pytest.approx(photon_added_mean_number(1.3, m), abs=1e-10)


def test_gaussian_examples():
    b = 0.4 + 0.9j
    assert abs(make_gaussian_fock(GaussianPure(b, 0.0)).overlap(make_coherent_cv(b))) == pytest.approx(1, abs=1e-12)
    sq = make_gaussian_fock(GaussianPure(0j, 1.0))
    assert np.allclose(sq.amplitudes[1::2], 0)
    assert abs(sq.amplitudes[0]) == pytest.approx(1 / math.sqrt(math.cosh(1.0)), abs=1e-12)
    # sech(1)^(1/2) = 0.8050182 (a printed 0.8050024 is a rounding slip)
    assert abs(sq.amplitudes[0]) == pytest.approx(0.8050182, abs=1e-7)
    assert sq.mean_number() == pytest.approx(math.sinh(1.0) ** 2, abs=1e-10)


def test_gaussian_quadrature_variance():
    from quantumness.metrology import cv_covariance

    C = cv_covariance(make_squeezed(0.5))
    assert C[0, 0] == pytest.approx(math.exp(-1.0) / 2, abs=1e-12)
    assert C[1, 1] == pytest.approx(math.exp(1.0) / 2, abs=1e-12)


def test_gaussian_too_large():
    with pytest.raises(TruncationError):
        make_gaussian_fock(GaussianPure(0j, 6.5))


def test_displace_matches_coherent():
    psi = displace(make_fock(0), 0.6 - 0.4j)
    assert abs(psi.overlap(make_coherent_cv(0.6 - 0.4j))) == pytest.approx(1, abs=1e-12)


def test_coherent_overlaps_against_fock_sum():
    psi = make_cat(1.1, -1)
    al = np.array([0.3 + 0.1j, -1.2j, 2.0])
    direct = [np.vdot(make_coherent_cv(a).amplitudes[: psi.amplitudes.size],
                      psi.amplitudes[: make_coherent_cv(a).amplitudes.size]) for a in al]
    assert np.allclose(coherent_overlaps(al, psi.amplitudes), direct, atol=1e-12)


def test_dicke():
    assert np.allclose(make_dicke(2, 2).amplitudes, [0, 0, 1])
    assert np.allclose(make_dicke(2, 0).amplitudes, [0, 1, 0])
    assert np.allclose(make_dicke(4, 0).amplitudes, [0, 0, 1, 0, 0])
    with pytest.raises(ValueError):
        make_dicke(2, 1)
    with pytest.raises(ValueError):
        make_dicke(2, 4)


def test_spin_coherent_poles():
    psi = make_spin_coherent(4, SphereVec(0.0, 0.0))
    assert np.allclose(np.abs(psi.amplitudes), [1, 0, 0, 0, 0])
    psi = make_spin_coherent(4, SphereVec(math.pi, 0.7))
    assert np.allclose(np.abs(psi.amplitudes), [0, 0, 0, 0, 1])


def test_spin_coherent_antipodal_overlap():
    n = SphereVec(1.0, 2.0)
    a = make_spin_coherent(5, n).amplitudes
    b = make_spin_coherent(5, n.antipode()).amplitudes
    assert abs(np.vdot(a, b)) < 1e-14


@pytest.mark.parametrize("two_S", [1, 2, 5, 10])
def test_spin_coherent_is_lowest_eigenvector(two_S, rng):
    for _ in range(5):
        n = SphereVec(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        psi = make_spin_coherent(two_S, n).amplitudes
        Sn = sum(c * M for c, M in zip(n.vector, spin_matrices(two_S)))
        assert np.allclose(Sn @ psi, -two_S / 2 * psi, atol=1e-12)


def test_spin_coherent_overlap_law(rng):
    for _ in range(5):
        n1 = SphereVec(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        n2 = SphereVec(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        ov = np.vdot(make_spin_coherent(6, n1).amplitudes, make_spin_coherent(6, n2).amplitudes)
        assert abs(ov) ** 2 == pytest.approx((0.5 * (1 + n1.vector @ n2.vector)) ** 6, abs=1e-12)


@pytest.mark.parametrize("two_S", range(0, 11))
def test_resolution_of_unity(two_S):
    g = sphere_grid(two_S + 2)
    B = spin_coherent_bras(two_S, g.theta, g.phi)
    P = np.einsum("pi,pj->pij", B.conj(), B)
    I = integrate_sphere(P, g, two_S)
    assert np.max(np.abs(I - np.eye(two_S + 1))) < 1e-10


def test_rotation_identity_and_norm(rng):
    psi = random_spin_state(5, rng)
    ax = SphereVec(0.3, 1.2)
    assert np.allclose(rotate_spin(psi, ax, 0.0).amplitudes, psi.amplitudes)
    out = rotate_spin(psi, ax, 1.234)
    assert np.linalg.norm(out.amplitudes) == pytest.approx(1, abs=1e-12)


def test_rotation_2pi_double_cover(rng):
    psi = random_spin_state(3, rng)
    out = rotate_spin(psi, SphereVec(0.9, 0.4), 2 * math.pi)
    assert np.allclose(out.amplitudes, -psi.amplitudes, atol=1e-12)
    psi = random_spin_state(4, rng)
    out = rotate_spin(psi, SphereVec(0.9, 0.4), 2 * math.pi)
    assert np.allclose(out.amplitudes, psi.amplitudes, atol=1e-12)


def test_rotated_highest_weight_is_coherent():
    psi = make_dicke(6, 6)
    out = rotate_spin(psi, SphereVec(1.1, 0.5), 0.8)
    assert m_infinity_spin(out)[0] == pytest.approx(1.0, abs=1e-10)


def test_rotation_commutes_with_constellation(rng):
    for two_S in (3, 6):
        psi = random_spin_state(two_S, rng)
        ax, chi = SphereVec(0.4, 2.2), 0.9
        P = extract_constellation(psi).points()
        Q = extract_constellation(rotate_spin(psi, ax, chi)).points()
        # exp(i chi S.a) moves the stars by -chi about a
        R = rotation_matrix(ax.vector, -chi)
        assert match_points(P @ R.T, Q) < 1e-8


def test_spin_density_checks():
    with pytest.raises(ValueError):
        SpinDensity(1, np.diag([0.5, 0.6, 0.0]))
    with pytest.raises(ValueError):
        SpinDensity(1, np.array([[0.5, 0.1, 0], [0.2, 0.5, 0], [0, 0, 0]]))
    mm = SpinDensity.maximally_mixed(3)
    assert mm.purity() == pytest.approx(0.25)


def test_sphere_vec_roundtrip(rng):
    for _ in range(10):
        v = rng.normal(size=3)
        sv = SphereVec.from_vector(v)
        assert np.allclose(sv.vector, v / np.linalg.norm(v))
        assert 0 <= sv.phi < 2 * math.pi
