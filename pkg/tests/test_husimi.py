import math

import numpy as np
import pytest

from quantumness.husimi import (
    husimi_cv,
    husimi_cv_points,
    husimi_spin,
    husimi_spin_points,
    integrate_plane,
    integrate_sphere,
    plane_grid,
    sphere_grid,
)
from quantumness.specfun import sph_harm_table
from quantumness.states import (
    SphereVec,
    make_cat,
    make_coherent_cv,
    make_dicke,
    make_fock,
    make_photon_added,
    make_spin_coherent,
    make_squeezed,
    random_fock_state,
    random_spin_state,
    to_density,
)


def test_husimi_cv_examples():
    assert husimi_cv(make_coherent_cv(0.7 - 0.2j), 0.7 - 0.2j) == pytest.approx(1.0, abs=1e-14)
    assert husimi_cv(make_fock(0), 1.0) == pytest.approx(math.exp(-1), abs=1e-15)
    # the Fock ring peaks at |alpha|^2 = n
    assert husimi_cv(make_fock(1), 1j) == pytest.approx(math.exp(-1), abs=1e-15)


def test_husimi_cv_bounded(rng):
    psi = make_cat(1.3, sign=-1)
    z = rng.normal(size=500) * 2 + 1j * rng.normal(size=500) * 2
    Q = husimi_cv_points(psi, z)
    assert Q.min() >= 0 and Q.max() <= 1


def test_husimi_spin_examples():
    assert husimi_spin(make_dicke(2, 0), SphereVec(math.pi / 2, 0.3)) == pytest.approx(0.5, abs=1e-15)
    n0 = SphereVec(1.2, -0.4)
    assert husimi_spin(make_spin_coherent(5, n0), n0) == pytest.approx(1.0, abs=1e-14)
    # binom(2, 2) sin^4(pi/4)
    assert husimi_spin(make_dicke(2, 2), SphereVec(math.pi / 2, 0.0)) == pytest.approx(0.25, abs=1e-15)


def test_q_of_1_0_is_half_sin_squared():
    th = np.linspace(0, math.pi, 13)
    Q = husimi_spin_points(make_dicke(2, 0), th, np.zeros_like(th))
    assert np.allclose(Q, np.sin(th) ** 2 / 2, atol=1e-15)


def test_density_and_ket_agree(rng):
    psi = random_spin_state(5, rng)
    th, ph = rng.uniform(0, math.pi, 40), rng.uniform(0, 2 * math.pi, 40)
    assert np.allclose(husimi_spin_points(psi, th, ph), husimi_spin_points(to_density(psi), th, ph), atol=1e-14)


@pytest.mark.parametrize("psi", [make_fock(0), make_fock(5)], ids=["vacuum", "fock5"])
def test_plane_normalization(psi):
    g = plane_grid(psi)
    assert integrate_plane(husimi_cv_points(psi, g.points), g) == pytest.approx(1.0, abs=1e-10)


def test_plane_second_moment_of_vacuum():
    psi = make_fock(0)
    g = plane_grid(psi)
    assert integrate_plane(husimi_cv_points(psi, g.points) ** 2, g) == pytest.approx(0.5, abs=1e-10)


def test_plane_rejects_nonfinite():
    g = plane_grid(make_fock(0))
    vals = np.ones(g.points.size)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        integrate_plane(vals, g)


@pytest.mark.parametrize(
    "psi",
    [make_squeezed(2.0), make_cat(2.0, 1), make_photon_added(1.5, 3), make_coherent_cv(3 + 2j)],
    ids=["squeezed2", "cat2", "padd", "displaced"],
)
def test_plane_normalization_off_centre(psi):
    g = plane_grid(psi)
    assert integrate_plane(husimi_cv_points(psi, g.points), g) == pytest.approx(1.0, abs=1e-10)


def test_sphere_normalization_2s7(rng):
    g = sphere_grid(30)
    psi = random_spin_state(7, rng)
    assert integrate_sphere(husimi_spin_points(psi, g.theta, g.phi), g, 7) == pytest.approx(1.0, abs=1e-12)


def test_sphere_harmonic_orthonormality():
    g = sphere_grid(6)
    Y = sph_harm_table(3, g.theta, g.phi)
    assert integrate_sphere(Y[(2, 1)] * np.conj(Y[(2, 1)]), g).real == pytest.approx(1.0, abs=1e-12)
    # exact up to degree 2L - 1 = 11
    for (K, q) in [(3, 0), (2, -1), (3, 2)]:
        for (K2, q2) in [(3, 0), (1, 1), (3, 2)]:
            val = integrate_sphere(Y[(K, q)] * np.conj(Y[(K2, q2)]), g)
            assert abs(val - ((K, q) == (K2, q2))) < 1e-12


def test_sphere_coherent_second_moment():
    g = sphere_grid(20)
    Q = husimi_spin_points(make_spin_coherent(2, SphereVec(0.4, 1.0)), g.theta, g.phi)
    assert integrate_sphere(Q * Q, g, 2) == pytest.approx(3 / 5, abs=1e-12)


def test_normalization_200_random(rng):
    for i in range(100):
        tS = int(rng.integers(1, 13))
        psi = random_spin_state(tS, rng)
        g = sphere_grid(2 * tS + 16)
        assert integrate_sphere(husimi_spin_points(psi, g.theta, g.phi), g, tS) == pytest.approx(1.0, abs=1e-10)
    for i in range(100):
        psi = random_fock_state(int(rng.integers(1, 12)), rng)
        g = plane_grid(psi)
        assert integrate_plane(husimi_cv_points(psi, g.points), g) == pytest.approx(1.0, abs=1e-10)


def test_grid_doubling_stable(rng):
    psi = random_fock_state(8, rng)
    g = plane_grid(psi)
    Q1 = husimi_cv_points(psi, g.points)
    g2 = g.refined(2)
    Q2 = husimi_cv_points(psi, g2.points)
    assert abs(integrate_plane(Q1**2, g) - integrate_plane(Q2**2, g2)) < 1e-9
    sp = random_spin_state(6, rng)
    s = sphere_grid(28)
    s2 = s.refined(2)
    a = integrate_sphere(husimi_spin_points(sp, s.theta, s.phi) ** 3, s, 6)
    b = integrate_sphere(husimi_spin_points(sp, s2.theta, s2.phi) ** 3, s2, 6)
    assert abs(a - b) < 1e-9


def test_grid_json():
    g = sphere_grid(3)
    d = g.to_json()
    assert d["L"] == 3 and len(d["weights"]) == g.size
    assert sum(d["weights"]) == pytest.approx(4 * math.pi)
    p = plane_grid(make_fock(1)).to_json()
    assert p["R"] > 0
