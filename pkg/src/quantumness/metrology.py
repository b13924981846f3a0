"""Quantum Fisher information for displacements and rotations.

Pure states only: the QFI is four times the variance of the generator.  The
averaged Cramér-Rao bounds are means of 1/F over quadrature phases (CV) or
rotation axes (spin).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .husimi import PlaneGrid, SphereGrid, cv_moments, husimi_cv_points, integrate_plane, plane_grid, sphere_grid
from .states import FockState, SphereVec, SpinState, spin_matrices

__all__ = [
    "cv_covariance",
    "qfi_displacement",
    "avg_qfi_cv",
    "avg_qfi_cv_quadrature",
    "avg_crb_cv",
    "spin_covariance",
    "qfi_rotation",
    "avg_qfi_spin",
    "avg_qfi_spin_quadrature",
    "avg_crb_spin",
    "avg_crb_spin_quadrature",
    "isotropy_defect",
    "husimi_moment_cv",
    "NULL_EIG",
]

NULL_EIG = 1e-12


def cv_covariance(psi: FockState) -> np.ndarray:
    """Symmetrised covariance of x = (a + a^dag)/sqrt2 and p = (a - a^dag)/(i sqrt2)."""
    mean_a, mean_a2, nbar = cv_moments(psi)
    vx = mean_a2.real + nbar + 0.5 - 2 * mean_a.real**2
    vp = -mean_a2.real + nbar + 0.5 - 2 * mean_a.imag**2
    cxp = mean_a2.imag - 2 * mean_a.real * mean_a.imag
    return np.array([[vx, cxp], [cxp, vp]])


def qfi_displacement(psi: FockState, theta: float) -> float:
    """F(theta) = 4 v^T C v with v = (cos theta, -sin theta)."""
    v = np.array([math.cos(theta), -math.sin(theta)])
    return float(4.0 * v @ cv_covariance(psi) @ v)


def avg_qfi_cv(psi: FockState) -> float:
    """Phase-averaged QFI 2 + 4(<a^dag a> - |<a>|^2)."""
    mean_a, _, nbar = cv_moments(psi)
    return 2.0 + 4.0 * (nbar - abs(mean_a) ** 2)


def avg_qfi_cv_quadrature(psi: FockState, n_theta: int = 64) -> float:
    """Mean of qfi_displacement over a uniform phase grid (exact for n_theta >= 3)."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    C = cv_covariance(psi)
    v = np.stack([np.cos(th), -np.sin(th)])
    return float(np.mean(4.0 * np.einsum("it,ij,jt->t", v, C, v)))


def avg_crb_cv(psi: FockState) -> float:
    """Phase average of 1/F(theta), equal to 1/(4 sqrt(det C)); +inf if C is singular."""
    C = cv_covariance(psi)
    if np.linalg.eigvalsh(C).min() < NULL_EIG:
        return math.inf
    return 1.0 / (4.0 * math.sqrt(np.linalg.det(C)))


def spin_covariance(psi: SpinState) -> np.ndarray:
    """C_ij = <{S_i, S_j}>/2 - <S_i><S_j>."""
    a = psi.amplitudes
    S = spin_matrices(psi.two_S)
    Sa = [M @ a for M in S]
    mean = np.array([np.vdot(a, v).real for v in Sa])
    C = np.array([[np.vdot(Sa[i], Sa[j]).real for j in range(3)] for i in range(3)])
    return 0.5 * (C + C.T) - np.outer(mean, mean)


def qfi_rotation(psi: SpinState, axis: SphereVec) -> float:
    """F = 4 Var(S . n)."""
    n = axis.vector
    return float(4.0 * n @ spin_covariance(psi) @ n)


def avg_qfi_spin(psi: SpinState) -> float:
    """Axis-averaged QFI (4/3)(Var S_x + Var S_y + Var S_z)."""
    return float(4.0 / 3.0 * np.trace(spin_covariance(psi)))


def avg_qfi_spin_quadrature(psi: SpinState, grid: SphereGrid | None = None) -> float:
    grid = grid or sphere_grid(4)
    C = spin_covariance(psi)
    V = grid.vectors
    F = 4.0 * np.einsum("pi,ij,pj->p", V, C, V)
    return float(np.dot(grid.weights, F) / (4 * np.pi))


def avg_crb_spin(psi: SpinState) -> float:
    """Axis average of 1/(4 n^T C n).

    For eigenvalues l_i of C the average equals
    (1/4) int_0^inf ds / sqrt(prod_i (s^2 + l_i)), evaluated by adaptive
    quadrature.  A null direction (l_min < NULL_EIG) makes it diverge: +inf.
    """
    lam = np.linalg.eigvalsh(spin_covariance(psi))
    if lam.min() < NULL_EIG:
        return math.inf

    def f(s):
        return 1.0 / math.sqrt((s * s + lam[0]) * (s * s + lam[1]) * (s * s + lam[2]))

    val, _ = quad(f, 0.0, math.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return 0.25 * val


def avg_crb_spin_quadrature(psi: SpinState, grid: SphereGrid | None = None) -> float:
    """Direct sphere quadrature of 1/(4 n^T C n) (cross-check; poor near divergence)."""
    grid = grid or sphere_grid(64)
    C = spin_covariance(psi)
    V = grid.vectors
    quadform = np.einsum("pi,ij,pj->p", V, C, V)
    if np.linalg.eigvalsh(C).min() < NULL_EIG:
        return math.inf
    return float(np.dot(grid.weights, 1.0 / (4.0 * quadform)) / (4 * np.pi))


def isotropy_defect(C: np.ndarray) -> float:
    """Ratio of largest to smallest covariance eigenvalue (1 for isotropic, inf if singular)."""
    lam = np.linalg.eigvalsh(C)
    if lam.min() < NULL_EIG:
        return math.inf
    return float(lam.max() / lam.min())


def husimi_moment_cv(psi: FockState, k: int, l: int = 0, grid: PlaneGrid | None = None) -> complex:
    """(1/pi) int alpha^k conj(alpha)^l Q(alpha) d^2 alpha by plane quadrature."""
    grid = grid or plane_grid(psi)
    Q = husimi_cv_points(psi, grid.points)
    return complex(integrate_plane(grid.points**k * np.conj(grid.points) ** l * Q, grid))
