"""Husimi Q functions and the quadrature grids used for phase-space integrals.

Measures follow the usual conventions: (1/pi) d^2 alpha on the plane and
(2S+1)/(4 pi) dOmega on the sphere, so that Q integrates to one in both cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import sqrtm

from .states import FockState, SpinDensity, SpinState, SphereVec, coherent_overlaps

__all__ = [
    "SphereGrid",
    "PlaneGrid",
    "sphere_grid",
    "default_sphere_order",
    "plane_grid",
    "spin_coherent_bras",
    "husimi_cv",
    "husimi_cv_points",
    "husimi_spin",
    "husimi_spin_points",
    "integrate_plane",
    "integrate_sphere",
    "cv_moments",
    "centred_grid",
]


# --------------------------------------------------------------------------
# sphere
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Gauss-Legendre in cos(theta) times uniform phi; exact to degree 2L-1."""

    L: int
    n_phi: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray  # plain dOmega weights, sum = 4 pi

    @property
    def vectors(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=1)

    @property
    def size(self) -> int:
        return self.theta.size

    def refined(self, factor: int = 2) -> "SphereGrid":
        return sphere_grid(self.L * factor, self.n_phi * factor)

    def to_json(self) -> dict:
        return {"L": self.L, "n_phi": self.n_phi, "theta": self.theta.tolist(),
                "phi": self.phi.tolist(), "weights": self.weights.tolist()}


@lru_cache(maxsize=64)
def sphere_grid(L: int, n_phi: int | None = None) -> SphereGrid:
    if L < 1:
        raise ValueError("sphere order must be >= 1")
    n_phi = n_phi or 2 * L
    x, w = np.polynomial.legendre.leggauss(L)
    th = np.arccos(x)
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(th, ph, indexing="ij")
    W = np.repeat(w[:, None], n_phi, axis=1) * (2 * np.pi / n_phi)
    arrs = [T.ravel(), P.ravel(), W.ravel()]
    for a in arrs:
        a.setflags(write=False)
    return SphereGrid(L, n_phi, *arrs)


def default_sphere_order(two_S: int) -> int:
    return 2 * two_S + 16


def spin_coherent_bras(two_S: int, theta, phi) -> np.ndarray:
    """Rows <n| for every (theta, phi): shape (P, 2S+1)."""
    theta = np.atleast_1d(np.asarray(theta, float))
    phi = np.atleast_1d(np.asarray(phi, float))
    k = np.arange(two_S + 1)
    c = np.array([math.sqrt(math.comb(two_S, int(j))) for j in k])
    s = np.sin(theta / 2)[:, None]
    co = np.cos(theta / 2)[:, None]
    with np.errstate(invalid="ignore"):
        mag = c * s**k * co ** (two_S - k)
    return mag * (-np.exp(1j * phi))[:, None] ** k


def husimi_spin_points(state, theta, phi) -> np.ndarray:
    """Q at many directions, for a SpinState or SpinDensity."""
    if isinstance(state, SpinState):
        bras = spin_coherent_bras(state.two_S, theta, phi)
        return np.abs(bras @ state.amplitudes) ** 2
    if isinstance(state, SpinDensity):
        bras = spin_coherent_bras(state.two_S, theta, phi)
        return np.einsum("pi,ij,pj->p", bras, state.matrix, bras.conj()).real
    raise TypeError("expected SpinState or SpinDensity")


def husimi_spin(state, n: SphereVec) -> float:
    """Q(n) = <n|rho|n>."""
    return float(husimi_spin_points(state, n.theta, n.phi)[0])


def integrate_sphere(values, grid: SphereGrid, two_S: int | None = None) -> float:
    """Sum of ``values`` against the grid; with ``two_S`` uses the (2S+1)/4pi measure."""
    values = np.asarray(values)
    if values.shape[0] != grid.size:
        raise ValueError("values do not match the grid")
    total = np.tensordot(grid.weights, values, axes=(0, 0))
    if two_S is not None:
        total = total * (two_S + 1) / (4 * np.pi)
    return total


# --------------------------------------------------------------------------
# plane
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PlaneGrid:
    """Polar grid in a shape-adapted frame alpha = center + L (u_x + i u_y).

    ``weights`` already contain the 1/pi measure and the Jacobian, so
    ``sum(weights * f(points))`` approximates (1/pi) int f d^2 alpha.
    """

    center: complex
    shape: np.ndarray
    R: float
    n_rad: int
    n_ang: int
    points: np.ndarray
    weights: np.ndarray
    rho: np.ndarray

    def refined(self, factor: int = 2) -> "PlaneGrid":
        return _polar(self.center, self.shape, self.R, self.n_rad * factor, self.n_ang * factor)

    def outer_ring(self) -> np.ndarray:
        ang = 2 * np.pi * np.arange(self.n_ang) / self.n_ang
        u = self.R * np.exp(1j * ang)
        return _to_plane(self.center, self.shape, u)

    def to_json(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "shape": self.shape.tolist(),
                "R": self.R, "n_rad": self.n_rad, "n_ang": self.n_ang}


def _to_plane(center: complex, shape: np.ndarray, u: np.ndarray) -> np.ndarray:
    x = shape[0, 0] * u.real + shape[0, 1] * u.imag
    y = shape[1, 0] * u.real + shape[1, 1] * u.imag
    return center + x + 1j * y


def _polar(center, shape, R, n_rad, n_ang, power: int = 1) -> PlaneGrid:
    """Polar product grid; ``power`` p maps r = R t^p to cluster nodes at the centre."""
    x, w = np.polynomial.legendre.leggauss(n_rad)
    t = 0.5 * (x + 1)
    r = R * t**power
    wr = 0.5 * w * power * R * t ** (power - 1) * r
    ang = 2 * np.pi * (np.arange(n_ang) + 0.5) / n_ang
    U = (r[:, None] * np.exp(1j * ang)[None, :]).ravel()
    W = np.repeat(wr[:, None], n_ang, axis=1).ravel() * (2 * np.pi / n_ang)
    W = W * abs(np.linalg.det(shape)) / np.pi
    pts = _to_plane(complex(center), shape, U)
    return PlaneGrid(complex(center), shape, float(R), n_rad, n_ang, pts, W, np.repeat(r, n_ang))


def cv_moments(psi: FockState) -> tuple[complex, complex, float]:
    """(<a>, <a^2>, <a^dag a>) of a pure Fock-basis state."""
    a = psi.amplitudes
    n = np.arange(a.size)
    low = np.sqrt(n[1:]) * a[1:]  # a|psi>
    mean_a = complex(np.vdot(a[:-1], low))
    low2 = np.sqrt(n[1:-1]) * low[1:]  # a^2|psi>
    mean_a2 = complex(np.vdot(a[:-2], low2)) if a.size > 2 else 0j
    nbar = float(np.sum(n * np.abs(a) ** 2))
    return mean_a, mean_a2, nbar


def _q_shape(psi: FockState) -> tuple[complex, np.ndarray]:
    """Centre <a> and shape L = sqrtm(2 Sigma) of the Husimi distribution."""
    mean_a, mean_a2, nbar = cv_moments(psi)
    # Q covariance in (Re alpha, Im alpha): half the symmetric quadrature covariance plus I/4
    vx = mean_a2.real + nbar + 0.5 - 2 * mean_a.real**2
    vp = -mean_a2.real + nbar + 0.5 - 2 * mean_a.imag**2
    cxp = mean_a2.imag - 2 * mean_a.real * mean_a.imag
    sigma = 0.5 * np.array([[vx, cxp], [cxp, vp]]) + 0.25 * np.eye(2)
    shape = np.real(sqrtm(2 * sigma))
    return mean_a, shape


def plane_grid(psi: FockState, n_rad: int = 96, n_ang: int = 128, R: float | None = None,
               edge_tol: float = 1e-18) -> PlaneGrid:
    """Polar grid adapted to the Husimi distribution of ``psi``.

    The radius (in the normalised frame) starts at sqrt(40) and grows until Q
    on the outer ring is below ``edge_tol``.
    """
    center, shape = _q_shape(psi)
    R0 = math.sqrt(40.0)
    R = R or R0
    for _ in range(12):
        ring = husimi_cv_points(psi, _to_plane(center, shape, R * np.exp(2j * np.pi * np.arange(256) / 256)))
        if ring.max() < edge_tol:
            break
        R *= 1.25
    # keep the radial node density of the default radius
    n_rad = int(math.ceil(n_rad * max(1.0, R / R0)))
    return _polar(center, shape, R, n_rad, n_ang)


def centred_grid(grid: PlaneGrid, w: complex, n_rad: int | None = None, n_ang: int | None = None) -> PlaneGrid:
    """Grid in the same frame as ``grid`` but centred at ``w``, nodes clustered near ``w``.

    Its radius covers the whole disc of ``grid``, so integrals over the
    Husimi support are unchanged.
    """
    u = np.linalg.solve(grid.shape, np.array([(w - grid.center).real, (w - grid.center).imag]))
    R = grid.R + float(np.linalg.norm(u))
    return _polar(w, grid.shape, R, n_rad or grid.n_rad, n_ang or grid.n_ang, power=2)


def husimi_cv_points(psi: FockState, alphas) -> np.ndarray:
    """Q(alpha) = |<alpha|psi>|^2 on an array of points."""
    return np.abs(coherent_overlaps(alphas, psi.amplitudes)) ** 2


def husimi_cv(psi: FockState, alpha: complex) -> float:
    return float(husimi_cv_points(psi, np.array([alpha]))[0])


def integrate_plane(values, grid: PlaneGrid) -> float:
    """(1/pi) int f d^2 alpha from samples of f at ``grid.points``."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite integrand samples")
    return np.dot(grid.weights, values)
