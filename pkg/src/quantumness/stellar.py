"""Stellar (Bargmann) functions and Majorana constellations.

For a spin state the Majorana polynomial is ``p(zeta) = sum_k c_k psi_k (-zeta)^k``
with ``k = S + m`` (see :mod:`quantumness.states` for the sign).  Its roots,
mapped to the sphere by ``theta = 2 arctan|zeta|, phi = arg zeta``, are the
zeros of the Husimi function.  Missing top-degree terms put stars at the
south pole (``zeta = inf``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .states import FockState, SphereVec, SpinState, rotate_spin

__all__ = [
    "Constellation",
    "stellar_cv",
    "stellar_cv_roots",
    "stellar_spin",
    "majorana_coefficients",
    "extract_constellation",
    "reconstruct_state",
    "chordal_sigma",
    "husimi_product_form",
    "rotation_matrix",
    "rotate_points",
    "match_points",
]

MERGE_TOL = 1e-7
# numerically split multiple roots: search radius (chord) and allowed fidelity loss
CLUSTER_RADIUS = 0.3
CLUSTER_FID = 1e-14
# a coherent state with 2S = 20 already has a leading coefficient ~1e-8 of the largest,
# so only rounding-level coefficients are read as pole stars
DEFICIT_TOL = 1e-13


@dataclass(frozen=True)
class Constellation:
    """Majorana stars with multiplicities; ``infinity_mult`` stars sit at zeta = inf."""

    two_S: int
    stars: tuple[tuple[SphereVec, int], ...]
    infinity_mult: int = 0

    def __post_init__(self):
        total = sum(m for _, m in self.stars) + self.infinity_mult
        if total != self.two_S:
            raise ValueError(f"constellation has {total} stars, expected {self.two_S}")

    def points(self) -> np.ndarray:
        """Unit vectors of all 2S stars, repeated by multiplicity."""
        pts = [s.vector for s, m in self.stars for _ in range(m)]
        pts += [np.array([0.0, 0.0, -1.0])] * self.infinity_mult
        return np.array(pts).reshape(-1, 3)

    def roots(self) -> list[complex]:
        """Finite roots zeta_i with multiplicity."""
        return [s.zeta for s, m in self.stars for _ in range(m) if s.theta < math.pi]

    @classmethod
    def from_points(cls, points, tol: float = MERGE_TOL) -> "Constellation":
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        groups = _cluster(pts, tol)
        stars, inf = [], 0
        for g in groups:
            v = pts[g].mean(axis=0)
            sv = SphereVec.from_vector(v)
            if sv.theta >= math.pi - 1e-15:
                inf += len(g)
            else:
                stars.append((sv, len(g)))
        return cls(len(pts), tuple(stars), inf)

    def to_json(self) -> dict:
        return {
            "two_S": self.two_S,
            "stars": [{"theta": s.theta, "phi": s.phi, "mult": m} for s, m in self.stars],
            "infinity_mult": self.infinity_mult,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Constellation":
        stars = tuple((SphereVec(s["theta"], s["phi"]), int(s["mult"])) for s in d["stars"])
        return cls(int(d["two_S"]), stars, int(d.get("infinity_mult", 0)))


def _cluster(pts: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage groups of points closer than ``tol`` in chordal distance."""
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(pts[i] - pts[j]) < tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


# --------------------------------------------------------------------------
# CV
# --------------------------------------------------------------------------


def _cv_coefficients(psi: FockState) -> np.ndarray:
    n = np.arange(psi.amplitudes.size)
    return psi.amplitudes * np.exp(-0.5 * gammaln(n + 1.0))


def stellar_cv(psi: FockState, alpha):
    """f(alpha) = sum_n psi_n alpha^n / sqrt(n!) by Horner's rule."""
    coeffs = _cv_coefficients(psi)
    alpha = np.asarray(alpha, dtype=complex)
    acc = np.zeros_like(alpha)
    for c in coeffs[::-1]:
        acc = acc * alpha + c
    return complex(acc) if acc.ndim == 0 else acc


def stellar_cv_roots(psi: FockState) -> np.ndarray:
    """Zeros of the (truncated) stellar polynomial."""
    coeffs = _cv_coefficients(psi)
    nz = np.nonzero(np.abs(coeffs) > 0)[0]
    if nz.size == 0:
        raise ValueError("zero state")
    coeffs = coeffs[: nz[-1] + 1]
    lead_zeros = nz[0]
    roots = np.roots(coeffs[lead_zeros:][::-1]) if coeffs.size - lead_zeros > 1 else np.array([])
    return np.concatenate([np.zeros(lead_zeros, dtype=complex), roots])


# --------------------------------------------------------------------------
# spin
# --------------------------------------------------------------------------


def majorana_coefficients(psi: SpinState) -> np.ndarray:
    """Coefficients p_k (ascending powers of zeta) of the Majorana polynomial."""
    k = np.arange(psi.two_S + 1)
    c = np.array([math.sqrt(math.comb(psi.two_S, int(j))) for j in k])
    return c * psi.amplitudes * (-1.0) ** k


def stellar_spin(psi: SpinState, zeta: complex) -> complex:
    """<n|psi> = (1+|zeta|^2)^(-S) p(zeta) for zeta = tan(theta/2) exp(i phi)."""
    p = majorana_coefficients(psi)
    poly = complex(np.polyval(p[::-1], zeta))
    return poly * (1.0 + abs(zeta) ** 2) ** (-psi.two_S / 2)


def extract_constellation(psi: SpinState, tol: float = MERGE_TOL) -> Constellation:
    """Majorana stars from companion-matrix roots.

    Leading (trailing) coefficients at or below ``min(tol, DEFICIT_TOL) * max|p|``
    count as stars at the south (north) pole; roots closer than ``tol`` in
    chordal distance are merged.  A multiple root comes out of the eigenvalue solver as a small
    ring of radius ~eps^(1/m); such clusters are replaced by their centroid
    whenever that reproduces the state to fidelity 1 - CLUSTER_FID.  If
    stars remain closer than CLUSTER_RADIUS (a split multiple root next to a
    pole cannot be merged with pole stars), the extraction is repeated in a
    fixed generic frame and the result with fewer distinct stars is kept.
    """
    c = _extract_direct(psi, tol)
    if not _has_close_pair(c):
        return c
    alt_state = rotate_spin(psi, _GENERIC_AXIS, _GENERIC_ANGLE)
    alt = _extract_direct(alt_state, tol)
    # exp(i chi S.a) moves stars by -chi about a, so undo with +chi
    back = rotate_points(alt.points(), rotation_matrix(_GENERIC_AXIS, _GENERIC_ANGLE))
    alt = Constellation.from_points(back, tol)
    n_c = len(c.stars) + (c.infinity_mult > 0)
    n_alt = len(alt.stars) + (alt.infinity_mult > 0)
    return alt if n_alt < n_c else c


_GENERIC_AXIS = SphereVec(1.1, 0.7)
_GENERIC_ANGLE = 1.3


def _has_close_pair(c: Constellation) -> bool:
    pts = np.array([s.vector for s, _ in c.stars] + ([[0.0, 0.0, -1.0]] if c.infinity_mult else []))
    if len(pts) < 2:
        return False
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    return bool(d[np.triu_indices(len(pts), 1)].min() < CLUSTER_RADIUS)


def _extract_direct(psi: SpinState, tol: float) -> Constellation:
    """Stars from the roots in the given frame."""
    p = majorana_coefficients(psi)
    scale = np.max(np.abs(p))
    if scale == 0:
        raise ValueError("zero polynomial: not a valid state")
    small = np.abs(p) <= min(tol, DEFICIT_TOL) * scale
    big = np.nonzero(~small)[0]
    lo, hi = int(big[0]), int(big[-1])
    inf_mult = psi.two_S - hi
    roots = np.roots(p[lo : hi + 1][::-1]) if hi > lo else np.array([], dtype=complex)
    roots = _merge_multiple_roots(psi, lo, inf_mult, roots)
    pts = [np.array([0.0, 0.0, 1.0])] * lo
    for z in roots:
        pts.append(SphereVec(2 * math.atan(abs(z)), math.atan2(z.imag, z.real)).vector)
    pts += [np.array([0.0, 0.0, -1.0])] * inf_mult
    if not pts:
        return Constellation(0, (), 0)
    return Constellation.from_points(np.array(pts), tol)


def _zeta_vectors(roots: np.ndarray) -> np.ndarray:
    th = 2 * np.arctan(np.abs(roots))
    ph = np.angle(roots)
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)


def _merge_multiple_roots(psi: SpinState, n_north: int, n_south: int, roots: np.ndarray) -> np.ndarray:
    """Snap numerically split multiple roots to their centroid when the state allows it.

    Clusters are tried from a wide radius down; a cluster whose centroid fails
    the fidelity test is split with a smaller radius and retried.
    """
    if roots.size < 2:
        return roots

    def fid(r):
        c = Constellation.from_points(
            np.vstack([np.tile([0.0, 0.0, 1.0], (n_north, 1)), _zeta_vectors(r),
                       np.tile([0.0, 0.0, -1.0], (n_south, 1))]), 0.0)
        return abs(np.vdot(reconstruct_state(c).amplitudes, psi.amplitudes)) ** 2

    out = roots.copy()

    def visit(idx, radius):
        if len(idx) < 2 or radius < 1e-6:
            return
        for g in _cluster(_zeta_vectors(out[idx]), radius):
            if len(g) < 2:
                continue
            members = [idx[i] for i in g]
            trial = out.copy()
            # the centroid of a split m-fold root is exact to rounding (sum of roots is a coefficient)
            trial[members] = np.mean(out[members])
            if fid(trial) >= 1 - CLUSTER_FID:
                out[members] = trial[members]
            else:
                visit(members, radius / 4)

    visit(list(range(roots.size)), CLUSTER_RADIUS)
    return out


def reconstruct_state(c: Constellation) -> SpinState:
    """Spin state (up to global phase) whose Majorana stars are ``c``."""
    poly = np.array([1.0 + 0j])
    for z in c.roots():
        poly = np.convolve(poly, np.array([-z, 1.0]))  # ascending powers
    p = np.zeros(c.two_S + 1, dtype=complex)
    p[: poly.size] = poly
    k = np.arange(c.two_S + 1)
    cbin = np.array([math.sqrt(math.comb(c.two_S, int(j))) for j in k])
    amps = p * (-1.0) ** k / cbin
    return SpinState.from_unnormalized(c.two_S, amps)


def chordal_sigma(a: complex, b: complex) -> float:
    """sigma = |a-b|^2 / ((1+|a|^2)(1+|b|^2)), a quarter of the squared chord."""
    if math.isinf(abs(a)) and math.isinf(abs(b)):
        return 0.0
    if math.isinf(abs(a)):
        a, b = b, a
    if math.isinf(abs(b)):
        return 1.0 / (1.0 + abs(a) ** 2)
    return abs(a - b) ** 2 / ((1.0 + abs(a) ** 2) * (1.0 + abs(b) ** 2))


def _sigma_vec(n: np.ndarray, stars: np.ndarray) -> np.ndarray:
    return np.clip(0.5 * (1.0 - stars @ n), 0.0, 1.0)


def husimi_product_form(psi: SpinState, n: SphereVec, constellation: Constellation | None = None) -> float:
    """Q(n) = k_S prod_i sigma(n, star_i), with k_S fixed at one reference point."""
    from .husimi import husimi_spin

    c = constellation or extract_constellation(psi, tol=1e-14)
    stars = c.points()
    if stars.size == 0:
        return 1.0
    # reference direction: the candidate farthest from all stars
    cands = np.vstack([np.eye(3), -np.eye(3), -stars.mean(axis=0, keepdims=True) + 1e-3])
    cands = cands / np.linalg.norm(cands, axis=1, keepdims=True)
    dist = np.array([np.min(1 - stars @ v) for v in cands])
    ref = SphereVec.from_vector(cands[int(np.argmax(dist))])
    k_S = husimi_spin(psi, ref) / np.prod(_sigma_vec(ref.vector, stars))
    return float(k_S * np.prod(_sigma_vec(n.vector, stars)))


# --------------------------------------------------------------------------
# geometry helpers
# --------------------------------------------------------------------------


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation by ``angle`` (right-handed) about unit vector ``axis``."""
    u = axis.vector if isinstance(axis, SphereVec) else np.asarray(axis, float)
    u = u / np.linalg.norm(u)
    K = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


def rotate_points(points, R: np.ndarray) -> np.ndarray:
    return np.asarray(points, float) @ R.T


def match_points(a, b) -> float:
    """Largest chordal distance under the best one-to-one matching of two point sets."""
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, float).reshape(-1, 3)
    b = np.asarray(b, float).reshape(-1, 3)
    if a.shape != b.shape:
        return math.inf
    if a.size == 0:
        return 0.0
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    # minimize the bottleneck approximately via squared-cost assignment
    rows, cols = linear_sum_assignment(d**2)
    return float(d[rows, cols].max())
