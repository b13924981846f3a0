"""Quantumness measures built on the Husimi function.

Wehrl entropy, second moment M2 (inverse participation ratio R = 1/M2),
Husimi maximum M_inf, state multipoles and the cumulative multipolar
distribution A_M, for single-mode and spin-S states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .husimi import (
    PlaneGrid,
    SphereGrid,
    centred_grid,
    default_sphere_order,
    husimi_cv_points,
    husimi_spin_points,
    integrate_plane,
    integrate_sphere,
    plane_grid,
    sphere_grid,
    spin_coherent_bras,
)
from .specfun import assoc_laguerre, cg_stretched, clebsch_gordan, digamma, log_factorial, sph_harm_table, twice
from .states import FockState, SpinDensity, SpinState, SphereVec, coherent_overlaps, to_density
from .stellar import extract_constellation

__all__ = [
    "MultipoleTable",
    "NoClosedForm",
    "tensor_operators",
    "multipoles_spin",
    "multipoles_from_husimi",
    "partial_Q",
    "partial_Q_points",
    "cumulative_A",
    "cumulative_A_coherent_max",
    "cv_multipole_indicator",
    "cumulative_A_cv",
    "wehrl_cv",
    "wehrl_cv_closed",
    "wehrl_spin",
    "m2_cv_quadrature",
    "m2_cv_closed",
    "m2_spin_quadrature",
    "m2_spin_closed",
    "m_infinity",
    "m_infinity_cv",
    "m_infinity_cv_closed",
    "m_infinity_spin",
    "ascend_spin_q",
    "spin_expectation",
]

Q_FLOOR = 1e-300
_RING = 2 * np.pi * np.arange(16) / 16


class NoClosedForm(ValueError):
    """The state family has no closed-form expression for this measure."""


def _xlogx(q: np.ndarray) -> np.ndarray:
    q = np.clip(q, 0.0, None)
    return np.where(q > Q_FLOOR, q * np.log(np.maximum(q, Q_FLOOR)), 0.0)


# --------------------------------------------------------------------------
# multipoles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MultipoleTable:
    """rho_Kq keyed by (2K, 2q); ``flavor`` is 'spin' or 'cv'."""

    flavor: str
    entries: dict = field(default_factory=dict)

    def __getitem__(self, key):
        K, q = key
        return self.entries.get((twice(K), twice(q)), 0j)

    def rank_power(self, K) -> float:
        """sum_q |rho_Kq|^2 at fixed K."""
        tK = twice(K)
        return float(sum(abs(v) ** 2 for (k, _), v in self.entries.items() if k == tK))

    def to_json(self) -> list:
        return [{"K": k / 2, "q": q / 2, "value": [v.real, v.imag]} for (k, q), v in sorted(self.entries.items())]


@lru_cache(maxsize=None)
def tensor_operators(two_S: int) -> tuple[tuple[tuple[int, int], ...], np.ndarray]:
    """Irreducible tensors T_Kq for spin S as a stack (labels, array[n, d, d]).

    T_Kq = sqrt((2K+1)/(2S+1)) sum_m C_{Sm,Kq}^{S m+q} |m+q><m|, in the basis m = -S..S.
    """
    S = two_S / 2
    d = two_S + 1
    labels, mats = [], []
    for K in range(two_S + 1):
        pref = math.sqrt((2 * K + 1) / d)
        for q in range(-K, K + 1):
            T = np.zeros((d, d))
            for i in range(d):
                m = -S + i
                j = i + q
                if 0 <= j < d:
                    T[j, i] = pref * clebsch_gordan(S, m, K, q, m + q)
            labels.append((K, q))
            mats.append(T)
    stack = np.array(mats, dtype=complex)
    gram = np.einsum("aij,bij->ab", stack, stack.conj())
    if np.max(np.abs(gram - np.eye(len(labels)))) > 1e-12:
        raise RuntimeError(f"tensor operators for 2S={two_S} are not orthonormal")
    stack.setflags(write=False)
    return tuple(labels), stack


def multipoles_spin(state) -> MultipoleTable:
    """rho_Kq = Tr(rho T_Kq^dag) for K = 0..2S."""
    rho = to_density(state)
    labels, T = tensor_operators(rho.two_S)
    vals = np.einsum("ij,aij->a", rho.matrix, T.conj())
    return MultipoleTable("spin", {(2 * K, 2 * q): complex(v) for (K, q), v in zip(labels, vals)})


def _multipole_vector(rho: SpinDensity) -> np.ndarray:
    _, T = tensor_operators(rho.two_S)
    return np.einsum("ij,aij->a", rho.matrix, T.conj())


@lru_cache(maxsize=None)
def _harmonic_factor(two_S: int) -> np.ndarray:
    """a_K with <n|T_Kq|n> = a_K Y_Kq(n), K = 0..2S (fixed once per S)."""
    S = two_S / 2
    out = np.zeros(two_S + 1)
    for K in range(two_S + 1):
        # at the north pole only q = 0 survives; <S,-S|T_K0|S,-S> fixes a_K
        val = math.sqrt((2 * K + 1) / (two_S + 1)) * clebsch_gordan(S, -S, K, 0, -S)
        out[K] = val / math.sqrt((2 * K + 1) / (4 * math.pi))
    return out


def multipoles_from_husimi(state, grid: SphereGrid | None = None) -> MultipoleTable:
    """Multipoles from harmonic projections of Q: rho_Kq = (1/a_K) int Y_Kq^* Q dOmega."""
    rho = to_density(state)
    tS = rho.two_S
    grid = grid or sphere_grid(default_sphere_order(tS))
    Q = husimi_spin_points(rho, grid.theta, grid.phi)
    Y = sph_harm_table(tS, grid.theta, grid.phi)
    a = _harmonic_factor(tS)
    entries = {}
    for K in range(tS + 1):
        for q in range(-K, K + 1):
            entries[(2 * K, 2 * q)] = complex(integrate_sphere(np.conj(Y[(K, q)]) * Q, grid) / a[K])
    return MultipoleTable("spin", entries)


def partial_Q_points(state, K: int, theta, phi) -> np.ndarray:
    """Q^(K)(n) = sum_q rho_Kq <n|T_Kq|n> on many directions."""
    rho = to_density(state)
    if not 0 <= K <= rho.two_S:
        raise ValueError("need 0 <= K <= 2S")
    labels, T = tensor_operators(rho.two_S)
    vals = _multipole_vector(rho)
    idx = [i for i, (k, _) in enumerate(labels) if k == K]
    op = np.tensordot(vals[idx], T[idx], axes=(0, 0))
    bras = spin_coherent_bras(rho.two_S, theta, phi)
    return np.einsum("pi,ij,pj->p", bras, op, bras.conj()).real


def partial_Q(state, K: int, n: SphereVec) -> float:
    return float(partial_Q_points(state, K, n.theta, n.phi)[0])


def cumulative_A(state, M) -> float:
    """A_M = sum_{K=1}^{M} sum_q |rho_Kq|^2 (spin)."""
    rho = to_density(state)
    tM = twice(M)
    if tM % 2:
        raise ValueError("spin multipole orders are integers")
    M = tM // 2
    if not 1 <= M <= rho.two_S:
        raise ValueError("need 1 <= M <= 2S")
    labels, _ = tensor_operators(rho.two_S)
    vals = _multipole_vector(rho)
    mask = np.array([1 <= k <= M for k, _ in labels])
    return float(np.sum(np.abs(vals[mask]) ** 2))


def cumulative_A_coherent_max(two_S: int, M: int) -> float:
    """A_M of a spin-coherent state: 2S/(2S+1) - (2S)!^2 / ((2S-M-1)! (2S+M+1)!)."""
    if M >= two_S:
        return two_S / (two_S + 1)
    return two_S / (two_S + 1) - math.exp(
        2 * log_factorial(two_S) - log_factorial(two_S - M - 1) - log_factorial(two_S + M + 1)
    )


def cv_multipole_indicator(psi: FockState, K, q) -> complex:
    """Unnormalised CV multipole rho_Kq as a finite sum over the density matrix.

    q = 0: (1/2) sum_n (-1)^n rho_nn C(K, n);
    q > 0: sum_{n<=K-q} (-1)^n rho_{n+2q,n} sqrt((n+2q)!/n!) C(K+q, n+2q);
    q < 0: complex conjugate of the q > 0 sum with |q|.
    """
    tK, tq = twice(K), twice(q)
    if (tK - tq) % 2 or tK < abs(tq):
        raise ValueError("need K - q a nonnegative integer and |q| <= K")
    a = psi.amplitudes
    N = a.size - 1
    if tq == 0:
        K = tK // 2
        total = 0.0
        for n in range(min(K, N) + 1):
            total += (-1) ** n * abs(a[n]) ** 2 * math.comb(K, n)
        return complex(0.5 * total)
    s = abs(tq)  # 2|q|
    top = (tK - s) // 2  # K - |q|
    kq = (tK + s) // 2  # K + |q|
    total = 0j
    for n in range(top + 1):
        if n + s > N:
            break
        rho = a[n + s] * np.conj(a[n])
        w = math.exp(0.5 * (log_factorial(n + s) - log_factorial(n))) * math.comb(kq, n + s)
        total += (-1) ** n * rho * w
    return complex(total if tq > 0 else np.conj(total))


def cumulative_A_cv(psi: FockState, M) -> float:
    """sum over K = 1/2, 1, ..., M and all q of |indicator|^2 (unnormalised)."""
    tM = twice(M)
    total = 0.0
    for tK in range(1, tM + 1):
        for tq in range(-tK, tK + 1, 2):
            total += abs(cv_multipole_indicator(psi, tK / 2, tq / 2)) ** 2
    return total


def spin_expectation(psi: SpinState) -> np.ndarray:
    from .states import spin_matrices

    return np.array([np.vdot(psi.amplitudes, S @ psi.amplitudes).real for S in spin_matrices(psi.two_S)])


# --------------------------------------------------------------------------
# Wehrl entropy
# --------------------------------------------------------------------------


def _cv_near_zeros(psi: FockState, grid: PlaneGrid, reach: float = 0.8, q_min: float = 1e-12) -> list[complex]:
    """Zeros of Q inside ``reach * R`` of the grid frame, polished by Newton.

    Zeros whose neighbourhood carries Q below ``q_min`` (truncation artefacts
    in the far tail) are dropped: their log singularity is invisible at that
    level.

    Q(alpha) vanishes where f(conj alpha) = 0; the Newton step
    <alpha|psi> / <alpha|a|psi> is the step for f at z = conj(alpha) with the
    Gaussian factors cancelled, so it is safe far from the origin.
    """
    amps = psi.amplitudes
    nz = np.nonzero(np.abs(amps) > 0)[0]
    k0 = int(nz[0])
    zeros = [0j] * k0
    tail = amps[k0:]
    if tail.size < 2 or (psi.family or {}).get("family") in ("coherent", "gaussian"):
        return zeros
    n = np.arange(tail.size)
    scale = math.sqrt(max(1.0, psi.mean_number() + 1.0))
    with np.errstate(under="ignore"):
        coeffs = tail * np.exp(-0.5 * gammaln(n + k0 + 1.0)
                               + n * math.log(scale))
    roots = np.roots(coeffs[::-1]) * scale  # zeros of sum tail_n z^n / sqrt((n+k0)!) ~ f(z)/z^k0
    low = psi.lowered()
    inv = np.linalg.inv(grid.shape)
    for z in roots:
        alpha = complex(np.conj(z))
        u = inv @ np.array([(alpha - grid.center).real, (alpha - grid.center).imag])
        if np.linalg.norm(u) > reach * grid.R:
            continue
        ok = False
        for _ in range(30):
            g = coherent_overlaps(np.array([alpha]), amps)[0]
            ga = coherent_overlaps(np.array([alpha]), low)[0]
            if ga == 0:
                break
            step = np.conj(g / ga)
            alpha = alpha - step
            if abs(step) < 1e-14 * (1 + abs(alpha)):
                ok = True
                break
        if not ok or (k0 and abs(alpha) < 1e-8):
            continue
        xy = 0.5 * grid.shape @ np.array([np.cos(_RING), np.sin(_RING)])
        ring = alpha + xy[0] + 1j * xy[1]
        if husimi_cv_points(psi, ring).max() >= q_min:
            zeros.append(alpha)
    return zeros


def wehrl_cv(psi: FockState, grid: PlaneGrid | None = None, subtract: bool = True, tol: float = 1e-11) -> float:
    """S_W = -(1/pi) int Q ln Q d^2 alpha.

    With ``subtract`` the logarithmic singularities at the zeros w_j of Q are
    split off: ln Q = [ln Q - sum_j ln|alpha - w_j|^2] + sum_j ln|alpha - w_j|^2.
    The bracket is smooth and uses ``grid``; each log term is integrated on a
    polar grid centred at its zero.  Without an explicit grid the default grid
    is refined until successive resolutions agree to ``tol``.
    """
    if grid is not None:
        return _wehrl_cv_on(psi, grid, subtract)
    grid = plane_grid(psi)
    val = _wehrl_cv_on(psi, grid, subtract)
    for _ in range(3):
        grid = grid.refined(2)
        new = _wehrl_cv_on(psi, grid, subtract)
        done = abs(new - val) < tol
        val = new
        if done:
            break
    return val


def _wehrl_cv_on(psi: FockState, grid: PlaneGrid, subtract: bool) -> float:
    Q = husimi_cv_points(psi, grid.points)
    if not subtract:
        return float(-integrate_plane(_xlogx(Q), grid))
    zeros = _cv_near_zeros(psi, grid)
    if not zeros:
        return float(-integrate_plane(_xlogx(Q), grid))
    logsum = np.zeros(grid.points.size)
    for w in zeros:
        logsum += np.log(np.maximum(np.abs(grid.points - w) ** 2, Q_FLOOR))
    smooth = np.where(Q > Q_FLOOR, Q * (np.log(np.maximum(Q, Q_FLOOR)) - logsum), 0.0)
    total = integrate_plane(smooth, grid)
    for w in zeros:
        sub = centred_grid(grid, w)
        Qw = husimi_cv_points(psi, sub.points)
        total += integrate_plane(Qw * np.log(np.maximum(np.abs(sub.points - w) ** 2, Q_FLOOR)), sub)
    return float(-total)


def _fock_wehrl(n: int) -> float:
    return 1.0 + n + log_factorial(n) - n * digamma(n + 1.0)


def wehrl_cv_closed(psi: FockState) -> float:
    """Closed forms: coherent 1, squeezed 1 + ln cosh r, Fock 1 + n + ln n! - n psi(n+1)."""
    fam = psi.family or {}
    kind = fam.get("family")
    if kind == "coherent":
        return 1.0
    if kind == "gaussian":
        return 1.0 + math.log(math.cosh(fam["r"]))
    if kind == "fock":
        return _fock_wehrl(fam["n"])
    if kind == "photon_added" and fam["beta"] == 0:
        return _fock_wehrl(fam["m"])
    raise NoClosedForm(f"no closed-form Wehrl entropy for family {kind!r}")


def _stars_separated(points: np.ndarray, min_chord: float) -> bool:
    if len(points) < 2:
        return True
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    d[np.diag_indices_from(d)] = np.inf
    return bool(d.min() > min_chord)


def _wehrl_spin_stellar(psi: SpinState) -> float | None:
    """Exact Wehrl entropy from the Majorana stars of a pure state.

    Q = k prod_i sigma(n, w_i) with sigma = (1 - n.w_i)/2.  Expanding
    ln sigma in Legendre polynomials (int_{-1}^{1} P_K(u) ln((1-u)/2) du is -2
    for K = 0 and -2/(K(K+1)) otherwise) gives
    S_W = -ln k + 2S + (2S+1) sum_i sum_{K>=1} Q^(K)(w_i) / (K(K+1)).
    Returns None when the stars are too clustered for accurate roots.
    """
    tS = psi.two_S
    if tS == 0:
        return 0.0
    c = extract_constellation(psi, tol=0.0)
    stars = c.points()
    if not _stars_separated(stars, 1e-2):
        return None
    # k from a reference direction far from every star
    ref_grid = sphere_grid(8)
    V = ref_grid.vectors
    far = np.min(1.0 - V @ stars.T, axis=1)
    i = int(np.argmax(far))
    q_ref = husimi_spin_points(psi, ref_grid.theta[i : i + 1], ref_grid.phi[i : i + 1])[0]
    sig = np.clip(0.5 * (1.0 - stars @ V[i]), 0.0, None)
    log_k = math.log(q_ref) - float(np.sum(np.log(sig)))
    th = np.arccos(np.clip(stars[:, 2], -1, 1))
    ph = np.arctan2(stars[:, 1], stars[:, 0])
    total = 0.0
    for K in range(1, tS + 1):
        total += np.sum(partial_Q_points(psi, K, th, ph)) / (K * (K + 1))
    return float(-log_k + tS + (tS + 1) * total)


def wehrl_spin(state, grid: SphereGrid | None = None, method: str = "auto") -> float:
    """S_W = -(2S+1)/(4 pi) int Q ln Q dOmega.

    ``method``: 'stellar' (pure states, exact up to root accuracy),
    'quadrature', or 'auto' (stellar when the stars are well separated).
    """
    if method not in ("auto", "stellar", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method != "quadrature" and isinstance(state, SpinState) and grid is None:
        val = _wehrl_spin_stellar(state)
        if val is not None:
            return val
        if method == "stellar":
            raise ValueError("stars too clustered for the stellar route")
    tS = state.two_S
    grid = grid or sphere_grid(2 * default_sphere_order(tS))
    if isinstance(state, SpinState) and tS > 0:
        return _wehrl_spin_subtracted(state, grid)
    Q = husimi_spin_points(state, grid.theta, grid.phi)
    return float(-integrate_sphere(_xlogx(Q), grid, tS))


def _star_frame_grid(w: np.ndarray, n_t: int, n_phi: int):
    """Nodes clustered at star w: n.w = 1 - 2 t^4, t Gauss-Legendre on [0, 1].

    Returns (vectors, dOmega weights, ln sigma) with sigma = (1 - n.w)/2 = t^4.
    """
    x, wt = np.polynomial.legendre.leggauss(n_t)
    t = 0.5 * (x + 1)
    u = 1 - 2 * t**4
    du = 0.5 * wt * 8 * t**3
    e1, e2 = _tangent_basis(w)
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(np.clip(1 - u * u, 0.0, None))
    V = (st[:, None, None] * (np.cos(ph)[None, :, None] * e1 + np.sin(ph)[None, :, None] * e2)
         + u[:, None, None] * w).reshape(-1, 3)
    W = np.repeat(du[:, None], n_phi, axis=1).ravel() * (2 * np.pi / n_phi)
    log_sig = np.repeat(4 * np.log(t)[:, None], n_phi, axis=1).ravel()
    return V, W, log_sig


def _wehrl_spin_subtracted(psi: SpinState, grid: SphereGrid) -> float:
    """Quadrature with the log singularities at the stars split off.

    ln Q = [ln Q - sum_i ln sigma_i] + sum_i ln sigma_i; the bracket is smooth
    and uses ``grid``, each ln sigma_i term uses a grid clustered at star i.
    """
    tS = psi.two_S
    stars = extract_constellation(psi).points()
    V = grid.vectors
    Q = husimi_spin_points(psi, grid.theta, grid.phi)
    log_sig = np.log(np.maximum(0.5 * (1.0 - V @ stars.T), Q_FLOOR)).sum(axis=1)
    smooth = np.where(Q > Q_FLOOR, Q * (np.log(np.maximum(Q, Q_FLOOR)) - log_sig), 0.0)
    total = np.dot(grid.weights, smooth)
    for w in stars:
        Vs, Ws, ls = _star_frame_grid(w, grid.L, grid.n_phi)
        th = np.arccos(np.clip(Vs[:, 2], -1, 1))
        ph = np.arctan2(Vs[:, 1], Vs[:, 0])
        total += np.dot(Ws, husimi_spin_points(psi, th, ph) * ls)
    return float(-total * (tS + 1) / (4 * np.pi))


# --------------------------------------------------------------------------
# second moment
# --------------------------------------------------------------------------


def m2_cv_quadrature(psi: FockState, grid: PlaneGrid | None = None) -> float:
    grid = grid or plane_grid(psi)
    Q = husimi_cv_points(psi, grid.points)
    return float(integrate_plane(Q * Q, grid))


def m2_cv_closed(psi: FockState) -> float:
    """M2 = (1/2) sum_K |B_K|^2 with B_K = sum_L sqrt(C(K,L)/2^K) psi_L psi_{K-L}."""
    a = psi.amplitudes
    N = a.size - 1
    lf = gammaln(np.arange(2 * N + 2) + 1.0)
    total = 0.0
    for K in range(2 * N + 1):
        L = np.arange(max(0, K - N), min(K, N) + 1)
        w = np.exp(0.5 * (lf[K] - lf[L] - lf[K - L] - K * math.log(2.0)))
        total += abs(np.sum(w * a[L] * a[K - L])) ** 2
    return 0.5 * total


def m2_spin_quadrature(state, grid: SphereGrid | None = None) -> float:
    tS = state.two_S
    grid = grid or sphere_grid(default_sphere_order(tS))
    Q = husimi_spin_points(state, grid.theta, grid.phi)
    return float(integrate_sphere(Q * Q, grid, tS))


def m2_spin_closed(state) -> float:
    """M2 = sum_{K,q} (C_{SS,K0}^{SS})^2 |rho_Kq|^2."""
    rho = to_density(state)
    labels, _ = tensor_operators(rho.two_S)
    vals = _multipole_vector(rho)
    cg = np.array([cg_stretched(rho.two_S, K) for K, _ in labels])
    return float(np.sum(cg**2 * np.abs(vals) ** 2))


# --------------------------------------------------------------------------
# Husimi maximum
# --------------------------------------------------------------------------


def _photon_added_minf(beta: complex, m: int) -> float:
    b = abs(beta)
    if m == 0:
        return 1.0
    if b == 0:
        return math.exp(-m + m * math.log(m) - log_factorial(m))
    s = math.sqrt(1.0 + 4.0 * m / b**2)
    log_val = 2 * m * math.log(0.5 * b * (1 + s)) - 0.25 * b**2 * (s - 1) ** 2
    return math.exp(log_val - log_factorial(m)) / assoc_laguerre(m, 0, -(b**2))


def m_infinity_cv_closed(psi: FockState) -> float:
    """Closed forms for coherent, squeezed, Fock, photon-added and even cat (|beta| <= 1)."""
    fam = psi.family or {}
    kind = fam.get("family")
    if kind == "coherent":
        return 1.0
    if kind == "gaussian":
        return 1.0 / math.cosh(fam["r"])
    if kind == "fock":
        n = fam["n"]
        return math.exp(-n + (n * math.log(n) if n else 0.0) - log_factorial(n))
    if kind == "photon_added":
        return _photon_added_minf(fam["beta"], fam["m"])
    if kind == "cat" and fam["sign"] == 1:
        b = abs(fam["beta"])
        if b > 1:
            raise NoClosedForm("even-cat closed form holds for |beta| <= 1 only")
        return 1.0 / math.cosh(b * b)
    raise NoClosedForm(f"no closed-form M_inf for family {kind!r}")


def _cv_q_and_grad(psi: FockState, low: np.ndarray, x: np.ndarray):
    alpha = np.array([complex(x[0], x[1])])
    g = coherent_overlaps(alpha, psi.amplitudes)[0]
    ga = coherent_overlaps(alpha, low)[0]  # <alpha|a|psi>
    dgx = -x[0] * g + ga
    dgy = -x[1] * g - 1j * ga
    Q = abs(g) ** 2
    grad = np.array([2 * (np.conj(g) * dgx).real, 2 * (np.conj(g) * dgy).real])
    return Q, grad


def m_infinity_cv(psi: FockState, n_starts: int = 10, grid: PlaneGrid | None = None) -> tuple[float, complex]:
    """Numerical max of Q: multistart quasi-Newton seeded from the grid top values."""
    grid = grid or plane_grid(psi, n_rad=48, n_ang=64)
    Q = husimi_cv_points(psi, grid.points)
    order = np.argsort(-Q)[: n_starts]
    low = psi.lowered()
    best = (-1.0, 0j)
    for idx in order:
        p = grid.points[idx]

        def fun(x):
            q, g = _cv_q_and_grad(psi, low, x)
            return -q, -g

        res = minimize(fun, np.array([p.real, p.imag]), jac=True, method="BFGS", options={"gtol": 1e-13})
        val = -float(res.fun)
        if val > best[0]:
            best = (val, complex(res.x[0], res.x[1]))
    return best


def _tangent_basis(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(v, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(v, e1)


def _spin_q_and_torque(rho: np.ndarray, two_S: int, n: np.ndarray):
    """Q(n) and its tangential gradient on the sphere."""
    from .states import spin_matrices

    sv = SphereVec.from_vector(n)
    bra = spin_coherent_bras(two_S, sv.theta, sv.phi)[0]
    ket = bra.conj()
    Q = float((bra @ rho @ ket).real)
    tau = np.array([(bra @ (1j * (S @ rho - rho @ S)) @ ket).real for S in spin_matrices(two_S)])
    return Q, np.cross(tau, n)


def ascend_spin_q(rho: np.ndarray, two_S: int, V0: np.ndarray, gtol: float = 1e-6, max_iter: int = 500):
    """Vectorised Riemannian gradient ascent of Q from many starting directions.

    Returns (Q values, end directions).  Steps are halved per point whenever Q
    would decrease, so every trajectory is monotone.
    """
    from .states import spin_matrices

    M = [1j * (S @ rho - rho @ S) for S in spin_matrices(two_S)]

    def q_and_grad(V):
        th = np.arccos(np.clip(V[:, 2], -1, 1))
        ph = np.arctan2(V[:, 1], V[:, 0])
        B = spin_coherent_bras(two_S, th, ph)
        Bc = B.conj()
        Q = np.einsum("pi,ij,pj->p", B, rho, Bc).real
        tau = np.stack([np.einsum("pi,ij,pj->p", B, Ma, Bc).real for Ma in M], axis=1)
        return Q, np.cross(tau, V)

    V = V0 / np.linalg.norm(V0, axis=1, keepdims=True)
    Q, g = q_and_grad(V)
    h = np.full(len(V), 1.0 / (two_S + 1))
    for _ in range(max_iter):
        gn = np.linalg.norm(g, axis=1)
        if gn.max() < gtol:
            break
        Vn = V + h[:, None] * g
        Vn /= np.linalg.norm(Vn, axis=1, keepdims=True)
        Qn, gnew = q_and_grad(Vn)
        up = Qn >= Q
        V[up], Q[up], g[up] = Vn[up], Qn[up], gnew[up]
        h = np.where(up, np.minimum(h * 1.5, 4.0 / (two_S + 1)), h * 0.5)
    return Q, V


def m_infinity_spin(state, n_starts: int = 10) -> tuple[float, SphereVec]:
    """Numerical max of Q on the sphere, seeded by grid maxima and star antipodes.

    All seeds are first pushed uphill together; the leading candidates are then
    finished by BFGS.
    """
    rho = to_density(state)
    tS = rho.two_S
    grid = sphere_grid(max(12, tS + 8))
    Q = husimi_spin_points(rho, grid.theta, grid.phi)
    seeds = list(grid.vectors[np.argsort(-Q)[:n_starts]])
    if isinstance(state, SpinState) and tS > 0:
        seeds += list(-extract_constellation(state, tol=1e-7).points())
    Qa, Va = ascend_spin_q(rho.matrix, tS, np.array(seeds, float))
    order = np.argsort(-Qa)
    lead = []
    for i in order:
        if Qa[i] < Qa[order[0]] - 1e-6:
            break
        if all(np.linalg.norm(Va[i] - v) > 1e-4 for v in lead):
            lead.append(Va[i])
    best = (-1.0, None)
    for s in lead:
        s = s / np.linalg.norm(s)
        e1, e2 = _tangent_basis(s)

        def fun(u, s=s, e1=e1, e2=e2):
            v = s + u[0] * e1 + u[1] * e2
            nv = np.linalg.norm(v)
            n = v / nv
            q, gt = _spin_q_and_torque(rho.matrix, tS, n)
            return -q, -np.array([gt @ e1, gt @ e2]) / nv

        res = minimize(fun, np.zeros(2), jac=True, method="BFGS", options={"gtol": 1e-13})
        val = -float(res.fun)
        if val > best[0]:
            v = s + res.x[0] * e1 + res.x[1] * e2
            best = (val, SphereVec.from_vector(v))
    return best


def m_infinity(state, mode: str = "numeric"):
    """M_inf and its location; ``mode`` is 'numeric' or 'closed' (CV families only)."""
    if mode == "closed":
        if not isinstance(state, FockState):
            raise NoClosedForm("closed-form M_inf is available for CV families only")
        return m_infinity_cv_closed(state), None
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(state, FockState):
        return m_infinity_cv(state)
    return m_infinity_spin(state)
