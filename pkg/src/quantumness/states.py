"""State families for a single bosonic mode and for a spin-S irrep.

CV states are kets truncated in the Fock basis.  Spin states use the Dicke
basis ordered m = -S, ..., S.

Spin-coherent convention: ``|n>`` has amplitudes
``c_m sin(theta/2)^(S+m) cos(theta/2)^(S-m) (-exp(-i phi))^(S+m)`` so that
``(S . n)|n> = -S|n>``.  With it, ``<n|psi>`` is
``(1+|zeta|^2)^(-S) sum_m c_m psi_m (-zeta)^(S+m)`` with
``zeta = tan(theta/2) exp(i phi)``, and Husimi zeros move rigidly with rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np

from .specfun import assoc_laguerre

__all__ = [
    "TruncationError",
    "FockState",
    "GaussianPure",
    "SpinState",
    "SpinDensity",
    "SphereVec",
    "make_coherent_cv",
    "make_fock",
    "make_cat",
    "make_yurke_stoler",
    "make_photon_added",
    "make_gaussian_fock",
    "make_squeezed",
    "make_dicke",
    "make_spin_coherent",
    "rotate_spin",
    "spin_matrices",
    "to_density",
    "random_spin_state",
    "random_fock_state",
    "coherent_overlaps",
    "photon_added_mean_number",
    "displace",
]

NORM_TOL = 1e-12
DEFAULT_TOL = 1e-14


class TruncationError(ValueError):
    """The requested Fock cutoff tolerance cannot be met."""


def _as_complex_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("amplitudes must be a nonempty 1-d sequence")
    return arr


@dataclass(frozen=True, eq=False)
class FockState:
    """Pure single-mode state psi_0..psi_N in the Fock basis.

    ``family`` optionally records how the state was built (used by closed-form
    measures); it never affects numerics.
    """

    amplitudes: np.ndarray
    family: dict[str, Any] | None = field(default=None)

    def __post_init__(self):
        amps = _as_complex_array(self.amplitudes)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"FockState not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    def mean_number(self) -> float:
        n = np.arange(self.amplitudes.size)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))

    def lowered(self) -> np.ndarray:
        """Unnormalized amplitudes of a|psi>."""
        n = np.arange(1, self.amplitudes.size)
        out = np.zeros_like(self.amplitudes)
        out[:-1] = np.sqrt(n) * self.amplitudes[1:]
        return out

    def overlap(self, other: "FockState") -> complex:
        k = min(self.amplitudes.size, other.amplitudes.size)
        return complex(np.vdot(self.amplitudes[:k], other.amplitudes[:k]))


@dataclass(frozen=True)
class GaussianPure:
    """Parameters (beta, r, theta_sq) of a pure Gaussian state, xi = r exp(i theta_sq)."""

    beta: complex = 0j
    r: float = 0.0
    theta_sq: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("squeeze modulus r must be >= 0")

    def stellar_coefficients(self) -> tuple[complex, complex, complex]:
        """(A, B, C) of the Gaussian stellar function exp(-A a^2/2 + B a + C)."""
        A = np.exp(-1j * self.theta_sq) * math.tanh(self.r)
        B = self.beta * math.sqrt(1.0 - abs(A) ** 2)
        C = 0.5 * (np.conj(A) * self.beta**2 - abs(self.beta) ** 2)
        return complex(A), complex(B), complex(C)


@dataclass(frozen=True)
class SphereVec:
    """Direction on the unit sphere, theta in [0, pi], phi in [0, 2 pi)."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not -1e-12 <= self.theta <= math.pi + 1e-12:
            raise ValueError("theta must lie in [0, pi]")
        object.__setattr__(self, "theta", float(min(max(self.theta, 0.0), math.pi)))
        object.__setattr__(self, "phi", float(self.phi % (2 * math.pi)))

    @property
    def vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @property
    def zeta(self) -> complex:
        """Stereographic coordinate tan(theta/2) exp(i phi); inf at the south pole."""
        if self.theta >= math.pi:
            return complex(math.inf, 0.0)
        return math.tan(self.theta / 2) * complex(math.cos(self.phi), math.sin(self.phi))

    @classmethod
    def from_vector(cls, v) -> "SphereVec":
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        theta = math.acos(min(1.0, max(-1.0, v[2])))
        phi = math.atan2(v[1], v[0]) if abs(v[0]) + abs(v[1]) > 0 else 0.0
        return cls(theta, phi)

    def antipode(self) -> "SphereVec":
        return SphereVec.from_vector(-self.vector)


@dataclass(frozen=True, eq=False)
class SpinState:
    """Pure spin-S state with amplitudes Psi_{-S}..Psi_{S}."""

    two_S: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _as_complex_array(self.amplitudes)
        if amps.size != self.two_S + 1:
            raise ValueError(f"expected {self.two_S + 1} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"SpinState not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def S(self) -> float:
        return self.two_S / 2

    @classmethod
    def from_unnormalized(cls, two_S: int, amps) -> "SpinState":
        amps = np.asarray(amps, dtype=complex)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("zero vector is not a state")
        return cls(two_S, amps / nrm)

    def density(self) -> "SpinDensity":
        return SpinDensity(self.two_S, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class SpinDensity:
    """Density matrix on the (2S+1)-dimensional irrep, same basis order as SpinState."""

    two_S: int
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        d = self.two_S + 1
        if rho.shape != (d, d):
            raise ValueError(f"density must be {d}x{d}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise ValueError("density matrix trace != 1")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @property
    def S(self) -> float:
        return self.two_S / 2

    def purity(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))

    @classmethod
    def maximally_mixed(cls, two_S: int) -> "SpinDensity":
        return cls(two_S, np.eye(two_S + 1) / (two_S + 1))


def to_density(state) -> SpinDensity:
    if isinstance(state, SpinDensity):
        return state
    if isinstance(state, SpinState):
        return state.density()
    raise TypeError(f"expected a spin state, got {type(state).__name__}")


# --------------------------------------------------------------------------
# continuous variables
# --------------------------------------------------------------------------


def _log_coherent(alpha: complex, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log|<n|alpha>| and arg<n|alpha> for integer array n."""
    from scipy.special import gammaln

    a = abs(alpha)
    if a == 0:
        logmag = np.where(n == 0, 0.0, -np.inf)
        return logmag, np.zeros(n.shape)
    logmag = -0.5 * a * a + n * math.log(a) - 0.5 * gammaln(n + 1.0)
    return logmag, n * np.angle(alpha)


def _from_log(logmag: np.ndarray, phase: np.ndarray) -> np.ndarray:
    with np.errstate(under="ignore"):
        return np.exp(logmag) * np.exp(1j * phase)


def _truncate(amps: np.ndarray, tol: float) -> np.ndarray:
    """Cut at the smallest N whose tail mass is below ``tol``, then renormalize."""
    w = np.abs(amps) ** 2
    total = w.sum()
    tail = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]]) / total
    N = int(np.argmax(tail < tol))
    out = amps[: N + 1]
    return out / np.linalg.norm(out)


def _check_tol(tol: float) -> None:
    if not 0 < tol <= 1e-3:
        raise ValueError("cutoff_tol must lie in (0, 1e-3]")


def _grow(builder, tol: float, n_start: int, max_cutoff: int) -> np.ndarray:
    """Evaluate ``builder(nmax)`` on growing ranges until the tail is resolved."""
    nmax = max(16, n_start)
    while True:
        amps = builder(nmax)
        w = np.abs(amps) ** 2
        total = w.sum()
        if total > 0 and w[-max(4, nmax // 8):].sum() < 1e-3 * tol * total:
            return _truncate(amps, tol)
        if nmax >= max_cutoff:
            raise TruncationError(
                f"tail mass above {tol:g} even at cutoff {max_cutoff}; "
                "raise max_cutoff or loosen cutoff_tol"
            )
        nmax = min(2 * nmax, max_cutoff)


def _coherent_amps(alpha: complex, nmax: int) -> np.ndarray:
    n = np.arange(nmax + 1)
    return _from_log(*_log_coherent(alpha, n))


def make_coherent_cv(alpha: complex, cutoff_tol: float = DEFAULT_TOL, max_cutoff: int = 20000) -> FockState:
    """Canonical coherent state |alpha> truncated at tail mass ``cutoff_tol``."""
    _check_tol(cutoff_tol)
    alpha = complex(alpha)
    a2 = abs(alpha) ** 2
    start = int(a2 + 10 * math.sqrt(a2 + 1) + 20)
    amps = _grow(lambda N: _coherent_amps(alpha, N), cutoff_tol, start, max_cutoff)
    return FockState(amps, {"family": "coherent", "alpha": alpha})


def make_fock(n: int) -> FockState:
    """Number state |n>."""
    if n < 0:
        raise ValueError("photon number must be >= 0")
    amps = np.zeros(n + 1, dtype=complex)
    amps[n] = 1.0
    return FockState(amps, {"family": "fock", "n": int(n)})


def make_yurke_stoler(
    beta: complex, theta_c: float, cutoff_tol: float = DEFAULT_TOL, max_cutoff: int = 20000
) -> FockState:
    """Superposition proportional to |beta> + cos(theta_c)|-beta>."""
    _check_tol(cutoff_tol)
    beta = complex(beta)
    c = math.cos(theta_c)
    b2 = abs(beta) ** 2
    if abs(1.0 + c) < 1e-15 and beta == 0:
        raise ValueError("degenerate superposition: state vanishes identically")

    def build(N):
        coh = _coherent_amps(beta, N)
        return coh * (1.0 + c * (-1.0) ** np.arange(N + 1))

    start = int(b2 + 10 * math.sqrt(b2 + 1) + 20)
    amps = _grow(build, cutoff_tol, start, max_cutoff)
    return FockState(amps, {"family": "yurke_stoler", "beta": beta, "theta_c": float(theta_c)})


def make_cat(beta: complex, sign: int = 1, cutoff_tol: float = DEFAULT_TOL, max_cutoff: int = 20000) -> FockState:
    """Even (sign=+1) or odd (sign=-1) cat state (|beta> +/- |-beta>)/sqrt(N_+/-)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    beta = complex(beta)
    if beta == 0 and sign == -1:
        raise ValueError("odd cat state with beta=0 is the zero vector")
    st = make_yurke_stoler(beta, 0.0 if sign == 1 else math.pi, cutoff_tol, max_cutoff)
    return FockState(st.amplitudes, {"family": "cat", "beta": beta, "sign": sign})


def cat_normalization(beta: complex, sign: int) -> float:
    """N_+/- = 2[1 +/- exp(-2|beta|^2)]."""
    return 2.0 * (1.0 + sign * math.exp(-2.0 * abs(beta) ** 2))


def make_photon_added(
    beta: complex, m: int, cutoff_tol: float = DEFAULT_TOL, max_cutoff: int = 20000
) -> FockState:
    """Photon-added coherent state a^dag^m |beta> / sqrt(m! L_m(-|beta|^2))."""
    _check_tol(cutoff_tol)
    if m < 0:
        raise ValueError("m must be >= 0")
    from scipy.special import gammaln

    beta = complex(beta)
    b2 = abs(beta) ** 2

    def build(N):
        amps = np.zeros(N + 1, dtype=complex)
        if N < m:
            return amps
        n = np.arange(m, N + 1)
        logmag, phase = _log_coherent(beta, n - m)
        logmag = logmag + 0.5 * (gammaln(n + 1.0) - gammaln(n - m + 1.0))
        amps[m:] = _from_log(logmag, phase)
        return amps

    start = int(b2 + m + 10 * math.sqrt(b2 + m + 1) + 20)
    amps = _grow(build, cutoff_tol, start, max_cutoff)
    return FockState(amps, {"family": "photon_added", "beta": beta, "m": int(m)})


def photon_added_mean_number(beta: complex, m: int) -> float:
    """Mean photon number (m+1) L_{m+1}(-|b|^2) / L_m(-|b|^2) - 1."""
    x = -abs(beta) ** 2
    return (m + 1) * assoc_laguerre(m + 1, 0, x) / assoc_laguerre(m, 0, x) - 1.0


def _gaussian_amps(g: GaussianPure, nmax: int) -> np.ndarray:
    A, B, C = g.stellar_coefficients()
    h = np.zeros(nmax + 1, dtype=complex)
    h[0] = 1.0
    if nmax >= 1:
        h[1] = B
    for n in range(1, nmax):
        h[n + 1] = (B * h[n] - A * math.sqrt(n) * h[n - 1]) / math.sqrt(n + 1)
    return (1.0 - abs(A) ** 2) ** 0.25 * np.exp(C) * h


def make_gaussian_fock(g: GaussianPure, cutoff_tol: float = DEFAULT_TOL, max_cutoff: int = 20000) -> FockState:
    """Fock amplitudes of a pure Gaussian state from its stellar function.

    With f(a) = (1-|A|^2)^(1/4) exp(-A a^2/2 + B a + C), the amplitudes obey
    psi_{n+1} = (B psi_n - A sqrt(n) psi_{n-1}) / sqrt(n+1).
    """
    _check_tol(cutoff_tol)
    if g.r > 6:
        raise TruncationError("squeezing r > 6 is not supported")
    nbar = abs(g.beta) ** 2 * math.cosh(2 * g.r) + math.sinh(g.r) ** 2
    start = int(nbar + 10 * math.sqrt(nbar + 1) + 20)
    amps = _grow(lambda N: _gaussian_amps(g, N), cutoff_tol, start, max_cutoff)
    fam = {"family": "gaussian", "beta": complex(g.beta), "r": float(g.r), "theta_sq": float(g.theta_sq)}
    if g.r == 0:
        fam = {"family": "coherent", "alpha": complex(g.beta)}
    return FockState(amps, fam)


def make_squeezed(r: float, theta_sq: float = 0.0, beta: complex = 0j, cutoff_tol: float = DEFAULT_TOL) -> FockState:
    return make_gaussian_fock(GaussianPure(complex(beta), float(r), float(theta_sq)), cutoff_tol)


def random_fock_state(cutoff: int, rng: np.random.Generator) -> FockState:
    """Haar-random ket on span{|0>..|cutoff>}."""
    v = rng.normal(size=cutoff + 1) + 1j * rng.normal(size=cutoff + 1)
    return FockState(v / np.linalg.norm(v))


def coherent_overlaps(alphas, amplitudes) -> np.ndarray:
    """<alpha|psi> for every alpha in ``alphas`` (any shape).

    Uses the recurrence t_n = t_{n-1} conj(alpha)/sqrt(n) with a running log
    scale, so large |alpha| neither overflows nor loses the tail.
    """
    alphas = np.asarray(alphas, dtype=complex)
    shape = alphas.shape
    z = np.conj(alphas.ravel())
    amps = np.asarray(amplitudes, dtype=complex)
    t = np.ones_like(z)
    acc = amps[0] * t
    logscale = -0.5 * np.abs(z) ** 2
    for n in range(1, amps.size):
        t = t * (z / math.sqrt(n))
        acc = acc + amps[n] * t
        if n % 24 == 0:
            s = np.maximum(np.abs(t), np.abs(acc))
            s = np.where(s > 0, s, 1.0)
            t = t / s
            acc = acc / s
            logscale = logscale + np.log(s)
    with np.errstate(under="ignore", over="ignore"):
        out = acc * np.exp(logscale)
    return out.reshape(shape)


# --------------------------------------------------------------------------
# spin
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def spin_matrices(two_S: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(S_x, S_y, S_z) in the basis m = -S..S (read-only arrays)."""
    S = two_S / 2
    m = np.arange(two_S + 1) - S
    sp = np.zeros((two_S + 1, two_S + 1))
    for i in range(two_S):
        sp[i + 1, i] = math.sqrt((S - m[i]) * (S + m[i] + 1))
    sx = (sp + sp.T) / 2
    sy = (sp - sp.T) / 2j
    sz = np.diag(m).astype(complex)
    mats = (sx.astype(complex), sy, sz)
    for a in mats:
        a.setflags(write=False)
    return mats


def make_dicke(two_S: int, two_m: int) -> SpinState:
    """Dicke state |S, m> (both arguments doubled)."""
    if two_S < 0 or abs(two_m) > two_S or (two_S - two_m) % 2:
        raise ValueError(f"invalid Dicke labels 2S={two_S}, 2m={two_m}")
    amps = np.zeros(two_S + 1, dtype=complex)
    amps[(two_m + two_S) // 2] = 1.0
    return SpinState(two_S, amps)


def make_spin_coherent(two_S: int, n: SphereVec) -> SpinState:
    """Spin-coherent state |n>, the -S eigenvector of S . n."""
    k = np.arange(two_S + 1)  # k = S + m
    c = np.array([math.sqrt(math.comb(two_S, int(j))) for j in k])
    s, co = math.sin(n.theta / 2), math.cos(n.theta / 2)
    amps = c * s**k * co ** (two_S - k) * (-np.exp(-1j * n.phi)) ** k
    return SpinState(two_S, amps / np.linalg.norm(amps))


def rotate_spin(psi: SpinState, axis: SphereVec, chi: float) -> SpinState:
    """Apply exp(i chi S . axis) to ``psi``.

    Expectation vectors, and Majorana stars, turn by -chi about ``axis``.
    """
    sx, sy, sz = spin_matrices(psi.two_S)
    u = axis.vector
    gen = u[0] * sx + u[1] * sy + u[2] * sz
    lam, vec = np.linalg.eigh(gen)
    out = vec @ (np.exp(1j * chi * lam) * (vec.conj().T @ psi.amplitudes))
    return SpinState(psi.two_S, out / np.linalg.norm(out))


def random_spin_state(two_S: int, rng: np.random.Generator) -> SpinState:
    """Haar-random pure state of spin S."""
    v = rng.normal(size=two_S + 1) + 1j * rng.normal(size=two_S + 1)
    return SpinState(two_S, v / np.linalg.norm(v))


def displace(psi: FockState, beta: complex, cutoff_tol: float = DEFAULT_TOL) -> FockState:
    """D(beta)|psi>, computed in an enlarged Fock space and re-truncated."""
    from scipy.linalg import expm

    beta = complex(beta)
    nbar = psi.mean_number()
    extra = abs(beta) ** 2 + 2 * abs(beta) * math.sqrt(nbar + 1) + 12 * math.sqrt(abs(beta) ** 2 + nbar + 1) + 40
    dim = psi.amplitudes.size + int(extra)
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    D = expm(beta * a.conj().T - np.conj(beta) * a)
    v = np.zeros(dim, dtype=complex)
    v[: psi.amplitudes.size] = psi.amplitudes
    out = D @ v
    # the last rows of a truncated exponential are unreliable; they must carry no weight
    if np.sum(np.abs(out[-10:]) ** 2) > cutoff_tol:
        raise TruncationError("displacement leaks past the working dimension")
    return FockState(_truncate(out, cutoff_tol))
