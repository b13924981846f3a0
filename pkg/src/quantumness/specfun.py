"""Special functions and angular-momentum coupling coefficients.

Half-integer quantum numbers (spins, multipole orders, projections) are
accepted as ints, floats or ``fractions.Fraction`` and handled internally as
doubled integers, so ``1.5`` and ``Fraction(3, 2)`` are the same order.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "twice",
    "log_factorial",
    "digamma",
    "assoc_laguerre",
    "assoc_laguerre_poly",
    "spherical_harmonic",
    "sph_harm_table",
    "clebsch_gordan",
    "cg_stretched",
]

# Bernoulli numbers B_2k / (2k) for the digamma asymptotic series.
_DIGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def twice(x) -> int:
    """Return ``2x`` as an int, raising if ``x`` is not a half-integer."""
    if isinstance(x, (int, np.integer)):
        return 2 * int(x)
    t = Fraction(x) * 2 if not isinstance(x, float) else x * 2
    ti = round(t)
    if abs(t - ti) > 1e-9:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(ti)


@lru_cache(maxsize=None)
def _int_factorial(n: int) -> int:
    return math.factorial(n)


def log_factorial(n: int) -> float:
    """ln(n!) for nonnegative integer ``n``."""
    if n < 0:
        raise ValueError("log_factorial needs n >= 0")
    if n < 2:
        return 0.0
    if n <= 170:
        return math.log(float(_int_factorial(n)))
    return math.lgamma(n + 1.0)


def digamma(x: float) -> float:
    """Digamma function psi(x) for x > 0 (recurrence + asymptotic series)."""
    if not x > 0:
        raise ValueError("digamma is implemented for x > 0 only")
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for c in _DIGAMMA_SERIES:
        series += c * p
        p *= inv2
    return shift + math.log(x) - 0.5 / x - series


def assoc_laguerre(m: int, k: int | float, x):
    """Associated Laguerre polynomial L_m^{(k)}(x) by three-term recurrence.

    ``x`` may be a scalar or an array; the return type follows ``x``.
    """
    if m < 0:
        raise ValueError("Laguerre degree must be nonnegative")
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else float(x)
    prev = 1.0 + 0.0 * x
    if m == 0:
        return prev
    cur = 1.0 + k - x
    for n in range(1, m):
        prev, cur = cur, ((2 * n + 1 + k - x) * cur - (n + k) * prev) / (n + 1)
    return cur


def assoc_laguerre_poly(m: int, k: int) -> np.ndarray:
    """Monomial coefficients c_j of L_m^{(k)}(x) = sum_j c_j x^j (exact rationals, as floats)."""
    coeffs = []
    for j in range(m + 1):
        c = Fraction((-1) ** j * math.comb(m + k, m - j), _int_factorial(j))
        coeffs.append(float(c))
    return np.array(coeffs)


def _legendre_normalized(lmax: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal associated Legendre table P[l, m, ...] for 0 <= m <= l <= lmax.

    Includes the Condon-Shortley phase and the 1/sqrt(2 pi) azimuthal factor,
    so Y_lm = P[l, m] * exp(i m phi).
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((lmax + 1, lmax + 1) + x.shape)
    out[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, lmax + 1):
        out[m, m] = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * out[m - 1, m - 1]
    for m in range(0, lmax):
        out[m + 1, m] = math.sqrt(2 * m + 3) * x * out[m, m]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[l, m] = a * (x * out[l - 1, m] - b * out[l - 2, m])
    return out


def sph_harm_table(lmax: int, theta, phi) -> dict[tuple[int, int], np.ndarray]:
    """All Y_lq(theta, phi) for l <= lmax, keyed by (l, q)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    plm = _legendre_normalized(lmax, np.cos(theta))
    table = {}
    for l in range(lmax + 1):
        for q in range(0, l + 1):
            y = plm[l, q] * np.exp(1j * q * phi)
            table[(l, q)] = y
            if q:
                table[(l, -q)] = (-1) ** q * np.conj(y)
    return table


def spherical_harmonic(K, q, theta, phi):
    """Orthonormal spherical harmonic Y_Kq with the Condon-Shortley phase."""
    tK, tq = twice(K), twice(q)
    if tK % 2 or tq % 2:
        raise ValueError("spherical harmonics need integer K and q")
    K, q = tK // 2, tq // 2
    if K < 0 or abs(q) > K:
        raise ValueError(f"invalid spherical harmonic indices K={K}, q={q}")
    theta_arr = np.asarray(theta, dtype=float)
    plm = _legendre_normalized(K, np.cos(theta_arr))
    y = plm[K, abs(q)] * np.exp(1j * abs(q) * np.asarray(phi, dtype=float))
    if q < 0:
        y = (-1) ** q * np.conj(y)
    if np.ndim(y) == 0:
        return complex(y)
    return y


def _cg_doubled(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int, tM: int) -> float:
    if tm1 + tm2 != tM:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ:
        return 0.0
    if (tj1 + tm1) % 2 or (tj2 + tm2) % 2 or (tJ + tM) % 2:
        return 0.0
    if tJ > tj1 + tj2 or tJ < abs(tj1 - tj2) or (tj1 + tj2 + tJ) % 2:
        return 0.0
    return _cg_cached(tj1, tm1, tj2, tm2, tJ)


@lru_cache(maxsize=200_000)
def _cg_cached(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int) -> float:
    tM = tm1 + tm2
    f = _int_factorial
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tm1) // 2
    c = (tj2 + tm2) // 2
    d = (tJ - tj2 + tm1) // 2
    e = (tJ - tj1 - tm2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = f(k) * f(a - k) * f(b - k) * f(c - k) * f(d + k) * f(e + k)
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    # Racah prefactor, kept exact until the final square root
    num = (
        (tJ + 1)
        * f((tj1 + tj2 - tJ) // 2)
        * f((tj1 - tj2 + tJ) // 2)
        * f((-tj1 + tj2 + tJ) // 2)
        * f((tj1 + tm1) // 2)
        * f((tj1 - tm1) // 2)
        * f((tj2 + tm2) // 2)
        * f((tj2 - tm2) // 2)
        * f((tJ + tM) // 2)
        * f((tJ - tM) // 2)
    )
    den = f((tj1 + tj2 + tJ) // 2 + 1)
    sq = Fraction(num, den) * total * total
    val = math.sqrt(sq.numerator / sq.denominator) if sq.numerator < 10**300 else math.exp(
        0.5 * (math.log(sq.numerator) - math.log(sq.denominator))
    )
    return val if total > 0 else -val


def clebsch_gordan(j1, m1, j2, q, J, M=None) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 q | J M> (Condon-Shortley phases).

    The five-argument form ``clebsch_gordan(S, m, K, q, m_out)`` couples spin S
    with rank K back to S, i.e. ``C_{Sm,Kq}^{S m_out}``.  Coefficients that
    violate a selection rule are exactly zero.
    """
    if M is None:
        J, M = j1, J
    return _cg_doubled(twice(j1), twice(m1), twice(j2), twice(q), twice(J), twice(M))


def cg_stretched(two_S: int, K: int) -> float:
    """Closed form of C_{SS,K0}^{SS} from log-factorials."""
    if not 0 <= K <= two_S:
        raise ValueError("need 0 <= K <= 2S")
    log_val = (
        0.5 * math.log(two_S + 1)
        + log_factorial(two_S)
        - 0.5 * (log_factorial(two_S - K) + log_factorial(two_S + 1 + K))
    )
    return math.exp(log_val)
