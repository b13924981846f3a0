"""Searches for extremal spin states and point configurations on the sphere.

Kings minimise the cumulative multipole A_M, Queens are the pure states
farthest from mixtures of coherent states, and the Wehrl / M_inf searches
extremise the corresponding Husimi measures.  Thomson and Tammes problems and
the spherical-design test work on bare point sets.

Every stochastic routine takes a ``seed``; restart r draws from
``np.random.default_rng([seed, r])`` so results do not depend on how many
restarts run or in which order.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .husimi import default_sphere_order, husimi_spin_points, sphere_grid, spin_coherent_bras
from .measures import ascend_spin_q, cumulative_A, m_infinity_spin, tensor_operators, wehrl_spin
from .specfun import sph_harm_table
from .states import SphereVec, SpinState, random_spin_state, spin_matrices
from .stellar import extract_constellation

__all__ = [
    "SearchResult",
    "QueenResult",
    "ConvergenceError",
    "find_king",
    "queen_distance",
    "find_queen",
    "maximize_wehrl",
    "minimize_m_infinity",
    "design_check",
    "design_strength",
    "thomson",
    "tammes",
    "king_design_probe",
    "fibonacci_sphere",
    "project_simplex",
]

KING_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


@dataclass
class SearchResult:
    state: SpinState
    objective: float
    order_achieved: int = 0
    restarts_used: int = 0
    converged: bool = False
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        a = self.state.amplitudes
        return {
            "state": {"system": "spin", "two_S": self.state.two_S, "amplitudes": [[z.real, z.imag] for z in a]},
            "objective": self.objective,
            "order_achieved": self.order_achieved,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "constellation": extract_constellation(self.state).to_json() if self.state.two_S else None,
            "details": self.details,
        }


def _canonical(v: np.ndarray) -> np.ndarray:
    """Normalise and rotate the global phase so the largest amplitude is real positive."""
    v = v / np.linalg.norm(v)
    j = int(np.argmax(np.abs(v) - 1e-9 * np.arange(v.size)))
    return v * np.exp(-1j * np.angle(v[j]))


def _restart_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng([seed, r])


def _run_restarts(task: Callable[[int], tuple], restarts: int, threads: int, stop: Callable[[tuple], bool]):
    """Run ``task(r)`` for r = 0..restarts-1 in batches; stop at the first (lowest r) hit.

    Returns (results_so_far, index_of_hit or None).
    """
    out = []
    threads = max(1, threads)
    for start in range(0, restarts, threads):
        idx = list(range(start, min(restarts, start + threads)))
        if threads == 1:
            batch = [task(idx[0])]
        else:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                batch = list(ex.map(task, idx))
        for r, res in zip(idx, batch):
            out.append(res)
            if stop(res):
                return out, r
    return out, None


# --------------------------------------------------------------------------
# real parametrisation with gauge fixing
# --------------------------------------------------------------------------


def _pack(v: np.ndarray, j0: int) -> np.ndarray:
    return np.concatenate([v.real, np.delete(v.imag, j0)])


def _unpack(x: np.ndarray, d: int, j0: int) -> np.ndarray:
    re = x[:d]
    im = np.insert(x[d:], j0, 0.0)
    return re + 1j * im


def _grad_pack(g: np.ndarray, j0: int) -> np.ndarray:
    """Real gradient from dF/dpsi^* (F real): dF/dRe = 2 Re g, dF/dIm = 2 Im g."""
    return np.concatenate([2 * g.real, np.delete(2 * g.imag, j0)])


def _minimize_state(fun_grad: Callable, v0: np.ndarray, **opts):
    """Minimise F(psi/|psi|) given fun_grad(u) -> (F, dF/du^* tangent to the sphere)."""
    d = v0.size
    j0 = int(np.argmax(np.abs(v0)))
    v0 = v0 * np.exp(-1j * np.angle(v0[j0])) / np.linalg.norm(v0)

    def f(x):
        v = _unpack(x, d, j0)
        nv = np.linalg.norm(v)
        u = v / nv
        F, g = fun_grad(u)
        g = g - np.vdot(u, g).real * u  # radial part vanishes for scale-free F
        return F, _grad_pack(g / nv, j0)

    options = {"maxiter": 4000, "ftol": 0.0, "gtol": 1e-15, "maxcor": 30}
    options.update(opts)
    res = minimize(f, _pack(v0, j0), jac=True, method="L-BFGS-B", options=options)
    v = _unpack(res.x, d, j0)
    return v / np.linalg.norm(v), float(res.fun)


# --------------------------------------------------------------------------
# Kings
# --------------------------------------------------------------------------


def _king_objective(two_S: int, M: int):
    labels, T = tensor_operators(two_S)
    idx = [i for i, (K, _) in enumerate(labels) if 1 <= K <= M]
    Ts = np.ascontiguousarray(T[idx])

    def fg(u):
        r = np.einsum("i,aji,j->a", u.conj(), Ts.conj(), u)  # <u|T_a^dag|u>
        A = float(np.sum(np.abs(r) ** 2))
        H = np.einsum("a,aji->ij", r.conj(), Ts.conj()) + np.einsum("a,aij->ij", r, Ts)
        return A, H @ u - 2 * A * u

    return fg


def find_king(two_S: int, M: int, restarts: int = 64, seed: int = 0, threads: int = 1,
              tol: float = KING_TOL) -> SearchResult:
    """Minimise A_M over pure states; success when A_M < ``tol``."""
    if not 1 <= M <= two_S:
        raise ValueError("need 1 <= M <= 2S")
    fg = _king_objective(two_S, M)

    def task(r):
        rng = _restart_rng(seed, r)
        v0 = random_spin_state(two_S, rng).amplitudes
        u, _ = _minimize_state(fg, v0.copy())
        psi = SpinState(two_S, _canonical(u))
        return psi, cumulative_A(psi, M)

    results, hit = _run_restarts(task, restarts, threads, lambda res: res[1] < tol)
    best_i = hit if hit is not None else min(range(len(results)), key=lambda i: (results[i][1], i))
    psi, obj = results[best_i]
    order = 0
    for k in range(1, two_S + 1):
        if cumulative_A(psi, k) < tol:
            order = k
        else:
            break
    return SearchResult(psi, obj, order, len(results), hit is not None, {"M": M, "best_restart": best_i})


# --------------------------------------------------------------------------
# Queens
# --------------------------------------------------------------------------


def fibonacci_sphere(n: int) -> np.ndarray:
    """n nearly uniform directions (golden-angle spiral)."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    ang = np.pi * (3 - math.sqrt(5)) * i
    return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} (sort-based, exact)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(y - tau, 0.0)


def _queen_data(rho: np.ndarray, two_S: int, dirs: np.ndarray):
    sv = [SphereVec.from_vector(v) for v in dirs]
    bras = spin_coherent_bras(two_S, [s.theta for s in sv], [s.phi for s in sv])
    q = np.einsum("pi,ij,pj->p", bras, rho, bras.conj()).real
    G = np.clip(0.5 * (1 + dirs @ dirs.T), 0.0, 1.0) ** two_S
    return q, G, bras


def _qp_pg(q, G, purity, x0=None, max_iter=3000, tol=1e-11, strict=True, accept=1e-8):
    """Projected gradient with Armijo backtracking for min purity - 2 q.x + x.G.x.

    Trial steps are Barzilai-Borwein lengths; backtracking keeps the decrease
    monotone.  Stops when the Frank-Wolfe duality gap, an upper bound on the
    suboptimality, drops below ``tol``.  If the iteration cap is hit, a gap
    below ``accept`` is still returned (the distance then moves by < accept).
    """
    n = q.size
    x = project_simplex(np.full(n, 1.0 / n) if x0 is None else x0)
    Gx = G @ x
    fx = purity - 2 * q @ x + x @ Gx
    g = 2 * (Gx - q)
    step = 1.0 / (2 * np.linalg.norm(G, 2))
    history = [fx]
    gap = np.inf
    for it in range(max_iter):
        gap = float(g @ x - g.min())
        if gap < tol:
            return x, fx, history
        t = step
        while True:
            xn = project_simplex(x - t * g)
            Gxn = G @ xn
            fn = purity - 2 * q @ xn + xn @ Gxn
            if fn <= fx + 1e-4 * g @ (xn - x) or t < 1e-20:
                break
            t *= 0.5
        gn = 2 * (Gxn - q)
        s_, y_ = xn - x, gn - g
        sy = s_ @ y_
        step = (s_ @ s_) / sy if sy > 1e-300 else t * 2
        if fn > fx:  # numerically flat: no further progress possible
            return x, fx, history
        x, fx, g, Gx = xn, fn, gn, Gxn
        history.append(fx)
    if not strict:
        return x, fx, history
    x, fx, gap = _qp_active_set(q, G, purity, x, tol)
    history.append(fx)
    if gap < accept:
        return x, fx, history
    raise ConvergenceError("projected gradient did not converge", gap)


def _qp_active_set(q, G, purity, x, tol=1e-11, max_iter=1000):
    """Primal active-set finish on the simplex, started from a feasible ``x``.

    Each step solves the equality-constrained problem on the working set by
    least squares (G restricted to the set may be singular), then either
    blocks at the first weight that hits zero or adds the most negative
    gradient index.
    """
    x = np.where(x > 1e-14, x, 0.0)
    x = x / x.sum()
    W = list(np.nonzero(x)[0])
    g = 2 * (G @ x - q)
    for _ in range(max_iter):
        k = len(W)
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = 2 * G[np.ix_(W, W)]
        K[:k, k] = K[k, :k] = 1.0
        rhs = np.concatenate([2 * q[W], [1.0]])
        p = np.linalg.lstsq(K, rhs, rcond=1e-13)[0][:k]
        xw = x[W]
        if np.all(p >= 0):
            x[W] = p
            g = 2 * (G @ x - q)
            i = int(np.argmin(g))
            if g @ x - g[i] < tol or i in W:
                break
            W.append(i)
        else:
            neg = p < 0
            alpha = np.min(xw[neg] / (xw[neg] - p[neg]))
            x[W] = xw + alpha * (p - xw)
            x[W] = np.where(x[W] > 1e-15, x[W], 0.0)
            W = [j for j in W if x[j] > 0]
    x = np.maximum(x, 0.0)
    x /= x.sum()
    Gx = G @ x
    g = 2 * (Gx - q)
    return x, float(purity - 2 * q @ x + x @ Gx), float(g @ x - g.min())


def _qp_fw(q, G, purity, max_iter=200000, tol=1e-11):
    """Pairwise Frank-Wolfe with exact line search (independent cross-check)."""
    n = q.size
    x = np.zeros(n)
    x[int(np.argmax(q))] = 1.0
    Gx = G @ x
    for it in range(max_iter):
        g = 2 * (Gx - q)
        s = int(np.argmin(g))
        active = np.nonzero(x > 0)[0]
        a = active[int(np.argmax(g[active]))]
        gap = g[a] - g[s]
        if gap < tol:
            break
        d_s, d_a = G[:, s] - G[:, a], None  # G d for d = e_s - e_a
        curv = G[s, s] - 2 * G[s, a] + G[a, a]
        gamma = gap / (2 * curv) if curv > 0 else x[a]
        gamma = min(gamma, x[a])
        x[s] += gamma
        x[a] -= gamma
        Gx += gamma * d_s
    else:
        raise ConvergenceError("Frank-Wolfe did not converge", gap)
    return x, float(purity - 2 * q @ x + x @ Gx)


@dataclass
class QueenResult:
    distance: float
    weights: np.ndarray
    directions: np.ndarray
    distance_fw: float | None = None

    def to_json(self) -> dict:
        keep = self.weights > 1e-12
        return {
            "distance": self.distance,
            "distance_fw": self.distance_fw,
            "support": [{"direction": list(map(float, d)), "weight": float(w)}
                        for d, w in zip(self.directions[keep], self.weights[keep])],
        }


def _polish_directions(rho, two_S, dirs, w):
    """Move the support directions continuously at fixed weights."""
    from .states import SpinDensity

    dens = SpinDensity(two_S, rho)

    def f(x):
        V = x.reshape(-1, 3)
        nv = np.linalg.norm(V, axis=1, keepdims=True)
        U = V / nv
        q, G, bras = _queen_data(rho, two_S, U)
        val = -2 * w @ q + w @ G @ w
        # gradient of Q(n) from the torque identity; gradient of G from the power law
        gq = np.zeros_like(U)
        for i, n in enumerate(U):
            gq[i] = _q_tangent(dens, two_S, n, bras[i])
        Gd = np.clip(0.5 * (1 + U @ U.T), 0.0, 1.0)
        dG = two_S * Gd ** max(two_S - 1, 0) * 0.5  # d/d(n_i.n_j)
        gG = 2 * (w[:, None] * (dG * w[None, :])) @ U
        g = -2 * w[:, None] * gq + gG
        g = g - np.sum(g * U, axis=1, keepdims=True) * U
        return val, (g / nv).ravel()

    res = minimize(f, dirs.ravel(), jac=True, method="L-BFGS-B", options={"maxiter": 500, "ftol": 0.0, "gtol": 1e-13})
    V = res.x.reshape(-1, 3)
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _q_tangent(dens, two_S, n, bra):
    S = spin_matrices(two_S)
    ket = bra.conj()
    tau = np.array([(bra @ (1j * (Si @ dens.matrix - dens.matrix @ Si)) @ ket).real for Si in S])
    return np.cross(tau, n)


def queen_distance(psi, grid_N: int | None = None, polish: bool = True, cross_check: bool = False) -> QueenResult:
    """Hilbert-Schmidt distance from |psi><psi| to the hull of coherent projectors.

    Weights live on a Fibonacci grid of directions; the support is then polished
    continuously and the QP re-solved on grid + polished points.
    """
    two_S = psi.two_S
    grid_N = grid_N or max(400, 40 * (two_S + 1))
    if grid_N < 100:
        raise ValueError("grid_N must be >= 100")
    rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
    # the Husimi maxima are natural atoms (exact for a coherent target)
    peaks = np.array([m[1] for m in _local_maxima(psi)])
    dirs = np.vstack([fibonacci_sphere(grid_N), peaks])
    grid_N = len(dirs)
    q, G, _ = _queen_data(rho, two_S, dirs)
    x, fx, _ = _qp_pg(q, G, 1.0)
    fw = None
    if cross_check:
        _, fw = _qp_fw(q, G, 1.0)
    if polish and fx > 1e-14:
        for _ in range(3):
            sup = x > 1e-9
            new = _polish_directions(rho, two_S, dirs[sup], x[sup] / x[sup].sum())
            dirs = np.vstack([dirs, new])
            q, G, _ = _queen_data(rho, two_S, dirs)
            x0 = np.concatenate([x, np.zeros(len(new))])
            x, fx, _ = _qp_pg(q, G, 1.0, x0=x0, tol=1e-14)
            keep = (x > 1e-12) | (np.arange(len(x)) < grid_N)
            dirs, x = dirs[keep], x[keep]
            q, G, _ = _queen_data(rho, two_S, dirs)
            if cross_check:
                _, fw = _qp_fw(q, G, 1.0)
    dist = math.sqrt(max(fx, 0.0))
    return QueenResult(dist, x, dirs, None if fw is None else math.sqrt(max(fw, 0.0)))


def find_queen(two_S: int, psi_target: SpinState | None = None, grid_N: int | None = None,
               restarts: int = 8, seed: int = 0, threads: int = 1):
    """With a target: its distance and weights.  Without: maximise the distance over pure states."""
    if psi_target is not None:
        return queen_distance(psi_target, grid_N, cross_check=True)
    grid_N = grid_N or max(400, 40 * (two_S + 1))
    dirs = fibonacci_sphere(grid_N)
    sv = [SphereVec.from_vector(v) for v in dirs]
    bras = spin_coherent_bras(two_S, [s.theta for s in sv], [s.phi for s in sv])
    G = np.clip(0.5 * (1 + dirs @ dirs.T), 0.0, 1.0) ** two_S
    warm = {}

    def fg(u):
        q = np.abs(bras @ u) ** 2
        # inexact inner solves are fine here: the final state is re-scored exactly
        x, fx, _ = _qp_pg(q, G, 1.0, x0=warm.get("x"), max_iter=5000, strict=False)
        warm["x"] = x
        sigma_u = bras.conj().T @ (x * (bras @ u))
        # envelope theorem: d(D^2)/du^* = -2 sigma u; we minimise -D^2
        return -fx, 2 * sigma_u

    def task(r):
        rng = _restart_rng(seed, r)
        warm.clear()
        u, f = _minimize_state(fg, random_spin_state(two_S, rng).amplitudes.copy(), maxiter=300, gtol=1e-10)
        psi = SpinState(two_S, _canonical(u))
        return psi, -f

    if two_S <= 1:
        psi = SpinState(two_S, np.eye(two_S + 1)[0].astype(complex))
        return SearchResult(psi, 0.0, 0, 1, True, {"note": "all pure states are coherent"})
    results, _ = _run_restarts(task, restarts, 1, lambda res: False)
    best_i = max(range(len(results)), key=lambda i: (results[i][1], -i))
    psi, _ = results[best_i]
    qr = queen_distance(psi, grid_N)
    return SearchResult(psi, qr.distance, 0, len(results), True, {"best_restart": best_i})


# --------------------------------------------------------------------------
# Wehrl maximisers and M_inf minimisers
# --------------------------------------------------------------------------


def _constant_objective(two_S: int) -> bool:
    return two_S <= 1


def maximize_wehrl(two_S: int, restarts: int = 8, seed: int = 0, threads: int = 1) -> SearchResult:
    """Multistart maximisation of the spin Wehrl entropy (quadrature objective)."""
    if _constant_objective(two_S):
        psi = SpinState(two_S, np.eye(two_S + 1)[-1].astype(complex))
        return SearchResult(psi, wehrl_spin(psi), 0, 1, True, {"note": "objective is constant"})
    grid = sphere_grid(2 * default_sphere_order(two_S))
    B = spin_coherent_bras(two_S, grid.theta, grid.phi)
    c = (two_S + 1) / (4 * np.pi)
    w = grid.weights

    def fg(u):
        amp = B @ u
        Q = np.abs(amp) ** 2
        lq = np.log(np.maximum(Q, 1e-300))
        S = -c * np.sum(w * Q * lq)
        g = -c * (B.conj().T @ (w * (lq + 1.0) * amp))
        return -S, -g

    def task(r):
        rng = _restart_rng(seed, r)
        u, f = _minimize_state(fg, random_spin_state(two_S, rng).amplitudes.copy(), gtol=1e-12)
        return SpinState(two_S, _canonical(u)), -f

    results, _ = _run_restarts(task, restarts, threads, lambda res: False)
    best_i = max(range(len(results)), key=lambda i: (round(results[i][1], 10), -i))
    psi = results[best_i][0]
    return SearchResult(psi, wehrl_spin(psi), 0, len(results), True, {"best_restart": best_i})


def _local_maxima(psi: SpinState, n_seeds: int | None = None):
    """Distinct local maxima (value, direction) of Q."""
    grid = sphere_grid(max(12, psi.two_S + 8))
    Q = husimi_spin_points(psi, grid.theta, grid.phi)
    V = grid.vectors
    n_seeds = n_seeds or 3 * psi.two_S + 6
    seeds = []
    for s in V[np.argsort(-Q)]:
        if len(seeds) >= n_seeds:
            break
        if all(np.linalg.norm(s - t) > 0.35 for t in seeds):
            seeds.append(s)
    rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
    Qa, Va = ascend_spin_q(rho, psi.two_S, np.array(seeds), gtol=1e-10)
    found = []
    for i in np.argsort(-Qa):
        if all(np.linalg.norm(Va[i] - f[1]) > 1e-4 for f in found):
            found.append((float(Qa[i]), Va[i]))
    return found


def minimize_m_infinity(two_S: int, restarts: int = 8, seed: int = 0, threads: int = 1) -> SearchResult:
    """Minimise max Q: softmax continuation on a grid, then an epigraph polish."""
    if _constant_objective(two_S):
        psi = SpinState(two_S, np.eye(two_S + 1)[-1].astype(complex))
        return SearchResult(psi, 1.0, 0, 1, True, {"note": "objective is constant"})
    grid = sphere_grid(2 * two_S + 24)
    B = spin_coherent_bras(two_S, grid.theta, grid.phi)

    def softmax_fg(tau):
        def fg(u):
            amp = B @ u
            Q = np.abs(amp) ** 2
            m = Q.max()
            e = np.exp((Q - m) / tau)
            Z = e.sum()
            F = m + tau * math.log(Z)
            p = e / Z
            return F, B.conj().T @ (p * amp)

        return fg

    def task(r):
        rng = _restart_rng(seed, r)
        u = random_spin_state(two_S, rng).amplitudes.copy()
        for tau in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4):
            u, _ = _minimize_state(softmax_fg(tau), u, maxiter=500, gtol=1e-12)
        psi = _epigraph_polish(SpinState(two_S, _canonical(u)))
        val, _ = m_infinity_spin(psi)
        return psi, val

    results, _ = _run_restarts(task, restarts, threads, lambda res: False)
    best_i = min(range(len(results)), key=lambda i: (round(results[i][1], 10), i))
    psi, val = results[best_i]
    vals = sorted(r[1] for r in results)
    return SearchResult(psi, val, 0, len(results), True, {"best_restart": best_i, "restart_values": vals})


def _epigraph_polish(psi: SpinState, rounds: int = 40) -> SpinState:
    """min t s.t. Q(n_k) <= t at the local maxima and near-top grid nodes.

    Steps are confined to a box trust region that grows on success and
    shrinks on failure; the maxima are re-located after every step.
    """
    d = psi.two_S + 1
    grid = sphere_grid(max(12, psi.two_S + 8))
    V = grid.vectors
    u = psi.amplitudes.copy()
    top = m_infinity_spin(psi)[0]
    delta = 0.05
    for _ in range(rounds):
        cur = SpinState(psi.two_S, u / np.linalg.norm(u))
        maxima = _local_maxima(cur)
        Qg = husimi_spin_points(cur, grid.theta, grid.phi)
        active = [m[1] for m in maxima if m[0] > top - 0.1] + list(V[Qg > 0.8 * top])
        sv = [SphereVec.from_vector(v) for v in active]
        Ba = spin_coherent_bras(psi.two_S, [s.theta for s in sv], [s.phi for s in sv])
        j0 = int(np.argmax(np.abs(u)))
        u = u * np.exp(-1j * np.angle(u[j0]))
        x0 = np.concatenate([_pack(u, j0), [top]])
        bounds = [(v - delta, v + delta) for v in x0[:-1]] + [(0.0, 1.0)]

        def qvals(x):
            v = _unpack(x[:-1], d, j0)
            v = v / np.linalg.norm(v)
            return np.abs(Ba @ v) ** 2

        cons = [{"type": "ineq", "fun": lambda x: x[-1] - qvals(x)}]
        with warnings.catch_warnings():
            # SLSQP clips its own trial points to the box; harmless here
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(lambda x: x[-1], x0, method="SLSQP", constraints=cons, bounds=bounds,
                           options={"maxiter": 200, "ftol": 1e-15})
        cand = _unpack(res.x[:-1], d, j0)
        cand /= np.linalg.norm(cand)
        new_val = m_infinity_spin(SpinState(psi.two_S, cand))[0]
        if new_val < top - 1e-15:
            gain = top - new_val
            u, top = cand, new_val
            delta = min(2 * delta, 0.2)
            if gain < 1e-14:
                break
        else:
            delta *= 0.25
            if delta < 1e-9:
                break
    return SpinState(psi.two_S, _canonical(u))


# --------------------------------------------------------------------------
# point configurations
# --------------------------------------------------------------------------


def _unit(points) -> np.ndarray:
    P = np.asarray(points, float).reshape(-1, 3)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def design_check(points, t: int, tol: float = 1e-10) -> tuple[bool, float]:
    """Is the point set a spherical t-design?  Returns (pass, defect).

    defect = max_{1<=K<=t} |mean_i Y_K(n_i)| / sqrt((2K+1)/(4 pi)), where the
    norm runs over q; it is 1 for a single point and 0 for a design.
    """
    P = _unit(points)
    th = np.arccos(np.clip(P[:, 2], -1, 1))
    ph = np.arctan2(P[:, 1], P[:, 0])
    Y = sph_harm_table(max(t, 1), th, ph)
    defect = 0.0
    for K in range(1, t + 1):
        s = sum(abs(np.mean(Y[(K, q)])) ** 2 for q in range(-K, K + 1))
        defect = max(defect, math.sqrt(s) / math.sqrt((2 * K + 1) / (4 * math.pi)))
    return defect < tol, defect


def design_strength(points, t_max: int = 20, tol: float = 1e-10) -> int:
    """Largest t <= t_max for which ``points`` is a t-design (0 if none)."""
    t = 0
    for k in range(1, t_max + 1):
        if design_check(points, k, tol)[0]:
            t = k
        else:
            break
    return t


def _riesz(x: np.ndarray, d: float):
    V = x.reshape(-1, 3)
    nv = np.linalg.norm(V, axis=1, keepdims=True)
    U = V / nv
    diff = U[:, None, :] - U[None, :, :]
    r = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(r, np.inf)
    E = 0.5 * np.sum(r ** (-d))
    coef = -d * r ** (-d - 2)
    g = np.sum(coef[:, :, None] * diff, axis=1)
    g = g - np.sum(g * U, axis=1, keepdims=True) * U
    return E, (g / nv).ravel()


def thomson(N: int, d: float = 1.0, restarts: int = 8, seed: int = 0) -> tuple[np.ndarray, float]:
    """Minimise sum_{i<j} r_ij^(-d) over N unit vectors; best over restarts."""
    if N < 2 or d <= 0:
        raise ValueError("need N >= 2 and d > 0")
    best = None
    for r in range(restarts):
        rng = _restart_rng(seed, r)
        x0 = rng.normal(size=3 * N)
        res = minimize(_riesz, x0, args=(d,), jac=True, method="L-BFGS-B",
                       options={"maxiter": 5000, "ftol": 0.0, "gtol": 1e-13})
        P = _unit(res.x)
        E = _riesz(P.ravel(), d)[0]
        if best is None or E < best[1] - 1e-12:
            best = (P, E)
    return best


def _min_angle(P: np.ndarray) -> float:
    G = P @ P.T
    np.fill_diagonal(G, -np.inf)
    return math.acos(min(1.0, max(-1.0, float(G.max()))))


def tammes(N: int, restarts: int = 8, seed: int = 0) -> tuple[np.ndarray, float]:
    """Maximise the smallest pairwise angle; returns (points, min_angle)."""
    if N < 2:
        raise ValueError("need N >= 2")
    iu = np.triu_indices(N, 1)

    def soft(x, tau):
        V = x.reshape(-1, 3)
        nv = np.linalg.norm(V, axis=1, keepdims=True)
        U = V / nv
        G = U @ U.T
        c = G[iu]
        m = c.max()
        e = np.exp((c - m) / tau)
        Z = e.sum()
        F = m + tau * math.log(Z)
        W = np.zeros((N, N))
        W[iu] = e / Z
        W = W + W.T
        g = W @ U
        g = g - np.sum(g * U, axis=1, keepdims=True) * U
        return F, (g / nv).ravel()

    best = None
    for r in range(restarts):
        rng = _restart_rng(seed, r)
        x = rng.normal(size=3 * N)
        for tau in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4):
            x = minimize(soft, x, args=(tau,), jac=True, method="L-BFGS-B",
                         options={"maxiter": 2000, "gtol": 1e-12}).x
        P = _tammes_polish(_unit(x))
        ang = _min_angle(P)
        if best is None or ang > best[1] + 1e-12:
            best = (P, ang)
    return best


def _tammes_polish(P: np.ndarray) -> np.ndarray:
    """Epigraph form: min t s.t. n_i . n_j <= t, |n_i| = 1."""
    N = len(P)
    iu = np.triu_indices(N, 1)
    t0 = float((P @ P.T)[iu].max())
    x0 = np.concatenate([P.ravel(), [t0]])
    cons = [
        {"type": "ineq", "fun": lambda x: x[-1] - (x[:-1].reshape(-1, 3) @ x[:-1].reshape(-1, 3).T)[iu]},
        {"type": "eq", "fun": lambda x: np.sum(x[:-1].reshape(-1, 3) ** 2, axis=1) - 1.0},
    ]
    res = minimize(lambda x: x[-1], x0, method="SLSQP", constraints=cons, options={"maxiter": 500, "ftol": 1e-16})
    Q = _unit(res.x[:-1])
    return Q if _min_angle(Q) >= _min_angle(P) else P


def king_design_probe(two_S: int, restarts: int = 64, seed: int = 0) -> dict:
    """Highest order M reached by find_king, and the design strength of that King's stars."""
    if two_S > 12:
        raise ValueError("probe limited to 2S <= 12")
    best = None
    for M in range(1, two_S + 1):
        res = find_king(two_S, M, restarts, seed)
        if not res.converged:
            break
        best = res
    if best is None:
        return {"two_S": two_S, "M_max": 0, "t_design": None, "agree": None}
    pts = extract_constellation(best.state).points()
    t = design_strength(pts, t_max=two_S + 2)
    return {
        "two_S": two_S,
        "M_max": best.order_achieved,
        "t_design": t,
        "agree": best.order_achieved == t,
        "king": best.to_json(),
    }
