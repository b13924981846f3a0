"""Command-line front end.

    quantumness state make --family cat --beta 1+0i --sign + > cat.json
    quantumness measure wehrl --state cat.json
    quantumness search kings --two-s 4 --order 2 --seed 1
    quantumness sphere thomson --n 4 --seed 1
    quantumness metrology avg-crb --state tetra.json

Exit codes: 0 success, 1 numerical non-convergence (diagnostic JSON on
stdout), 2 usage error.  Every JSON document carries a ``manifest``; only its
``timestamp`` entry changes between identical runs.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import math
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__
from . import extremal, measures, metrology
from .formats import FormatError, dumps, load_json, points_from_json, points_to_json, state_from_json, state_to_json
from .states import (
    FockState,
    GaussianPure,
    SphereVec,
    SpinState,
    TruncationError,
    make_cat,
    make_coherent_cv,
    make_dicke,
    make_fock,
    make_gaussian_fock,
    make_photon_added,
    make_spin_coherent,
    make_yurke_stoler,
    random_spin_state,
)
from .stellar import Constellation, extract_constellation, reconstruct_state

EXIT_OK, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2

FAMILIES = ("fock", "coherent", "cat", "yurke-stoler", "padd", "squeezed", "gaussian",
            "dicke", "spin-coherent", "stars", "random-spin")


class UsageError(Exception):
    pass


class NotConverged(Exception):
    def __init__(self, payload: dict):
        super().__init__("not converged")
        self.payload = payload


def parse_complex(text: str) -> complex:
    """Accept 1, -0.5, 1+0.5i, 2j, 1e-3-2i."""
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def parse_range(text: str) -> np.ndarray:
    """start:stop:step, stop included when it lies on the grid."""
    try:
        a, b, h = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("range must look like start:stop:step") from None
    if h <= 0 or b < a:
        raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
    n = int(math.floor((b - a) / h + 1e-9))
    return a + h * np.arange(n + 1)


def parse_order(text: str) -> float:
    """Integer or half-integer order: 2, 1.5, 3/2."""
    try:
        if "/" in text:
            p, q = text.split("/")
            val = int(p) / int(q)
        else:
            val = float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad order {text!r}") from None
    if abs(2 * val - round(2 * val)) > 1e-12 or val <= 0:
        raise argparse.ArgumentTypeError("order must be a positive integer or half-integer")
    return val


# --------------------------------------------------------------------------
# manifest and output
# --------------------------------------------------------------------------


def _manifest(args, argv, t0: float, started: str) -> dict:
    return {
        "command": list(argv),
        "seed": getattr(args, "seed", None),
        "tolerances": {k: getattr(args, k) for k in ("cutoff_tol", "tol") if getattr(args, k, None) is not None},
        "versions": {"quantumness": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "threads": getattr(args, "threads", 1),
        "timestamp": {"started": started, "wall_time_s": time.perf_counter() - t0},
    }


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _read_state(path: str):
    return state_from_json(load_json(path))


# --------------------------------------------------------------------------
# state
# --------------------------------------------------------------------------


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"family {args.family!r} needs {flags}")


def build_state(args):
    fam = args.family
    tol = args.cutoff_tol
    if fam == "fock":
        _need(args, "n")
        return make_fock(args.n)
    if fam == "coherent":
        _need(args, "alpha")
        return make_coherent_cv(args.alpha, tol)
    if fam == "cat":
        _need(args, "beta")
        return make_cat(args.beta, 1 if args.sign == "+" else -1, tol)
    if fam == "yurke-stoler":
        _need(args, "beta", "theta_c")
        return make_yurke_stoler(args.beta, args.theta_c, tol)
    if fam == "padd":
        _need(args, "beta", "m")
        return make_photon_added(args.beta, args.m, tol)
    if fam in ("squeezed", "gaussian"):
        _need(args, "r")
        return make_gaussian_fock(GaussianPure(args.beta or 0j, args.r, args.theta_sq), tol)
    if fam == "dicke":
        _need(args, "two_s", "two_m")
        return make_dicke(args.two_s, args.two_m)
    if fam == "spin-coherent":
        _need(args, "two_s")
        return make_spin_coherent(args.two_s, SphereVec(args.theta, args.phi))
    if fam == "stars":
        _need(args, "points")
        P = points_from_json(load_json(args.points))
        return reconstruct_state(Constellation.from_points(P))
    if fam == "random-spin":
        _need(args, "two_s", "seed")
        return random_spin_state(args.two_s, np.random.default_rng(args.seed))
    raise UsageError(f"unknown family {fam!r}")


def cmd_state(args, argv, t0, started):
    psi = build_state(args)
    doc = state_to_json(psi)
    if isinstance(psi, SpinState) and psi.two_S > 0:
        doc["constellation"] = extract_constellation(psi).to_json()
    doc["manifest"] = _manifest(args, argv, t0, started)
    _emit(dumps(doc) + "\n", args.out)


# --------------------------------------------------------------------------
# measure
# --------------------------------------------------------------------------

SWEEP_KEYS = {"beta": "beta", "alpha": "alpha", "r": "r", "n": "n", "m": "m", "theta_c": "theta_c"}


def _rebuild(psi: FockState, key: str, value: float) -> FockState:
    """Same family with one parameter replaced (|beta| scaled along its phase)."""
    fam = dict(psi.family or {})
    name = fam.pop("family", None)
    if name is None:
        raise UsageError("sweeps need a state built by 'state make' (family record missing)")
    if key not in fam:
        raise UsageError(f"family {name!r} has no parameter {key!r}")
    old = fam[key]
    if isinstance(old, complex):
        ph = old / abs(old) if abs(old) > 0 else 1.0
        fam[key] = complex(value * ph)
    elif key in ("n", "m"):
        if abs(value - round(value)) > 1e-12:
            raise UsageError(f"{key} must be an integer")
        fam[key] = int(round(value))
    else:
        fam[key] = float(value)
    if name == "coherent":
        return make_coherent_cv(fam["alpha"])
    if name == "fock":
        return make_fock(fam["n"])
    if name == "cat":
        return make_cat(fam["beta"], fam["sign"])
    if name == "yurke_stoler":
        return make_yurke_stoler(fam["beta"], fam["theta_c"])
    if name == "photon_added":
        return make_photon_added(fam["beta"], fam["m"])
    if name in ("gaussian", "squeezed"):
        return make_gaussian_fock(GaussianPure(fam["beta"], fam["r"], fam["theta_sq"]))
    raise UsageError(f"cannot sweep family {name!r}")


def _measure_one(name: str, psi, args) -> dict:
    cv = isinstance(psi, FockState)
    out = {"measure": name, "value": None, "argmax": None, "details": {}}
    if name == "wehrl":
        if args.closed:
            if not cv:
                raise UsageError("closed-form Wehrl entropy exists for CV families only")
            out["value"] = measures.wehrl_cv_closed(psi)
        elif cv:
            out["value"] = measures.wehrl_cv(psi)
        else:
            out["value"] = measures.wehrl_spin(psi)
            out["details"]["lieb_bound"] = psi.two_S / (psi.two_S + 1)
    elif name in ("m2", "ipr"):
        if cv:
            m2 = measures.m2_cv_closed(psi)
            out["details"]["quadrature"] = measures.m2_cv_quadrature(psi)
        else:
            m2 = measures.m2_spin_closed(psi)
            out["details"]["quadrature"] = measures.m2_spin_quadrature(psi)
        out["value"] = m2 if name == "m2" else 1.0 / m2
        out["details"]["M2"] = m2
    elif name == "minf":
        if args.closed:
            out["value"] = measures.m_infinity(psi, "closed")[0]
        else:
            val, loc = measures.m_infinity(psi, "numeric")
            out["value"] = val
            out["argmax"] = [loc.real, loc.imag] if cv else {"theta": loc.theta, "phi": loc.phi}
    elif name == "am":
        if args.order is None:
            raise UsageError("am needs --order")
        if cv:
            out["value"] = measures.cumulative_A_cv(psi, args.order)
        else:
            if args.order != int(args.order):
                raise UsageError("spin multipole orders are integers")
            out["value"] = measures.cumulative_A(psi, int(args.order))
            out["details"]["coherent_max"] = measures.cumulative_A_coherent_max(psi.two_S, int(args.order))
        out["details"]["order"] = args.order
    elif name == "multipoles":
        if cv:
            raise UsageError("multipoles: use 'am' for CV states")
        out["value"] = measures.multipoles_spin(psi).to_json()
    elif name == "partial-q":
        if cv:
            raise UsageError("partial-q is defined for spin states")
        if args.K is None:
            raise UsageError("partial-q needs --K")
        out["value"] = measures.partial_Q(psi, args.K, SphereVec(args.theta, args.phi))
        out["details"]["K"] = args.K
    else:
        raise UsageError(f"unknown measure {name!r}")
    return out


def _scalar(res: dict):
    v = res["value"]
    return v if isinstance(v, float) else None


def cmd_measure(args, argv, t0, started):
    psi = _read_state(args.state)
    if args.sweep:
        key, rng = args.sweep
        if key not in SWEEP_KEYS:
            raise UsageError(f"sweep parameter must be one of {sorted(SWEEP_KEYS)}")
        if not isinstance(psi, FockState):
            raise UsageError("sweeps are available for CV families")
        grid = parse_range(rng)
        rows = []
        for v in grid:
            res = _measure_one(args.name, _rebuild(psi, key, float(v)), args)
            if _scalar(res) is None:
                raise UsageError(f"{args.name} is not a scalar measure")
            rows.append([float(v), float(res["value"])])
        _emit(_csv([key, args.name], rows), args.out)
        return
    res = _measure_one(args.name, psi, args)
    res["manifest"] = _manifest(args, argv, t0, started)
    _emit(dumps(res) + "\n", args.out)


# --------------------------------------------------------------------------
# search
# --------------------------------------------------------------------------


def cmd_search(args, argv, t0, started):
    kind = args.kind
    if kind == "kings":
        if args.order is None:
            raise UsageError("kings needs --order")
        res = extremal.find_king(args.two_s, int(args.order), restarts=args.restarts, seed=args.seed,
                                 threads=args.threads)
        doc = res.to_json()
    elif kind == "queens":
        if args.state:
            target = _read_state(args.state)
            if not isinstance(target, SpinState):
                raise UsageError("queens needs a spin state")
            q = extremal.find_queen(target.two_S, target, grid_N=args.grid_n)
            doc = q.to_json()
            doc["converged"] = q.distance_fw is None or abs(q.distance - q.distance_fw) < 1e-6
        else:
            doc = extremal.find_queen(args.two_s, None, grid_N=args.grid_n, restarts=args.restarts,
                                      seed=args.seed, threads=args.threads).to_json()
    elif kind == "wehrl-max":
        doc = extremal.maximize_wehrl(args.two_s, restarts=args.restarts, seed=args.seed,
                                      threads=args.threads).to_json()
    elif kind == "minf-min":
        doc = extremal.minimize_m_infinity(args.two_s, restarts=args.restarts, seed=args.seed,
                                           threads=args.threads).to_json()
    else:
        raise UsageError(f"unknown search {kind!r}")
    doc["manifest"] = _manifest(args, argv, t0, started)
    if not doc.get("converged", True):
        raise NotConverged(doc)
    _emit(dumps(doc) + "\n", args.out)


# --------------------------------------------------------------------------
# sphere
# --------------------------------------------------------------------------


def cmd_sphere(args, argv, t0, started):
    if args.kind == "design-check":
        if args.points is None or args.t is None:
            raise UsageError("design-check needs --points and --t")
        P = points_from_json(load_json(args.points))
        ok, defect = extremal.design_check(P, args.t)
        doc = {"t": args.t, "pass": ok, "defect": defect, "strength": extremal.design_strength(P)}
    else:
        if args.n is None:
            raise UsageError(f"{args.kind} needs --n")
        if args.kind == "thomson":
            P, E = extremal.thomson(args.n, args.d, restarts=args.restarts, seed=args.seed)
            doc = points_to_json(P)
            doc["energy"] = E
        else:
            P, ang = extremal.tammes(args.n, restarts=args.restarts, seed=args.seed)
            doc = points_to_json(P)
            doc["min_angle"] = ang
            doc["min_angle_cos"] = math.cos(ang)
    doc["manifest"] = _manifest(args, argv, t0, started)
    _emit(dumps(doc) + "\n", args.out)


# --------------------------------------------------------------------------
# metrology
# --------------------------------------------------------------------------


def _axis(text: str) -> SphereVec:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError("--axis must be x,y,z") from None
    if v.shape != (3,) or not np.linalg.norm(v) > 0:
        raise UsageError("--axis must be a nonzero x,y,z")
    return SphereVec.from_vector(v)


def cmd_metrology(args, argv, t0, started):
    psi = _read_state(args.state)
    cv = isinstance(psi, FockState)
    C = metrology.cv_covariance(psi) if cv else metrology.spin_covariance(psi)
    doc = {"quantity": args.kind, "value": None, "details": {"isotropy_defect": metrology.isotropy_defect(C)}}
    if args.kind == "qfi":
        if cv:
            doc["value"] = metrology.qfi_displacement(psi, args.theta)
            doc["details"]["theta"] = args.theta
        else:
            ax = _axis(args.axis or "0,0,1")
            doc["value"] = metrology.qfi_rotation(psi, ax)
            doc["details"]["axis"] = ax.vector
    elif args.kind == "avg-qfi":
        doc["value"] = metrology.avg_qfi_cv(psi) if cv else metrology.avg_qfi_spin(psi)
        doc["details"]["quadrature"] = (metrology.avg_qfi_cv_quadrature(psi) if cv
                                        else metrology.avg_qfi_spin_quadrature(psi))
    elif args.kind == "avg-crb":
        doc["value"] = metrology.avg_crb_cv(psi) if cv else metrology.avg_crb_spin(psi)
        doc["details"]["divergent"] = math.isinf(doc["value"])
    elif args.kind == "sweep":
        n = args.n or 64
        th = np.pi * np.arange(n) / n
        if cv:
            rows = [[float(t), metrology.qfi_displacement(psi, float(t))] for t in th]
            _emit(_csv(["theta", "F"], rows), args.out)
        else:
            rows = [[float(t), metrology.qfi_rotation(psi, SphereVec(float(t), args.phi))] for t in th]
            _emit(_csv(["axis_theta", "F"], rows), args.out)
        return
    else:
        raise UsageError(f"unknown metrology quantity {args.kind!r}")
    doc["manifest"] = _manifest(args, argv, t0, started)
    _emit(dumps(doc) + "\n", args.out)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _common(p, seed_required=False):
    p.add_argument("--out", "-o", help="write here instead of stdout")
    p.add_argument("--threads", type=int, default=1, help="worker cap for restarts")
    if seed_required:
        p.add_argument("--seed", type=int, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quantumness", description="Husimi-based quantumness measures and searches")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    st = sub.add_parser("state", help="build a state file").add_subparsers(dest="action", required=True)
    mk = st.add_parser("make")
    mk.add_argument("--family", required=True, choices=FAMILIES)
    mk.add_argument("--n", type=int)
    mk.add_argument("--alpha", type=parse_complex)
    mk.add_argument("--beta", type=parse_complex)
    mk.add_argument("--sign", choices=["+", "-"], default="+")
    mk.add_argument("--theta-c", type=float)
    mk.add_argument("--m", type=int)
    mk.add_argument("--r", type=float)
    mk.add_argument("--theta-sq", type=float, default=0.0)
    mk.add_argument("--two-s", type=int)
    mk.add_argument("--two-m", type=int)
    mk.add_argument("--theta", type=float, default=0.0)
    mk.add_argument("--phi", type=float, default=0.0)
    mk.add_argument("--points", help="PointConfig JSON (family stars)")
    mk.add_argument("--seed", type=int, help="required by random-spin")
    mk.add_argument("--cutoff-tol", type=float, default=1e-14)
    _common(mk)
    mk.set_defaults(func=cmd_state)

    me = sub.add_parser("measure", help="evaluate a measure")
    me.add_argument("name", choices=["wehrl", "m2", "ipr", "minf", "am", "multipoles", "partial-q"])
    me.add_argument("--state", required=True)
    me.add_argument("--order", type=parse_order)
    me.add_argument("--K", type=int)
    me.add_argument("--theta", type=float, default=0.0)
    me.add_argument("--phi", type=float, default=0.0)
    me.add_argument("--closed", action="store_true", help="closed form (CV families)")
    me.add_argument("--sweep", nargs=2, metavar=("PARAM", "START:STOP:STEP"), help="CSV sweep")
    _common(me)
    me.set_defaults(func=cmd_measure)

    se = sub.add_parser("search", help="extremal-state searches")
    se.add_argument("kind", choices=["kings", "queens", "wehrl-max", "minf-min"])
    se.add_argument("--two-s", type=int, required=True)
    se.add_argument("--order", type=parse_order)
    se.add_argument("--restarts", type=int, default=8)
    se.add_argument("--state", help="queens: distance of this target instead of a search")
    se.add_argument("--grid-n", type=int)
    _common(se, seed_required=True)
    se.set_defaults(func=cmd_search)

    sp = sub.add_parser("sphere", help="point configurations")
    sp.add_argument("kind", choices=["design-check", "thomson", "tammes"])
    sp.add_argument("--points")
    sp.add_argument("--t", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=float, default=1.0)
    sp.add_argument("--restarts", type=int, default=8)
    sp.add_argument("--seed", type=int)
    _common(sp)
    sp.set_defaults(func=cmd_sphere)

    mt = sub.add_parser("metrology", help="Fisher information and Cramer-Rao bounds")
    mt.add_argument("kind", choices=["qfi", "avg-qfi", "avg-crb", "sweep"])
    mt.add_argument("--state", required=True)
    mt.add_argument("--theta", type=float, default=0.0)
    mt.add_argument("--phi", type=float, default=0.0)
    mt.add_argument("--axis")
    mt.add_argument("--n", type=int)
    _common(mt)
    mt.set_defaults(func=cmd_metrology)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    # stochastic sphere solvers need an explicit seed too
    if args.command == "sphere" and args.kind in ("thomson", "tammes") and args.seed is None:
        parser.print_usage(sys.stderr)
        print(f"quantumness: error: sphere {args.kind} requires --seed", file=sys.stderr)
        return EXIT_USAGE
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        args.func(args, argv, t0, started)
    except NotConverged as exc:
        sys.stdout.write(dumps(exc.payload) + "\n")
        return EXIT_NONCONVERGED
    except extremal.ConvergenceError as exc:
        sys.stdout.write(dumps({"converged": False, "error": str(exc), "residual": exc.residual}) + "\n")
        return EXIT_NONCONVERGED
    except (UsageError, FormatError, TruncationError, measures.NoClosedForm, ValueError, TypeError) as exc:
        print(f"quantumness: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
