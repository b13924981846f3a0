"""JSON schemas for states, constellations and point sets, plus a fixed-precision writer.

Complex numbers are [re, im] pairs, angles are radians, floats carry 17
significant digits so every value round-trips exactly.
"""

from __future__ import annotations

import json
import math
from numbers import Integral, Real

import numpy as np

from .states import FockState, SpinState
from .stellar import Constellation

__all__ = [
    "dumps",
    "state_to_json",
    "state_from_json",
    "points_to_json",
    "points_from_json",
    "constellation_from_json",
    "load_json",
    "FormatError",
]


class FormatError(ValueError):
    """Malformed input document."""


def _float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, Integral):
        return str(int(obj))
    if isinstance(obj, Real):
        return _float(float(obj))
    if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        return "[" + _float(obj.real) + ", " + _float(obj.imag) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # short numeric rows stay on one line
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, 0, 0) for v in obj) + "]"
        return "[" + pad + sep.join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats (numpy scalars and arrays allowed)."""
    return _encode(obj, indent, 0)


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def state_to_json(psi) -> dict:
    amps = [[float(z.real), float(z.imag)] for z in psi.amplitudes]
    if isinstance(psi, FockState):
        d = {"system": "cv", "cutoff": psi.cutoff, "amplitudes": amps}
        if psi.family:
            d["family"] = {k: ([v.real, v.imag] if isinstance(v, complex) else v) for k, v in psi.family.items()}
        return d
    if isinstance(psi, SpinState):
        return {"system": "spin", "two_S": psi.two_S, "amplitudes": amps}
    raise TypeError("expected FockState or SpinState")


def _amplitudes(d: dict) -> np.ndarray:
    try:
        a = np.array(d["amplitudes"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("state needs an 'amplitudes' list of [re, im] pairs") from exc
    if a.ndim != 2 or a.shape[1] != 2:
        raise FormatError("amplitudes must be [re, im] pairs")
    return a[:, 0] + 1j * a[:, 1]


def state_from_json(d: dict):
    system = d.get("system")
    amps = _amplitudes(d)
    if system == "cv":
        if "cutoff" in d and int(d["cutoff"]) != amps.size - 1:
            raise FormatError("cutoff does not match the amplitude count")
        fam = d.get("family")
        if fam:
            fam = {k: (complex(*v) if isinstance(v, list) else v) for k, v in fam.items()}
        return FockState(amps, fam or None)
    if system == "spin":
        two_S = int(d.get("two_S", -1))
        if two_S != amps.size - 1:
            raise FormatError("two_S does not match the amplitude count")
        return SpinState(two_S, amps)
    raise FormatError(f"unknown system {system!r}")


def points_to_json(points) -> dict:
    return {"points": np.asarray(points, float).reshape(-1, 3).tolist()}


def points_from_json(d: dict) -> np.ndarray:
    try:
        P = np.array(d["points"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("point set needs 'points': [[x, y, z], ...]") from exc
    if P.ndim != 2 or P.shape[1] != 3 or len(P) == 0:
        raise FormatError("points must be a non-empty list of [x, y, z]")
    nrm = np.linalg.norm(P, axis=1)
    if np.any(nrm == 0):
        raise FormatError("zero vector in point set")
    return P / nrm[:, None]


def constellation_from_json(d: dict) -> Constellation:
    try:
        return Constellation.from_json(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad constellation: {exc}") from exc
