"""Husimi-function quantumness measures for continuous-variable and spin states.

Submodules: ``specfun`` (special functions), ``states`` (state families),
``stellar`` (Majorana constellations), ``husimi`` (Q functions and grids),
``measures``, ``metrology``, ``extremal`` (searches) and ``cli``.
"""

__version__ = "0.1.0"

from .states import (  # noqa: E402
    FockState,
    GaussianPure,
    SphereVec,
    SpinDensity,
    SpinState,
    make_cat,
    make_coherent_cv,
    make_dicke,
    make_fock,
    make_gaussian_fock,
    make_photon_added,
    make_spin_coherent,
    make_squeezed,
    make_yurke_stoler,
)
from .stellar import Constellation, extract_constellation, reconstruct_state  # noqa: E402
from .measures import (  # noqa: E402
    cumulative_A,
    m2_cv_closed,
    m2_spin_closed,
    m_infinity,
    multipoles_spin,
    wehrl_cv,
    wehrl_spin,
)
from .extremal import find_king, find_queen, maximize_wehrl, minimize_m_infinity  # noqa: E402

__all__ = [
    "__version__",
    "FockState",
    "GaussianPure",
    "SphereVec",
    "SpinDensity",
    "SpinState",
    "Constellation",
    "make_cat",
    "make_coherent_cv",
    "make_dicke",
    "make_fock",
    "make_gaussian_fock",
    "make_photon_added",
    "make_spin_coherent",
    "make_squeezed",
    "make_yurke_stoler",
    "extract_constellation",
    "reconstruct_state",
    "cumulative_A",
    "m2_cv_closed",
    "m2_spin_closed",
    "m_infinity",
    "multipoles_spin",
    "wehrl_cv",
    "wehrl_spin",
    "find_king",
    "find_queen",
    "maximize_wehrl",
    "minimize_m_infinity",
]
