import itertools
import warnings

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

TETRA = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
OCTA = np.vstack([np.eye(3), -np.eye(3)])


def shape_mismatch(P, Q):
    """Smallest max-chord mismatch between two small point sets over rotations and relabelings."""
    P = np.asarray(P, float)
    Q = np.asarray(Q, float)
    assert P.shape == Q.shape
    best = np.inf
    for perm in itertools.permutations(range(len(Q))):
        with warnings.catch_warnings():
            # degenerate relabelings are expected and simply score badly
            warnings.simplefilter("ignore", UserWarning)
            R, _ = Rotation.align_vectors(P, Q[list(perm)])
        err = np.max(np.linalg.norm(R.apply(Q[list(perm)]) - P, axis=1))
        best = min(best, err)
    return best


def gram_sorted(P):
    P = np.asarray(P, float)
    G = P @ P.T
    return np.sort(G[np.triu_indices(len(P), 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tetra():
    return TETRA.copy()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
