import numpy as np
import pytest

from compactent.states import PureState, SubsystemLayout

R2 = 1 / np.sqrt(2)


def vec(entries, dims):
    """Build a state from {bitstring: amplitude} in the computational basis."""
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    for idx, amp in entries.items():
        v[int(np.ravel_multi_index(tuple(int(c) for c in idx), dims))] = amp
    return PureState(SubsystemLayout.from_dims(dims), v)


@pytest.fixture
def bell():
    return vec({"00": R2, "11": R2}, (2, 2))


@pytest.fixture
def ghz():
    return vec({"000": R2, "111": R2}, (2, 2, 2))


@pytest.fixture
def w_state():
    return vec({"001": 3**-0.5, "010": 3**-0.5, "100": 3**-0.5}, (2, 2, 2))


@pytest.fixture
def maximal4():
    return vec({"000": 0.5, "011": 0.5, "101": 0.5, "110": 0.5}, (2, 2, 2))


@pytest.fixture
def plus3():
    return vec({"000": 1.0}, (2, 2, 2))
