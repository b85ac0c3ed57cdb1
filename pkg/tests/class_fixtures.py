"""Representatives of the five three-qubit classes, built from the standard form."""

import numpy as np

from compactent.states import PureState, SubsystemLayout
from compactent.threequbit import standard_form_vector


def _b_family(q=0.8, r=0.7, lam=0.6):
    """Weights for which theta_b = theta_c can be solved in closed form."""
    p = np.array([lam * q, lam * (1 - q), (1 - lam) * r, (1 - lam) * (1 - r)])
    a, b = np.sqrt(q * r), np.sqrt((1 - q) * (1 - r))
    c, d = np.sqrt(q * (1 - r)), np.sqrt((1 - q) * r)
    return p, (a - b) / (c - d)


def class_vectors():
    p_b, t2 = _b_family()
    theta_eq = 2 * np.arctan(np.sqrt(t2))
    return {
        "I": standard_form_vector([1, 0, 0, 0], 0, 0, 0, 0),
        "II": standard_form_vector([0.7, 0.3, 0, 0], 0.4, 0, 0, 0),
        "III-a": standard_form_vector([0.7, 0, 0, 0.3], 0, 0.5, 0, 0),
        "III-b": standard_form_vector(p_b, 0, np.pi, theta_eq, theta_eq),
        "III-c": standard_form_vector(p_b, 0, np.pi, np.pi / 2, 2 * np.arctan(t2)),
    }


def class_states():
    lay = SubsystemLayout.from_dims([2, 2, 2])
    return {k: PureState(lay, v / np.linalg.norm(v)) for k, v in class_vectors().items()}
