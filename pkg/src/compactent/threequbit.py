"""Three-qubit standard form, angle constraint and marginal-rank classification.

Spin kets are identified with the computational basis: |+> = |0>, |-> = |1>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .schmidt import compact_decomposition, enumerate_orderings, is_schmidt_decomposable
from .states import PureState, SubsystemLayout, apply_local_unitary, marginals, shannon_entropy

SINGULAR_TOL = 1e-12
PLUS = np.array([1.0, 0.0], dtype=complex)
MINUS = np.array([0.0, 1.0], dtype=complex)

CLASS_LABELS = ("I", "II", "III-a", "III-b", "III-c")


def theta_plus(theta: float) -> np.ndarray:
    return np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex)


def theta_minus(theta: float) -> np.ndarray:
    return np.array([np.sin(theta / 2), -np.cos(theta / 2)], dtype=complex)


def _kron3(a, b, c):
    return np.kron(a, np.kron(b, c))


def standard_form_vector(p: Sequence[float], alpha: float, beta: float,
                         theta_b: float, theta_c: float) -> np.ndarray:
    """Four-term amplitude vector with the first party most significant."""
    p = np.asarray(p, dtype=float)
    return (np.sqrt(p[0]) * _kron3(PLUS, PLUS, PLUS)
            + np.sqrt(p[1]) * np.exp(1j * alpha) * _kron3(PLUS, MINUS, MINUS)
            + np.sqrt(p[2]) * _kron3(MINUS, theta_plus(theta_b), theta_plus(theta_c))
            + np.sqrt(p[3]) * np.exp(1j * beta) * _kron3(MINUS, theta_minus(theta_b), theta_minus(theta_c)))


@dataclass(frozen=True, eq=False)
class StandardForm3Q:
    p: np.ndarray
    alpha: float
    beta: float
    theta_b: float
    theta_c: float
    ordering: tuple[str, str, str]
    local_unitaries: dict[str, np.ndarray]
    degenerate: bool = False

    def vector(self) -> np.ndarray:
        """Standard-form amplitudes with axes in ``ordering`` order."""
        return standard_form_vector(self.p, self.alpha, self.beta, self.theta_b, self.theta_c)

    def reconstruct(self, layout: SubsystemLayout) -> PureState:
        """Undo the local unitaries to recover the state on ``layout``."""
        perm = [self.ordering.index(x) for x in layout.labels]
        t = np.transpose(self.vector().reshape(2, 2, 2), perm)
        std = PureState(layout, t.reshape(-1))
        return apply_local_unitary(std, [self.local_unitaries[x].conj().T for x in layout.labels])


def _complement(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def _basis_rows(first: np.ndarray, second: np.ndarray | None) -> np.ndarray:
    second = _complement(first) if second is None else second
    return np.stack([first.conj(), second.conj()])


def _real_rotation(u: np.ndarray, ket: np.ndarray) -> tuple[np.ndarray, float]:
    """Rephase the second row of ``u`` so that ``u @ ket`` is real up to a global phase."""
    c = u @ ket
    theta = 2 * np.arctan2(abs(c[1]), abs(c[0]))
    if abs(c[0]) > 1e-14 and abs(c[1]) > 1e-14:
        chi = np.angle(c[1] * np.conj(c[0]))
        u = np.diag([1.0, np.exp(-1j * chi)]) @ u
    return u, float(theta)


def _require_qubits(psi: PureState):
    if psi.layout.dims != (2, 2, 2):
        raise ValueError(f"three-qubit routine needs dims [2, 2, 2], got {list(psi.layout.dims)}")


def standard_form(psi: PureState, ordering: Sequence[str] | None = None) -> StandardForm3Q:
    """Local-unitary reduction of a three-qubit state to the four-term form.

    Built from the compact decomposition in ``ordering`` (default: layout
    order). Root Schmidt kets map to |+>, |->; the heavier branch's pair of
    local kets maps to |+>, |-> on each remaining party; the lighter
    branch's kets are then real rotations |theta+->. Phases are gauged so the
    first and third coefficients are real positive.
    """
    _require_qubits(psi)
    layout = psi.layout
    ordering = tuple(layout.labels) if ordering is None else tuple(ordering)
    tree = compact_decomposition(psi, ordering)
    root = tree.root.branches
    degenerate = len(root) < 2
    a1 = root[0].kets[0]
    ua = _basis_rows(a1, root[1].kets[0] if len(root) > 1 else None)

    first = root[0].child.branches
    b11, c11 = first[0].kets
    b12, c12 = first[1].kets if len(first) > 1 else (None, None)
    ub = _basis_rows(b11, b12)
    uc = _basis_rows(c11, c12)

    theta_b = theta_c = 0.0
    if not degenerate:
        b21, c21 = root[1].child.branches[0].kets
        ub, theta_b = _real_rotation(ub, b21)
        uc, theta_c = _real_rotation(uc, c21)

    std = apply_local_unitary(psi, [dict(zip(ordering, (ua, ub, uc)))[x] for x in layout.labels])
    perm = [layout.index(x) for x in ordering]
    t = np.transpose(std.tensor, perm).reshape(-1)
    coeffs = np.array([
        np.vdot(_kron3(PLUS, PLUS, PLUS), t),
        np.vdot(_kron3(PLUS, MINUS, MINUS), t),
        np.vdot(_kron3(MINUS, theta_plus(theta_b), theta_plus(theta_c)), t),
        np.vdot(_kron3(MINUS, theta_minus(theta_b), theta_minus(theta_c)), t),
    ])
    # gauge: rephase |+>^A and |->^A so coefficients 1 and 3 are real positive
    ph1 = np.exp(-1j * np.angle(coeffs[0]))
    ph2 = np.exp(-1j * np.angle(coeffs[2])) if abs(coeffs[2]) > 1e-14 else 1.0
    ua = np.diag([ph1, ph2]) @ ua
    coeffs = coeffs * np.array([ph1, ph1, ph2, ph2])
    p = np.abs(coeffs) ** 2
    p = p / p.sum()
    alpha = float(np.angle(coeffs[1]) % (2 * np.pi)) if p[1] > 1e-14 else 0.0
    beta = float(np.angle(coeffs[3]) % (2 * np.pi)) if p[3] > 1e-14 else 0.0
    if degenerate:
        beta = 0.0
    elif p[3] <= 1e-14 and min(theta_b, theta_c) > np.pi - 1e-12:
        # |pi+>|pi+> = |0->|0->, so the lone lower-branch term moves to the p4 slot
        p = p[[0, 1, 3, 2]]
        theta_b = theta_c = 0.0
        beta = 0.0
    return StandardForm3Q(
        p=p, alpha=alpha, beta=beta, theta_b=theta_b, theta_c=theta_c,
        ordering=ordering, local_unitaries=dict(zip(ordering, (ua, ub, uc))),
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class ConstraintCheck:
    residual: float | None
    cross_residual: float
    singular: bool


def verify_constraint(sf: StandardForm3Q) -> ConstraintCheck:
    """Angle constraint tying theta_b, theta_c to the weights and phases.

    ``residual`` is the mismatch of the tangent-product form, ``None`` when
    its denominator vanishes or a tangent diverges. ``cross_residual`` is the
    same equation multiplied through by the denominator and the cosines,
    which stays finite everywhere.
    """
    p1, p2, p3, p4 = sf.p
    a, b = sf.alpha, sf.beta
    num = np.sqrt(p1 * p3) + np.sqrt(p2 * p4) * np.exp(1j * (b - a))
    den = np.sqrt(p1 * p4) * np.exp(1j * b) + np.sqrt(p2 * p3) * np.exp(-1j * a)
    cb, sb = np.cos(sf.theta_b / 2), np.sin(sf.theta_b / 2)
    cc, sc = np.cos(sf.theta_c / 2), np.sin(sf.theta_c / 2)
    cross = float(abs(cb * cc * num + sb * sc * den))
    singular = abs(den) < SINGULAR_TOL or abs(cb) < SINGULAR_TOL or abs(cc) < SINGULAR_TOL
    if singular:
        return ConstraintCheck(None, cross, True)
    lhs = (sb / cb) * (sc / cc)
    return ConstraintCheck(float(abs(lhs + num / den)), cross, False)


@dataclass(frozen=True, eq=False)
class ThreeQubitClass:
    label: str
    marginal_ranks: tuple[int, int, int]
    n_ms: int
    spectra: tuple[np.ndarray, ...]
    confirmed: bool
    standard_form: StandardForm3Q


def _label(ranks: Sequence[int], n_ms: int) -> str:
    ones = sum(1 for r in ranks if r == 1)
    if ones == 3:
        return "I"
    if ones == 1:
        return "II"
    if ones == 0:
        return {1: "III-a", 2: "III-b", 3: "III-c"}[n_ms]
    # two rank-one marginals force the third to rank one for pure states
    raise ValueError(f"inconsistent marginal ranks {tuple(ranks)}")


def classify(psi: PureState, tol: float = 1e-8) -> ThreeQubitClass:
    """Label by marginal ranks and the number of distinct marginal spectra.

    III-a is cross-checked with the Schmidt-decomposability witness, III-b by
    theta_b == theta_c in the ordering that puts the odd party first.
    """
    _require_qubits(psi)
    m = marginals(psi)
    label = _label(m.ranks, m.n_ms)
    labels = psi.layout.labels
    ordering = tuple(labels)
    confirmed = True
    if label == "III-a":
        confirmed = is_schmidt_decomposable(psi).decomposable
    elif label == "III-b":
        sp = m.spectra
        odd = next(i for i in range(3)
                   if all(np.max(np.abs(sp[i] - sp[j])) > 1e-9 for j in range(3) if j != i))
        ordering = (labels[odd],) + tuple(x for k, x in enumerate(labels) if k != odd)
    sf = standard_form(psi, ordering)
    if label == "III-b":
        confirmed = abs(sf.theta_b - sf.theta_c) <= tol
    return ThreeQubitClass(label, tuple(m.ranks), m.n_ms, m.spectra, confirmed, sf)


def ec_from_standard_forms(psi: PureState, base=2) -> float:
    """min over the three orderings of H(p) of each standard form."""
    return min(shannon_entropy(standard_form(psi, o).p, base) for o in enumerate_orderings(psi.layout))


NAMED_STATES = ("ghz", "w", "eq8_max", "product", "bell_times_pure")


def make_named_state(name: str, params: dict | None = None) -> PureState:
    """Exact amplitude vectors of the reference states (three qubits).

    ``product`` and ``bell_times_pure`` default to |+++> and |+>(x)Bell on BC;
    ``params`` may override the single-qubit kets with ``{"kets": [...]}``.
    """
    params = params or {}
    layout = SubsystemLayout.from_dims([2, 2, 2])
    r2 = 1 / np.sqrt(2)
    if name == "ghz":
        v = r2 * (_kron3(PLUS, PLUS, PLUS) + _kron3(MINUS, MINUS, MINUS))
    elif name == "w":
        v = (_kron3(PLUS, PLUS, MINUS) + _kron3(PLUS, MINUS, PLUS) + _kron3(MINUS, PLUS, PLUS)) / np.sqrt(3)
    elif name == "eq8_max":
        v = 0.5 * (_kron3(PLUS, PLUS, PLUS) + _kron3(PLUS, MINUS, MINUS)
                   + _kron3(MINUS, PLUS, MINUS) + _kron3(MINUS, MINUS, PLUS))
    elif name == "product":
        kets = params.get("kets", [PLUS, PLUS, PLUS])
        kets = [np.asarray(k, dtype=complex) / np.linalg.norm(k) for k in kets]
        v = _kron3(*kets)
    elif name == "bell_times_pure":
        k = np.asarray(params.get("kets", [PLUS])[0], dtype=complex)
        bell = r2 * (np.kron(PLUS, PLUS) + np.kron(MINUS, MINUS))
        v = np.kron(k / np.linalg.norm(k), bell)
    else:
        raise ValueError(f"unknown named state {name!r}; choose from {', '.join(NAMED_STATES)}")
    return PureState(layout, v)
