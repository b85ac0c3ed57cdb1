"""State containers, marginals, entropies and random sampling.

Amplitudes are indexed row-major with the first party as the most
significant index, i.e. ``amplitudes.reshape(dims)[i1, ..., iN]``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence, Union

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-12
EIGEN_CLIP = 1e-12
SPECTRUM_TOL = 1e-9
RANK_TOL = 1e-10
SUPPORT_TOL = 1e-10


class StateSizeError(ValueError):
    """Array shape does not match the product of the layout dimensions."""


@dataclass(frozen=True)
class SubsystemLayout:
    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims:
            raise ValueError("layout needs at least one party")
        if len(self.labels) != len(self.dims):
            raise ValueError(f"{len(self.labels)} labels for {len(self.dims)} dims")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"dimensions must be positive, got {self.dims}")

    @classmethod
    def from_dims(cls, dims: Sequence[int], labels: Sequence[str] | None = None) -> SubsystemLayout:
        if labels is None:
            labels = default_labels(len(dims))
        return cls(tuple(labels), tuple(dims))

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown party label {label!r}; layout has {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def sub(self, labels: Sequence[str]) -> SubsystemLayout:
        return SubsystemLayout(tuple(labels), tuple(self.dim(x) for x in labels))


def default_labels(n: int) -> tuple[str, ...]:
    if n <= 26:
        return tuple(string.ascii_uppercase[:n])
    return tuple(f"P{k}" for k in range(n))


LayoutLike = Union[SubsystemLayout, Sequence[int]]


def as_layout(layout: LayoutLike) -> SubsystemLayout:
    if isinstance(layout, SubsystemLayout):
        return layout
    return SubsystemLayout.from_dims(layout)


@dataclass(frozen=True, eq=False)
class PureState:
    layout: SubsystemLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.layout.total_dim:
            raise StateSizeError(
                f"{amps.size} amplitudes for dims {list(self.layout.dims)} "
                f"(expected {self.layout.total_dim})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vector, dims: LayoutLike) -> PureState:
        return cls(as_layout(dims), vector)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def density(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(self.layout, np.outer(v, v.conj()))

    def normalized(self) -> PureState:
        return PureState(self.layout, self.amplitudes / np.linalg.norm(self.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: SubsystemLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        n = self.layout.total_dim
        if mat.shape != (n, n):
            raise StateSizeError(
                f"matrix of shape {mat.shape} for dims {list(self.layout.dims)} "
                f"(expected {(n, n)})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(_hermitize(self.matrix))


State = Union[PureState, DensityMatrix]


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return (mat + mat.conj().T) / 2


def as_density(s: State) -> DensityMatrix:
    return s.density() if isinstance(s, PureState) else s


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    norm_residual: float | None = None
    hermiticity_residual: float | None = None
    min_eigenvalue: float | None = None
    trace_residual: float | None = None
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def validate_state(s: State) -> ValidationReport:
    """Check the normalization/Hermiticity/positivity invariants of ``s``.

    Size errors are raised at construction time (``StateSizeError``), so a
    report is always about invariants of a well-shaped object.
    """
    if isinstance(s, PureState):
        res = abs(float(np.vdot(s.amplitudes, s.amplitudes).real) - 1.0)
        return ValidationReport("pure", norm_residual=res, checks={"norm": res <= NORM_TOL})
    mat = s.matrix
    herm = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    min_eig = float(np.min(np.linalg.eigvalsh(_hermitize(mat))))
    tr = abs(complex(np.trace(mat)) - 1.0)
    return ValidationReport(
        "density",
        hermiticity_residual=herm,
        min_eigenvalue=min_eig,
        trace_residual=tr,
        checks={
            "hermitian": herm <= HERMITIAN_TOL,
            "positive": min_eig >= -POSITIVITY_TOL,
            "trace": tr <= TRACE_TOL,
        },
    )


def _resolve_keep(layout: SubsystemLayout, keep: Sequence[str]) -> list[int]:
    if isinstance(keep, str):
        keep = [keep]
    keep = list(keep)
    if not keep:
        raise ValueError("keep set must be nonempty")
    idx = [layout.index(x) for x in keep]
    if len(set(idx)) != len(idx):
        raise ValueError(f"repeated labels in keep set {keep}")
    return sorted(idx)


def partial_trace(s: State, keep: Sequence[str]) -> DensityMatrix:
    """Reduced state on the parties in ``keep`` (kept in layout order)."""
    layout = s.layout
    idx = _resolve_keep(layout, keep)
    out = SubsystemLayout(tuple(layout.labels[i] for i in idx), tuple(layout.dims[i] for i in idx))
    dk = out.total_dim
    traced = [i for i in range(layout.n_parties) if i not in idx]
    if isinstance(s, PureState):
        m = np.transpose(s.tensor, idx + traced).reshape(dk, -1)
        return DensityMatrix(out, m @ m.conj().T)
    n = layout.n_parties
    t = s.matrix.reshape(layout.dims + layout.dims)
    # bra axes of traced parties are identified with their ket axes
    letters = string.ascii_letters
    ket = [letters[i] for i in range(n)]
    bra = [letters[n + i] if i in idx else letters[i] for i in range(n)]
    outs = [ket[i] for i in idx] + [bra[i] for i in idx]
    red = np.einsum("".join(ket + bra) + "->" + "".join(outs), t)
    return DensityMatrix(out, red.reshape(dk, dk))


def _spectrum(mat: np.ndarray) -> np.ndarray:
    return np.sort(np.linalg.eigvalsh(_hermitize(mat)))[::-1]


def numerical_rank(spectrum: np.ndarray, tol: float = RANK_TOL) -> int:
    top = float(np.max(spectrum)) if len(spectrum) else 0.0
    if top <= 0:
        return 0
    return int(np.sum(spectrum > tol * top))


def count_distinct_spectra(spectra: Sequence[np.ndarray], tol: float = SPECTRUM_TOL) -> int:
    """Group descending spectra that agree elementwise within ``tol``.

    Spectra of unequal length are zero-padded to a common length first.
    """
    width = max(len(x) for x in spectra)
    padded = [np.pad(np.asarray(x, dtype=float), (0, width - len(x))) for x in spectra]
    reps: list[np.ndarray] = []
    for sp in padded:
        if not any(np.max(np.abs(sp - r)) <= tol for r in reps):
            reps.append(sp)
    return len(reps)


@dataclass(frozen=True, eq=False)
class MarginalSet:
    layout: SubsystemLayout
    marginals: tuple[DensityMatrix, ...]
    spectra: tuple[np.ndarray, ...]
    n_ms: int
    ranks: tuple[int, ...]

    def __getitem__(self, label: str) -> DensityMatrix:
        return self.marginals[self.layout.index(label)]


def marginals(s: State) -> MarginalSet:
    layout = s.layout
    margs = tuple(partial_trace(s, [lab]) for lab in layout.labels)
    spectra = tuple(_spectrum(m.matrix) for m in margs)
    return MarginalSet(
        layout=layout,
        marginals=margs,
        spectra=spectra,
        n_ms=count_distinct_spectra(spectra),
        ranks=tuple(numerical_rank(sp) for sp in spectra),
    )


def uncorrelated_product(m: MarginalSet) -> DensityMatrix:
    mat = reduce(np.kron, [x.matrix for x in m.marginals])
    return DensityMatrix(m.layout, mat)


def _log(x: np.ndarray, base) -> np.ndarray:
    out = np.log(x)
    return out / np.log(base) if base != "e" and base != np.e else out


def shannon_entropy(probs, base=2) -> float:
    """Entropy of a probability vector; entries below 1e-12 count as zero."""
    p = np.asarray(probs, dtype=float)
    p = p[p > EIGEN_CLIP]
    if p.size == 0:
        return 0.0
    return float(max(0.0, -np.sum(p * _log(p, base))))


def von_neumann_entropy(rho: State, base=2) -> float:
    if isinstance(rho, PureState):
        return 0.0
    return shannon_entropy(rho.eigvalsh(), base)


def relative_entropy(rho: State, sigma: State, base=2) -> float:
    """S(rho||sigma); ``inf`` when the support of rho leaks outside sigma's."""
    if rho.layout.dims != sigma.layout.dims:
        raise ValueError(f"layout mismatch: {rho.layout.dims} vs {sigma.layout.dims}")
    r = as_density(rho).matrix
    mu, vecs = np.linalg.eigh(_hermitize(as_density(sigma).matrix))
    supp = mu > EIGEN_CLIP
    v_out = vecs[:, ~supp]
    leak = float(np.real(np.trace(v_out.conj().T @ r @ v_out))) if v_out.size else 0.0
    if leak > SUPPORT_TOL:
        return float("inf")
    overlaps = np.real(np.einsum("ik,ij,jk->k", vecs[:, supp].conj(), r, vecs[:, supp]))
    cross = float(np.sum(overlaps * _log(mu[supp], base)))
    neg_s_rho = -von_neumann_entropy(as_density(rho), base)
    return neg_s_rho - cross


def _check_unitary(u: np.ndarray, d: int, tol: float = 1e-10) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (d, d):
        raise ValueError(f"unitary of shape {u.shape} for a party of dimension {d}")
    res = float(np.max(np.abs(u.conj().T @ u - np.eye(d))))
    if res > tol:
        raise ValueError(f"matrix is not unitary (residual {res:.2e})")
    return u


def apply_local_unitary(s: PureState, unitaries: Sequence[np.ndarray]) -> PureState:
    layout = s.layout
    if len(unitaries) != layout.n_parties:
        raise ValueError(f"{len(unitaries)} unitaries for {layout.n_parties} parties")
    t = s.tensor
    for axis, (u, d) in enumerate(zip(unitaries, layout.dims)):
        u = _check_unitary(u, d)
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
    return PureState(layout, t.reshape(-1))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_random_state(layout: LayoutLike, seed=None) -> PureState:
    layout = as_layout(layout)
    v = _complex_gaussian(_rng(seed), layout.total_dim)
    return PureState(layout, v / np.linalg.norm(v))


def haar_random_density(layout: LayoutLike, rank: int | None = None, seed=None) -> DensityMatrix:
    layout = as_layout(layout)
    n = layout.total_dim
    rank = n if rank is None else int(rank)
    if not 1 <= rank <= n:
        raise ValueError(f"rank {rank} out of range [1, {n}]")
    g = _complex_gaussian(_rng(seed), (n, rank))
    rho = g @ g.conj().T
    return DensityMatrix(layout, rho / np.trace(rho).real)


def haar_random_unitary(d: int, seed=None) -> np.ndarray:
    # QR of a Ginibre matrix with the R-diagonal phases divided out
    q, r = np.linalg.qr(_complex_gaussian(_rng(seed), (d, d)))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def product_state(kets: Sequence, labels: Sequence[str] | None = None) -> PureState:
    kets = [np.asarray(k, dtype=complex) for k in kets]
    layout = SubsystemLayout.from_dims([k.size for k in kets], labels)
    v = reduce(np.kron, kets)
    return PureState(layout, v / np.linalg.norm(v))
