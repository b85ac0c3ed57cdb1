"""Bipartite Schmidt step and the continued (compact) Schmidt decomposition.

A compact decomposition peels one party at a time off the front of an
ordering: Schmidt-decompose ``first | rest``, then decompose each right
Schmidt vector ``second | rest'``, and so on until the last two parties,
which share one Schmidt index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Sequence

import numpy as np

from .states import (
    PureState,
    SubsystemLayout,
    DensityMatrix,
    marginals,
)

PRUNE_TOL = 1e-12
ORTHO_TOL = 1e-10
PROB_TOL = 1e-10

Ordering = tuple[str, ...]


@dataclass(frozen=True, eq=False)
class SchmidtSplit:
    weights: np.ndarray
    left: np.ndarray  # columns are left Schmidt vectors
    right: np.ndarray  # columns are right Schmidt vectors
    left_labels: tuple[str, ...]
    right_labels: tuple[str, ...]

    def reconstruct(self) -> np.ndarray:
        """State vector in the (left labels, right labels) axis order."""
        return np.einsum("k,ik,jk->ij", np.sqrt(self.weights), self.left, self.right).reshape(-1)


def _fix_phase(u: np.ndarray, vh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # largest-magnitude entry of each left vector made real positive (lowest index on ties)
    mag = np.abs(u)
    pick = np.argmax(mag >= mag.max(axis=0, keepdims=True) - 1e-12, axis=0)
    ph = u[pick, np.arange(u.shape[1])]
    ph = ph / np.abs(ph)
    return u * ph.conj(), vh * ph[:, None]


def schmidt_matrix(mat: np.ndarray, prune: float = PRUNE_TOL):
    """Schmidt form of a coefficient matrix: (weights, left columns, right columns).

    ``mat = sum_k sqrt(w_k) outer(left[:, k], right[:, k])`` with weights
    sorted descending and those at or below ``prune`` removed.
    """
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    w = s**2
    keep = w > prune
    if not keep.any():
        raise ValueError("state has zero norm")
    u, vh = _fix_phase(u[:, keep], vh[keep])
    return w[keep], u, vh.T


def bipartite_schmidt(psi: PureState, split: tuple[Sequence[str], Sequence[str]]) -> SchmidtSplit:
    left, right = (tuple(x) for x in split)
    layout = psi.layout
    if not left or not right:
        raise ValueError("both sides of the split must be nonempty")
    if sorted(left + right) != sorted(layout.labels):
        raise ValueError(f"{left}|{right} is not a bipartition of {layout.labels}")
    axes = [layout.index(x) for x in left + right]
    dl = int(np.prod([layout.dim(x) for x in left]))
    mat = np.transpose(psi.tensor, axes).reshape(dl, -1)
    w, u, v = schmidt_matrix(mat)
    return SchmidtSplit(w, u, v, left, right)


@dataclass(frozen=True, eq=False)
class Branch:
    """One Schmidt term at a node.

    ``kets`` holds one local ket at inner levels and the Schmidt pair at the
    final level; ``child`` is the node decomposing the complementary vector.
    """

    weight: float
    kets: tuple[np.ndarray, ...]
    child: Node | None = None


@dataclass(frozen=True, eq=False)
class Node:
    parties: tuple[str, ...]
    branches: tuple[Branch, ...]

    @property
    def is_final(self) -> bool:
        return len(self.parties) == 2


@dataclass(frozen=True, eq=False)
class DecompositionTree:
    ordering: Ordering
    layout: SubsystemLayout
    root: Node
    renormalization_residual: float = 0.0

    def leaves(self) -> Iterator[tuple[float, tuple[np.ndarray, ...]]]:
        """Yield (joint weight, kets in ordering order) for every leaf path."""
        def walk(node, w, kets):
            for b in node.branches:
                if b.child is None:
                    yield w * b.weight, kets + b.kets
                else:
                    yield from walk(b.child, w * b.weight, kets + b.kets)
        yield from walk(self.root, 1.0, ())

    def leaf_weights(self) -> np.ndarray:
        def walk(node, w):
            for b in node.branches:
                if b.child is None:
                    yield w * b.weight
                else:
                    yield from walk(b.child, w * b.weight)
        return np.fromiter(walk(self.root, 1.0), dtype=float)

    def nodes(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(b.child for b in node.branches if b.child is not None)

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_weights())


def _decompose(vec: np.ndarray, labels: tuple[str, ...], dims: tuple[int, ...]) -> tuple[Node, float]:
    w, u, v = schmidt_matrix(vec.reshape(dims[0], -1))
    resid = abs(1.0 - float(w.sum()))
    w = w / w.sum()
    if len(labels) == 2:
        branches = tuple(Branch(float(w[k]), (u[:, k], v[:, k])) for k in range(len(w)))
        return Node(labels, branches), resid
    branches = []
    for k in range(len(w)):
        child, r = _decompose(v[:, k], labels[1:], dims[1:])
        resid = max(resid, r)
        branches.append(Branch(float(w[k]), (u[:, k],), child))
    return Node(labels[:1], tuple(branches)), resid


def canonical_ordering(ordering: Sequence[str]) -> Ordering:
    ordering = tuple(ordering)
    if len(ordering) < 2:
        return ordering
    return ordering[:-2] + tuple(sorted(ordering[-2:]))


def enumerate_orderings(layout: SubsystemLayout | Sequence[str]) -> list[Ordering]:
    """All N!/2 orderings, with the final pair in lexicographic order."""
    labels = layout.labels if isinstance(layout, SubsystemLayout) else tuple(layout)
    if len(labels) < 2:
        raise ValueError("need at least two parties")
    seen: dict[Ordering, None] = {}
    for perm in itertools.permutations(labels):
        seen.setdefault(canonical_ordering(perm), None)
    return list(seen)


def _check_ordering(layout: SubsystemLayout, ordering: Sequence[str] | None) -> Ordering:
    if ordering is None:
        return canonical_ordering(layout.labels)
    ordering = tuple(ordering)
    if sorted(ordering) != sorted(layout.labels):
        raise ValueError(f"ordering {ordering} is not a permutation of {layout.labels}")
    return ordering


def compact_decomposition(psi: PureState, ordering: Sequence[str] | None = None) -> DecompositionTree:
    layout = psi.layout
    if layout.n_parties < 2:
        raise ValueError("compact decomposition needs at least two parties")
    ordering = _check_ordering(layout, ordering)
    axes = [layout.index(x) for x in ordering]
    dims = tuple(layout.dims[i] for i in axes)
    vec = np.transpose(psi.tensor, axes).reshape(-1)
    root, resid = _decompose(vec, ordering, dims)
    return DecompositionTree(ordering, layout, root, resid)


def leaf_weights_only(psi: PureState, ordering: Sequence[str]) -> np.ndarray:
    """Joint leaf weights without building the tree (no kets kept)."""
    layout = psi.layout
    axes = [layout.index(x) for x in ordering]
    dims = [layout.dims[i] for i in axes]
    vec = np.transpose(psi.tensor, axes).reshape(-1)

    def walk(v, k):
        if k == len(dims) - 2:
            s = np.linalg.svd(v.reshape(dims[k], -1), compute_uv=False) ** 2
            return s[s > PRUNE_TOL]
        _, s, vh = np.linalg.svd(v.reshape(dims[k], -1), full_matrices=False)
        w = s**2
        keep = w > PRUNE_TOL
        return np.concatenate([wk * walk(vh[j], k + 1) for j, wk in zip(np.flatnonzero(keep), w[keep])])

    w = walk(vec, 0)
    return w / w.sum()


def _subtree_vector(node: Node) -> np.ndarray:
    """Vector on ``node``'s remaining parties obtained by resumming its subtree."""
    out = 0
    for b in node.branches:
        if b.child is None:
            tail = np.kron(b.kets[0], b.kets[1])
        else:
            tail = np.kron(b.kets[0], _subtree_vector(b.child))
        out = out + np.sqrt(b.weight) * tail
    return out


def reconstruct(tree: DecompositionTree) -> PureState:
    layout = tree.layout
    vec = _subtree_vector(tree.root)
    dims = [layout.dim(x) for x in tree.ordering]
    perm = [layout.index(x) for x in tree.ordering]
    t = np.transpose(vec.reshape(dims), np.argsort(perm))
    return PureState(layout, t.reshape(-1))


def _gram_residual(vectors: Sequence[np.ndarray]) -> float:
    m = np.stack(vectors, axis=1)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))))


def fidelity(a: PureState, b: PureState) -> float:
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


@dataclass(frozen=True)
class TreeReport:
    orthonormality_residual: float
    mate_residual: float
    probability_residual: float
    weight_range_ok: bool
    leaf_count: int
    leaf_bound: int
    fidelity: float

    def passed(self, tol: float = ORTHO_TOL) -> bool:
        return (self.orthonormality_residual <= tol and self.mate_residual <= tol
                and self.probability_residual <= tol and self.weight_range_ok
                and self.leaf_count <= self.leaf_bound and self.fidelity >= 1 - tol)


def leaf_bound(layout: SubsystemLayout, ordering: Sequence[str]) -> int:
    dims = [layout.dim(x) for x in ordering]
    return int(np.prod(dims[:-2], dtype=np.int64)) * min(dims[-2:])


def verify_tree(tree: DecompositionTree, psi: PureState) -> TreeReport:
    ortho = mate = prob = 0.0
    weights_ok = True
    for node in tree.nodes():
        ws = np.array([b.weight for b in node.branches])
        prob = max(prob, abs(1.0 - float(ws.sum())))
        weights_ok &= bool(np.all((ws > 0) & (ws <= 1 + PROB_TOL)))
        for slot in range(len(node.branches[0].kets)):
            ortho = max(ortho, _gram_residual([b.kets[slot] for b in node.branches]))
        if not node.is_final:
            mate = max(mate, _gram_residual([_subtree_vector(b.child) for b in node.branches]))
    return TreeReport(
        orthonormality_residual=ortho,
        mate_residual=mate,
        probability_residual=prob,
        weight_range_ok=weights_ok,
        leaf_count=tree.n_leaves,
        leaf_bound=leaf_bound(tree.layout, tree.ordering),
        fidelity=fidelity(reconstruct(tree), psi),
    )


@dataclass(frozen=True, eq=False)
class SeparableDecohered:
    """Mixture of orthogonal product projectors; kets are in layout order."""

    layout: SubsystemLayout
    weights: np.ndarray
    kets: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if len(self.kets) != len(self.weights):
            raise ValueError("one ket tuple per weight required")

    def product_vectors(self) -> np.ndarray:
        """Rows are the full product vectors of each term."""
        return np.stack([reduce(np.kron, k) for k in self.kets])

    def to_density(self) -> DensityMatrix:
        vecs = self.product_vectors()
        return DensityMatrix(self.layout, (vecs.T * self.weights) @ vecs.conj())

    def marginal(self, label: str) -> np.ndarray:
        i = self.layout.index(label)
        loc = np.stack([k[i] for k in self.kets])
        return (loc.T * self.weights) @ loc.conj()

    def orthogonality_residual(self) -> float:
        """Max |<term_a|term_b>|^2 over distinct terms (trace of the projector product)."""
        if len(self.kets) < 2:
            return 0.0
        overlap = np.ones((len(self.kets), len(self.kets)))
        for i in range(self.layout.n_parties):
            loc = np.stack([k[i] for k in self.kets])
            overlap = overlap * np.abs(loc.conj() @ loc.T) ** 2
        np.fill_diagonal(overlap, 0.0)
        return float(overlap.max())


def decohere(tree: DecompositionTree) -> SeparableDecohered:
    layout = tree.layout
    pos = [tree.ordering.index(x) for x in layout.labels]
    weights, kets = [], []
    for w, ks in tree.leaves():
        weights.append(w)
        kets.append(tuple(ks[p] for p in pos))
    return SeparableDecohered(layout, np.array(weights), tuple(kets))


def is_diagonal_tree(tree: DecompositionTree) -> bool:
    """True when every inner branch continues as a single chain."""
    return all(len(b.child.branches) == 1
               for node in tree.nodes() for b in node.branches if b.child is not None)


@dataclass(frozen=True, eq=False)
class SchmidtWitness:
    decomposable: bool
    n_ms: int
    tree: DecompositionTree
    tree_diagonal: bool
    basis_diagonal: bool
    local_bases: tuple[np.ndarray, ...]


def _diagonal_support(t: np.ndarray, tol: float) -> bool:
    idx = np.argwhere(np.abs(t) > tol)
    return all(len(set(idx[:, k])) == len(idx) for k in range(t.ndim))


def _local_bases(psi: PureState, rng: np.random.Generator) -> list[np.ndarray]:
    # Contracting all but two parties with random vectors leaves a bipartite
    # state whose Schmidt vectors are generically nondegenerate; if psi is
    # Schmidt-decomposable they coincide with its local Schmidt bases.
    layout = psi.layout
    n = layout.n_parties
    bases = []
    for i in range(n):
        j = (i + 1) % n
        t = psi.tensor
        for k in reversed(range(n)):
            if k in (i, j):
                continue
            r = rng.standard_normal(layout.dims[k]) + 1j * rng.standard_normal(layout.dims[k])
            t = np.tensordot(t, r, axes=([k], [0]))
        mat = t if i < j else t.T
        u, _, _ = np.linalg.svd(mat)
        bases.append(u)
    return bases


def is_schmidt_decomposable(psi: PureState, tol: float = 1e-8, seed: int = 0) -> SchmidtWitness:
    """Spectral test plus an explicit diagonal-form witness.

    ``decomposable`` requires equal marginal spectra (n_ms == 1) and a set of
    local bases in which the amplitude tensor has at most one nonzero entry
    per index value on every party.
    """
    m = marginals(psi)
    tree = compact_decomposition(psi)
    if psi.layout.n_parties == 2:
        u, _, vh = np.linalg.svd(psi.tensor)
        bases = [u, vh.T]
    else:
        bases = _local_bases(psi, np.random.default_rng(seed))
    t = psi.tensor
    for axis, u in enumerate(bases):
        t = np.moveaxis(np.tensordot(u.conj().T, t, axes=([1], [axis])), 0, axis)
    basis_diag = _diagonal_support(t, tol)
    return SchmidtWitness(
        decomposable=(m.n_ms == 1 and basis_diag),
        n_ms=m.n_ms,
        tree=tree,
        tree_diagonal=is_diagonal_tree(tree),
        basis_diagonal=basis_diag,
        local_bases=tuple(bases),
    )
