"""Correlation information, membership checks and the compact entanglement E^c."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .schmidt import (
    DecompositionTree,
    Ordering,
    SeparableDecohered,
    compact_decomposition,
    decohere,
    enumerate_orderings,
)
from .states import (
    PureState,
    State,
    as_density,
    marginals,
    relative_entropy,
    shannon_entropy,
    uncorrelated_product,
    von_neumann_entropy,
    _hermitize,
)

MAX_DENSE_DIM = 64


def _base_name(base) -> str:
    return "e" if base in ("e", np.e) else str(base)


def correlation_information(s: State, base=2) -> float:
    """S(product of marginals) - S(state), using additivity over the product."""
    m = marginals(s)
    total = sum(shannon_entropy(sp, base) for sp in m.spectra)
    return max(0.0, total - von_neumann_entropy(s, base))


def _sigma_entropy_of_marginals(sigma: SeparableDecohered, base) -> float:
    return sum(shannon_entropy(np.linalg.eigvalsh(_hermitize(sigma.marginal(lab))), base)
               for lab in sigma.layout.labels)


@dataclass(frozen=True)
class MembershipReport:
    separable_by_construction: bool
    marginal_residual: float
    contrast_line_residual: float
    additivity_residual: float
    orthogonality_residual: float
    identity_residual: float
    relative_entropy: float
    entropy_rho: float
    entropy_sigma: float
    entropy_product: float
    base: str
    support_ok: bool

    def passed(self, tol: float = 1e-8) -> bool:
        return (self.support_ok and self.marginal_residual <= tol
                and self.contrast_line_residual <= tol and self.additivity_residual <= tol)


def _log_on_support(mat: np.ndarray, base) -> tuple[np.ndarray, np.ndarray]:
    """log of a PSD matrix on its support, and the projector onto the complement."""
    mu, vecs = np.linalg.eigh(_hermitize(mat))
    supp = mu > 1e-12
    lmu = np.log(mu[supp])
    if _base_name(base) != "e":
        lmu = lmu / np.log(base)
    logm = (vecs[:, supp] * lmu) @ vecs[:, supp].conj().T
    out = vecs[:, ~supp]
    return logm, out @ out.conj().T


def verify_membership(rho: State, sigma: SeparableDecohered, base=2) -> MembershipReport:
    """Check conditions (separable, same marginals, contrast line) and additivity."""
    if rho.layout.dims != sigma.layout.dims:
        raise ValueError("rho and sigma live on different layouts")
    if rho.layout.total_dim > MAX_DENSE_DIM:
        raise ValueError(f"dense membership check capped at dimension {MAX_DENSE_DIM}")
    r = as_density(rho)
    s = sigma.to_density()
    m_rho = marginals(r)
    marg_res = max(float(np.max(np.abs(sigma.marginal(lab) - m_rho[lab].matrix)))
                   for lab in r.layout.labels)
    prod = uncorrelated_product(m_rho)

    logs, out_proj = _log_on_support(s.matrix, base)
    support_ok = float(np.real(np.trace(out_proj @ r.matrix))) <= 1e-10
    contrast = abs(float(np.real(np.trace((s.matrix - r.matrix) @ logs)))) if support_ok else float("inf")

    s_rho = von_neumann_entropy(r, base)
    s_sigma = von_neumann_entropy(s, base)
    s_prod = von_neumann_entropy(prod, base)
    d_rs = relative_entropy(r, s, base)
    d_sp = relative_entropy(s, prod, base)
    d_rp = relative_entropy(r, prod, base)
    terms = (d_rs, d_sp, d_rp)
    additivity = abs(d_rs + d_sp - d_rp) if all(np.isfinite(terms)) else float("inf")
    identity = abs(d_rs - (s_sigma - s_rho)) if np.isfinite(d_rs) else float("inf")
    return MembershipReport(
        separable_by_construction=True,
        marginal_residual=marg_res,
        contrast_line_residual=contrast,
        additivity_residual=additivity,
        orthogonality_residual=sigma.orthogonality_residual(),
        identity_residual=identity,
        relative_entropy=d_rs,
        entropy_rho=s_rho,
        entropy_sigma=s_sigma,
        entropy_product=s_prod,
        base=_base_name(base),
        support_ok=support_ok,
    )


@dataclass(frozen=True, eq=False)
class PureMeasureResult:
    value: float
    argmin_ordering: Ordering
    per_ordering: dict[Ordering, float]
    sigma: SeparableDecohered
    tree: DecompositionTree
    correlation_rho: float
    correlation_sigma: float
    base: str


def flat_entropy(tree: DecompositionTree, base=2) -> float:
    return shannon_entropy(tree.leaf_weights(), base)


def entanglement_pure(psi: PureState, base=2, orderings: Sequence[Sequence[str]] | None = None) -> PureMeasureResult:
    """Minimum entropy of the decohered compact decompositions over orderings.

    ``orderings`` defaults to all N!/2 canonical orderings; pass a subset to
    sample when N is large. Ties keep the earliest ordering.
    """
    if psi.layout.n_parties < 2:
        raise ValueError("entanglement needs at least two parties")
    orderings = enumerate_orderings(psi.layout) if orderings is None else [tuple(o) for o in orderings]
    per: dict[Ordering, float] = {}
    best_tree, best = None, np.inf
    for o in orderings:
        tree = compact_decomposition(psi, o)
        h = flat_entropy(tree, base)
        per[o] = h
        if h < best - 1e-12:
            best, best_tree = h, tree
    sigma = decohere(best_tree)
    m = marginals(psi)
    c_rho = sum(shannon_entropy(sp, base) for sp in m.spectra) - von_neumann_entropy(psi, base)
    c_sigma = _sigma_entropy_of_marginals(sigma, base) - best
    value = min(per.values())
    return PureMeasureResult(
        value=value,
        argmin_ordering=best_tree.ordering,
        per_ordering=per,
        sigma=sigma,
        tree=best_tree,
        correlation_rho=c_rho,
        correlation_sigma=c_sigma,
        base=_base_name(base),
    )


def nested_entropy(tree: DecompositionTree, base=2) -> float:
    """Chain-rule form: H(root) + sum_i w_i * nested(child_i)."""
    def walk(node):
        ws = np.array([b.weight for b in node.branches])
        h = shannon_entropy(ws, base)
        return h + sum(b.weight * walk(b.child) for b in node.branches if b.child is not None)
    return walk(tree.root)


def nested_terms(tree: DecompositionTree, base=2) -> list[float]:
    """Per-level contributions of the nested form (root level first)."""
    terms: list[float] = []

    def walk(node, w, level):
        if len(terms) <= level:
            terms.append(0.0)
        terms[level] += w * shannon_entropy([b.weight for b in node.branches], base)
        for b in node.branches:
            if b.child is not None:
                walk(b.child, w * b.weight, level + 1)
    walk(tree.root, 1.0, 0)
    return terms


# -- relative entropy of entanglement, upper bound ---------------------------

@dataclass(frozen=True)
class EREstimateConfig:
    n_terms: int | None = None  # default 2 x total dimension
    restarts: int = 4
    max_iters: int = 300
    seed: int = 0
    tol: float = 1e-10


@dataclass(frozen=True, eq=False)
class EREstimate:
    value: float
    compact_value: float
    witness: SeparableDecohered
    restart_values: tuple[float, ...]
    converged: tuple[bool, ...]
    base: str


def _unpack(x: np.ndarray, k: int, dims: Sequence[int]):
    a = x[:k]
    off = k
    vecs = []
    for d in dims:
        n = k * d
        vecs.append(x[off:off + n].reshape(k, d) + 1j * x[off + n:off + 2 * n].reshape(k, d))
        off += 2 * n
    return a, vecs


def _pack(a: np.ndarray, vecs: Sequence[np.ndarray]) -> np.ndarray:
    parts = [a]
    for v in vecs:
        parts += [v.real.ravel(), v.imag.ravel()]
    return np.concatenate(parts)


def _product_rows(units: Sequence[np.ndarray]) -> np.ndarray:
    out = units[0]
    for u in units[1:]:
        out = np.einsum("ki,kj->kij", out, u).reshape(out.shape[0], -1)
    return out


def _cross_entropy_and_grad(x, k, dims, rho, floor=1e-16):
    """-tr(rho log sigma) in nats and its gradient w.r.t. the packed parameters.

    sigma = sum_k softmax(a)_k |Phi_k><Phi_k|, Phi_k a product of normalized
    local vectors. The gradient uses the divided-difference form of the
    Frechet derivative of the matrix logarithm.
    """
    a, raw = _unpack(x, k, dims)
    w = np.exp(a - a.max())
    w /= w.sum()
    norms = [np.linalg.norm(v, axis=1) for v in raw]
    units = [v / n[:, None] for v, n in zip(raw, norms)]
    phi = _product_rows(units)  # k x D
    sigma = (phi.T * w) @ phi.conj()
    mu, vecs = np.linalg.eigh(_hermitize(sigma))
    mu = np.maximum(mu, floor)
    lmu = np.log(mu)
    rho_e = vecs.conj().T @ rho @ vecs
    f = -float(np.real(np.sum(np.diag(rho_e) * lmu)))

    diff = mu[:, None] - mu[None, :]
    same = np.abs(diff) < 1e-14 * np.maximum(mu[:, None], mu[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(same, 1.0 / mu[:, None], (lmu[:, None] - lmu[None, :]) / np.where(same, 1.0, diff))
    g = vecs @ (lam * rho_e) @ vecs.conj().T  # df = -tr(g dsigma)

    gphi = (g @ phi.T).T  # row k: g Phi_k
    quad = np.real(np.einsum("ki,ki->k", phi.conj(), gphi))
    grad_a = -(w * (quad - np.dot(w, quad)))

    grads = []
    n = len(dims)
    for p in range(n):
        t = gphi.reshape((k,) + tuple(dims))
        for q in reversed(range(n)):
            if q == p:
                continue
            t = np.einsum("k...i,ki->k...", np.moveaxis(t, q + 1, -1), units[q].conj())
        z = t  # k x d_p
        u = units[p]
        proj = z - np.real(np.einsum("ki,ki->k", u.conj(), z))[:, None] * u
        grads.append(-2.0 * w[:, None] * proj / norms[p][:, None])
    return f, _pack(grad_a, grads)


def _random_params(rng, k, dims):
    return _pack(rng.standard_normal(k), [rng.standard_normal((k, d)) + 1j * rng.standard_normal((k, d))
                                          for d in dims])


def _seed_params(sigma: SeparableDecohered, k, dims, rng):
    n0 = len(sigma.weights)
    a = np.full(k, -40.0)
    a[:n0] = np.log(sigma.weights)
    vecs = []
    for p, d in enumerate(dims):
        v = rng.standard_normal((k, d)) + 1j * rng.standard_normal((k, d))
        v[:n0] = np.stack([kk[p] for kk in sigma.kets])
        vecs.append(v)
    return _pack(a, vecs)


def _compact_sigma(rho: State) -> SeparableDecohered:
    if isinstance(rho, PureState):
        return entanglement_pure(rho).sigma
    mu, vecs = np.linalg.eigh(_hermitize(rho.matrix))
    weights, kets = [], []
    for m, v in zip(mu, vecs.T):
        if m <= 1e-12:
            continue
        s = entanglement_pure(PureState(rho.layout, v)).sigma
        weights.extend(m * s.weights)
        kets.extend(s.kets)
    w = np.array(weights)
    return SeparableDecohered(rho.layout, w / w.sum(), tuple(kets))


def relative_entropy_of_entanglement_estimate(rho: State, config: EREstimateConfig | None = None,
                                              base=2) -> EREstimate:
    """Upper bound on E_R from product-state mixtures of a fixed size.

    The decohered compact state is always one of the candidates, so the
    returned value never exceeds S(rho||sigma_compact).
    """
    config = config or EREstimateConfig()
    layout = rho.layout
    dim = layout.total_dim
    if dim > MAX_DENSE_DIM:
        raise ValueError(f"E_R estimate capped at total dimension {MAX_DENSE_DIM}, got {dim}")
    dims = layout.dims
    k = config.n_terms or 2 * dim
    r = as_density(rho).matrix
    s_rho = von_neumann_entropy(as_density(rho), "e")
    scale = 1.0 if _base_name(base) == "e" else 1.0 / np.log(base)

    sig_c = _compact_sigma(rho)
    compact_value = relative_entropy(rho, sig_c.to_density(), base)
    k = max(k, len(sig_c.weights))

    rng = np.random.default_rng(config.seed)
    starts = [_seed_params(sig_c, k, dims, rng)]
    starts += [_random_params(rng, k, dims) for _ in range(max(0, config.restarts - 1))]

    values, flags = [], []
    best_val, best_x = np.inf, None
    for x0 in starts:
        res = minimize(_cross_entropy_and_grad, x0, args=(k, dims, r), jac=True, method="L-BFGS-B",
                       options={"maxiter": config.max_iters, "ftol": config.tol, "gtol": 1e-9})
        val = (float(res.fun) - s_rho) * scale
        values.append(val)
        flags.append(bool(res.success))
        if val < best_val:
            best_val, best_x = val, res.x

    if compact_value <= best_val:
        return EREstimate(compact_value, compact_value, sig_c, tuple(values), tuple(flags), _base_name(base))
    a, raw = _unpack(best_x, k, dims)
    w = np.exp(a - a.max())
    w /= w.sum()
    units = [v / np.linalg.norm(v, axis=1)[:, None] for v in raw]
    keep = w > 1e-14
    witness = SeparableDecohered(layout, w[keep] / w[keep].sum(),
                                 tuple(tuple(u[i] for u in units) for i in np.flatnonzero(keep)))
    # re-evaluate without the eigenvalue floor so the bound is exact for the witness
    exact = relative_entropy(rho, witness.to_density(), base)
    if exact >= compact_value:
        return EREstimate(compact_value, compact_value, sig_c, tuple(values), tuple(flags), _base_name(base))
    return EREstimate(max(exact, 0.0), compact_value, witness, tuple(values), tuple(flags), _base_name(base))
