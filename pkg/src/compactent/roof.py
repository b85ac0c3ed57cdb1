"""Convex-roof extension of E^c to mixed states, plus the two-qubit Wootters oracle.

Ensembles are parametrized by m x r isometries V acting on the eigen-ensemble:
``|psi_a~> = sum_k V[a, k] sqrt(mu_k) |e_k>``. The roof value is minimized over
V by Riemannian gradient descent on the complex Stiefel manifold with a QR
retraction and Armijo backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import _base_name, entanglement_pure
from .schmidt import enumerate_orderings, leaf_weights_only
from .states import DensityMatrix, PureState, _hermitize, numerical_rank, shannon_entropy

MAX_ROOF_DIM = 64
WEIGHT_PRUNE = 1e-10
ISOMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EnsembleDecomposition:
    weights: np.ndarray
    states: tuple[PureState, ...]
    source: np.ndarray

    def density(self) -> np.ndarray:
        vecs = np.stack([s.amplitudes for s in self.states])
        return (vecs.T * self.weights) @ vecs.conj()

    def representation_residual(self, rho: DensityMatrix) -> float:
        return float(np.max(np.abs(self.density() - rho.matrix)))


def _eigen_basis(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Rows sqrt(mu_k) e_k for the numerically nonzero eigenpairs, descending."""
    mu, vecs = np.linalg.eigh(_hermitize(rho.matrix))
    order = np.argsort(mu)[::-1]
    mu, vecs = mu[order], vecs[:, order]
    r = numerical_rank(mu)
    return mu[:r], (vecs[:, :r] * np.sqrt(mu[:r])).T


def ensemble_from_isometry(rho: DensityMatrix, v: np.ndarray) -> EnsembleDecomposition:
    mu, b = _eigen_basis(rho)
    v = np.asarray(v, dtype=complex)
    if v.ndim != 2 or v.shape[1] != len(mu):
        raise ValueError(f"isometry needs {len(mu)} columns (rank of rho), got shape {v.shape}")
    if v.shape[0] < v.shape[1]:
        raise ValueError("ensemble size must be at least the rank")
    res = float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))))
    if res > ISOMETRY_TOL:
        raise ValueError(f"columns are not orthonormal (residual {res:.2e})")
    tilde = v @ b
    p = np.real(np.einsum("ai,ai->a", tilde.conj(), tilde))
    keep = p > WEIGHT_PRUNE
    states = tuple(PureState(rho.layout, tilde[a] / np.sqrt(p[a])) for a in np.flatnonzero(keep))
    return EnsembleDecomposition(p[keep] / p[keep].sum(), states, v)


@dataclass(frozen=True)
class RoofConfig:
    ensemble_size: int | None = None  # default 2 x rank
    restarts: int = 8
    max_iters: int = 500
    seed: int = 0
    tol: float = 1e-8

    def __post_init__(self):
        if self.ensemble_size is not None and self.ensemble_size < 1:
            raise ValueError("ensemble_size must be positive")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True, eq=False)
class RoofResult:
    value: float
    best_ensemble: EnsembleDecomposition
    restarts_used: int
    converged_flags: tuple[bool, ...]
    restart_values: tuple[float, ...]
    eigen_ensemble_value: float
    ensemble_size: int
    base: str


class _Objective:
    """Ensemble-averaged E^c (nats) as a function of the isometry."""

    def __init__(self, rho: DensityMatrix):
        self.layout = rho.layout
        self.mu, self.b = _eigen_basis(rho)
        self.dims = rho.layout.dims
        self.orderings = enumerate_orderings(rho.layout)
        self.bipartite = len(self.dims) == 2

    def _pure_value(self, vec: np.ndarray) -> float:
        psi = PureState(self.layout, vec)
        return min(shannon_entropy(leaf_weights_only(psi, o), "e") for o in self.orderings)

    def value(self, v: np.ndarray) -> float:
        tilde = v @ self.b
        p = np.real(np.einsum("ai,ai->a", tilde.conj(), tilde))
        if self.bipartite:
            s2 = np.linalg.svd(tilde.reshape(-1, *self.dims), compute_uv=False) ** 2
            ent = np.where(s2 > 0, -s2 * np.log(np.where(s2 > 0, s2, 1.0)), 0.0).sum(axis=1)
            plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
            return float(np.sum((ent + plogp)[p > WEIGHT_PRUNE]))
        return float(sum(p[a] * self._pure_value(tilde[a] / np.sqrt(p[a]))
                         for a in range(len(p)) if p[a] > WEIGHT_PRUNE))

    def gradient(self, v: np.ndarray) -> np.ndarray:
        """Euclidean gradient w.r.t. V under the real inner product Re tr(A^H B)."""
        if not self.bipartite:
            return self._fd_gradient(v)
        tilde = v @ self.b
        p = np.real(np.einsum("ai,ai->a", tilde.conj(), tilde))
        mats = tilde.reshape(-1, *self.dims)
        u, s, vh = np.linalg.svd(mats, full_matrices=False)
        slog = np.where(s > 0, s * np.log(np.where(s > 0, s, 1.0) ** 2), 0.0)
        logx_m = np.einsum("aik,ak,akj->aij", u, slog, vh)
        logp = np.log(np.where(p > WEIGHT_PRUNE, p, 1.0))
        g = -2.0 * (logx_m - logp[:, None, None] * mats)
        g[p <= WEIGHT_PRUNE] = 0.0
        return g.reshape(len(p), -1) @ self.b.conj().T

    def _fd_gradient(self, v: np.ndarray, h: float = 1e-7) -> np.ndarray:
        g = np.zeros_like(v)
        for idx in np.ndindex(v.shape):
            for unit in (1.0, 1j):
                e = np.zeros_like(v)
                e[idx] = unit * h
                d = (self.value(v + e) - self.value(v - e)) / (2 * h)
                g[idx] += d * unit
        return g


def _phase(d: np.ndarray) -> np.ndarray:
    mag = np.abs(d)
    return np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)


def _retract(x: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(x)
    return q * _phase(np.diag(r))[None, :]


def _descend(obj: _Objective, v: np.ndarray, config: RoofConfig) -> tuple[np.ndarray, float, bool]:
    f = obj.value(v)
    step = 1.0
    for _ in range(config.max_iters):
        g = obj.gradient(v)
        vg = v.conj().T @ g
        xi = g - v @ ((vg + vg.conj().T) / 2)
        gnorm2 = float(np.real(np.vdot(xi, xi)))
        if gnorm2 < 1e-24:
            return v, f, True
        step = min(step * 2.0, 1e3)
        while True:
            cand = _retract(v - step * xi)
            fc = obj.value(cand)
            if fc <= f - 1e-4 * step * gnorm2 or step < 1e-14:
                break
            step *= 0.5
        if fc > f:
            return v, f, True
        converged = f - fc < config.tol
        v, f = cand, fc
        if converged:
            return v, f, True
    return v, f, False


def roof_minimize(rho: DensityMatrix, config: RoofConfig | None = None, base=2) -> RoofResult:
    """Multistart minimization of the ensemble-averaged E^c (an upper bound on the roof)."""
    config = config or RoofConfig()
    if rho.layout.total_dim > MAX_ROOF_DIM:
        raise ValueError(f"roof minimization capped at total dimension {MAX_ROOF_DIM}, "
                         f"got {rho.layout.total_dim}")
    obj = _Objective(rho)
    r = len(obj.mu)
    m = config.ensemble_size or 2 * r
    if m < r:
        raise ValueError(f"ensemble size {m} below the rank {r}")
    scale = 1.0 if _base_name(base) == "e" else 1.0 / np.log(base)

    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    starts = [np.eye(m, r, dtype=complex)]
    for ss in seeds[1:]:
        rng = np.random.default_rng(ss)
        starts.append(_retract(rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))))

    eigen_value = obj.value(starts[0]) * scale
    values, flags = [], []
    best_v, best_f = None, np.inf
    for v0 in starts:
        v, f, ok = _descend(obj, v0, config)
        values.append(f * scale)
        flags.append(ok)
        if f < best_f:
            best_v, best_f = v, f
    return RoofResult(
        value=max(0.0, best_f * scale),
        best_ensemble=ensemble_from_isometry(rho, best_v),
        restarts_used=len(starts),
        converged_flags=tuple(flags),
        restart_values=tuple(values),
        eigen_ensemble_value=eigen_value,
        ensemble_size=m,
        base=_base_name(base),
    )


def ensemble_average(ens: EnsembleDecomposition, base=2) -> float:
    return float(sum(w * entanglement_pure(s, base).value for w, s in zip(ens.weights, ens.states)))


_SIGMA_YY = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])


def concurrence(rho: DensityMatrix) -> float:
    if rho.layout.dims != (2, 2):
        raise ValueError(f"concurrence needs dims [2, 2], got {list(rho.layout.dims)}")
    # with rho = W W^H the lambdas are the singular values of W^T (Y x Y) W,
    # which avoids square roots of near-zero eigenvalues
    mu, vecs = np.linalg.eigh(_hermitize(rho.matrix))
    w = vecs * np.sqrt(np.clip(mu, 0.0, None))
    lam = np.zeros(4)
    sv = np.linalg.svd(w.T @ _SIGMA_YY @ w, compute_uv=False)
    lam[:len(sv)] = np.sort(sv)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def wootters_ef(rho: DensityMatrix, base=2) -> float:
    """Closed-form two-qubit entanglement of formation."""
    c = concurrence(rho)
    x = (1 + np.sqrt(max(0.0, 1 - c * c))) / 2
    return shannon_entropy([x, 1 - x], base)
