import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compactent.measures import (
    EREstimateConfig,
    _cross_entropy_and_grad,
    _random_params,
    correlation_information,
    entanglement_pure,
    flat_entropy,
    nested_entropy,
    nested_terms,
    relative_entropy_of_entanglement_estimate,
    verify_membership,
)
from compactent.schmidt import SeparableDecohered, compact_decomposition, decohere, enumerate_orderings
from compactent.states import (
    DensityMatrix,
    apply_local_unitary,
    haar_random_density,
    haar_random_state,
    haar_random_unitary,
    relative_entropy,
    von_neumann_entropy,
)

from conftest import vec, R2


class TestGolden:
    def test_ghz(self, ghz):
        res = entanglement_pure(ghz)
        assert res.value == pytest.approx(1.0, abs=1e-12)
        assert res.correlation_rho == pytest.approx(3.0, abs=1e-12)
        assert res.correlation_sigma == pytest.approx(2.0, abs=1e-12)

    def test_ghz_nats(self, ghz):
        assert entanglement_pure(ghz, base="e").value == pytest.approx(np.log(2), abs=1e-12)

    def test_w(self, w_state):
        res = entanglement_pure(w_state)
        assert res.value == pytest.approx(np.log2(3), abs=1e-12)
        vals = list(res.per_ordering.values())
        assert max(vals) - min(vals) <= 1e-12

    def test_four_term_maximal(self, maximal4):
        res = entanglement_pure(maximal4)
        assert res.value == pytest.approx(2.0, abs=1e-12)
        assert nested_terms(res.tree) == pytest.approx([1.0, 1.0], abs=1e-12)

    def test_product(self, plus3):
        assert entanglement_pure(plus3).value == pytest.approx(0.0, abs=1e-15)

    def test_bell_times_pure(self):
        psi = vec({"000": R2, "011": R2}, (2, 2, 2))
        res = entanglement_pure(psi)
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_argmin_is_earliest_on_ties(self, ghz):
        assert entanglement_pure(ghz).argmin_ordering == ("A", "B", "C")

    def test_single_party_rejected(self):
        with pytest.raises(ValueError):
            entanglement_pure(haar_random_state([4], 0))


class TestBipartiteReduction:
    @pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 4), (4, 4)])
    def test_matches_marginal_entropy(self, dims):
        for seed in range(20):
            psi = haar_random_state(dims, seed)
            rho_a = np.einsum("ij,kj->ik", psi.tensor, psi.tensor.conj())
            mu = np.linalg.eigvalsh(rho_a)
            mu = mu[mu > 1e-15]
            assert entanglement_pure(psi).value == pytest.approx(-np.sum(mu * np.log2(mu)), abs=1e-10)


class TestNested:
    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(2, 3), min_size=3, max_size=4), st.integers(0, 2**31))
    def test_chain_rule(self, dims, seed):
        psi = haar_random_state(dims, seed)
        for o in enumerate_orderings(psi.layout)[:4]:
            tree = compact_decomposition(psi, o)
            assert nested_entropy(tree) == pytest.approx(flat_entropy(tree), abs=1e-10)
            assert sum(nested_terms(tree)) == pytest.approx(flat_entropy(tree), abs=1e-10)


class TestInvariance:
    def test_local_unitaries(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            psi = haar_random_state([2, 3, 2], rng)
            us = [haar_random_unitary(d, rng) for d in psi.layout.dims]
            a = entanglement_pure(psi).value
            b = entanglement_pure(apply_local_unitary(psi, us)).value
            assert abs(a - b) <= 1e-9

    def test_relabeling(self):
        psi = haar_random_state([2, 2, 2], 3)
        perm = np.transpose(psi.tensor, (2, 0, 1)).reshape(-1)
        from compactent.states import PureState
        assert entanglement_pure(PureState.from_vector(perm, [2, 2, 2])).value == pytest.approx(
            entanglement_pure(psi).value, abs=1e-10)


class TestMembership:
    def test_ghz_residuals(self, ghz):
        rep = verify_membership(ghz, entanglement_pure(ghz).sigma)
        assert rep.passed()
        assert rep.relative_entropy == pytest.approx(1.0, abs=1e-12)
        assert rep.identity_residual <= 1e-12

    def test_random_all_orderings(self):
        psi = haar_random_state([2, 2, 2, 2], 1)
        for o in enumerate_orderings(psi.layout):
            rep = verify_membership(psi, decohere(compact_decomposition(psi, o)))
            assert rep.passed(1e-9), (o, rep)
            assert rep.identity_residual <= 1e-9

    def test_wrong_weights_break_marginals_and_contrast(self, ghz):
        k0 = (np.array([1, 0]),) * 3
        k1 = (np.array([0, 1]),) * 3
        sigma = SeparableDecohered(ghz.layout, np.array([0.6, 0.4]), (k0, k1))
        rep = verify_membership(ghz, sigma)
        assert rep.marginal_residual == pytest.approx(0.1, abs=1e-12)
        assert rep.contrast_line_residual == pytest.approx(0.1 * np.log2(1.5), abs=1e-12)
        assert not rep.passed()

    def test_support_violation(self, ghz):
        k0 = (np.array([1, 0]),) * 3
        rep = verify_membership(ghz, SeparableDecohered(ghz.layout, np.array([1.0]), (k0,)))
        assert not rep.support_ok and not rep.passed()

    def test_correlation_information(self, ghz):
        assert correlation_information(ghz) == pytest.approx(3.0, abs=1e-12)
        assert correlation_information(vec({"000": 1}, (2, 2, 2))) == pytest.approx(0.0, abs=1e-12)


class TestBounds:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_bounds(self, n):
        for seed in range(5):
            val = entanglement_pure(haar_random_state([2] * n, seed)).value
            assert -1e-12 <= val <= (n - 1) + 1e-12


class TestEREstimate:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        rho = haar_random_density([2, 2], rank=3, seed=2).matrix
        k, dims = 8, (2, 2)
        x = _random_params(rng, k, dims)
        f, g = _cross_entropy_and_grad(x, k, dims, rho)
        h = 1e-6
        fd = np.array([(_cross_entropy_and_grad(x + h * e, k, dims, rho)[0]
                        - _cross_entropy_and_grad(x - h * e, k, dims, rho)[0]) / (2 * h)
                       for e in np.eye(len(x))])
        assert np.max(np.abs(fd - g)) <= 1e-5 * max(1.0, np.max(np.abs(g)))

    def test_bell(self, bell):
        est = relative_entropy_of_entanglement_estimate(bell)
        assert est.value == pytest.approx(1.0, abs=1e-6)
        assert est.value <= est.compact_value + 1e-12

    def test_separable_is_zero(self):
        rho = DensityMatrix(haar_random_state([2, 2], 0).layout, np.eye(4) / 4)
        assert relative_entropy_of_entanglement_estimate(rho).value <= 1e-6

    def test_value_matches_witness(self):
        psi = haar_random_state([2, 2, 2], 4)
        est = relative_entropy_of_entanglement_estimate(psi, EREstimateConfig(restarts=2))
        assert relative_entropy(psi, est.witness.to_density()) == pytest.approx(est.value, abs=1e-9)
        assert est.value <= entanglement_pure(psi).value + 1e-9

    def test_mixed_input(self):
        rho = haar_random_density([2, 2], rank=2, seed=5)
        est = relative_entropy_of_entanglement_estimate(rho, EREstimateConfig(restarts=2))
        assert 0 <= est.value <= est.compact_value + 1e-12

    def test_cap(self):
        with pytest.raises(ValueError):
            relative_entropy_of_entanglement_estimate(haar_random_state([2] * 7, 0))
