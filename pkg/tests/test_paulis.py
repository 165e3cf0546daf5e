"""Pauli strings and the per-site replica channel matrix."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mps_sre import PauliString, build_lambda, factor_gamma, replica_phys_dim
from mps_sre.errors import VariantError
from mps_sre.paulis import CNOT, HADAMARD, PAULIS, PHASE_S, pauli_matrix, pauli_string_matrix


class TestSingleQubit:
    def test_pauli_matrices_are_the_textbook_ones(self):
        np.testing.assert_array_equal(PAULIS[0], np.eye(2))
        np.testing.assert_array_equal(PAULIS[1], [[0, 1], [1, 0]])
        np.testing.assert_array_equal(PAULIS[2], [[0, -1j], [1j, 0]])
        np.testing.assert_array_equal(PAULIS[3], [[1, 0], [0, -1]])

    def test_cliffords(self):
        np.testing.assert_allclose(HADAMARD @ HADAMARD, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(PHASE_S @ PHASE_S, PAULIS[3], atol=1e-15)
        np.testing.assert_allclose(CNOT @ CNOT, np.eye(4), atol=1e-15)
        # control is the first (most significant) qubit
        np.testing.assert_array_equal(CNOT @ np.eye(4)[2], np.eye(4)[3])
        np.testing.assert_array_equal(CNOT @ np.eye(4)[1], np.eye(4)[1])

    def test_pauli_matrix_range(self):
        with pytest.raises(ValueError):
            pauli_matrix(4)


class TestPauliString:
    def test_label_roundtrip(self):
        p = PauliString.from_label("XZIY")
        assert str(p) == "XZIY"
        assert len(p) == 4

    @given(st.integers(1, 6), st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_index_roundtrip(self, n_sites, seed):
        index = seed % (4**n_sites)
        p = PauliString.from_index(index, n_sites)
        assert p.to_index() == index
        assert PauliString.from_label(str(p)) == p

    def test_site_one_is_most_significant(self):
        # index of "XI" should be 4 (X=1 at the most significant position)
        assert PauliString.from_label("XI").to_index() == 4
        assert PauliString.from_label("IX").to_index() == 1

    def test_matrix_is_kron_in_site_order(self, rng):
        p = PauliString.from_label("XZ")
        want = np.kron(PAULIS[1], PAULIS[3])
        np.testing.assert_array_equal(pauli_string_matrix(p), want)

    def test_matrix_unitary_hermitian(self, rng):
        p = PauliString.from_index(int(rng.integers(0, 4**4)), 4)
        m = pauli_string_matrix(p)
        np.testing.assert_allclose(m @ m, np.eye(16), atol=1e-14)
        np.testing.assert_allclose(m, m.conj().T, atol=1e-14)


class TestReplicaChannel:
    def test_phys_dims(self):
        assert [replica_phys_dim(n) for n in (2, 3, 4)] == [4, 16, 64]
        with pytest.raises(VariantError):
            replica_phys_dim(1)

    @pytest.mark.parametrize(
        "n,variant", [(2, "conjugated"), (3, "conjugated"), (2, "symmetric")]
    )
    def test_lambda_algebra(self, n, variant):
        lam = build_lambda(n, variant)
        dim = 4**n
        assert lam.shape == (dim, dim)
        assert not np.iscomplexobj(lam)
        np.testing.assert_allclose(lam, lam.T, atol=1e-12)
        # projector-like algebra: Lambda^2 = 2 Lambda, rank 4^(n-1)
        np.testing.assert_allclose(lam @ lam, 2.0 * lam, atol=1e-10)
        assert np.linalg.matrix_rank(lam, tol=1e-8) == 4 ** (n - 1)
        evals = np.linalg.eigvalsh(lam)
        assert evals.min() > -1e-10

    def test_symmetric_variant_rejected_for_odd_order(self):
        with pytest.raises(VariantError):
            build_lambda(3, "symmetric")

    @pytest.mark.parametrize(
        "n,variant", [(2, "conjugated"), (3, "conjugated"), (2, "symmetric")]
    )
    def test_gamma_factorization(self, n, variant):
        lam = build_lambda(n, variant)
        gamma = factor_gamma(lam)
        assert gamma.shape == (4 ** (n - 1), 4**n)
        assert not np.iscomplexobj(gamma)
        np.testing.assert_allclose(gamma.T @ gamma, lam, atol=1e-10)

    def test_gamma_deterministic(self):
        a = factor_gamma(build_lambda(2, "conjugated"))
        b = factor_gamma(build_lambda(2, "conjugated"))
        np.testing.assert_array_equal(a, b)
