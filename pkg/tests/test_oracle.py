"""Brute-force reference layer: transform-based stabilizer-entropy sums,
the explicit 4^N enumeration they must match, Pauli expectations, exact
Ising diagonalization, and the dual-representation Clifford fixtures."""

import numpy as np
import pytest

from mps_sre import (
    NumericGuardError,
    SizeGuardError,
    T_LOCAL,
    clifford_fixtures,
    ed_ground_state,
    ising_dense_hamiltonian,
    pauli_expectation_statevector,
    statevector_sre,
    statevector_sre_reference,
)
from mps_sre.oracle import apply_gate_statevector, ising_sparse_hamiltonian
from mps_sre.paulis import HADAMARD, PauliString

# Single-site magic of the pi/8 eigenstate: expectations (1, 1/sqrt2,
# 1/sqrt2, 0) give sum/2 = 3/4 at order 2 and 5/8 at order 3.
T_SINGLE_M2 = float(np.log(4.0 / 3.0))  # 0.2876820724517809
T_SINGLE_M3 = 0.5 * float(np.log(8.0 / 5.0))  # 0.2350018146228678


def t_state_vector(n_sites: int) -> np.ndarray:
    acc = np.array([1.0 + 0.0j])
    for _ in range(n_sites):
        acc = np.kron(acc, T_LOCAL)
    return acc


def random_state(n_sites: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2**n_sites) + 1j * rng.standard_normal(2**n_sites)
    return v / np.linalg.norm(v)


class TestStatevectorSre:
    def test_single_t_state_frozen(self):
        assert abs(statevector_sre(T_LOCAL.copy(), n=2) - T_SINGLE_M2) < 1e-13
        assert abs(statevector_sre(T_LOCAL.copy(), n=3) - T_SINGLE_M3) < 1e-13

    @pytest.mark.parametrize("n_sites", [1, 3, 5])
    def test_t_products_additive(self, n_sites):
        vec = t_state_vector(n_sites)
        assert abs(statevector_sre(vec, n=2) - n_sites * T_SINGLE_M2) < 1e-11
        assert abs(statevector_sre(vec, n=3) - n_sites * T_SINGLE_M3) < 1e-11

    def test_stabilizer_states_vanish(self):
        zero = np.zeros(2**5)
        zero[0] = 1.0
        assert abs(statevector_sre(zero, n=2)) < 1e-12
        ghz = np.zeros(2**4)
        ghz[0] = ghz[-1] = 1.0 / np.sqrt(2.0)
        assert abs(statevector_sre(ghz, n=2)) < 1e-12
        assert abs(statevector_sre(ghz, n=3)) < 1e-12
        plus = np.full(2**3, 1.0 / np.sqrt(2.0**3))
        assert abs(statevector_sre(plus, n=2)) < 1e-12

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_explicit_enumeration(self, n, seed):
        vec = random_state(4, seed)
        fast = statevector_sre(vec, n=n)
        slow = statevector_sre_reference(vec, n=n)
        assert abs(fast - slow) < 1e-11

    def test_sre_nonnegative_random(self):
        for seed in range(5):
            assert statevector_sre(random_state(5, seed), n=2) > 0.0

    def test_global_phase_invariance(self):
        vec = random_state(4, 7)
        rotated = vec * np.exp(0.3j)
        assert abs(statevector_sre(vec) - statevector_sre(rotated)) < 1e-12

    def test_rejects_low_order(self):
        with pytest.raises(ValueError):
            statevector_sre(T_LOCAL.copy(), n=1)

    def test_rejects_unnormalized(self):
        with pytest.raises(NumericGuardError):
            statevector_sre(2.0 * T_LOCAL)

    def test_rejects_bad_length(self):
        with pytest.raises(SizeGuardError):
            statevector_sre(np.ones(6) / np.sqrt(6.0))


class TestPauliExpectation:
    def test_matches_dense_kron(self):
        vec = random_state(4, 11)
        rng = np.random.default_rng(0)
        for _ in range(10):
            p = PauliString.from_index(int(rng.integers(4**4)), 4)
            dense = np.array([[1.0 + 0.0j]])
            for m in p.matrices():
                dense = np.kron(dense, m)
            expected = np.vdot(vec, dense @ vec).real
            assert abs(pauli_expectation_statevector(vec, p) - expected) < 1e-12

    def test_accepts_label(self):
        ghz = np.zeros(2**3)
        ghz[0] = ghz[-1] = 1.0 / np.sqrt(2.0)
        assert abs(pauli_expectation_statevector(ghz, "XXX") - 1.0) < 1e-13
        assert abs(pauli_expectation_statevector(ghz, "ZZI") - 1.0) < 1e-13

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            pauli_expectation_statevector(random_state(3, 0), "XX")


class TestIsingHamiltonians:
    def test_dense_two_site_spectrum(self):
        # two sites at the self-dual point: ground energy -sqrt(5)
        ham = ising_dense_hamiltonian(2, 1.0)
        vals = np.linalg.eigvalsh(ham)
        assert abs(vals[0] + np.sqrt(5.0)) < 1e-12

    def test_dense_structure(self):
        ham = ising_dense_hamiltonian(3, 0.7)
        np.testing.assert_allclose(ham, ham.T, atol=1e-15)
        # diagonal carries only the field part
        assert abs(ham[0, 0] + 0.7 * 3) < 1e-14

    @pytest.mark.parametrize("n_sites,h", [(2, 0.3), (5, 1.0), (7, 2.5)])
    def test_sparse_matches_dense(self, n_sites, h):
        dense = ising_dense_hamiltonian(n_sites, h)
        sparse = ising_sparse_hamiltonian(n_sites, h)
        np.testing.assert_allclose(sparse.toarray(), dense, atol=1e-13)

    def test_dense_size_guard(self):
        with pytest.raises(SizeGuardError):
            ising_dense_hamiltonian(13, 1.0)


class TestExactGroundState:
    def test_two_site_frozen_energy(self):
        energy, vec = ed_ground_state(2, 1.0)
        assert abs(energy + np.sqrt(5.0)) < 1e-12
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-12

    def test_zero_field_energy(self):
        for n_sites in (2, 4, 6):
            energy, _ = ed_ground_state(n_sites, 0.0)
            assert abs(energy + (n_sites - 1)) < 1e-10

    def test_large_field_product_limit(self):
        energy, vec = ed_ground_state(4, 50.0)
        # leading order -hN with an O(1/h) dimer correction
        assert abs(energy + 4 * 50.0) < 1.0
        # state is nearly |0000> in the field basis
        assert abs(vec[0]) > 0.999

    def test_eigenpair_residual(self):
        energy, vec = ed_ground_state(8, 1.0)
        ham = ising_sparse_hamiltonian(8, 1.0)
        resid = np.linalg.norm(ham @ vec - energy * vec)
        assert resid < 1e-9

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            ed_ground_state(15, 1.0)

    def test_critical_magic_density_frozen(self):
        # N=8 self-dual chain: independently recomputed reference density
        energy, vec = ed_ground_state(8, 1.0)
        m = statevector_sre(vec, n=2) / 8
        assert abs(m - statevector_sre_reference(vec, n=2) / 8) < 1e-12
        assert 0.1 < m < 0.4


class TestGateApplication:
    def test_single_gate_matches_kron(self):
        vec = random_state(4, 3)
        expected = np.kron(
            np.kron(np.eye(2), HADAMARD), np.eye(4)
        ) @ vec
        got = apply_gate_statevector(vec, HADAMARD, 1, 4)
        np.testing.assert_allclose(got, expected, atol=1e-13)


class TestCliffordFixtures:
    @pytest.mark.parametrize("seed", [0, 1, 5])
    def test_dense_and_mps_agree(self, seed):
        vec, psi = clifford_fixtures(seed, n_sites=6, depth=6)
        np.testing.assert_allclose(psi.to_statevector(), vec, atol=1e-10)

    @pytest.mark.parametrize("seed", [0, 3])
    def test_clifford_orbit_stays_stabilizer(self, seed):
        vec, _ = clifford_fixtures(seed, n_sites=5, depth=8)
        assert abs(statevector_sre(vec, n=2)) < 1e-10
        assert abs(statevector_sre(vec, n=3)) < 1e-10

    def test_bond_cap_respected(self):
        _, psi = clifford_fixtures(2, n_sites=8, depth=10, max_chi=4)
        assert psi.max_bond <= 4

    def test_deterministic(self):
        vec1, _ = clifford_fixtures(9, n_sites=5, depth=5)
        vec2, _ = clifford_fixtures(9, n_sites=5, depth=5)
        np.testing.assert_array_equal(vec1, vec2)
