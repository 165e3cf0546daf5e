"""Transverse-field Ising machinery: MPO correctness, variational ground
states against exact diagonalization, warm starts, convergence policy,
and the energy-variance diagnostic."""

import numpy as np
import pytest

from mps_sre import (
    ConfigError,
    ConvergenceError,
    DmrgConfig,
    build_ising_mpo,
    dmrg_ground_state,
    ed_ground_state,
    energy_variance,
    expectation_mpo,
    fidelity,
    from_statevector,
    ising_dense_hamiltonian,
    mpo_dense,
    random_mps,
    write_dmrg_log,
)
from mps_sre.ising import DMRG_CSV_HEADER

TIGHT = DmrgConfig(chi_max=16, cutoff=1e-14, tol=1e-12, max_sweeps=40)


class TestMpo:
    @pytest.mark.parametrize("n_sites,h", [(2, 1.0), (4, 0.3), (6, 2.0), (8, 1.0)])
    def test_dense_form_matches_hamiltonian(self, n_sites, h):
        dense = mpo_dense(build_ising_mpo(n_sites, h))
        np.testing.assert_allclose(
            dense, ising_dense_hamiltonian(n_sites, h), atol=1e-12
        )

    def test_bond_structure(self):
        mpo = build_ising_mpo(5, 1.0)
        assert mpo[0].shape == (1, 2, 2, 3)
        assert all(w.shape == (3, 2, 2, 3) for w in mpo[1:-1])
        assert mpo[-1].shape == (3, 2, 2, 1)

    def test_minimum_length(self):
        with pytest.raises(ValueError):
            build_ising_mpo(1, 1.0)

    def test_expectation_matches_dense(self):
        psi = random_mps(6, 4, seed=3, normalized=False)
        mpo = build_ising_mpo(6, 0.8)
        vec = psi.to_statevector()
        expected = (
            np.vdot(vec, ising_dense_hamiltonian(6, 0.8) @ vec).real
            / np.vdot(vec, vec).real
        )
        assert abs(expectation_mpo(psi, mpo) - expected) < 1e-10


class TestGroundState:
    @pytest.mark.parametrize("h", [0.5, 1.0, 1.5])
    def test_matches_exact_diagonalization(self, h):
        n_sites = 10
        exact_e, exact_vec = ed_ground_state(n_sites, h)
        result = dmrg_ground_state(n_sites, h, TIGHT)
        assert result.converged
        assert abs(result.energy - exact_e) < 1e-9
        exact_mps = from_statevector(exact_vec, cutoff=1e-14)
        assert 1.0 - fidelity(result.psi, exact_mps) < 1e-9

    def test_frozen_two_site_energy(self):
        result = dmrg_ground_state(2, 1.0, DmrgConfig(chi_max=2, tol=1e-13))
        assert abs(result.energy + np.sqrt(5.0)) < 1e-10

    def test_zero_field_bond_counting(self):
        result = dmrg_ground_state(8, 0.0, TIGHT)
        assert abs(result.energy + 7.0) < 1e-9

    def test_energy_is_variational_in_chi(self):
        exact_e, _ = ed_ground_state(12, 1.0)
        energies = []
        for chi in (2, 4, 8):
            cfg = DmrgConfig(chi_max=chi, cutoff=0.0, tol=1e-12, max_sweeps=40)
            energies.append(dmrg_ground_state(12, 1.0, cfg).energy)
        # each bond cap can only help; allow solver-tolerance slack
        assert energies[1] <= energies[0] + 1e-9
        assert energies[2] <= energies[1] + 1e-9
        assert all(e >= exact_e - 1e-10 for e in energies)

    def test_warm_start_accepted_and_faster(self):
        cold = dmrg_ground_state(12, 0.95, TIGHT)
        warm = dmrg_ground_state(12, 1.0, TIGHT, initial=cold.psi)
        cold_at_target = dmrg_ground_state(12, 1.0, TIGHT)
        assert abs(warm.energy - cold_at_target.energy) < 1e-10
        assert len(warm.sweeps) <= len(cold_at_target.sweeps)

    def test_warm_start_shape_guard(self):
        prev = dmrg_ground_state(4, 1.0, DmrgConfig(tol=1e-10))
        with pytest.raises(ValueError):
            dmrg_ground_state(6, 1.0, initial=prev.psi)

    def test_unconverged_raises_with_best_attached(self):
        cfg = DmrgConfig(chi_max=8, tol=1e-15, max_sweeps=2, min_sweeps=1)
        with pytest.raises(ConvergenceError) as err:
            dmrg_ground_state(14, 1.0, cfg)
        best = err.value.best
        assert best is not None and not best.converged
        assert len(best.sweeps) == 2
        # even the unconverged pass should be close at this size
        exact_e, _ = ed_ground_state(14, 1.0)
        assert abs(best.energy - exact_e) < 1e-3

    def test_deterministic(self):
        a = dmrg_ground_state(8, 1.0, TIGHT)
        b = dmrg_ground_state(8, 1.0, TIGHT)
        assert a.energy == b.energy
        for ta, tb in zip(a.psi.tensors, b.psi.tensors):
            np.testing.assert_array_equal(ta, tb)


class TestDiagnostics:
    def test_energy_variance_small_for_ground_state(self):
        result = dmrg_ground_state(8, 1.0, TIGHT)
        mpo = build_ising_mpo(8, 1.0)
        assert abs(energy_variance(result.psi, mpo)) < 1e-8

    def test_energy_variance_matches_dense(self):
        psi = random_mps(5, 3, seed=9)
        mpo = build_ising_mpo(5, 1.3)
        ham = ising_dense_hamiltonian(5, 1.3)
        vec = psi.to_statevector()
        vec = vec / np.linalg.norm(vec)
        e = np.vdot(vec, ham @ vec).real
        h2 = np.vdot(vec, ham @ (ham @ vec)).real
        assert abs(energy_variance(psi, mpo) - (h2 - e * e)) < 1e-9

    def test_sweep_log_file(self, tmp_path):
        result = dmrg_ground_state(6, 1.0, DmrgConfig(tol=1e-11))
        path = tmp_path / "sweeps.csv"
        write_dmrg_log(path, result)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == DMRG_CSV_HEADER
        assert len(lines) == 1 + len(result.sweeps)
        assert lines[1].startswith("1,")


class TestConfigValidation:
    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            DmrgConfig(chi_max=1)
        with pytest.raises(ConfigError):
            DmrgConfig(cutoff=1.5)
        with pytest.raises(ConfigError):
            DmrgConfig(tol=0.0)
        with pytest.raises(ConfigError):
            DmrgConfig(min_sweeps=5, max_sweeps=3)
