"""Study-layer pieces in isolation: basis rotations, cached sweeps, peak
extraction and refinement, power-law and linear fits, data collapse, and
the single-qubit entropy minimizer."""

import numpy as np
import pytest

from mps_sre import (
    BracketError,
    DegenerateFitError,
    DmrgConfig,
    GroundStateCache,
    MPS,
    SweepRecord,
    T_LOCAL,
    basis_rotation,
    collapse,
    collapse_quality,
    euler_rotation,
    evaluate_point,
    extract_linear,
    find_peak,
    fit_log,
    fit_power_offset,
    from_statevector,
    ghz_state,
    minimize_magic,
    mps_sum,
    NumericGuardError,
    parity_project,
    product_state,
    random_mps,
    refine_peak,
    rotate_mps,
    rotated_sweep,
    scan_gamma,
    sre,
    statevector_sre,
    sweep_density,
)
from mps_sre.paulis import PAULIS


class TestBasisRotations:
    def test_axis_zero_is_exact_identity(self):
        rot = basis_rotation(0)
        assert rot.is_identity
        np.testing.assert_array_equal(rot.matrix, np.eye(2))
        psi = random_mps(4, 2, seed=0)
        assert rotate_mps(psi, rot) is psi

    @pytest.mark.parametrize("axis", ["x", "y", "z"])
    def test_eighth_turn_matrices(self, axis):
        rot = basis_rotation(axis)
        sigma = PAULIS["xyz".index(axis) + 1]
        expected = (
            np.cos(np.pi / 8) * np.eye(2) - 1j * np.sin(np.pi / 8) * sigma
        )
        if axis == "y":
            # implemented real (the phase convention drops the i)
            assert np.isrealobj(rot.matrix)
        np.testing.assert_allclose(rot.matrix, expected, atol=1e-14)
        assert not rot.is_identity

    def test_integer_axis_aliases(self):
        for k, label in ((1, "x"), (2, "y"), (3, "z")):
            np.testing.assert_array_equal(
                basis_rotation(k).matrix, basis_rotation(label).matrix
            )

    def test_unknown_axis(self):
        with pytest.raises(ValueError):
            basis_rotation("w")

    def test_euler_composition(self):
        rot = euler_rotation(0.3, 0.7, -0.2)
        v = rot.matrix
        np.testing.assert_allclose(v.conj().T @ v, np.eye(2), atol=1e-13)
        assert rot.angles == (0.3, 0.7, -0.2)
        # zero angles give the identity up to phase
        v0 = euler_rotation(0.0, 0.0, 0.0).matrix
        np.testing.assert_allclose(v0, np.eye(2), atol=1e-14)

    def test_rotation_changes_entropy_of_t_state(self):
        # the pi/8 eigenstate is one z-eighth-turn away from a stabilizer
        # eigenstate direction, so rotations move its entropy
        psi = product_state(T_LOCAL, n_sites=3)
        m0 = sre(psi).m
        mz = sre(rotate_mps(psi, basis_rotation("z")), n=2).m
        assert abs(m0 - mz) > 1e-3


class TestPeaks:
    def test_exact_on_parabola(self):
        xs = np.linspace(-1.0, 3.0, 9)
        ys = -2.0 * (xs - 0.8) ** 2 + 1.5
        x0, y0 = find_peak(xs, ys, kind="max")
        assert abs(x0 - 0.8) < 1e-12
        assert abs(y0 - 1.5) < 1e-12

    def test_minimum_kind(self):
        xs = np.linspace(0.0, 2.0, 11)
        ys = 3.0 * (xs - 1.1) ** 2 - 0.4
        x0, y0 = find_peak(xs, ys, kind="min")
        assert abs(x0 - 1.1) < 1e-12
        assert abs(y0 + 0.4) < 1e-12

    def test_edge_peak_raises(self):
        xs = np.linspace(0.0, 1.0, 6)
        with pytest.raises(BracketError):
            find_peak(xs, xs**2, kind="max")

    def test_needs_five_points(self):
        with pytest.raises(ValueError):
            find_peak([0, 1, 2, 3], [0, 1, 0, -1])

    def test_unsorted_input_handled(self):
        xs = np.array([2.0, 0.0, 1.0, 3.0, 4.0, -1.0])
        ys = -((xs - 1.7) ** 2)
        x0, _ = find_peak(xs, ys)
        assert abs(x0 - 1.7) < 1e-12

    def test_refine_narrows_bracket(self):
        calls = []

        def fun(x):
            calls.append(x)
            return -((x - 0.637) ** 2)

        x0, y0 = refine_peak(fun, 0.0, 0.5, 1.0, kind="max", evals=10)
        assert abs(x0 - 0.637) < 5e-3
        assert len(calls) == 10

    def test_refine_minimum(self):
        x0, _ = refine_peak(lambda x: (x - 2.25) ** 2, 1.0, 2.0, 3.0, kind="min", evals=12)
        assert abs(x0 - 2.25) < 5e-3


class TestFits:
    def test_power_offset_recovery(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            c = rng.uniform(0.5, 3.0)
            eta = rng.uniform(0.4, 1.6)
            b = rng.uniform(-1.0, 1.0)
            ns = np.array([8, 16, 24, 40, 64, 96], dtype=float)
            ys = c * ns ** (-eta) + b
            fit = fit_power_offset(ns, ys)
            assert abs(fit.c - c) < 1e-6
            assert abs(fit.eta - eta) < 1e-6
            assert abs(fit.b - b) < 1e-6
            assert fit.residual < 1e-8

    def test_power_offset_noise_errorbars(self):
        rng = np.random.default_rng(7)
        ns = np.array([10, 20, 40, 80, 160, 320], dtype=float)
        ys = 2.0 * ns**-1.0 + 0.3 + rng.normal(scale=1e-4, size=ns.size)
        fit = fit_power_offset(ns, ys)
        assert abs(fit.b - 0.3) < 5 * max(fit.stderr_b, 1e-4)
        assert fit.stderr_b > 0

    def test_power_offset_degenerate(self):
        ns = np.array([10, 20, 30, 40], dtype=float)
        with pytest.raises(DegenerateFitError):
            fit_power_offset(ns, np.full(4, 0.25))

    def test_power_offset_input_guards(self):
        with pytest.raises(ValueError):
            fit_power_offset([1, 2, 3], [1, 2, 3])
        with pytest.raises(ValueError):
            fit_power_offset([1, 3, 2, 4], [1, 2, 3, 4])

    def test_linear_decomposition_exact(self):
        # collinear: M(N) = 0.31 N - 0.7
        lin = extract_linear(40, 4, 0.31 * 36 - 0.7, 0.31 * 40 - 0.7, 0.31 * 44 - 0.7)
        assert abs(lin.D_N - 0.31) < 1e-13
        assert abs(lin.c_N + 0.7) < 1e-12
        assert lin.n_sites == 40 and lin.delta_n == 4

    def test_linear_decomposition_guard(self):
        with pytest.raises(ValueError):
            extract_linear(40, 0, 1.0, 2.0, 3.0)

    def test_fit_log(self):
        ns = np.array([8, 16, 32, 64], dtype=float)
        ys = 1.3 * np.log(ns) - 0.2
        a, b = fit_log(ns, ys)
        assert abs(a - 1.3) < 1e-12
        assert abs(b + 0.2) < 1e-12


def synthetic_records(sizes, gamma=0.85, nu=1.0, h0=1.0, window=0.1, npts=15):
    """Curves drawn from one scaling function, exactly collapsible."""
    records = []
    peaks = {}
    for n_sites in sizes:
        hs = np.linspace(h0 - window, h0 + window, npts)
        x = (hs - h0) * n_sites ** (1.0 / nu)
        # Piecewise-linear scaling shape: resampling curves onto a shared
        # grid by linear interpolation then reproduces it exactly, so a
        # perfect collapse really scores zero.
        y = -np.abs(x)
        ms = 0.3 + y / n_sites**gamma
        for h, m in zip(hs, ms):
            records.append(
                SweepRecord(
                    h=float(h), n_sites=n_sites, chi=6, n=2, basis="0",
                    M=float(m * n_sites), m=float(m), diagnostics={},
                )
            )
        peaks[n_sites] = (h0, 0.3)
    return records, peaks


class TestCollapse:
    def test_perfect_collapse_scores_zero(self):
        records, peaks = synthetic_records([20, 40, 80])
        curves = collapse(records, peaks, gamma=0.85)
        assert collapse_quality(curves) < 1e-12

    def test_wrong_exponent_scores_worse(self):
        records, peaks = synthetic_records([20, 40, 80])
        good = collapse_quality(collapse(records, peaks, gamma=0.85))
        bad = collapse_quality(collapse(records, peaks, gamma=0.5))
        assert bad > good + 1e-6

    def test_scan_recovers_exponent(self):
        records, peaks = synthetic_records([20, 40, 80])
        grid = np.linspace(0.5, 1.2, 15)
        gammas, scores, best = scan_gamma(records, peaks, grid)
        assert gammas.shape == scores.shape == (15,)
        assert abs(best - 0.85) < 0.051  # nearest grid point

    def test_missing_peak_raises(self):
        records, peaks = synthetic_records([20, 40])
        del peaks[40]
        with pytest.raises(ValueError):
            collapse(records, peaks, gamma=0.85)

    def test_disjoint_windows_score_infinite(self):
        curves = {
            1: (np.array([0.0, 1.0]), np.array([0.0, 0.0])),
            2: (np.array([2.0, 3.0]), np.array([0.0, 0.0])),
        }
        assert collapse_quality(curves) == float("inf")


class TestMinimizer:
    def test_t_product_reaches_stabilizer(self):
        psi = product_state(T_LOCAL, n_sites=4)
        res = minimize_magic(psi, restarts=3, seed=0)
        assert res.m_min < 1e-6
        assert res.m_unrotated > 0.25
        assert res.evaluations > 0
        # the reported rotation actually achieves the reported value
        check = sre(rotate_mps(psi, res.rotation)).m
        assert abs(check - res.m_min) < 1e-9

    def test_never_worse_than_identity(self):
        psi = random_mps(5, 3, seed=13)
        res = minimize_magic(psi, restarts=2, seed=1, maxiter=40)
        assert res.m_min <= res.m_unrotated + 1e-12

    def test_stabilizer_state_stays_put(self):
        res = minimize_magic(ghz_state(4), restarts=2, seed=0, maxiter=30)
        assert res.m_min < 1e-9

    def test_pre_rotation_invariance(self):
        # minimizing after an extra uniform rotation lands at the same value
        psi = product_state(T_LOCAL, n_sites=3)
        twisted = rotate_mps(psi, euler_rotation(0.4, 0.9, -0.3))
        a = minimize_magic(psi, restarts=4, seed=2, maxiter=200)
        b = minimize_magic(twisted, restarts=4, seed=2, maxiter=200)
        assert abs(a.m_min - b.m_min) < 1e-6

    def test_restart_guard(self):
        with pytest.raises(ValueError):
            minimize_magic(ghz_state(3), restarts=0)


class TestSweeps:
    CFG = DmrgConfig(chi_max=6, cutoff=1e-12, tol=1e-10)

    def test_cache_reuses_states(self):
        cache = GroundStateCache(self.CFG)
        a = cache.ground_state(8, 1.0)
        b = cache.ground_state(8, 1.0)
        assert a is b

    def test_evaluate_point_fields(self):
        cache = GroundStateCache(self.CFG)
        rec = evaluate_point(cache, 8, 1.0, 4, 2, None, basis_rotation(0))
        assert rec.n_sites == 8 and rec.h == 1.0 and rec.basis == "0"
        assert abs(rec.m - rec.M / 8) < 1e-15
        assert rec.chi <= 4
        assert rec.diagnostics["dmrg_converged"]
        assert "m_lower_chi" in rec.diagnostics
        assert isinstance(rec.diagnostics["chi_flagged"], bool)

    def test_sweep_matches_brute_force(self):
        # chi 8 keeps a 6-site state exact (Schmidt rank <= 8), so the
        # sweep must agree with the dense reference; larger chi would
        # only inflate the replica ladder's memory footprint.
        cache = GroundStateCache(DmrgConfig(chi_max=8, cutoff=1e-14, tol=1e-12))
        records = sweep_density([0.6, 1.0, 1.4], [6], cache=cache, chi_sre=8)
        from mps_sre import ed_ground_state

        for rec in records:
            _, vec = ed_ground_state(6, rec.h)
            assert abs(rec.m - statevector_sre(vec, n=2) / 6) < 1e-8

    def test_rotated_identity_matches_plain(self):
        cache = GroundStateCache(self.CFG)
        plain = sweep_density([0.9, 1.1], [6], cache=cache, chi_sre=4)
        rot = rotated_sweep([0.9, 1.1], [6], basis_rotation(0), cache=cache, chi_sre=4)
        for a, b in zip(plain, rot):
            assert a.h == b.h and a.m == b.m

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            sweep_density([], [8])

    def test_state_prep_identity_hook(self):
        cache = GroundStateCache(self.CFG)
        raw = evaluate_point(cache, 8, 1.0, 4, 2, None, basis_rotation(0))
        hooked = evaluate_point(
            cache, 8, 1.0, 4, 2, None, basis_rotation(0), state_prep=lambda p: p
        )
        assert hooked.m == raw.m
        assert hooked.diagnostics["m_lower_chi"] == raw.diagnostics["m_lower_chi"]

    def test_state_prep_commutes_with_truncation(self):
        # rotating every site before truncation must match rotating after:
        # one-site unitaries leave every Schmidt spectrum alone
        cache = GroundStateCache(self.CFG)
        rot = basis_rotation("y")
        direct = evaluate_point(cache, 8, 0.9, 4, 2, None, rot)
        via_prep = evaluate_point(
            cache, 8, 0.9, 4, 2, None, basis_rotation(0),
            state_prep=lambda p: p.apply_one_site(rot.matrix),
        )
        assert abs(via_prep.m - direct.m) < 1e-10

    def test_projection_prep_noop_when_symmetric(self):
        # far above the critical field the ground state already sits in the
        # flip-even sector, so the projection hook cannot move the density
        cache = GroundStateCache(self.CFG)
        raw = evaluate_point(cache, 8, 1.5, 4, 2, None, basis_rotation("y"))
        proj = evaluate_point(
            cache, 8, 1.5, 4, 2, None, basis_rotation("y"),
            state_prep=parity_project,
        )
        assert abs(proj.m - raw.m) < 1e-8


class TestParityProjection:
    def test_plus_product_becomes_flip_even_cat(self):
        plus = product_state(np.array([1.0, 1.0]) / np.sqrt(2.0), n_sites=4)
        minus = product_state(np.array([1.0, -1.0]) / np.sqrt(2.0), n_sites=4)
        out = parity_project(plus)
        assert abs(out.norm_squared() - 1.0) < 1e-12
        cat = mps_sum(plus, minus)
        ov = out.overlap(cat) / np.sqrt(cat.norm_squared())
        assert abs(abs(ov) - 1.0) < 1e-10

    def test_even_state_is_fixed_point(self):
        psi = ghz_state(4)
        out = parity_project(psi)
        assert abs(abs(out.overlap(psi)) - 1.0) < 1e-12
        assert abs(out.expectation_pauli("ZZZZ") - 1.0) < 1e-10

    def test_odd_sector_selects_component(self):
        plus = product_state(np.array([1.0, 1.0]) / np.sqrt(2.0), n_sites=3)
        out = parity_project(plus, sector=-1)
        assert abs(out.norm_squared() - 1.0) < 1e-12
        assert abs(out.expectation_pauli("ZZZ") + 1.0) < 1e-10

    def test_empty_sector_raises(self):
        odd = product_state(np.array([0.0, 1.0]), n_sites=3)
        with pytest.raises(NumericGuardError):
            parity_project(odd, sector=1)

    def test_rejects_non_involution(self):
        with pytest.raises(ValueError):
            parity_project(ghz_state(3), v=np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_bad_sector(self):
        with pytest.raises(ValueError):
            parity_project(ghz_state(3), sector=0)

    def test_branch_mixture_restored(self):
        # lopsided superposition of the two flip-related product branches,
        # as a degenerate optimizer might return it; projecting onto the
        # even sector of the flip string recovers the symmetric cat
        vec = np.zeros(16)
        vec[0], vec[-1] = 0.8, 0.6
        mixed = from_statevector(vec)
        flip = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = parity_project(mixed, v=flip)
        assert abs(abs(out.overlap(ghz_state(4))) - 1.0) < 1e-10
