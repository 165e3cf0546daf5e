"""Command-line surface: each subcommand's stdout contract, the study
bundle on disk, config validation messages, and exit-code mapping."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from mps_sre import (
    ConvergenceError,
    T_LOCAL,
    ed_ground_state,
    product_state,
    random_mps,
    save_mps,
    sre,
    statevector_sre,
)
from mps_sre.cli import main
from conftest import CONFIG_DIR, PKG_ROOT, fnum, read_csv

BUNDLE_FILES = [
    "records.csv",
    "peaks.csv",
    "fits.csv",
    "linear_fits.csv",
    "fig1a_collapse.csv",
    "fig1bc_DN_cN.csv",
    "fig2_bases.csv",
    "fig3_minmagic.csv",
    "collapse_scan.csv",
    "resolved_config.json",
    "run_info.json",
]


class TestSreExact:
    def test_ghz_fixture(self, capsys):
        assert main(["sre-exact", "--fixture", "ghz", "--sites", "6"]) == 0
        assert capsys.readouterr().out.strip() == "M = 0.000000"

    def test_tstate_fixture(self, capsys):
        assert main(["sre-exact", "--fixture", "tstate", "--sites", "1"]) == 0
        assert capsys.readouterr().out.strip() == "M = 0.287682"

    def test_zero_fixture_higher_order(self, capsys):
        assert main(["sre-exact", "--fixture", "zero", "--sites", "4", "--n", "3"]) == 0
        assert capsys.readouterr().out.strip() == "M = 0.000000"

    def test_state_file(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        vec = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        vec /= np.linalg.norm(vec)
        path = tmp_path / "state.npy"
        np.save(path, vec)
        assert main(["sre-exact", "--state", str(path)]) == 0
        out = capsys.readouterr().out.strip()
        assert out == f"M = {statevector_sre(vec, n=2):.6f}"

    def test_low_order_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sre-exact", "--fixture", "ghz", "--n", "1"])
        assert exc.value.code == 2

    def test_unnormalized_state_exit_three(self, tmp_path, capsys):
        path = tmp_path / "big.npy"
        np.save(path, 2.0 * np.array([1.0, 0.0], dtype=complex))
        assert main(["sre-exact", "--state", str(path)]) == 3
        assert "numeric guard" in capsys.readouterr().err


class TestSreMps:
    def test_row_and_optional_csv(self, tmp_path, capsys):
        psi = random_mps(6, 3, seed=17)
        mps_path = tmp_path / "state.npz"
        save_mps(mps_path, psi)
        csv_path = tmp_path / "rows.csv"
        code = main(["sre-mps", "--mps", str(mps_path), "--out", str(csv_path)])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "n,N,chi,variant,M,m,log_replica_norm,log_state_norm,gap_ratio"
        fields = lines[1].split(",")
        expected = sre(psi)
        assert fields[0] == "2" and fields[1] == "6"
        assert abs(float(fields[4]) - expected.M) < 1e-12
        saved = csv_path.read_text().strip().splitlines()
        assert saved[0] == lines[0] and saved[1] == lines[1]

    def test_variant_flag(self, tmp_path, capsys):
        psi = random_mps(5, 2, seed=2)
        mps_path = tmp_path / "state.npz"
        save_mps(mps_path, psi)
        assert main(["sre-mps", "--mps", str(mps_path), "--variant", "conj"]) == 0
        line = capsys.readouterr().out.strip().splitlines()[1]
        assert line.split(",")[3] == "conj"


class TestTiDensity:
    def test_t_tensor_output(self, tmp_path, capsys):
        path = tmp_path / "site.npy"
        np.save(path, np.asarray(T_LOCAL).reshape(1, 2, 1))
        assert main(["ti-density", "--tensor", str(path), "--ell-max", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == f"m = {np.log(4.0 / 3.0):.12f}"
        assert lines[1] == "ell,m_ell"
        assert len(lines) == 5
        for ell, line in enumerate(lines[2:], start=1):
            num, val = line.split(",")
            assert int(num) == ell
            assert abs(float(val) - np.log(4.0 / 3.0)) < 1e-10


@pytest.fixture(scope="module")
def smoke_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke") / "bundle"
    code = main(
        ["ising", "--config", str(CONFIG_DIR / "smoke.json"), "--out", str(out), "--quiet"]
    )
    assert code == 0
    return out


class TestIsingStudy:
    def test_bundle_files(self, smoke_bundle):
        for name in BUNDLE_FILES:
            assert (smoke_bundle / name).is_file(), name

    def test_records_match_exact_diagonalization(self, smoke_bundle):
        header, rows = read_csv(smoke_bundle / "records.csv")
        assert header[:5] == ["basis", "n", "N", "h", "chi"]
        assert len(rows) > 0
        for row in rows:
            n_sites = int(row["N"])
            exact_e, vec = ed_ground_state(n_sites, fnum(row["h"]))
            assert abs(fnum(row["energy"]) - exact_e) < 1e-8
            exact_m = statevector_sre(vec, n=2) / n_sites
            assert abs(fnum(row["m"]) - exact_m) < 1e-8
            assert row["dmrg_converged"] == "1"

    def test_resolved_config_is_complete_json(self, smoke_bundle):
        cfg = json.loads((smoke_bundle / "resolved_config.json").read_text())
        assert cfg["schema_version"] == 1
        assert cfg["sizes"] == [12]
        assert cfg["chi_sre"] == 6
        info = json.loads((smoke_bundle / "run_info.json").read_text())
        assert "numpy_version" in info and "package_version" in info
        # no wall-clock fields anywhere (reruns must be byte-identical)
        assert not any("time" in k or "date" in k for k in info)

    def test_subprocess_entry_point(self, smoke_bundle):
        proc = subprocess.run(
            [sys.executable, "-m", "mps_sre", "sre-exact", "--fixture", "tstate"],
            capture_output=True,
            text=True,
            cwd=PKG_ROOT,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip() == "M = 0.287682"


class TestConfigRejections:
    def run_config(self, tmp_path, payload, capsys):
        path = tmp_path / "bad.json"
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        code = main(["ising", "--config", str(path), "--out", str(tmp_path / "out")])
        return code, capsys.readouterr().err

    def base(self):
        return {
            "schema_version": 1,
            "sizes": [8],
            "h_grid": [0.8, 0.9, 1.0, 1.1, 1.2],
        }

    def test_unknown_key_lists_dotted_path(self, tmp_path, capsys):
        cfg = self.base()
        cfg["dmrg"] = {"cutoffs": 1e-12}
        code, err = self.run_config(tmp_path, cfg, capsys)
        assert code == 2
        assert "dmrg.cutoffs" in err

    def test_invalid_json(self, tmp_path, capsys):
        code, err = self.run_config(tmp_path, "{not json", capsys)
        assert code == 2
        assert "not valid JSON" in err

    def test_wrong_schema_version(self, tmp_path, capsys):
        cfg = self.base()
        cfg["schema_version"] = 99
        code, err = self.run_config(tmp_path, cfg, capsys)
        assert code == 2

    def test_missing_file(self, tmp_path, capsys):
        code = main(["ising", "--config", str(tmp_path / "gone.json"), "--out", str(tmp_path)])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_chi_flag_above_dmrg_cap(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        cfg = self.base()
        cfg["chi_dmrg"] = 8
        path.write_text(json.dumps(cfg))
        code = main(
            ["ising", "--config", str(path), "--out", str(tmp_path / "out"), "--chi", "12"]
        )
        assert code == 2
        assert "chi_sre" in capsys.readouterr().err


class TestExitCodes:
    def test_convergence_failure_maps_to_four(self, tmp_path, capsys, monkeypatch):
        import mps_sre.study

        def explode(cfg, out_dir, log=None):
            raise ConvergenceError("solver stuck", best=None)

        monkeypatch.setattr(mps_sre.study, "run_study", explode)
        path = tmp_path / "cfg.json"
        path.write_text(
            json.dumps(
                {"schema_version": 1, "sizes": [8], "h_grid": [0.8, 0.9, 1.0, 1.1, 1.2]}
            )
        )
        code = main(["ising", "--config", str(path), "--out", str(tmp_path / "out")])
        assert code == 4
        assert "convergence failure" in capsys.readouterr().err
