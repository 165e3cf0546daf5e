"""Field-sweep study driver: one configuration in, a CSV bundle out.

``run_study`` executes the full pipeline — ground states along the field
grids (warm-started per size), entropy densities in the requested bases,
peak extraction with optional golden refinement, scaling fits with a
lower-bond refit spread, three-point linear decompositions, the data
collapse and its gamma scan, and the basis minimization — then writes
every table with 17-significant-digit, dot-decimal formatting so a fixed
seed reproduces the bundle byte for byte.

Output files (headers documented in the README):

* ``records.csv``       every evaluated sweep point
* ``peaks.csv``         extracted extrema per size and basis
* ``fits.csv``          power-law-plus-offset fits with uncertainties
* ``linear_fits.csv``   straight-line fits (log-log tails, log growth)
* ``fig1a_collapse.csv``  rescaled collapse curves
* ``fig1bc_DN_cN.csv``  linear decomposition of the total vs size
* ``fig2_bases.csv``    densities in rotated single-qubit bases
* ``fig3_minmagic.csv`` minimized density over uniform local bases
* ``collapse_scan.csv`` collapse quality over the gamma grid
* ``resolved_config.json`` / ``run_info.json``  full config + versions
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import (
    GroundStateCache,
    basis_rotation,
    collapse,
    collapse_quality,
    evaluate_point,
    extract_linear,
    find_peak,
    fit_log,
    fit_power_offset,
    minimize_magic,
    parity_project,
    refine_peak,
    rotated_sweep,
    scan_gamma,
    sweep_density,
)
from .config import ExperimentConfig, resolved_dict
from .errors import BracketError, DegenerateFitError
from .ising import DmrgConfig

__all__ = ["StudyResult", "run_study", "format_value", "write_csv"]


def format_value(v) -> str:
    """CSV cell: 17 significant digits for floats, '.' decimal separator."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path: str, header: list[str], rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


RECORDS_HEADER = [
    "basis", "n", "N", "h", "chi", "M", "m",
    "energy", "dmrg_sweeps", "dmrg_converged", "sre_truncation_weight",
    "m_lower_chi", "chi_flagged",
]
PEAKS_HEADER = ["scope", "basis", "N", "kind", "h0", "m0", "method"]
FITS_HEADER = [
    "quantity", "basis", "n_points", "c", "eta", "b",
    "stderr_c", "stderr_eta", "stderr_b", "residual", "b_spread_lower_chi",
]
LINEAR_FITS_HEADER = ["name", "slope", "intercept", "n_points"]
FIG1A_HEADER = ["N", "h", "m", "h0", "m0", "x_scaled", "y_scaled", "nu", "gamma"]
FIG1BC_HEADER = ["h", "N", "delta_n", "D_N", "c_N"]
FIG2_HEADER = ["basis", "N", "h", "m"]
FIG3_HEADER = ["N", "h", "m_unrotated", "m_min", "theta1", "theta2", "theta3"]
SCAN_HEADER = ["gamma", "quality"]


@dataclass
class StudyResult:
    """In-memory mirror of the persisted bundle."""

    out_dir: str
    records: list = field(default_factory=list)
    peaks: dict = field(default_factory=dict)          # N -> (h0, m0), unrotated
    rotated_peaks: dict = field(default_factory=dict)  # (basis, N) -> (h0, m0)
    minimized_peaks: dict = field(default_factory=dict)  # N -> (h0, m0) of m_min
    fits: dict = field(default_factory=dict)           # quantity -> PowerFit
    fit_spreads: dict = field(default_factory=dict)    # quantity -> |b - b_lower_chi|
    linear_fits: dict = field(default_factory=dict)    # name -> (slope, intercept)
    decompositions: list = field(default_factory=list)
    gamma_best: float | None = None
    quality_at_gamma: float | None = None
    minimization: list = field(default_factory=list)
    paths: dict = field(default_factory=dict)


def _record_row(r) -> list:
    d = r.diagnostics
    return [
        r.basis, r.n, r.n_sites, r.h, r.chi, r.M, r.m,
        d.get("energy"), d.get("dmrg_sweeps"), d.get("dmrg_converged"),
        d.get("sre_truncation_weight"), d.get("m_lower_chi"), d.get("chi_flagged"),
    ]


def _series(records, n_sites, h_window=None, value="m"):
    pts = sorted(
        (r.h, getattr(r, value), r.diagnostics.get("m_lower_chi"))
        for r in records
        if r.n_sites == n_sites
        and (h_window is None or h_window[0] <= r.h <= h_window[1])
    )
    hs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    lo = [p[2] for p in pts]
    return hs, ys, lo


def run_study(cfg: ExperimentConfig, out_dir: str, log=None) -> StudyResult:
    """Execute the configured study and persist the bundle under ``out_dir``."""

    def say(msg: str):
        if log is not None:
            log(msg)

    os.makedirs(out_dir, exist_ok=True)
    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    seed_dmrg, seed_min = (int(s.generate_state(1)[0]) for s in seeds[:2])
    dmrg_cfg = DmrgConfig(
        chi_max=cfg.chi_dmrg,
        cutoff=cfg.dmrg.cutoff,
        tol=cfg.dmrg.tol,
        max_sweeps=cfg.dmrg.max_sweeps,
        min_sweeps=cfg.dmrg.min_sweeps,
        dense_dim=cfg.dmrg.dense_dim,
        seed=seed_dmrg,
    )
    cache = GroundStateCache(dmrg_cfg)
    result = StudyResult(out_dir=out_dir)
    sre_kwargs = dict(
        chi_sre=cfg.chi_sre, n=cfg.n, variant=cfg.variant,
        chi_flag_delta=cfg.chi_flag_delta,
    )

    # -- main sweep (main sizes plus anchor triples) ---------------------
    sizes_all = cfg.all_sweep_sizes()
    say(f"sweep: sizes {sizes_all}, {len(cfg.h_grid)} fields")
    main = sweep_density(cfg.h_grid, sizes_all, cache, **sre_kwargs)
    result.records.extend(main)

    # -- tails -----------------------------------------------------------
    for grid in (cfg.h_small, cfg.h_large):
        if grid:
            say(f"tail sweep at N={cfg.tail_size}: {grid}")
            result.records.extend(
                sweep_density(grid, [cfg.tail_size], cache, **sre_kwargs)
            )

    # -- peaks per main size (parabola, optionally golden-refined) -------
    window = (min(cfg.h_grid), max(cfg.h_grid))
    peak_rows = []
    peaks_lo: dict[int, tuple[float, float]] = {}
    for n_sites in cfg.sizes:
        hs, ms, mlo = _series(main, n_sites, window)
        if hs.size < 5:
            continue
        try:
            h0, m0 = find_peak(hs, ms, "max")
            method = "parabola"
        except BracketError:
            k = int(np.argmax(ms))
            h0, m0, method = float(hs[k]), float(ms[k]), "edge-unbracketed"
        if (
            cfg.refine is not None
            and method == "parabola"
            and (cfg.refine.sizes is None or n_sites in cfg.refine.sizes)
        ):
            k = int(np.argmax(ms))

            def fresh(h: float) -> float:
                rec = evaluate_point(
                    cache, n_sites, h, cfg.chi_sre, cfg.n, cfg.variant,
                    basis_rotation(0), cfg.chi_flag_delta,
                )
                result.records.append(rec)
                return rec.m

            h0, m0 = refine_peak(
                fresh, hs[k - 1], hs[k], hs[k + 1], "max", evals=cfg.refine.evals
            )
            method = "golden"
        result.peaks[n_sites] = (h0, m0)
        peak_rows.append(["main", "0", n_sites, "max", h0, m0, method])
        say(f"peak N={n_sites}: h0={h0:.5f} m0={m0:.6f} ({method})")
        if all(v is not None for v in mlo):
            try:
                peaks_lo[n_sites] = find_peak(hs, np.array(mlo, dtype=float), "max")
            except BracketError:
                pass

    # -- scaling fits with lower-bond refit spread -----------------------
    fit_rows = []
    fit_sizes = [n for n in cfg.sizes if n in result.peaks]
    if len(fit_sizes) >= 4:
        for quantity, idx in (("h0", 0), ("m0", 1)):
            try:
                f = fit_power_offset(fit_sizes, [result.peaks[n][idx] for n in fit_sizes])
            except DegenerateFitError as err:
                say(f"fit {quantity}: degenerate ({err})")
                continue
            result.fits[quantity] = f
            spread = None
            if all(n in peaks_lo for n in fit_sizes):
                try:
                    f_lo = fit_power_offset(
                        fit_sizes, [peaks_lo[n][idx] for n in fit_sizes]
                    )
                    spread = abs(f.b - f_lo.b)
                    result.fit_spreads[quantity] = spread
                except DegenerateFitError:
                    pass
            fit_rows.append([
                quantity, "0", len(fit_sizes), f.c, f.eta, f.b,
                f.stderr_c, f.stderr_eta, f.stderr_b, f.residual, spread,
            ])
            say(f"fit {quantity}: c={f.c:.4f} eta={f.eta:.3f} b={f.b:.5f} +- {f.stderr_b:.5f}")

    # -- linear decomposition at the anchors -----------------------------
    fig1bc_rows = []
    lin_rows = []
    index = {(r.n_sites, r.h): r for r in main}
    cn_peaks = []
    for anchor in cfg.anchors:
        triple = (anchor.size - anchor.delta, anchor.size, anchor.size + anchor.delta)
        cns = []
        for h in sorted(cfg.h_grid):
            recs = [index.get((n, h)) for n in triple]
            if any(r is None for r in recs):
                continue
            ld = extract_linear(anchor.size, anchor.delta, *(r.M for r in recs))
            result.decompositions.append(ld)
            fig1bc_rows.append([h, anchor.size, anchor.delta, ld.D_N, ld.c_N])
            cns.append((h, ld.c_N))
        if len(cns) >= 5:
            try:
                _, cn_max = find_peak([p[0] for p in cns], [p[1] for p in cns], "max")
                cn_peaks.append((anchor.size, cn_max))
            except BracketError:
                k = int(np.argmax([p[1] for p in cns]))
                cn_peaks.append((anchor.size, cns[k][1]))
    if len(cn_peaks) >= 3:
        a, b = fit_log([p[0] for p in cn_peaks], [p[1] for p in cn_peaks])
        result.linear_fits["cN_max_vs_lnN"] = (a, b)
        lin_rows.append(["cN_max_vs_lnN", a, b, len(cn_peaks)])
        say(f"c_N^max = {a:.4f} ln N + {b:.4f}")

    # -- log-log tail slopes --------------------------------------------
    for name, grid in (("small_h", cfg.h_small), ("large_h", cfg.h_large)):
        if len(grid) >= 2:
            hs, ms, _ = _series(result.records, cfg.tail_size, (min(grid), max(grid)))
            keep = ms > 0
            if keep.sum() >= 2:
                slope, icept = np.polyfit(np.log(hs[keep]), np.log(ms[keep]), 1)
                result.linear_fits[f"loglog_m_vs_h_{name}"] = (float(slope), float(icept))
                lin_rows.append([f"loglog_m_vs_h_{name}", slope, icept, int(keep.sum())])
                say(f"tail {name}: log-log slope {slope:.3f}")

    # -- collapse --------------------------------------------------------
    fig1a_rows = []
    scan_rows = []
    if cfg.collapse is not None and len(result.peaks) >= 2:
        cmain = [
            r for r in result.records
            if r.basis == "0" and r.n_sites in result.peaks
            and window[0] <= r.h <= window[1]
        ]
        curves = collapse(cmain, result.peaks, cfg.collapse.gamma, cfg.collapse.nu)
        result.quality_at_gamma = collapse_quality(curves)
        by_key = {}
        for r in cmain:
            by_key.setdefault(r.n_sites, []).append(r)
        for n_sites in sorted(curves):
            xs, ys = curves[n_sites]
            h0, m0 = result.peaks[n_sites]
            recs = sorted(by_key[n_sites], key=lambda r: r.h)
            for r, x, y in zip(recs, xs, ys):
                fig1a_rows.append([
                    n_sites, r.h, r.m, h0, m0, x, y,
                    cfg.collapse.nu, cfg.collapse.gamma,
                ])
        if cfg.collapse.scan:
            gs, qs, best = scan_gamma(
                cmain, result.peaks, cfg.collapse.scan, cfg.collapse.nu
            )
            result.gamma_best = best
            scan_rows = [[g, q] for g, q in zip(gs, qs)]
            say(f"collapse: quality {result.quality_at_gamma:.4f} at gamma={cfg.collapse.gamma}, scan best {best:.3f}")

    # -- rotated bases ---------------------------------------------------
    fig2_rows = []
    rotated_sizes = sorted({n for blk in cfg.rotated for n in blk.sizes})
    for r in result.records:
        if r.basis == "0" and r.n_sites in rotated_sizes and window[0] <= r.h <= window[1]:
            fig2_rows.append([r.basis, r.n_sites, r.h, r.m])
    for blk in cfg.rotated:
        say(f"rotated basis {blk.basis}: sizes {blk.sizes}")
        # Rotated densities are evaluated on the spin-flip-even ground state:
        # below the critical field the finite-chain ground doublet is nearly
        # degenerate and the optimizer lands on an arbitrary superposition of
        # the two broken-symmetry branches.  Rotated bases mix the branches
        # (the unrotated density does not care), so pinning the symmetric
        # state keeps these curves smooth and reproducible.
        rr = rotated_sweep(
            blk.h_grid, blk.sizes, basis_rotation(blk.basis), cache,
            state_prep=parity_project, **sre_kwargs
        )
        result.records.extend(rr)
        for r in rr:
            fig2_rows.append([r.basis, r.n_sites, r.h, r.m])
        if blk.peak != "none":
            for n_sites in blk.sizes:
                hs, ms, _ = _series(rr, n_sites)
                if hs.size < 5:
                    continue
                try:
                    h0, m0 = find_peak(hs, ms, blk.peak)
                    method = "parabola"
                except BracketError:
                    k = int(np.argmax(ms if blk.peak == "max" else -ms))
                    h0, m0, method = float(hs[k]), float(ms[k]), "edge-unbracketed"
                result.rotated_peaks[(blk.basis, n_sites)] = (h0, m0)
                peak_rows.append(["rotated", blk.basis, n_sites, blk.peak, h0, m0, method])
                say(f"  {blk.peak} of basis {blk.basis}, N={n_sites}: h={h0:.5f}")
            # drift law of the rotated extremum: the finite-size locations
            # and values follow c * N^(-eta) + b like the unrotated peak,
            # and the offsets are the quantities to compare against
            fitted = [
                (n_sites, *result.rotated_peaks[(blk.basis, n_sites)])
                for n_sites in sorted(blk.sizes)
                if (blk.basis, n_sites) in result.rotated_peaks
            ]
            if len(fitted) >= 3:
                for quantity, idx in (("h0", 1), ("m0", 2)):
                    try:
                        f = fit_power_offset(
                            [p[0] for p in fitted], [p[idx] for p in fitted]
                        )
                    except DegenerateFitError as err:
                        say(f"fit {quantity}[{blk.basis}]: degenerate ({err})")
                        continue
                    result.fits[f"{quantity}:{blk.basis}"] = f
                    fit_rows.append([
                        quantity, blk.basis, len(fitted), f.c, f.eta, f.b,
                        f.stderr_c, f.stderr_eta, f.stderr_b, f.residual, None,
                    ])
                    say(
                        f"fit {quantity}[{blk.basis}]: c={f.c:.4f} "
                        f"eta={f.eta:.3f} b={f.b:.5f} +- {f.stderr_b:.5f}"
                    )

    # -- minimization over uniform single-qubit bases --------------------
    fig3_rows = []
    if cfg.minimize is not None:
        blk = cfg.minimize
        task = 0
        for n_sites in sorted(blk.sizes):
            prof = []
            for h in sorted(blk.h_grid):
                gs = cache.ground_state(n_sites, h)
                # Same symmetric-state convention as the rotated sweeps: the
                # minimum over bases is as branch-sensitive as any rotation.
                mm = minimize_magic(
                    parity_project(gs.psi), n=cfg.n, restarts=blk.restarts,
                    seed=seed_min + task, maxiter=blk.maxiter,
                    chi_eval=blk.chi_eval, variant=cfg.variant,
                )
                task += 1
                result.minimization.append((n_sites, h, mm))
                t1, t2, t3 = mm.rotation.angles or (0.0, 0.0, 0.0)
                fig3_rows.append([n_sites, h, mm.m_unrotated, mm.m_min, t1, t2, t3])
                prof.append((h, mm.m_min))
            say(f"minimized N={n_sites}: {len(prof)} fields")
            if len(prof) >= 5:
                try:
                    h0, m0 = find_peak([p[0] for p in prof], [p[1] for p in prof], "max")
                    method = "parabola"
                except BracketError:
                    k = int(np.argmax([p[1] for p in prof]))
                    h0, m0, method = prof[k][0], prof[k][1], "edge-unbracketed"
                result.minimized_peaks[n_sites] = (h0, m0)
                peak_rows.append(["minimized", "euler", n_sites, "max", h0, m0, method])

    # -- persist ---------------------------------------------------------
    files = {
        "records": ("records.csv", RECORDS_HEADER,
                    [_record_row(r) for r in result.records]),
        "peaks": ("peaks.csv", PEAKS_HEADER, peak_rows),
        "fits": ("fits.csv", FITS_HEADER, fit_rows),
        "linear_fits": ("linear_fits.csv", LINEAR_FITS_HEADER, lin_rows),
        "fig1a": ("fig1a_collapse.csv", FIG1A_HEADER, fig1a_rows),
        "fig1bc": ("fig1bc_DN_cN.csv", FIG1BC_HEADER, fig1bc_rows),
        "fig2": ("fig2_bases.csv", FIG2_HEADER, fig2_rows),
        "fig3": ("fig3_minmagic.csv", FIG3_HEADER, fig3_rows),
        "scan": ("collapse_scan.csv", SCAN_HEADER, scan_rows),
    }
    for key, (name, header, rows) in files.items():
        path = os.path.join(out_dir, name)
        write_csv(path, header, rows)
        result.paths[key] = path
    cfg_path = os.path.join(out_dir, "resolved_config.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(resolved_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
    result.paths["config"] = cfg_path
    info_path = os.path.join(out_dir, "run_info.json")
    with open(info_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "package_version": __version__,
                "numpy_version": np.__version__,
                "scipy_version": __import__("scipy").__version__,
            },
            fh, indent=2, sort_keys=True,
        )
        fh.write("\n")
    result.paths["run_info"] = info_path
    return result
