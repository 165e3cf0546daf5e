"""Command-line interface.

Commands
--------
* ``sre-exact``  brute-force entropy of a dense statevector or a named fixture
* ``sre-mps``    replica-channel entropy of a saved matrix product state
* ``ti-density`` entropy density of a uniform infinite chain tensor
* ``ising``      full field-sweep study driven by a JSON configuration

Exit codes: 0 success; 2 configuration/usage errors; 3 numeric guard
violations (ill-conditioned or out-of-contract inputs); 4 convergence
failures.

``--threads`` caps BLAS thread pools and must take effect before the
numeric stack is loaded, so this module defers all heavy imports until
after argument parsing.
"""

from __future__ import annotations

import argparse
import os
import sys

__all__ = ["main", "build_parser"]


def _order(value: str) -> int:
    try:
        n = int(value)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"order must be an integer, got {value!r}") from err
    if n < 2:
        raise argparse.ArgumentTypeError(
            f"order must be an integer >= 2 (the n = 1 limit is not a replica sum), got {n}"
        )
    return n


def _positive(value: str) -> int:
    try:
        n = int(value)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}") from err
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mps-sre",
        description="Stabilizer Renyi entropies of matrix product states.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--threads", type=_positive, default=None,
        help="cap BLAS/LAPACK thread pools at this many threads",
    )
    common.add_argument(
        "--seed", type=int, default=None,
        help="override the top-level random seed",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "sre-exact", parents=[common],
        help="brute-force entropy of a dense statevector (small systems)",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", help="path to a .npy complex statevector (length 2^N)")
    src.add_argument(
        "--fixture", choices=["zero", "ghz", "tstate"],
        help="built-in state: all-zeros product, GHZ, or the magic T product state",
    )
    p.add_argument("--sites", type=_positive, default=1, help="fixture size (default 1)")
    p.add_argument("--n", type=_order, default=2, help="entropy order (integer >= 2)")
    p.set_defaults(func=_cmd_sre_exact)

    p = sub.add_parser(
        "sre-mps", parents=[common],
        help="replica-channel entropy of a saved matrix product state",
    )
    p.add_argument("--mps", required=True, help="path to a saved MPS file")
    p.add_argument("--n", type=_order, default=2, help="entropy order (integer >= 2)")
    p.add_argument(
        "--variant", choices=["conj", "sym", "sym-compressed"], default=None,
        help="replica evaluation route (default: best available for the order)",
    )
    p.add_argument("--out", default=None, help="also append the result row to this CSV")
    p.set_defaults(func=_cmd_sre_mps)

    p = sub.add_parser(
        "ti-density", parents=[common],
        help="entropy density of a uniform infinite chain from one site tensor",
    )
    p.add_argument("--tensor", required=True, help="path to a .npy (chi, d, chi) site tensor")
    p.add_argument("--n", type=_order, default=2, help="entropy order (integer >= 2)")
    p.add_argument(
        "--variant", choices=["conj", "sym", "sym-compressed"], default=None,
        help="replica evaluation route (default: conjugated)",
    )
    p.add_argument(
        "--ell-max", type=_positive, default=8,
        help="also print finite-window probe densities up to this window",
    )
    p.set_defaults(func=_cmd_ti_density)

    p = sub.add_parser(
        "ising", parents=[common],
        help="run the transverse-field study described by a JSON config",
    )
    p.add_argument(
        "--config", "--sweep", dest="config", required=True,
        help="path to the study JSON",
    )
    p.add_argument("--out", required=True, help="output directory for the CSV bundle")
    p.add_argument("--chi", type=_positive, default=None, help="override the entropy bond cap")
    p.add_argument("--n", type=_order, default=None, help="override the entropy order")
    p.add_argument(
        "--variant", choices=["conj", "sym", "sym-compressed"], default=None,
        help="override the replica evaluation route",
    )
    p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p.set_defaults(func=_cmd_ising)
    return parser


def _apply_threads(args) -> None:
    if getattr(args, "threads", None):
        k = str(args.threads)
        for var in (
            "OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS", "BLIS_NUM_THREADS",
        ):
            os.environ[var] = k


def _echo(value: float, places: int) -> str:
    """Fixed-point text for a value, with negative zero normalised away."""
    return f"{round(float(value), places) + 0.0:.{places}f}"


def _cmd_sre_exact(args) -> int:
    import numpy as np

    from .mps import T_LOCAL, ghz_state, product_state
    from .oracle import statevector_sre

    if args.state is not None:
        psi = np.load(args.state)
    elif args.fixture == "zero":
        psi = product_state(np.array([1.0, 0.0]), args.sites).to_statevector()
    elif args.fixture == "ghz":
        psi = ghz_state(max(args.sites, 2)).to_statevector()
    else:
        psi = product_state(np.asarray(T_LOCAL), args.sites).to_statevector()
    total = statevector_sre(psi, n=args.n)
    print(f"M = {_echo(total, 6)}")
    return 0


def _cmd_sre_mps(args) -> int:
    from .mps import load_mps
    from .replica import SRE_CSV_HEADER, append_sre_row, sre

    psi = load_mps(args.mps)
    result = sre(psi, n=args.n, variant=args.variant)
    print(SRE_CSV_HEADER)
    print(
        f"{result.n},{result.n_sites},{result.chi},{result.variant},"
        f"{result.M:.17g},{result.m:.17g},{result.log_replica_norm:.17g},"
        f"{result.log_state_norm:.17g},{result.gap_ratio:.17g}"
    )
    if args.out:
        append_sre_row(args.out, result)
    return 0


def _cmd_ti_density(args) -> int:
    import numpy as np

    from .replica import local_probe, ti_density

    tensor = np.load(args.tensor)
    res = ti_density(tensor, n=args.n, variant=args.variant)
    print(f"m = {_echo(res.m, 12)}")
    probes = local_probe(tensor, ell_max=args.ell_max, n=args.n, variant=args.variant)
    print("ell,m_ell")
    for ell, val in enumerate(probes, start=1):
        print(f"{ell},{_echo(val, 12)}")
    return 0


def _cmd_ising(args) -> int:
    import json

    from .config import config_from_dict
    from .errors import ConfigError
    from .study import run_study

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {args.config}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {args.config} is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("study config must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.chi is not None:
        raw["chi_sre"] = args.chi
    if args.n is not None:
        raw["n"] = args.n
    if args.variant is not None:
        raw["variant"] = args.variant
    cfg = config_from_dict(raw)
    log = None if args.quiet else (lambda msg: print(msg, file=sys.stderr, flush=True))
    result = run_study(cfg, args.out, log=log)
    print(f"study written to {result.out_dir}")
    for n_sites, (h0, m0) in sorted(result.peaks.items()):
        print(f"peak N={n_sites}: h0 = {h0:.6f}, m0 = {m0:.6f}")
    for quantity, f in sorted(result.fits.items()):
        print(f"fit {quantity}: offset b = {f.b:.6f} +- {f.stderr_b:.6f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(args)

    from .errors import (
        ConfigError,
        ConvergenceError,
        DimensionMismatchError,
        NumericGuardError,
        VariantError,
    )

    try:
        return args.func(args)
    except (ConfigError, DimensionMismatchError, VariantError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericGuardError as err:
        print(f"numeric guard: {err}", file=sys.stderr)
        return 3
    except ConvergenceError as err:
        print(f"convergence failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
