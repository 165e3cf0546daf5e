#!/usr/bin/env python3
"""Run a transverse-field study from a JSON config (desk-scale by default).

Examples:
    python scripts/run_ising_study.py --out runs/desk
    python scripts/run_ising_study.py --config configs/smoke.json --out runs/smoke
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mps_sre.cli import main  # noqa: E402

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config",
        default=os.path.join(os.path.dirname(__file__), "..", "configs", "desk.json"),
    )
    parser.add_argument("--out", required=True)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()
    argv = ["ising", "--config", args.config, "--out", args.out]
    if args.threads:
        argv += ["--threads", str(args.threads)]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    sys.exit(main(argv))
