#!/usr/bin/env python3
"""Produce every CSV/JSON input the figure scripts consume.

Full scale mirrors the experiment defaults (a few minutes of compute);
--quick shrinks everything for a smoke run.  Outputs land in --out-dir
(default ./out) together with one manifest per subcommand.
"""

import argparse
import sys

from microclust.cli import main as cli


def run(args: list[str]) -> None:
    code = cli(args)
    if code != 0:
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out")
    parser.add_argument("--seed", type=int, default=20240801)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--quick", action="store_true", help="small fast variant")
    ns = parser.parse_args()

    base = ["--seed", str(ns.seed), "--jobs", str(ns.jobs), "--out-dir", ns.out_dir]
    if ns.quick:
        run(base + ["theory", "--derange", "--nm", "11"])
        run(base + ["assign-sim", "--n", "500", "--c-grid", "0.1:2:0.1", "--replicates", "10"])
        run(base + ["bayes-sim", "--n", "50", "--c-grid", "0.1,0.25,0.5,1,2",
                    "--sweeps", "200", "--burn-in", "50"])
        run(base + ["popest-sim", "--k", "1000", "--t", "3", "--target-n0-frac", "0.25",
                    "--c-grid", "0.1,0.5,1,2", "--replicates", "25"])
        return

    run(base + ["theory", "--derange", "--nm", "11"])
    run(base + ["assign-sim", "--n", "5000", "--c-grid", "0.1:2:0.1", "--replicates", "50"])
    run(base + ["bayes-sim", "--n", "100", "--c-grid", "0.1,0.25,0.5,1,2",
                "--sweeps", "2000", "--burn-in", "500"])
    run(base + ["popest-sim", "--k", "5000", "--t", "3", "--target-n0-frac", "0.25",
                "--c-grid", "0.1,0.5,1,2", "--replicates", "200"])


if __name__ == "__main__":
    main()
