#!/usr/bin/env python3
"""Regenerate the golden population CSVs for the closed presets.

Run from the repository root after an intentional change to the closed
solver or to a preset, then review the diff before committing.
"""

import argparse
from pathlib import Path

import numpy as np

from dretsim import FockTruncation, preset, preset_names, simulate_closed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="tests/data/golden",
                        help="output directory (default: tests/data/golden)")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in preset_names():
        p = preset(name)
        if p.regime != "closed":
            continue
        res = simulate_closed(p.chain, p.mode, p.start_site, p.tmax,
                              p.dt_out, FockTruncation(n_max=p.n_max))
        header = "t," + ",".join(
            f"P_{k}" for k in range(1, p.chain.n_sites + 1))
        data = np.column_stack([res.times, res.populations])
        np.savetxt(out / f"{name}.csv", data, delimiter=",",
                   header=header, comments="", fmt="%.12e")
        print(f"{name}: {data.shape[0]} rows, n_max={res.n_max}")


if __name__ == "__main__":
    main()
