#!/usr/bin/env python3
"""Snapshot every preset's parameters into tests/data/preset_params.json.

The frozen table pins the registry against accidental edits; regenerate
only when a preset is changed on purpose, and review the diff.
"""

import argparse
import json
from pathlib import Path

from dretsim import preset, preset_names, serialize


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="tests/data/preset_params.json")
    args = parser.parse_args()
    table = {}
    for name in preset_names():
        p = preset(name)
        table[name] = {
            "config": serialize(p),
            "source": p.source,
            "checks": sorted(p.checks),
        }
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(table)} presets to {path}")


if __name__ == "__main__":
    main()
