#!/usr/bin/env python3
"""Download the benchmark datasets used by the data-dependent tests.

Fetches the splice and leukemia train/test splits from the public LIBSVM
dataset mirror into <repo>/data (override with --dest). Needs outbound
network access; run it on any connected machine and copy data/ next to the
repository if this one is sandboxed.

Usage:
    python3 scripts/fetch_datasets.py [--dest DIR] [--only splice,leukemia]
"""

from __future__ import annotations

import argparse
import bz2
import sys
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary"

# name -> (url file name, compressed?)
FILES = {
    "splice": ("splice", False),
    "splice.t": ("splice.t", False),
    "leukemia": ("leu.bz2", True),
    "leukemia.t": ("leu.t.bz2", True),
}

GROUPS = {
    "splice": ["splice", "splice.t"],
    "leukemia": ["leukemia", "leukemia.t"],
}


def fetch(name: str, dest: Path) -> None:
    remote, compressed = FILES[name]
    target = dest / name
    if target.exists():
        print(f"{target} already present, skipping")
        return
    url = f"{BASE}/{remote}"
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=60) as response:
        payload = response.read()
    if compressed:
        payload = bz2.decompress(payload)
    target.write_bytes(payload)
    print(f"wrote {target} ({len(payload)} bytes)")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--dest",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "data",
    )
    parser.add_argument(
        "--only",
        default="splice,leukemia",
        help="comma-separated dataset groups (default: splice,leukemia)",
    )
    args = parser.parse_args()
    args.dest.mkdir(parents=True, exist_ok=True)

    for group in args.only.split(","):
        group = group.strip()
        if group not in GROUPS:
            print(f"unknown dataset group {group!r}", file=sys.stderr)
            return 2
        for name in GROUPS[group]:
            fetch(name, args.dest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
