#!/usr/bin/env python3
"""Download the benchmark inputs the gated tests look for.

Fetches the Steiner-tree core graphs (OR-Library) and the mp/mq facility
location files (UflLib) into data/orlib/.  Both hosts occasionally move;
every candidate URL is tried in order and a miss just reports what to
fetch by hand.  The gated tests skip cleanly while files are absent.
"""

from __future__ import annotations

import sys
import urllib.error
import urllib.request
from pathlib import Path

DEST = Path(__file__).resolve().parent.parent / "data" / "orlib"

ORLIB = "http://people.brunel.ac.uk/~mastjjb/jeb/orlib/files"
UFLLIB = "http://resources.mpi-inf.mpg.de/departments/d1/projects/benchmarks/UflLib/data"

TARGETS: dict[str, list[str]] = {
    "steinc5.txt": [f"{ORLIB}/steinc5.txt"],
    "steinc10.txt": [f"{ORLIB}/steinc10.txt"],
    "steind5.txt": [f"{ORLIB}/steind5.txt"],
    "steind10.txt": [f"{ORLIB}/steind10.txt"],
    "mp1.txt": [f"{UFLLIB}/koerkel/MP1.txt", f"{UFLLIB}/MP1.txt"],
    "mp2.txt": [f"{UFLLIB}/koerkel/MP2.txt", f"{UFLLIB}/MP2.txt"],
    "mq1.txt": [f"{UFLLIB}/koerkel/MQ1.txt", f"{UFLLIB}/MQ1.txt"],
    "mq2.txt": [f"{UFLLIB}/koerkel/MQ2.txt", f"{UFLLIB}/MQ2.txt"],
}


def fetch(name: str, urls: list[str]) -> bool:
    out = DEST / name
    if out.exists():
        print(f"  {name}: already present")
        return True
    for url in urls:
        try:
            with urllib.request.urlopen(url, timeout=30) as resp:
                data = resp.read()
        except (urllib.error.URLError, OSError) as exc:
            print(f"  {name}: {url} failed ({exc})")
            continue
        out.write_bytes(data)
        print(f"  {name}: fetched from {url} ({len(data)} bytes)")
        return True
    return False


def main() -> int:
    DEST.mkdir(parents=True, exist_ok=True)
    print(f"downloading benchmark files into {DEST}")
    missing = [name for name, urls in TARGETS.items() if not fetch(name, urls)]
    if missing:
        print()
        print("could not download:", ", ".join(missing))
        print("fetch them manually (OR-Library steinc/steind files; UflLib")
        print("mp/mq files) and drop them into data/orlib/ under these names.")
        return 1
    print("all files present")
    return 0


if __name__ == "__main__":
    sys.exit(main())
