"""Shared argument handling for the experiment scripts."""

import argparse
import sys
from pathlib import Path

from selest.bench import write_results


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4], help="experiment seeds")
    p.add_argument("--timing", action="store_true", help="record wall-clock columns")
    p.add_argument("--out", type=Path, help="results CSV (default: stdout)")
    return p


def emit(rows, out: Path | None) -> None:
    if out is None:
        write_results(rows, sys.stdout)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_results(rows, out)
        print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
