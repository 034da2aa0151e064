"""Run every bundled scenario and write its report under results/."""

import argparse
import json
import sys
import time
from pathlib import Path

from nullitylab.export import write_json
from nullitylab.verify import run_scenario

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    ap.add_argument("--only", nargs="*", help="scenario file stems, e.g. cylinder delaunay")
    args = ap.parse_args()
    out_dir = Path(args.out_dir)
    failed = 0
    for path in sorted((ROOT / "scenarios").glob("*.json")):
        if args.only and path.stem not in args.only:
            continue
        t0 = time.perf_counter()
        report = run_scenario(json.loads(path.read_text()))
        dt = time.perf_counter() - t0
        write_json(out_dir / f"{path.stem}-report.json", report.to_dict())
        verdict = "PASS" if report.overall_pass else "FAIL"
        failed += not report.overall_pass
        print(f"{path.stem:<14} {verdict}  {len(report.checks):3d} checks  {dt:6.1f} s")
        for c in report.failed():
            print(f"    failed: {c.name} ({c.residual:.3e} vs {c.tolerance})")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
