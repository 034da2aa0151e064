"""Acceptance criteria 1-7, run from the bundled scenario files.

Each test records one ``criterion N: PASS/FAIL`` line, printed in the pytest
summary (and to stdout when this file is run as a script).
"""

import json
import time
from pathlib import Path

import pytest

from conftest import ACCEPTANCE_LINES
from nullitylab.export import dumps_json
from nullitylab.verify import run_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
_REPORTS: dict[str, str] = {}


def run(file: str):
    cfg = json.loads((SCENARIOS / file).read_text())
    t0 = time.perf_counter()
    report = run_scenario(cfg)
    elapsed = time.perf_counter() - t0
    _REPORTS[file] = dumps_json(report.to_dict())
    return report, elapsed


def record(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return ok


def by_name(report):
    return {c.name: c for c in report.checks}


def test_criterion_1_jet_engine():
    report, t = run("jet_battery.json")
    worst = max(c.residual for c in report.checks)
    ok = report.overall_pass and len(report.checks) == 20 and t < 10.0
    assert record(1, ok, f"20 functions, worst relative error {worst:.2e} < 1e-6, {t:.1f} s < 10 s")


def test_criterion_2_classical_sanity():
    report, t = run("cylinder.json")
    c = by_name(report)
    required = ["nullity index = 1 [cylinder]", "H = 0.5 [cylinder]", "nullity index = 2 [plane]",
                "nullity index = 0 [sphere]", "H = 1 [sphere]"]
    ok = report.overall_pass and all(c[k].passed and c[k].tolerance in (1, 1e-9) for k in required)
    worst_H = max(c["H = 0.5 [cylinder]"].residual, c["H = 1 [sphere]"].residual)
    assert record(2, ok, f"nu = 1/2/0 for cylinder/plane/sphere, worst |H - H0| = {worst_H:.1e} < 1e-9")


def test_criterion_3_prop_ricci():
    report, t = run("prop_ricci.json")
    lows = [c for c in report.checks if c.name.startswith("first ellipse nowhere")]
    bands = [c for c in report.checks if c.name.startswith("first ellipse defect near")]
    seconds = [c for c in report.checks if c.name.startswith("second ellipse")]
    minimal = [c for c in report.checks if c.name.startswith("minimality")]
    # 2 data x 2 angles, each |cos 2 phi| = 0.5: defect within [0.45, 0.55]
    in_window = all(c.residual >= 0.45 for c in lows) and all(c.residual <= 0.05 for c in bands)
    ok = (report.overall_pass and len(lows) == len(bands) == len(seconds) == len(minimal) == 4
          and in_window and all(c.tolerance == 1e-9 for c in minimal)
          and all(c.tolerance == 1e-6 for c in seconds) and t < 60.0)
    detail = (f"min first defect {min(c.residual for c in lows):.6f}, max |defect - 0.5| "
              f"{max(c.residual for c in bands):.1e}, max second-ellipse defect "
              f"{max(c.residual for c in seconds):.1e}, {t:.1f} s < 60 s")
    assert record(3, ok, detail)


def test_criterion_4_bipolar_structure():
    report, t = run("bipolar_full.json")
    c = {k.split("[")[0]: v for k, v in by_name(report).items()}
    limits = {"fiber nullity membership": 1e-6, "per-fiber H spread": 1e-6, "C^2 + I": 1e-5,
              "ellipticity defect": 1e-5, "first ellipse circle defect": 1e-5,
              "splitting tensor derivative identity (c=1)": 1e-5, "shape operator symmetry": 1e-5}
    ok = report.overall_pass and t < 180.0
    ok = ok and all(c[k].passed and c[k].tolerance == v for k, v in limits.items())
    worst = max(c[k].residual for k in limits)
    assert record(4, ok, f"(a)-(e) on 9x9x16, worst residual {worst:.1e}, {t:.1f} s < 180 s")


def test_criterion_5_composition_identity():
    report, t = run("composition.json")
    ident = [c for c in report.checks if c.name.startswith("composition mean curvature identity")]
    grad = [c for c in report.checks if c.name.startswith("height gradient identity")]
    ok = (report.overall_pass and len(ident) == len(grad) == 9 and t < 30.0
          and all(c.tolerance == 1e-8 for c in ident) and all(c.tolerance == 1e-9 for c in grad))
    detail = (f"3x3 cases on 15x15, worst identity {max(c.residual for c in ident):.1e}, "
              f"worst gradient {max(c.residual for c in grad):.1e}, {t:.1f} s < 30 s")
    assert record(5, ok, detail)


def test_criterion_6_delaunay():
    report, t = run("delaunay.json")
    c = by_name(report)
    ode = [v for k, v in c.items() if k.startswith("profile ODE residual")]
    axial = c["constant mean curvature[axial]"]
    graph = c["constant mean curvature[graph]"]
    ok = (report.overall_pass and all(o.passed and o.tolerance == 1e-7 for o in ode)
          and axial.category == "asserted" and axial.passed and axial.tolerance == 1e-5
          and graph.category == "informational" and "deviation" in graph.note)
    detail = (f"ODE residual {max(o.residual for o in ode):.1e} < 1e-7, axial H spread {axial.residual:.1e} < 1e-5, "
              f"graph-layout spread {graph.residual:.2e} reported")
    assert record(6, ok, detail)


def test_criterion_7_determinism():
    files = ["jet_battery.json", "cylinder.json", "prop_ricci.json", "bipolar_full.json",
             "composition.json", "delaunay.json"]
    for f in files:
        if f not in _REPORTS:
            run(f)
    first = dict(_REPORTS)
    mismatched = []
    for f in files:
        run(f)
        if _REPORTS[f] != first[f]:
            mismatched.append(f)
    assert record(7, not mismatched, f"{len(files)} scenarios rerun, byte-identical reports"
                  + (f"; differing: {mismatched}" if mismatched else ""))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
