"""Command-line entry point: build, verify, export, list-scenarios.

Exit codes: 0 pass, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from nullitylab.catalog import SURFACES, CatalogError, build_surface
from nullitylab.constructions import singular_mask
from nullitylab.export import grid_faces, write_csv, write_json, write_obj
from nullitylab.immersion import GeometryError, evaluate_tower, fundamental_forms, relative_nullity
from nullitylab.nullity import Distribution, local_frame, splitting_from_frame
from nullitylab.osculating import EllipticStructure, curvature_ellipse, osculating_flag
from nullitylab.verify import SCENARIOS, ConfigError, SampleGrid, normalize_config, run_scenario, worker_count

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("nullitylab")


def parse_grid(text: str) -> list[int]:
    try:
        counts = [int(t) for t in text.lower().split("x")]
    except ValueError:
        raise ConfigError(f"--grid: expected counts like 21x21, got {text!r}") from None
    if not counts or any(c < 1 for c in counts):
        raise ConfigError(f"--grid: counts must be positive, got {text!r}")
    return counts


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_pairs(items, flag: str) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"{flag}: expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v.strip())
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


# ---------------------------------------------------------------------------
# surfaces on grids


def default_ranges(chart) -> list[tuple[float, float]]:
    out = []
    for i, (lo, hi) in enumerate(chart.domain):
        if chart.intrinsic_dim == 3 and i == 2:
            out.append((0.0, 2 * math.pi * 15 / 16))
            continue
        pad = 0.05 * (hi - lo)
        out.append((lo + pad, hi - pad))
    return out


def _surface_from_args(args):
    params = parse_pairs(args.param, "--param")
    for key in ("phi", "theta"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    try:
        return build_surface(args.surface, params)
    except (CatalogError, GeometryError) as exc:
        raise ConfigError(str(exc)) from exc


def _grid_for(surface, text) -> SampleGrid:
    chart = surface.chart
    counts = parse_grid(text) if text else [21] * chart.intrinsic_dim
    if len(counts) != chart.intrinsic_dim:
        raise ConfigError(f"--grid: surface {surface.kind!r} has {chart.intrinsic_dim} parameters, "
                          f"got {len(counts)} counts")
    return SampleGrid(counts, default_ranges(chart))


def point_table(surface, grid: SampleGrid) -> tuple[list[str], list[list]]:
    """Per-point (parameters, H, nu, first ellipse defect), skipping singular points."""
    chart = surface.chart
    pts = grid.points()
    mask = singular_mask(chart, pts)
    reg = np.flatnonzero(~mask)
    tower = evaluate_tower(chart, pts[:, reg], 2)
    n = chart.intrinsic_dim
    names = ["u", "v", "theta"][:n] if n <= 3 else [f"x{i}" for i in range(n)]
    rows = []
    D = Distribution.coordinate(3, [2], "d_theta") if n == 3 else None
    for j, i in enumerate(reg):
        tw = tower.at(j)
        ff = fundamental_forms(tw, chart.ambient)
        nu = relative_nullity(ff).index
        defect = float("nan")
        try:
            fl = osculating_flag(tw, chart.ambient)
            if n == 2 and fl.tau_open >= 1:
                defect = curvature_ellipse(tw, fl, 1, EllipticStructure.rotation(ff), 32).circle_defect
            elif D is not None and fl.tau_open >= 1:
                st = splitting_from_frame(local_frame(tw, D))
                defect = curvature_ellipse(tw, fl, 1, EllipticStructure.from_splitting(st, tol=1e-3), 32).circle_defect
        except GeometryError:
            pass
        rows.append([*pts[:, i].tolist(), ff.mean_curvature, nu, defect])
    return names + ["H", "nu", "first_ellipse_defect"], rows


def ellipse_table(surface, grid: SampleGrid) -> tuple[list[str], list[list]]:
    chart = surface.chart
    if chart.intrinsic_dim != 2:
        raise ConfigError("ellipse tables are defined for surfaces")
    pts = grid.points()
    tower = evaluate_tower(chart, pts, 4)
    rows = []
    for i in range(pts.shape[1]):
        tw = tower.at(i)
        ff = fundamental_forms(tw, chart.ambient)
        fl = osculating_flag(tw, chart.ambient)
        Jr = EllipticStructure.rotation(ff)
        for ell in range(0, fl.tau_open + 1):
            e = curvature_ellipse(tw, fl, ell, Jr, 32)
            rows.append([pts[0, i], pts[1, i], ell, e.kappa, e.mu, e.circle_defect])
    return ["u", "v", "ell", "kappa", "mu", "defect"], rows


# ---------------------------------------------------------------------------
# subcommands


def cmd_build(args) -> int:
    surface = _surface_from_args(args)
    grid = _grid_for(surface, args.grid)
    pts = grid.points()
    mask = singular_mask(surface.chart, pts)
    verts = surface.chart(pts)
    faces = grid_faces(*grid.counts, mask) if surface.chart.intrinsic_dim == 2 else []
    out = Path(args.out or f"{surface.kind}.obj")
    write_obj(out, verts, faces)
    print(f"wrote {out} ({verts.shape[0]} vertices, {len(faces)} faces)")
    if args.csv:
        header, rows = point_table(surface, grid)
        write_csv(args.csv, header, rows)
        print(f"wrote {args.csv} ({len(rows)} rows)")
    return EXIT_PASS


def cmd_export(args) -> int:
    surface = _surface_from_args(args)
    if args.table == "profile":
        prof = surface.extras.get("profile")
        if prof is None:
            raise ConfigError("--table profile needs --surface delaunay")
        header, rows = ["x", "phi", "dphi"], prof.samples_csv_rows()
    else:
        grid = _grid_for(surface, args.grid)
        header, rows = (point_table if args.table == "points" else ellipse_table)(surface, grid)
    out = Path(args.out or f"{surface.kind}-{args.table}.csv")
    write_csv(out, header, rows)
    print(f"wrote {out} ({len(rows)} rows)")
    if args.obj:
        grid = _grid_for(surface, args.grid)
        write_obj(args.obj, surface.chart(grid.points()))
    return EXIT_PASS


def cmd_verify(args) -> int:
    raw = load_config(args.config)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    tol = parse_pairs(args.tol, "--tol")
    if tol:
        raw.setdefault("tolerances", {})
        if not isinstance(raw["tolerances"], dict):
            raise ConfigError("tolerances: must be an object")
        raw["tolerances"].update(tol)
    if args.grid:
        raw.setdefault("grid", {})
        if not isinstance(raw["grid"], dict):
            raise ConfigError("grid: must be an object")
        raw["grid"]["counts"] = parse_grid(args.grid)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = normalize_config(raw)
    worker_count()  # validate the environment before running
    report = run_scenario(cfg)
    out = args.out or cfg["outputs"].get("report_path") or f"{cfg['scenario']}-report.json"
    write_json(out, report.to_dict(include_timing=args.timing))
    for line in report.summary_lines():
        print(line)
    print(f"report: {out}")
    log.info("elapsed %.2f s", report.timing)
    return EXIT_PASS if report.overall_pass else EXIT_FAIL


def cmd_list(args) -> int:
    width = max(len(n) for n in SCENARIOS)
    for name, sc in SCENARIOS.items():
        print(f"{name:<{width}}  {sc.description}")
    if args.surfaces:
        print()
        width = max(len(n) for n in SURFACES)
        for name, (_, desc) in SURFACES.items():
            print(f"{name:<{width}}  {desc}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nullitylab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def surface_args(sp):
        sp.add_argument("--surface", required=True, help=f"one of: {', '.join(SURFACES)}")
        sp.add_argument("--param", action="append", metavar="KEY=VALUE", help="surface parameter")
        sp.add_argument("--phi", type=float)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--grid", help="sample counts, e.g. 21x21 or 9x9x16")
        sp.add_argument("--out", help="output path")

    b = sub.add_parser("build", help="sample a surface and write an OBJ mesh")
    surface_args(b)
    b.add_argument("--csv", help="also write per-point H, nu and ellipse defect")
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("export", help="write per-point, ellipse or profile tables as CSV")
    surface_args(e)
    e.add_argument("--table", choices=["points", "ellipses", "profile"], default="points")
    e.add_argument("--obj", help="also write the sampled vertices as OBJ")
    e.set_defaults(func=cmd_export)

    v = sub.add_parser("verify", help="run a scenario config and write a JSON report")
    v.add_argument("--config", required=True)
    v.add_argument("--tol", action="append", metavar="NAME=VALUE")
    v.add_argument("--grid")
    v.add_argument("--seed", type=int)
    v.add_argument("--out")
    v.add_argument("--timing", action="store_true", help="include wall time in the report")
    v.set_defaults(func=cmd_verify)

    ls = sub.add_parser("list-scenarios", help="list bundled scenarios")
    ls.add_argument("--surfaces", action="store_true", help="also list surface kinds")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
