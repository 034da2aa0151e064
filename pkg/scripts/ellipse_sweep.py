"""Sweep the mixing angle phi of the orthogonal sum and tabulate the first and
second curvature-ellipse defects against |cos 2 phi| and 0."""

import argparse
import math

import numpy as np

from nullitylab.export import write_csv
from nullitylab.immersion import evaluate_tower, fundamental_forms
from nullitylab.minimal import STOCK_DATA, orthogonal_sum_hat
from nullitylab.osculating import EllipticStructure, curvature_ellipse, osculating_flag


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default="enneper", choices=sorted(STOCK_DATA))
    ap.add_argument("--steps", type=int, default=19)
    ap.add_argument("--point", type=float, nargs=2, default=[0.3, -0.2])
    ap.add_argument("--out", default="ellipse_sweep.csv")
    args = ap.parse_args()
    rows = []
    for phi in np.linspace(0.05, math.pi / 2 - 0.05, args.steps):
        chart = orthogonal_sum_hat(STOCK_DATA[args.data](), 0.0, phi)
        tw = evaluate_tower(chart, args.point, 4)
        ff = fundamental_forms(tw, chart.ambient)
        fl = osculating_flag(tw, chart.ambient)
        Jr = EllipticStructure.rotation(ff)
        e1 = curvature_ellipse(tw, fl, 1, Jr)
        e2 = curvature_ellipse(tw, fl, 2, Jr)
        rows.append([phi, abs(math.cos(2 * phi)), e1.circle_defect, e2.circle_defect, e1.kappa, e1.mu])
        print(f"phi={phi:.4f}  |cos2phi|={rows[-1][1]:.6f}  e1={e1.circle_defect:.6f}  e2={e2.circle_defect:.2e}")
    write_csv(args.out, ["phi", "abs_cos_2phi", "first_defect", "second_defect", "kappa1", "mu1"], rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
