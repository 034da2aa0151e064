"""Mean curvature of the bipolar map over the base grid, next to the
ellipse-radius expression |k1^2 - m1^2| / (3 k0 k2) of the base surface."""

import argparse
import math

import numpy as np

from nullitylab.constructions import bipolar_chart
from nullitylab.export import write_csv
from nullitylab.immersion import evaluate_tower, fundamental_forms
from nullitylab.minimal import STOCK_DATA, orthogonal_sum_hat
from nullitylab.osculating import EllipticStructure, curvature_ellipse, osculating_flag


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default="enneper", choices=sorted(STOCK_DATA))
    ap.add_argument("--phi", type=float, nargs="+", default=[math.pi / 6, math.pi / 4 + 0.2, 1.2])
    ap.add_argument("--out", default="bipolar_H.csv")
    args = ap.parse_args()
    rows = []
    for phi in args.phi:
        hat = orthogonal_sum_hat(STOCK_DATA[args.data](), 0.0, phi)
        chart = bipolar_chart(hat).chart
        for u in np.linspace(-0.5, 0.5, 5):
            for v in np.linspace(-0.5, 0.5, 5):
                H = fundamental_forms(evaluate_tower(chart, [u, v, 0.3], 2), chart.ambient).mean_curvature
                tw = evaluate_tower(hat, [u, v], 3)
                ff = fundamental_forms(tw, hat.ambient)
                fl = osculating_flag(tw, hat.ambient)
                Jr = EllipticStructure.rotation(ff)
                e = [curvature_ellipse(tw, fl, ell, Jr) for ell in (0, 1, 2)]
                pred = abs(e[1].kappa ** 2 - e[1].mu ** 2) / (3 * e[0].kappa * e[2].kappa)
                rows.append([phi, u, v, H, pred, H / pred])
        ratios = np.array([r[5] for r in rows if r[0] == phi])
        Hs = np.array([r[3] for r in rows if r[0] == phi])
        print(f"phi={phi:.4f}  H in [{Hs.min():.8f}, {Hs.max():.8f}]  ratio in [{ratios.min():.8f}, {ratios.max():.8f}]")
    write_csv(args.out, ["phi", "u", "v", "H", "radius_expression", "ratio"], rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
