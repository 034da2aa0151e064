"""Named surfaces buildable from a kind string and a parameter dict."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from nullitylab import jets as J
from nullitylab.constructions import bipolar_chart, cylinder_chart
from nullitylab.immersion import (
    AmbientSpace,
    Chart,
    circular_cylinder_chart,
    plane_chart,
    unit_sphere_chart,
)
from nullitylab.minimal import STOCK_DATA, delaunay_profile, orthogonal_sum_hat, weierstrass_chart


class CatalogError(ValueError):
    """Unknown surface kind or bad parameter."""


@dataclass
class Surface:
    kind: str
    chart: Chart
    params: dict
    extras: dict = field(default_factory=dict)


def ellipse_cylinder_chart(a: float = 1.0, b: float = 0.5, height: float = 2.0) -> Chart:
    def ev(p):
        t, s = p
        return [a * J.cos(t), b * J.sin(t), s]

    return Chart(2, AmbientSpace.euclidean(3), ((-np.pi, np.pi), (-height, height)), ev, f"ellipse-cylinder[{a},{b}]")


def _data(name: str, extent):
    if name not in STOCK_DATA:
        raise CatalogError(f"unknown Weierstrass data {name!r}; choose from {sorted(STOCK_DATA)}")
    return STOCK_DATA[name]() if extent is None else STOCK_DATA[name](extent)


def _take(params: dict, allowed: dict) -> dict:
    extra = set(params) - set(allowed)
    if extra:
        raise CatalogError(f"unknown surface parameter(s): {sorted(extra)}")
    out = dict(allowed)
    out.update(params)
    return out


def _plane(p):
    p = _take(p, {"extent": 2.0})
    return Surface("plane", plane_chart(p["extent"]), p)


def _sphere(p):
    p = _take(p, {})
    return Surface("sphere", unit_sphere_chart(), p)


def _cylinder(p):
    p = _take(p, {"radius": 1.0})
    return Surface("cylinder", circular_cylinder_chart(p["radius"]), p)


def _ellipse_cylinder(p):
    p = _take(p, {"a": 1.0, "b": 0.5})
    return Surface("ellipse-cylinder", ellipse_cylinder_chart(p["a"], p["b"]), p)


def _minimal(name, theta_default=0.0):
    def build(p):
        p = _take(p, {"theta": theta_default, "extent": None})
        m = weierstrass_chart(_data(name, p["extent"]), p["theta"])
        return Surface(name if theta_default == 0.0 else "helicoid", m.chart, p, {"minimal": m})

    return build


def _hat(name):
    def build(p):
        p = _take(p, {"phi": np.pi / 6, "theta": 0.0, "extent": None})
        data = _data(name, p["extent"])
        return Surface(f"{name}-hat", orthogonal_sum_hat(data, p["theta"], p["phi"]), p, {"data": data})

    return build


def _bipolar(p):
    p = _take(p, {"data": "enneper", "phi": np.pi / 6, "theta": 0.0, "extent": None})
    data = _data(p["data"], p["extent"])
    hat = orthogonal_sum_hat(data, p["theta"], p["phi"])
    ut = bipolar_chart(hat)
    return Surface("bipolar", ut.chart, p, {"hat": hat, "unit_tangent": ut, "data": data})


def _delaunay(p):
    p = _take(p, {"H": 0.2, "c0": 0.3, "n": 3, "phi0": 2.5, "sign": -1, "x_range": [0.5, 3.0],
                  "layout": "axial", "samples": 4001})
    prof, g = delaunay_profile(p["H"], p["c0"], tuple(p["x_range"]), n=int(p["n"]), phi0=p["phi0"],
                               sign=int(p["sign"]), samples=int(p["samples"]), layout=p["layout"])
    F = cylinder_chart(g, int(p["n"]) - 2) if int(p["n"]) > 2 else g
    return Surface("delaunay", g, p, {"profile": prof, "cylinder": F})


SURFACES: dict[str, tuple[Callable[[dict], Surface], str]] = {
    "plane": (_plane, "flat plane in R^3"),
    "sphere": (_sphere, "round unit sphere in R^3 (latitude/longitude)"),
    "cylinder": (_cylinder, "circular cylinder in R^3"),
    "ellipse-cylinder": (_ellipse_cylinder, "cylinder over an ellipse in R^3"),
    "enneper": (_minimal("enneper"), "Enneper surface, member theta of its associated family"),
    "catenoid": (_minimal("catenoid"), "catenoid, member theta of its associated family"),
    "helicoid": (_minimal("catenoid", np.pi / 2), "helicoid as the conjugate of the catenoid"),
    "enneper-hat": (_hat("enneper"), "orthogonal sum of two Enneper associates in R^6"),
    "catenoid-hat": (_hat("catenoid"), "orthogonal sum of two catenoid associates in R^6"),
    "bipolar": (_bipolar, "unit tangent bundle of the R^6 orthogonal sum, mapped into S^5"),
    "delaunay": (_delaunay, "rotational surface with the Delaunay-type profile"),
}


def build_surface(kind: str, params: dict[str, Any] | None = None) -> Surface:
    if kind not in SURFACES:
        raise CatalogError(f"unknown surface kind {kind!r}; choose from {sorted(SURFACES)}")
    try:
        return SURFACES[kind][0](dict(params or {}))
    except CatalogError:
        raise
    except (TypeError, ValueError) as exc:
        raise CatalogError(f"bad parameters for {kind!r}: {exc}") from exc
