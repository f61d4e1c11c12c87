"""Import of MATPOWER case files (``.m``) into a ``PowerSystem``.

Only the pieces the dispatch model uses are read: bus types and demand,
generator limits and costs, branch reactances and ``rateA`` limits.
Quadratic costs are replaced by a convex piecewise-linear fit with
``segments`` equal-width pieces (secant slopes). Every generator is
committed in every period.
"""
from __future__ import annotations

import re

import numpy as np

from sedpce.errors import ParseError
from sedpce.grid import Bus, Generator, Line, Load, PowerSystem, WindFarm

_MATRIX = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\]\s*;", re.S)


def parse_case(text: str) -> dict[str, np.ndarray]:
    """Numeric matrices of a MATPOWER case keyed by field name."""
    out = {}
    for name, body in _MATRIX.findall(text):
        rows = []
        for raw in body.splitlines():
            raw = raw.split("%", 1)[0].strip().rstrip(";").strip()
            if not raw:
                continue
            try:
                rows.append([float(v) for v in raw.replace(",", " ").split()])
            except ValueError:
                break  # non-numeric matrix (e.g. gentype); not needed
        else:
            if rows:
                width = max(len(r) for r in rows)
                out[name] = np.array([r + [np.nan] * (width - len(r)) for r in rows])
    for key in ("bus", "gen", "branch"):
        if key not in out:
            raise ParseError(f"MATPOWER case has no mpc.{key} matrix")
    return out


def _segments(cost_row, p_max, segments):
    model, n = int(cost_row[0]), int(cost_row[3])
    coef = cost_row[4 : 4 + (2 * n if model == 1 else n)]
    if model == 1:  # piecewise linear, (p, f) pairs
        p, f = coef[0::2], coef[1::2]
        widths = np.diff(p)
        slopes = np.diff(f) / np.where(widths > 0, widths, 1.0)
        keep = widths > 0
        widths, slopes = widths[keep], slopes[keep]
        if widths.sum() < p_max:
            widths[-1] += p_max - widths.sum()
        return tuple(zip(widths.tolist(), slopes.tolist()))
    poly = np.poly1d(coef)
    edges = np.linspace(0.0, p_max, segments + 1)
    slopes = np.diff(poly(edges)) / np.diff(edges)
    slopes = np.maximum.accumulate(np.maximum(slopes, 0.0))
    return tuple((float(w), float(s)) for w, s in zip(np.diff(edges), slopes))


def system_from_case(text: str, periods: int = 1, wind_buses=(), load_profile=None,
                     segments: int = 3, name: str = "matpower") -> PowerSystem:
    """Build a ``PowerSystem`` from MATPOWER text.

    ``load_profile`` (length ``periods``) scales every bus demand per
    period; it defaults to a flat profile.
    """
    mpc = parse_case(text)
    bus, gen, branch = mpc["bus"], mpc["gen"], mpc["branch"]
    gencost = mpc.get("gencost")
    profile = np.ones(periods) if load_profile is None else np.asarray(load_profile, dtype=float)
    if profile.size != periods:
        raise ParseError(f"load profile has {profile.size} entries, expected {periods}")

    buses = tuple(Bus(int(b[0]), slack=int(b[1]) == 3) for b in bus)
    loads = tuple(
        Load(f"D{int(b[0])}", int(b[0]), tuple(float(v) for v in b[2] * profile))
        for b in bus if b[2] > 0
    )
    lines = []
    for k, br in enumerate(branch):
        if br.size > 10 and br[10] == 0:  # out of service
            continue
        rate = br[5]
        limit = float(rate) if rate > 0 else np.inf
        lines.append(Line(k + 1, int(br[0]), int(br[1]), float(br[3]), -limit, limit))
    gens = []
    for k, g in enumerate(gen):
        if g.size > 7 and g[7] <= 0:
            continue
        p_max, p_min = float(g[8]), max(float(g[9]), 0.0)
        segs = _segments(gencost[k], p_max, segments) if gencost is not None else ((p_max, 0.0),)
        gens.append(Generator(f"G{k + 1}", int(g[0]), p_min, p_max, segs, (1,) * periods))
    farms = tuple(WindFarm(i + 1, int(b)) for i, b in enumerate(wind_buses))
    return PowerSystem(periods, buses, tuple(lines), tuple(gens), loads, farms, name=name)
