"""
Scalar figures of merit from far-field pattern cuts.

All extractors work on the sampled dB values of a :class:`PatternCut` and
are insensitive to a uniform dB offset of the cut.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import RangeError
from .solver import DB_FLOOR, PatternCut

NULL_DEPTH_DB = 15.0
XPOL_WINDOW = 3.0
FLOOR_TEXT = "<=floor"


def _peak_index(cut):
    return int(np.argmax(cut.co_db))


def _parabola_crossing(t, v, level):
    """Root of the 3-point parabola through (t, v) at ``level`` lying inside
    the span of the bracketing pair ``t[1:]``."""
    a, b, c = np.polyfit(t - t[1], v, 2)
    lo, hi = sorted((0.0, t[2] - t[1]))
    if abs(a) > 1e-14:
        disc = b * b - 4.0 * a * (c - level)
        if disc >= 0.0:
            sq = math.sqrt(disc)
            for root in ((-b + sq) / (2 * a), (-b - sq) / (2 * a)):
                if lo - 1e-12 <= root <= hi + 1e-12:
                    return t[1] + root
    # linear fallback on the bracketing pair
    f = (level - v[1]) / (v[2] - v[1])
    return t[1] + f * (t[2] - t[1])


def _half_power_crossing(cut, direction):
    th, v = cut.theta_deg, cut.co_db
    n = len(v)
    i0 = _peak_index(cut)
    level = v[i0] - 3.0
    i = i0
    while 0 <= i + direction < n:
        j = i + direction
        if v[j] <= level:
            # third point: next sample toward the peak, else beyond the crossing
            k = i - direction if 0 <= i - direction < n else j + direction
            if not 0 <= k < n:
                f = (level - v[i]) / (v[j] - v[i])
                return th[i] + f * (th[j] - th[i])
            return _parabola_crossing(th[[k, i, j]], v[[k, i, j]], level)
        i = j
    side = "upper" if direction > 0 else "lower"
    raise RangeError(f"{side} -3 dB crossing lies outside the cut range")


def hpbw(cut: PatternCut) -> float:
    """Half-power beamwidth (deg) between the two -3 dB crossings.

    Each crossing is located on the parabola (in dB) through the two samples
    that bracket it and the next sample toward the peak.

    Raises
    ------
    RangeError
        A crossing lies outside the sampled range.
    """
    return float(_half_power_crossing(cut, +1) - _half_power_crossing(cut, -1))


def _first_null_index(v, i0, direction, depth=NULL_DEPTH_DB):
    deep = False
    i = i0
    while 0 <= i + direction < len(v):
        j = i + direction
        if v[i] <= v[i0] - depth:
            deep = True
        if deep and v[j] > v[i]:
            return i
        i = j
    return None


def _refine_null(th, v, i):
    """V-shaped fit of linear amplitude around the minimum sample ``i``."""
    if i == 0 or i == len(v) - 1:
        return float(th[i])
    a = 10.0 ** (np.asarray(v[i - 1:i + 2], float) / 20.0)
    h = th[i + 1] - th[i]
    if a[2] <= a[0]:
        # null lies toward i+1; samples i-1, i share the falling branch
        return float(th[i] + a[1] * h / (a[0] - a[1])) if a[0] > a[1] else float(th[i])
    return float(th[i] - a[1] * h / (a[2] - a[1]))


def first_null(cut: PatternCut, direction=+1) -> Optional[float]:
    """Angle (deg) of the first null on one side of the main beam, or None."""
    v = cut.co_db
    i = _first_null_index(v, _peak_index(cut), direction)
    if i is None:
        return None
    return _refine_null(cut.theta_deg, v, i)


def _first_sidelobe(v, i0, direction):
    n = _first_null_index(v, i0, direction)
    if n is None:
        return None
    i = n + direction
    while 0 <= i + direction < len(v):
        if v[i] >= v[i - direction] and v[i] >= v[i + direction]:
            vm, v0, vp = v[i - 1], v[i], v[i + 1]
            curv = vp - 2.0 * v0 + vm
            if curv < 0:
                return float(v0 - (vp - vm) ** 2 / (8.0 * curv))
            return float(v0)
        i += direction
    return None


def first_sll(cut: PatternCut) -> Optional[float]:
    """First sidelobe level (dB below the peak), worst of the two sides.

    None when neither side shows a null followed by a local maximum inside
    the sampled range.
    """
    v = cut.co_db
    i0 = _peak_index(cut)
    found = [s for s in (_first_sidelobe(v, i0, +1), _first_sidelobe(v, i0, -1))
             if s is not None]
    if not found:
        return None
    return max(found) - float(v[i0])


def xpol_peak(cut: PatternCut, window_multiplier=XPOL_WINDOW) -> Optional[float]:
    """Peak cross-polar level relative to the co-polar peak within
    ``|theta| <= window_multiplier * HPBW``; None for an empty window or a
    cross-polar field at the numerical floor."""
    if window_multiplier <= 0:
        return None
    w = window_multiplier * hpbw(cut)
    sel = np.abs(cut.theta_deg) <= w
    if not np.any(sel):
        return None
    cx = cut.cx_db[sel]
    if np.all(cx <= DB_FLOOR):
        return None
    return float(cx.max() - np.max(cut.co_db))


def pointing(cut: PatternCut) -> float:
    """Main-beam direction (deg) from a parabola through the peak sample and
    its neighbours.

    Raises
    ------
    RangeError
        Peak sample at either end of the cut.
    """
    i = _peak_index(cut)
    if i == 0 or i == len(cut.co_db) - 1:
        raise RangeError("beam peak lies at the cut boundary")
    vm, v0, vp = cut.co_db[i - 1:i + 2]
    h = cut.theta_deg[i + 1] - cut.theta_deg[i]
    curv = vp - 2.0 * v0 + vm
    if curv >= 0:
        return float(cut.theta_deg[i])
    return float(cut.theta_deg[i] + 0.5 * h * (vm - vp) / curv)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

PLANE_NAMES = {0.0: "E", 90.0: "H"}


@dataclass(frozen=True)
class PlaneMetrics:
    phi_deg: float
    gain_dbi: float
    directivity_dbi: float
    hpbw_deg: float
    first_sll_db: Optional[float]
    xpol_peak_db: Optional[float]
    pointing_deg: float

    @property
    def plane(self):
        return PLANE_NAMES.get(float(self.phi_deg), f"phi{self.phi_deg:g}")


@dataclass(frozen=True)
class MetricsReport:
    scenario_id: str
    frequency_ghz: float
    planes: tuple
    xpol_window: float = XPOL_WINDOW
    notes: tuple = field(default_factory=tuple)

    def plane(self, phi_deg):
        for p in self.planes:
            if p.phi_deg == phi_deg:
                return p
        raise KeyError(phi_deg)

    @property
    def gain_dbi(self):
        return self.planes[0].gain_dbi

    @property
    def worst_sll_db(self):
        vals = [p.first_sll_db for p in self.planes if p.first_sll_db is not None]
        return max(vals) if vals else None


def plane_metrics(cut: PatternCut, window_multiplier=XPOL_WINDOW) -> PlaneMetrics:
    return PlaneMetrics(cut.phi_plane, cut.peak_gain_dbi, cut.directivity_dbi, hpbw(cut),
                        first_sll(cut), xpol_peak(cut, window_multiplier), pointing(cut))


def metrics_report(scenario_id, cuts, window_multiplier=XPOL_WINDOW, notes=()):
    cuts = list(cuts)
    if not cuts:
        raise ValueError("need at least one cut")
    return MetricsReport(scenario_id, cuts[0].frequency_ghz,
                         tuple(plane_metrics(c, window_multiplier) for c in cuts),
                         window_multiplier, tuple(notes))


CSV_COLUMNS = ("scenario", "frequency_ghz", "plane", "phi_deg", "gain_dbi",
               "directivity_dbi", "hpbw_deg", "first_sll_db", "xpol_peak_db",
               "pointing_deg", "xpol_window_hpbw")


def _fmt(v, digits=4):
    if v is None:
        return "none"
    return f"{v:.{digits}f}"


def _rows(reports):
    for r in reports:
        for p in r.planes:
            yield [r.scenario_id, f"{r.frequency_ghz:.3f}", p.plane, f"{p.phi_deg:g}",
                   _fmt(p.gain_dbi), _fmt(p.directivity_dbi), _fmt(p.hpbw_deg),
                   _fmt(p.first_sll_db, 3),
                   FLOOR_TEXT if p.xpol_peak_db is None else _fmt(p.xpol_peak_db, 3),
                   _fmt(p.pointing_deg, 6), f"{r.xpol_window:g}"]


def reports_to_csv(reports) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for row in _rows(reports):
        out.write(",".join(row) + "\n")
    return out.getvalue()


def format_table(header, rows) -> str:
    """Left-aligned text table with two-space gutters."""
    rows = [list(map(str, r)) for r in rows]
    widths = [max(len(str(h)), *(len(r[i]) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(header)]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip(),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def reports_to_table(reports) -> str:
    return format_table(CSV_COLUMNS, _rows(reports))
