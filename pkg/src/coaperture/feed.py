"""
Behavioural feed-horn models.

The feed far field is written as

    E(theta, phi) = E_e(theta) cos(phi') theta_hat - E_h(theta) sin(phi') phi_hat

with ``phi' = phi - phi_0`` (``phi_0 = 0`` for x polarisation, 90 deg for y).
Projected on Ludwig-3 unit vectors this gives

    co = E_e cos^2(phi') + E_h sin^2(phi')
    cx = (E_e - E_h) sin(phi') cos(phi')

so a feed with identical E- and H-plane patterns has no cross-polar field.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import DomainError

POLARIZATIONS = ("linear_x", "linear_y")


@dataclass(frozen=True)
class TabulatedPattern:
    """E/H-plane cuts, amplitude in dB and phase in degrees."""

    angle_deg: tuple
    e_db: tuple
    h_db: tuple
    e_phase_deg: Optional[tuple] = None
    h_phase_deg: Optional[tuple] = None

    def __post_init__(self):
        a = np.asarray(self.angle_deg, float)
        if a.ndim != 1 or a.size < 2:
            raise ValueError("tabulated pattern needs at least two angles")
        if a[0] != 0.0:
            raise ValueError("tabulated angles must start at 0 deg")
        if np.any(np.diff(a) <= 0):
            raise ValueError("tabulated angles must be strictly increasing")
        for name in ("e_db", "h_db"):
            v = np.asarray(getattr(self, name), float)
            if v.shape != a.shape:
                raise ValueError(f"{name} length does not match angle_deg")
            if abs(v[0]) > 1e-9:
                raise ValueError(f"{name} must be normalised to 0 dB at boresight")
        for name in ("e_phase_deg", "h_phase_deg"):
            v = getattr(self, name)
            if v is not None and len(v) != a.size:
                raise ValueError(f"{name} length does not match angle_deg")


@dataclass(frozen=True)
class FeedPattern:
    """Rotationally symmetric feed model.

    ``model`` selects ``cos_q`` (``q_e``/``q_h``), ``gaussian``
    (``taper_db`` reached at ``taper_angle_deg``, same in both planes) or
    ``tabulated`` (``table``).
    """

    model: str = "cos_q"
    q_e: float = 0.0
    q_h: float = 0.0
    taper_db: float = 0.0
    taper_angle_deg: float = 0.0
    table: Optional[TabulatedPattern] = None
    polarization: str = "linear_x"
    phase_center_offset: float = 0.0

    def __post_init__(self):
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")
        if self.model == "cos_q":
            if self.q_e < 0 or self.q_h < 0:
                raise ValueError("q_e and q_h must be >= 0")
        elif self.model == "gaussian":
            if self.taper_db > 0 or not 0 < self.taper_angle_deg < 90:
                raise ValueError("gaussian needs taper_db <= 0 and 0 < taper_angle_deg < 90")
        elif self.model == "tabulated":
            if self.table is None:
                raise ValueError("tabulated model needs a table")
        else:
            raise ValueError(f"unknown feed model {self.model!r}")

    @classmethod
    def cos_q(cls, q_e, q_h=None, **kw):
        return cls(model="cos_q", q_e=float(q_e), q_h=float(q_e if q_h is None else q_h), **kw)

    @classmethod
    def from_edge_taper(cls, edge_taper_db, half_angle_deg, **kw):
        q = q_from_edge_taper(edge_taper_db, half_angle_deg)
        return cls.cos_q(q, q, **kw)

    @classmethod
    def gaussian(cls, taper_db, taper_angle_deg, **kw):
        return cls(model="gaussian", taper_db=float(taper_db),
                   taper_angle_deg=float(taper_angle_deg), **kw)

    @classmethod
    def tabulated(cls, table, **kw):
        return cls(model="tabulated", table=table, **kw)

    @property
    def balanced(self):
        if self.model == "cos_q":
            return self.q_e == self.q_h
        if self.model == "gaussian":
            return True
        t = self.table
        return (tuple(t.e_db) == tuple(t.h_db)
                and tuple(t.e_phase_deg or ()) == tuple(t.h_phase_deg or ()))


@dataclass(frozen=True)
class PolarizedFieldSample:
    co: complex
    cx: complex


def q_from_edge_taper(edge_taper_db, half_angle):
    """Exponent q of a cos^q feed that is ``edge_taper_db`` down at ``half_angle`` deg."""
    if edge_taper_db > 0:
        raise DomainError("edge taper must be <= 0 dB")
    if not 0.0 < half_angle < 90.0:
        raise DomainError("half angle must lie in (0, 90) deg")
    if edge_taper_db == 0:
        return 0.0
    return edge_taper_db / (20.0 * math.log10(math.cos(math.radians(half_angle))))


def plane_fields(pattern: FeedPattern, theta_rad):
    """Complex E- and H-plane field values at ``theta_rad`` (array)."""
    th = np.asarray(theta_rad, dtype=float)
    if pattern.model == "cos_q":
        c = np.clip(np.cos(th), 0.0, None)
        return (c ** pattern.q_e).astype(complex), (c ** pattern.q_h).astype(complex)
    if pattern.model == "gaussian":
        db = pattern.taper_db * (th / math.radians(pattern.taper_angle_deg)) ** 2
        a = (10.0 ** (db / 20.0)).astype(complex)
        return a, a
    t = pattern.table
    ang = np.radians(np.asarray(t.angle_deg, float))
    out = []
    for amp, ph in ((t.e_db, t.e_phase_deg), (t.h_db, t.h_phase_deg)):
        db = np.interp(th, ang, np.asarray(amp, float))
        deg = np.interp(th, ang, np.asarray(ph, float)) if ph is not None else 0.0
        out.append(10.0 ** (db / 20.0) * np.exp(1j * np.radians(deg)))
    return out[0], out[1]


def feed_components(pattern: FeedPattern, theta_rad, phi_rad):
    """Vectorised Ludwig-3 (co, cx) feed amplitudes."""
    ee, eh = plane_fields(pattern, theta_rad)
    p = np.asarray(phi_rad, float)
    if pattern.polarization == "linear_y":
        p = p - 0.5 * math.pi
    c, s = np.cos(p), np.sin(p)
    return ee * c * c + eh * s * s, (ee - eh) * s * c


def eval_feed(pattern: FeedPattern, theta, phi) -> PolarizedFieldSample:
    """Feed field at one direction (degrees) in the feed frame.

    Raises
    ------
    DomainError
        ``theta`` outside [0, 90] deg.
    """
    if not 0.0 <= theta <= 90.0:
        raise DomainError(f"theta={theta} deg outside the forward hemisphere")
    co, cx = feed_components(pattern, math.radians(theta), math.radians(phi))
    return PolarizedFieldSample(complex(co), complex(cx))


def _radial_power(pattern, theta_rad):
    ee, eh = plane_fields(pattern, theta_rad)
    return 0.5 * (np.abs(ee) ** 2 + np.abs(eh) ** 2)


def _power_integral(pattern, upper):
    """Integral of the plane-averaged power times sin(theta) over [0, upper]."""
    def f(t):
        return _radial_power(pattern, t) * np.sin(t)

    if pattern.model != "tabulated":
        return integrate.quad(lambda t: float(f(t)), 0.0, upper, limit=200,
                              epsabs=1e-13, epsrel=1e-10)[0]
    # piecewise table: Simpson on each interval, split at the breakpoints
    knots = np.radians(np.asarray(pattern.table.angle_deg, float))
    knots = np.concatenate([[0.0], knots[(knots > 0) & (knots < upper)], [upper]])
    t = np.concatenate([np.linspace(a, b, 17)[:-1] for a, b in zip(knots[:-1], knots[1:])]
                       + [[upper]])
    return float(integrate.simpson(f(t), x=t))


def hemisphere_power(pattern: FeedPattern):
    """Radiated power over the forward hemisphere (steradian-weighted)."""
    if pattern.model == "cos_q":
        return math.pi * (1.0 / (2 * pattern.q_e + 1) + 1.0 / (2 * pattern.q_h + 1))
    return 2.0 * math.pi * _power_integral(pattern, 0.5 * math.pi)


def spillover_efficiency(pattern: FeedPattern, cone_half_angle):
    """Fraction of feed power radiated inside a cone of ``cone_half_angle`` deg.

    Closed form for cos-q feeds, ``1 - cos^(2q+1)(theta)`` per plane and
    averaged; adaptive quadrature otherwise.
    """
    if not 0.0 < cone_half_angle <= 90.0:
        raise DomainError("cone half angle must lie in (0, 90] deg")
    th = math.radians(cone_half_angle)
    if pattern.model == "cos_q":
        c = max(math.cos(th), 0.0)
        pe = (1.0 - c ** (2 * pattern.q_e + 1)) / (2 * pattern.q_e + 1)
        ph = (1.0 - c ** (2 * pattern.q_h + 1)) / (2 * pattern.q_h + 1)
        return math.pi * (pe + ph) / hemisphere_power(pattern)
    return min(1.0, 2.0 * math.pi * _power_integral(pattern, th) / hemisphere_power(pattern))


def _read_plane_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                if rows:
                    raise
                continue  # header line
    if not rows:
        raise ValueError(f"{path}: no pattern rows")
    widths = {len(r) for r in rows}
    if widths not in ({2}, {3}):
        raise ValueError(f"{path}: expected theta_deg,amp_db[,phase_deg] rows")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1], (arr[:, 2] if arr.shape[1] == 3 else None)


def load_tabulated(e_plane_csv, h_plane_csv) -> TabulatedPattern:
    """Read one CSV per plane (``theta_deg,amp_db[,phase_deg]``).

    Both files must share the angle grid. Amplitudes are re-normalised to
    0 dB at boresight.
    """
    ae, de, pe = _read_plane_csv(e_plane_csv)
    ah, dh, ph = _read_plane_csv(h_plane_csv)
    if ae.shape != ah.shape or np.any(ae != ah):
        raise ValueError("E- and H-plane files must use the same angle grid")
    return TabulatedPattern(
        tuple(ae), tuple(de - de[0]), tuple(dh - dh[0]),
        None if pe is None else tuple(pe), None if ph is None else tuple(ph))
