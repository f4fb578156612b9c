"""
Geometrical-optics aperture fields and far-field radiation integrals.

The aperture field is built by tracing, for each aperture-grid sample, the
ray that left the feed and arrived there: feed -> sub -> main for Cassegrain
systems (the feed angle comes from the equivalent paraboloid mapping
``r = 2 Fe tan(theta / 2)``), feed -> main for offset dishes. The feed field
vector is carried through every bounce with ``e' = 2 (n . e) n - e`` and
finally split into co- and cross-polar components.

Far-field cuts are direct sums over the aperture grid,

    E(theta, phi) = sum A(x, y) exp(j k sin(theta) (x cos(phi) + y sin(phi))) dA,

evaluated at the requested angles only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import _parallel
from .blockage import BlockageMask, apply_mask
from .errors import NoPowerError, SamplingError
from .feed import FeedPattern, feed_components, spillover_efficiency
from .geometry import (ReflectorSystem, intersect_many, mirror_as_obstacle, reflect,
                       segment_transmission)

C_MM_GHZ = 299.792458  # speed of light in mm * GHz
DB_FLOOR = -300.0
FREQ_BAND_GHZ = (1.0, 300.0)
DEFAULT_GRID_N = 1024
GUARD = 1.02

_POINT_CHUNK = 1 << 16
_THETA_CHUNK = 128


def wavelength_mm(frequency_ghz):
    return C_MM_GHZ / frequency_ghz


@dataclass(frozen=True)
class LossBudget:
    """Loss terms in dB. ``spillover_db`` and ``mask_db`` are <= 0 (power
    ratios); ``film_db`` is a positive insertion loss; ``taper_db`` is the
    illumination taper efficiency, informational only (already inside the
    directivity)."""

    spillover_db: float = 0.0
    taper_db: float = 0.0
    mask_db: float = 0.0
    film_db: float = 0.0


@dataclass(frozen=True, eq=False)
class ApertureField:
    """Co/cross-polar samples on a square grid centred on the aperture.

    Arrays are indexed ``[iy, ix]``. ``center`` is the absolute position of
    the grid centre (non-zero for offset apertures).
    """

    grid_n: int
    cell_size: float
    frequency_ghz: float
    co: np.ndarray
    cx: np.ndarray
    aperture_diameter: float
    center: tuple = (0.0, 0.0)
    loss_budget: LossBudget = field(default_factory=LossBudget)

    def __post_init__(self):
        if self.grid_n < 64 or self.grid_n % 2:
            raise ValueError("grid_n must be even and >= 64")
        if self.frequency_ghz <= 0:
            raise ValueError("frequency must be > 0")
        shape = (self.grid_n, self.grid_n)
        if self.co.shape != shape or self.cx.shape != shape:
            raise ValueError(f"sample arrays must have shape {shape}")

    @property
    def wavelength(self):
        return wavelength_mm(self.frequency_ghz)

    @property
    def wavenumber(self):
        return 2.0 * math.pi / self.wavelength

    def axis(self):
        """Grid coordinates relative to the aperture centre (mm)."""
        return (np.arange(self.grid_n) - 0.5 * (self.grid_n - 1)) * self.cell_size

    def coordinates(self):
        xs = self.axis()
        X, Y = np.meshgrid(xs + self.center[0], xs + self.center[1])
        return X, Y

    def rim_mask(self):
        xs = self.axis()
        X, Y = np.meshgrid(xs, xs)
        return X * X + Y * Y <= (0.5 * self.aperture_diameter) ** 2

    def power(self):
        return float(np.sum(np.abs(self.co) ** 2 + np.abs(self.cx) ** 2)) * self.cell_size ** 2


@dataclass(frozen=True, eq=False)
class PatternCut:
    phi_plane: float
    theta_deg: np.ndarray
    co_db: np.ndarray
    cx_db: np.ndarray
    peak_gain_dbi: float
    frequency_ghz: float = 0.0
    directivity_dbi: float = float("nan")

    def __post_init__(self):
        n = len(self.theta_deg)
        if len(self.co_db) != n or len(self.cx_db) != n:
            raise ValueError("cut arrays must have equal length")
        if n > 1 and np.any(np.diff(self.theta_deg) <= 0):
            raise ValueError("theta must be strictly increasing")


@dataclass(frozen=True)
class Directivity:
    directivity_dbi: float
    realized_gain_dbi: float


def _grid(diameter, frequency_ghz, grid_n, cell_size):
    if not FREQ_BAND_GHZ[0] <= frequency_ghz <= FREQ_BAND_GHZ[1]:
        raise SamplingError(f"frequency {frequency_ghz} GHz outside {FREQ_BAND_GHZ} GHz")
    if grid_n < 64 or grid_n % 2:
        raise SamplingError("grid_n must be even and >= 64")
    cell = diameter * GUARD / grid_n if cell_size is None else float(cell_size)
    lam = wavelength_mm(frequency_ghz)
    if cell > 0.5 * lam:
        raise SamplingError(f"cell size {cell:.4g} mm exceeds lambda/2 = {0.5 * lam:.4g} mm; "
                            "increase grid_n")
    if cell * grid_n < diameter:
        raise SamplingError("grid does not cover the aperture")
    return cell


def disc_aperture(diameter, frequency_ghz, grid_n=DEFAULT_GRID_N, cell_size=None,
                  inner_diameter=0.0, amplitude=None):
    """Uniform (or user-weighted) circular aperture, optionally with a central hole.

    ``amplitude`` is an optional callable of the radius (mm).
    """
    cell = _grid(diameter, frequency_ghz, grid_n, cell_size)
    xs = (np.arange(grid_n) - 0.5 * (grid_n - 1)) * cell
    X, Y = np.meshgrid(xs, xs)
    r = np.hypot(X, Y)
    inside = (r <= 0.5 * diameter) & (r >= 0.5 * inner_diameter if inner_diameter else True)
    a = np.where(inside, 1.0 if amplitude is None else amplitude(r), 0.0).astype(complex)
    return ApertureField(grid_n, cell, float(frequency_ghz), a, np.zeros_like(a),
                         float(diameter))


# ---------------------------------------------------------------------------
# GO aperture field
# ---------------------------------------------------------------------------

def feed_frame(system: ReflectorSystem):
    """Orthonormal (x_f, y_f, boresight) frame of the feed."""
    b = np.asarray(system.feed_axis, float)
    x = np.array([1.0, 0.0, 0.0]) - b[0] * b
    if np.linalg.norm(x) < 1e-9:
        x = np.array([0.0, 1.0, 0.0]) - b[1] * b
    x = x / np.linalg.norm(x)
    return x, np.cross(b, x), b


def _feed_vectors(feed, theta, phi, frame):
    """Complex feed field vectors (N, 3) in global coordinates."""
    co, cx = feed_components(feed, theta, phi)
    p = phi - (0.5 * math.pi if feed.polarization == "linear_y" else 0.0)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    xf, yf, bf = frame
    th_hat = (ct * cp)[:, None] * xf + (ct * sp)[:, None] * yf - st[:, None] * bf
    ph_hat = (-sp)[:, None] * xf + cp[:, None] * yf
    c2, s2 = np.cos(p)[:, None], np.sin(p)[:, None]
    e_co = c2 * th_hat - s2 * ph_hat
    e_cx = s2 * th_hat + c2 * ph_hat
    return co[:, None] * e_co + cx[:, None] * e_cx


def _reference_axes(feed):
    if feed.polarization == "linear_y":
        return np.array([0.0, 1.0, 0.0]), np.array([-1.0, 0.0, 0.0])
    return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])


def _trace_cassegrain(system, feed, x, y, k, in_path):
    sub, main = system.sub, system.main
    fe = system.equivalent_focal_length
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    theta = 2.0 * np.arctan(r / (2.0 * fe))
    s = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], -1)
    o = np.broadcast_to(np.asarray(system.feed_location, float), s.shape)

    t1 = intersect_many(sub, o, s)
    p1 = o + t1[:, None] * s
    n1 = sub.gradient(p1)
    d1 = reflect(s, n1)
    d1 /= np.linalg.norm(d1, axis=-1, keepdims=True)
    t2 = intersect_many(main, p1, d1)
    p2 = p1 + t2[:, None] * d1
    n2 = main.gradient(p2)
    d2 = reflect(d1, n2)

    z_ap = main.focal_length
    path = t1 + t2 + (z_ap - p2[:, 2]) / d2[:, 2]

    e = _feed_vectors(feed, theta, phi, feed_frame(system))
    e = reflect(e, n1)
    e = reflect(e, n2)

    trans = np.ones_like(r)
    if in_path:
        trans = segment_transmission(in_path, o, p1) * segment_transmission(in_path, p1, p2)
    spread = 1.0 / (1.0 + (r / (2.0 * fe)) ** 2)
    return e, path, theta, spread, trans


def _trace_offset(system, feed, x, y, k, in_path):
    main = system.main
    F = main.focal_length
    p = np.stack([x, y, main.sag(x, y)], -1)
    focus = np.asarray(system.feed_location, float)
    v = p - focus
    rho = np.linalg.norm(v, axis=-1)
    s = v / rho[:, None]
    xf, yf, bf = frame = feed_frame(system)
    theta = np.arccos(np.clip(s @ bf, -1.0, 1.0))
    phi = np.arctan2(s @ yf, s @ xf)
    n = main.gradient(p)
    e = reflect(_feed_vectors(feed, theta, phi, frame), n)
    path = rho + (F - p[:, 2])
    trans = np.ones_like(rho)
    if in_path:
        trans = segment_transmission(in_path, np.broadcast_to(focus, p.shape), p)
    return e, path, theta, F / rho, trans


def aperture_field(system: ReflectorSystem, feed: FeedPattern, frequency,
                   mask: Optional[BlockageMask] = None, grid_n=DEFAULT_GRID_N,
                   cell_size=None, workers=None) -> ApertureField:
    """Build the complex aperture field of ``system`` illuminated by ``feed``.

    Amplitude is the feed pattern at the traced feed angle times the
    spherical-spreading factor; phase is ``-k`` times the traced path excess
    over the on-axis ray, plus the quadratic error ``delta (1 - cos theta)``
    of a displaced phase centre. Obstacles and any MMW-transmissive mirror
    crossed on the feed-side legs attenuate the ray; ``mask`` is applied to
    the final aperture plane.

    Raises
    ------
    SamplingError
        Frequency outside 1-300 GHz, or a grid cell larger than lambda/2.
    """
    main = system.main
    D = main.aperture_diameter
    cell = _grid(D, frequency, grid_n, cell_size)
    lam = wavelength_mm(frequency)
    k = 2.0 * math.pi / lam

    xs = (np.arange(grid_n) - 0.5 * (grid_n - 1)) * cell
    cx0, cy0 = main.aperture_center
    X, Y = np.meshgrid(xs + cx0, xs + cy0)
    inside = (X - cx0) ** 2 + (Y - cy0) ** 2 <= (0.5 * D) ** 2
    px, py = X[inside], Y[inside]

    in_path = list(system.obstacles)
    if system.mirror is not None:
        in_path.append(mirror_as_obstacle(system.mirror))
    trace = _trace_cassegrain if system.kind == "cassegrain" else _trace_offset
    p_ref, q_ref = _reference_axes(feed)
    delta = feed.phase_center_offset

    # on-axis reference path (chief ray of the equivalent paraboloid)
    if system.kind == "cassegrain":
        _, path0, *_ = _trace_cassegrain(system, feed, np.array([0.0]), np.array([0.0]), k, [])
    else:
        _, path0, *_ = _trace_offset(system, feed, np.array([cx0]), np.array([cy0]), k, [])
    path0 = float(path0[0])

    def work(sl):
        e, path, theta, spread, trans = trace(system, feed, px[sl], py[sl], k, in_path)
        excess = path - path0 + delta * (1.0 - np.cos(theta))
        ph = np.exp(-1j * k * excess) * spread
        co = (e @ p_ref) * ph
        cx = (e @ q_ref) * ph
        bad = ~np.isfinite(co) | ~np.isfinite(cx)
        co[bad] = 0.0
        cx[bad] = 0.0
        return co, cx, trans

    parts = _parallel.map_ordered(work, _parallel.chunk_slices(px.size, _POINT_CHUNK), workers)
    co_in = np.concatenate([p[0] for p in parts])
    cx_in = np.concatenate([p[1] for p in parts])
    trans = np.concatenate([p[2] for p in parts])

    clean_power = float(np.sum(np.abs(co_in) ** 2 + np.abs(cx_in) ** 2))
    n_in = co_in.size
    taper = abs(co_in.sum()) ** 2 / (n_in * clean_power) if clean_power > 0 else 0.0
    co_in = co_in * trans
    cx_in = cx_in * trans
    path_power = float(np.sum(np.abs(co_in) ** 2 + np.abs(cx_in) ** 2))

    co = np.zeros((grid_n, grid_n), complex)
    cx = np.zeros((grid_n, grid_n), complex)
    co[inside] = co_in
    cx[inside] = cx_in

    spill = spillover_efficiency(feed, system.feed_half_angle_deg)
    lb = LossBudget(
        spillover_db=10.0 * math.log10(spill) if spill > 0 else -math.inf,
        taper_db=10.0 * math.log10(taper) if taper > 0 else -math.inf,
        mask_db=(10.0 * math.log10(path_power / clean_power)
                 if path_power > 0 and clean_power > 0 else -math.inf),
        film_db=0.0,
    )
    fld = ApertureField(grid_n, cell, float(frequency), co, cx, D, (cx0, cy0), lb)
    if mask is not None:
        fld = apply_mask(mask, fld)
    return fld


# ---------------------------------------------------------------------------
# Directivity and far field
# ---------------------------------------------------------------------------

def directivity(fld: ApertureField) -> Directivity:
    """Aperture-formula directivity and realized gain (dBi).

    ``D = 4 pi |sum A dA|^2 / (lambda^2 sum |A|^2 dA)`` on the co-polar
    component with total power in the denominator; realized gain adds the
    mask and spillover power ratios and subtracts the film insertion loss.
    """
    dA = fld.cell_size ** 2
    s = complex(np.sum(fld.co)) * dA
    p = fld.power()
    if p == 0.0 or s == 0:
        raise NoPowerError("aperture field carries no power")
    d = 4.0 * math.pi * abs(s) ** 2 / (fld.wavelength ** 2 * p)
    d_db = 10.0 * math.log10(d)
    lb = fld.loss_budget
    return Directivity(d_db, d_db + lb.mask_db + lb.spillover_db - lb.film_db)


def _to_db(mag, ref):
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(mag / ref)
    return np.maximum(out, DB_FLOOR)


def far_field_cut(fld: ApertureField, phi_plane, theta_min, theta_max, n_points,
                  workers=None) -> PatternCut:
    """Co/cross-polar cut at azimuth ``phi_plane`` (deg) by direct summation.

    ``co_db`` is normalised to its own peak (max is exactly 0 dB); ``cx_db``
    is relative to the same peak and floored at ``DB_FLOOR``.
    ``peak_gain_dbi`` is the realized gain.
    """
    n_points = int(n_points)
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    if not -90.0 <= theta_min < theta_max <= 90.0:
        raise ValueError("theta range must lie inside [-90, 90] deg")
    gain = directivity(fld)

    theta = np.linspace(theta_min, theta_max, n_points)
    u = np.sin(np.radians(theta))
    k = fld.wavenumber
    dA = fld.cell_size ** 2
    xs = fld.axis()
    ph = math.radians(phi_plane)
    c, s = math.cos(ph), math.sin(ph)
    if abs(s) < 1e-12:
        c, s = math.copysign(1.0, c), 0.0
    elif abs(c) < 1e-12:
        c, s = 0.0, math.copysign(1.0, s)

    if s == 0.0:
        proj = [fld.co.sum(axis=0), fld.cx.sum(axis=0)]
        scale = c
    elif c == 0.0:
        proj = [fld.co.sum(axis=1), fld.cx.sum(axis=1)]
        scale = s
    else:
        proj = None

    def work(sl):
        ub = u[sl]
        if proj is not None:
            kern = np.exp(1j * k * scale * np.outer(ub, xs))
            return [(kern * a).sum(axis=1) * dA for a in proj]
        ex = np.exp(1j * k * c * np.outer(ub, xs))
        ey = np.exp(1j * k * s * np.outer(ub, xs))
        return [((ey @ a) * ex).sum(axis=1) * dA for a in (fld.co, fld.cx)]

    parts = _parallel.map_ordered(work, _parallel.chunk_slices(n_points, _THETA_CHUNK), workers)
    e_co = np.concatenate([p[0] for p in parts])
    e_cx = np.concatenate([p[1] for p in parts])
    peak = float(np.max(np.abs(e_co)))
    if peak == 0.0:
        raise NoPowerError("far-field cut is identically zero")
    return PatternCut(float(phi_plane), theta, _to_db(np.abs(e_co), peak),
                      _to_db(np.abs(e_cx), peak), gain.realized_gain_dbi,
                      fld.frequency_ghz, gain.directivity_dbi)


def far_field_uv(fld: ApertureField, u, v):
    """Complex co/cx far field on the direction-cosine grid ``u x v``.

    Returns arrays of shape ``(len(v), len(u))``.
    """
    k = fld.wavenumber
    xs = fld.axis()
    dA = fld.cell_size ** 2
    ex = np.exp(1j * k * np.outer(np.asarray(u, float), xs))
    ey = np.exp(1j * k * np.outer(np.asarray(v, float), xs))
    return [(ey @ a @ ex.T) * dA for a in (fld.co, fld.cx)]


@dataclass(frozen=True, eq=False)
class PatternMap:
    """Power samples on a regular polar grid; ``phi_deg`` spans [0, 360)."""

    theta_deg: np.ndarray
    phi_deg: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        if self.power.shape != (len(self.theta_deg), len(self.phi_deg)):
            raise ValueError("power must have shape (n_theta, n_phi)")


def far_field_map(fld: ApertureField, theta_max_deg=10.0, samples_per_beam=24,
                  n_phi=None) -> PatternMap:
    """Dense polar far-field power map out to ``theta_max_deg``.

    The field is evaluated exactly on a direction-cosine grid 16x finer than
    ``lambda / D`` and resampled onto the polar grid with bicubic splines.
    The polar step is ``(lambda / D) / samples_per_beam``.
    """
    lam, D = fld.wavelength, fld.aperture_diameter
    beam = lam / D
    smax = math.sin(math.radians(theta_max_deg)) * 1.001
    du = beam / 16.0
    n_uv = 2 * int(math.ceil(smax / du)) + 1
    uv = np.linspace(-smax, smax, n_uv)
    co, cx = far_field_uv(fld, uv, uv)

    dth = math.degrees(beam / samples_per_beam)
    theta = np.linspace(0.0, theta_max_deg, int(math.ceil(theta_max_deg / dth)) + 1)
    if n_phi is None:
        arc = math.sin(math.radians(theta_max_deg)) * 2.0 * math.pi
        n_phi = max(16, int(math.ceil(arc / (2.0 * beam / samples_per_beam))))
    phi = np.arange(n_phi) * 360.0 / n_phi
    T, P = np.meshgrid(np.radians(theta), np.radians(phi), indexing="ij")
    uu = (np.sin(T) * np.cos(P)).ravel()
    vv = (np.sin(T) * np.sin(P)).ravel()
    power = np.zeros(uu.size)
    for comp in (co, cx):
        for part in (comp.real, comp.imag):
            spl = RectBivariateSpline(uv, uv, part, kx=3, ky=3)
            power += spl.ev(vv, uu) ** 2
    return PatternMap(theta, phi, power.reshape(T.shape))


def pattern_integrate_directivity(pmap: PatternMap, min_beam_samples=20):
    """Directivity ``4 pi P_peak / integral(P dOmega)`` from a sampled pattern (dBi).

    Trapezoidal in theta (with the sin(theta) weight), rectangle rule over
    the periodic phi grid.

    Raises
    ------
    SamplingError
        Fewer than ``min_beam_samples`` theta samples across the half-power
        beam, or phi samples not evenly covering a full turn.
    """
    th = np.radians(np.asarray(pmap.theta_deg, float))
    ph = np.asarray(pmap.phi_deg, float)
    P = np.asarray(pmap.power, float)
    if ph.size < 4:
        raise SamplingError("need at least 4 phi samples")
    step = 360.0 / ph.size
    if np.max(np.abs(np.diff(ph) - step)) > 1e-9 * 360 or abs(ph[0]) > 1e-9:
        raise SamplingError("phi samples must evenly cover [0, 360)")
    peak = float(P.max())
    if peak <= 0:
        raise NoPowerError("pattern map carries no power")
    ring = P.mean(axis=1) / peak
    half = np.nonzero(ring < 0.5)[0]
    n_in = half[0] if half.size else th.size
    if 2 * n_in < min_beam_samples:
        raise SamplingError(f"main beam covered by {2 * n_in} samples; "
                            f"need {min_beam_samples}")
    ring_power = P.sum(axis=1) * math.radians(step)
    total = np.trapezoid(ring_power * np.sin(th), th)
    return 10.0 * math.log10(4.0 * math.pi * peak / total)


# ---------------------------------------------------------------------------
# CSV serialisation
# ---------------------------------------------------------------------------

def write_cut_csv(cut: PatternCut, path, footer=()):
    with open(path, "w", newline="") as fh:
        fh.write(f"# gain_dbi={cut.peak_gain_dbi:.6f}\n")
        fh.write(f"# frequency_ghz={cut.frequency_ghz:.6f}\n")
        fh.write(f"# phi_plane_deg={cut.phi_plane:.6f}\n")
        fh.write("theta_deg,co_db,cx_db\n")
        for t, a, b in zip(cut.theta_deg, cut.co_db, cut.cx_db):
            fh.write(f"{t:.6f},{a:.6f},{b:.6f}\n")
        for line in footer:
            fh.write(f"# {line}\n")


def read_cut_csv(path) -> PatternCut:
    meta, rows = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if sep and key in ("gain_dbi", "frequency_ghz", "phi_plane_deg"):
                    meta[key] = float(val)
                continue
            if not line or line.startswith("theta_deg"):
                continue
            rows.append([float(v) for v in next(csv.reader([line]))])
    arr = np.array(rows)
    return PatternCut(meta["phi_plane_deg"], arr[:, 0], arr[:, 1], arr[:, 2],
                      meta["gain_dbi"], meta["frequency_ghz"])


def uniform_directivity_dbi(diameter, frequency_ghz):
    """``10 log10((pi D / lambda)^2)``."""
    return 20.0 * math.log10(math.pi * diameter / wavelength_mm(frequency_ghz))


__all__ = [
    "ApertureField", "Directivity", "LossBudget", "PatternCut", "PatternMap",
    "aperture_field", "directivity", "disc_aperture", "far_field_cut", "far_field_map",
    "far_field_uv", "pattern_integrate_directivity", "read_cut_csv", "write_cut_csv",
    "uniform_directivity_dbi", "wavelength_mm", "replace",
]
