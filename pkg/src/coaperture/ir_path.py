"""
Geometric ray tracing of the infrared channel.

Two topologies are recognised from where the IR-reflective element sits:

``fold``
    A 45 deg mirror between the feed and the sub-reflector. The laser sits at
    the mirror image of the feed focus, so after the fold its rays follow the
    MMW feed rays: mirror -> sub -> main -> sky.
``film``
    An IR-reflective film above the sub-reflector, in the collimated region.
    A side-mounted collimated laser is folded straight onto the boresight:
    film -> sky.

Rays that miss a required surface, or that strike any other element on the
way, are counted as lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, NoPathError
from .geometry import (PlanarMirrorSpec, Ray, ReflectorSystem, intersect_many, reflect,
                       rotate, surface_normal)

AXIS = np.array([0.0, 0.0, 1.0])
DEFAULT_BEAM_RADIUS = 10.0
RING_FRACTION = 0.8
RING_RAYS = 8
LAUNCH_DISTANCE = 100.0
PROBE_GRID = 801


@dataclass(frozen=True)
class IrBundle:
    """Entry rays; the first ray is the chief ray."""

    rays: tuple
    kind: str = "parallel"
    wavelength_class: str = "IR"

    def __post_init__(self):
        object.__setattr__(self, "rays", tuple(self.rays))
        if len(self.rays) < 7:
            raise ValueError("an IR bundle needs at least 7 rays")
        if self.kind not in ("parallel", "point"):
            raise ValueError("kind must be 'parallel' or 'point'")
        if self.wavelength_class != "IR":
            raise ValueError("only the IR wavelength class is supported")

    @property
    def chief(self):
        return self.rays[0]


@dataclass(frozen=True)
class IrTraceResult:
    """``exit_rays`` leave the antenna toward the sky; ``chief_index`` is the
    position of the chief ray among them (None if it was lost)."""

    exit_rays: tuple
    boresight_error_deg: float
    obscuration_fraction: float
    lost_rays: int
    chief_index: object = None
    topology: str = ""
    surfaces: tuple = field(default_factory=tuple)

    @property
    def n_rays(self):
        return len(self.exit_rays) + self.lost_rays

    @property
    def chief_direction(self):
        """Exit chief-ray direction, or the mean exit direction if it was lost."""
        if not self.exit_rays:
            raise NoPathError("no IR ray left the antenna")
        if self.chief_index is not None:
            return np.asarray(self.exit_rays[self.chief_index].direction, float)
        d = np.mean([r.direction for r in self.exit_rays], axis=0)
        return d / np.linalg.norm(d)


def ir_topology(system: ReflectorSystem):
    """``'film'`` or ``'fold'``; ConfigurationError if there is no IR element."""
    m = system.mirror
    if m is None or not m.ir_reflective:
        raise ConfigurationError(f"{system.kind} system has no IR-reflective element")
    if system.sub is None:
        raise ConfigurationError("IR path requires a Cassegrain sub-reflector")
    return "film" if m.center[2] > system.sub.vertex_z else "fold"


def _ring_offsets(radius, n=RING_RAYS):
    ang = 2.0 * math.pi * np.arange(n) / n
    return np.column_stack([np.cos(ang), np.sin(ang)]) * radius


def _perp_basis(d):
    d = np.asarray(d, float)
    ref = np.array([0.0, 1.0, 0.0]) if abs(d[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(d, ref)
    u /= np.linalg.norm(u)
    return u, np.cross(d, u)


def default_bundle(system: ReflectorSystem, beam_radius=DEFAULT_BEAM_RADIUS):
    """Chief ray plus an 8-ray ring at 80% of ``beam_radius``.

    For a film the bundle is collimated and arrives from the side, aimed so
    the film folds it onto +z. For a fold mirror it is a point source at the
    mirror image of the feed focus, with the ring passing through a circle of
    ``0.8 * beam_radius`` around the mirror centre.
    """
    topo = ir_topology(system)
    m = system.mirror
    c = np.asarray(m.center, float)
    n = np.asarray(m.normal, float)
    ring = _ring_offsets(RING_FRACTION * beam_radius)
    if topo == "film":
        # incoming direction that reflects to +z
        d = reflect(AXIS, n)
        d = d / np.linalg.norm(d)
        u, v = _perp_basis(d)
        start = c - LAUNCH_DISTANCE * d
        origins = [start] + [start + a * u + b * v for a, b in ring]
        return IrBundle(tuple(Ray(tuple(o), tuple(d)) for o in origins), "parallel")
    feed = np.asarray(system.feed_location, float)
    src = feed - 2.0 * ((feed - c) @ n) * n
    chief = c - src
    dist = np.linalg.norm(chief)
    chief /= dist
    u, v = _perp_basis(chief)
    targets = [c] + [c + a * u + b * v for a, b in ring]
    rays = []
    for t in targets:
        d = t - src
        rays.append(Ray(tuple(src), tuple(d / np.linalg.norm(d))))
    return IrBundle(tuple(rays), "point")


def _blockers(system, exclude):
    out = []
    if system.sub is not None and "sub" not in exclude:
        out.append(("sub", system.sub))
    if system.mirror is not None and "mirror" not in exclude:
        out.append(("mirror", system.mirror))
    out += [(f"obstacle{i}", ob) for i, ob in enumerate(system.obstacles)
            if ob.transmission < 1.0]
    return out


def _sequence(system, topology):
    if topology == "film":
        return [("mirror", system.mirror)]
    return [("mirror", system.mirror), ("sub", system.sub), ("main", system.main)]


def _trace(system, surfaces, origins, directions):
    """Sequential specular trace. Returns (points, dirs, paths, ok)."""
    o = np.array(origins, float)
    d = np.array(directions, float)
    path = np.zeros(len(o))
    ok = np.ones(len(o), bool)
    names = [s[0] for s in surfaces]
    for name, surf in surfaces:
        t = intersect_many(surf, o, d)
        hit = np.isfinite(t)
        # anything else struck before the target surface
        for bname, b in _blockers(system, {name}):
            tb = intersect_many(b, o, d)
            ok &= ~(np.isfinite(tb) & (~hit | (tb < np.where(hit, t, np.inf))))
        ok &= hit
        t = np.where(hit, t, 0.0)
        o = o + t[:, None] * d
        path += t
        d = reflect(d, surface_normal(surf, o))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
    # exit leg: nothing may be struck on the way out
    for bname, b in _blockers(system, {names[-1]} if names[-1] != "main" else set()):
        tb = intersect_many(b, o, d)
        ok &= ~np.isfinite(tb)
    return o, d, path, ok


def obscuration_fraction(system: ReflectorSystem, n=PROBE_GRID):
    """Fraction of the main aperture whose sky rays are intercepted (by the
    sub-reflector, the IR element or an opaque obstacle) before reaching the
    main reflector. Obstacles with partial transmission t count ``1 - t``."""
    main = system.main
    r = 0.5 * main.aperture_diameter
    xs = (np.arange(n) - 0.5 * (n - 1)) * (2.0 * r / n)
    X, Y = np.meshgrid(xs + main.aperture_center[0], xs + main.aperture_center[1])
    inside = (X - main.aperture_center[0]) ** 2 + (Y - main.aperture_center[1]) ** 2 <= r * r
    x, y = X[inside], Y[inside]
    top = 10.0 * (main.focal_length + main.aperture_diameter)
    o = np.column_stack([x, y, np.full(x.size, top)])
    d = np.broadcast_to(-AXIS, o.shape)
    t_main = intersect_many(main, o, d)
    weight = np.ones(x.size)
    for name, b in _blockers(system, set()):
        tb = intersect_many(b, o, d)
        crossed = np.isfinite(tb) & (tb < t_main)
        trans = getattr(b, "transmission", 0.0) if name.startswith("obstacle") else 0.0
        weight = np.where(crossed, weight * trans, weight)
    return float(np.sum(1.0 - weight) / x.size)


def _angle_deg(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    s = np.linalg.norm(np.cross(a, b), axis=-1)
    c = np.sum(a * b, axis=-1)
    return np.degrees(np.arctan2(s, c))


def trace_ir(system: ReflectorSystem, bundle: IrBundle = None) -> IrTraceResult:
    """Trace an IR bundle through the system's IR path.

    Raises
    ------
    ConfigurationError
        The system has no IR-reflective element.
    """
    topo = ir_topology(system)
    if bundle is None:
        bundle = default_bundle(system)
    surfaces = _sequence(system, topo)
    o = [r.origin for r in bundle.rays]
    d = [r.direction for r in bundle.rays]
    p, dirs, path, ok = _trace(system, surfaces, o, d)
    base = np.array([r.path_length for r in bundle.rays])
    exits = tuple(Ray(tuple(p[i]), tuple(dirs[i] / np.linalg.norm(dirs[i])),
                      float(base[i] + path[i]))
                  for i in np.nonzero(ok)[0])
    err = float(_angle_deg(dirs[ok], AXIS).max()) if exits else float("nan")
    chief = 0 if ok[0] else None
    return IrTraceResult(exits, err, obscuration_fraction(system), int((~ok).sum()),
                         chief, topo, tuple(s[0] for s in surfaces))


def reverse_trace(system: ReflectorSystem, result: IrTraceResult, backoff=10.0):
    """Trace exit rays backwards through the same surfaces.

    Returns the final directions (N, 3); for a reversible path they are the
    negated entry directions.
    """
    if not result.exit_rays:
        raise NoPathError("nothing to reverse")
    seq = list(reversed(_sequence(system, result.topology)))
    o = np.array([r.origin for r in result.exit_rays])
    d = -np.array([r.direction for r in result.exit_rays])
    o = o - backoff * d
    _, dirs, _, _ = _trace(system, seq, o, d)
    return dirs


def tilt_mirror(system: ReflectorSystem, tilt_deg, axis=(0.0, 1.0, 0.0)) -> ReflectorSystem:
    """Copy of ``system`` with the IR element rotated about its centre."""
    m = system.mirror
    if m is None:
        raise ConfigurationError("system has no mirror to tilt")
    n = rotate(np.asarray(m.normal, float), axis, tilt_deg)
    return system.with_mirror(replace(m, normal=tuple(n / np.linalg.norm(n))))


def coalignment_report(mmw_pointing, ir_result: IrTraceResult):
    """Angle (deg) between the MMW beam and the IR exit chief ray.

    ``mmw_pointing`` is either a direction vector or a pair of pointing
    angles ``(theta_e, theta_h)`` in degrees from the E- and H-plane cuts
    (a scalar is taken as an E-plane angle).

    Raises
    ------
    NoPathError
        No IR ray left the antenna.
    """
    ir = ir_result.chief_direction
    mm = np.atleast_1d(np.asarray(mmw_pointing, float))
    if mm.size == 3:
        beam = mm / np.linalg.norm(mm)
    else:
        te = math.radians(mm[0])
        th = math.radians(mm[1]) if mm.size > 1 else 0.0
        beam = np.array([math.sin(te), math.sin(th), 1.0])
        beam[2] = math.sqrt(max(0.0, 1.0 - beam[0] ** 2 - beam[1] ** 2))
    return float(_angle_deg(beam, ir))


def tilt_sweep(system: ReflectorSystem, tilts_deg, bundle_radius=DEFAULT_BEAM_RADIUS):
    """Boresight error of the chief ray for each mirror tilt (deg)."""
    out = []
    for t in tilts_deg:
        s = tilt_mirror(system, t)
        res = trace_ir(s, default_bundle(system, bundle_radius))
        out.append(coalignment_report((0.0, 0.0), res))
    return np.array(out)


__all__ = ["IrBundle", "IrTraceResult", "PlanarMirrorSpec", "coalignment_report",
           "default_bundle", "ir_topology", "obscuration_fraction", "reverse_trace",
           "tilt_mirror", "tilt_sweep", "trace_ir"]
