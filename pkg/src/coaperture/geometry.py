"""
Quadric reflector surfaces, ray intersection and Cassegrain/offset synthesis.

Coordinates are in millimetres. The main reflector vertex sits at the origin
and the antenna boresight is +z. A symmetric paraboloid obeys
``x**2 + y**2 = 4 F z``; its focus is ``(0, 0, F)``. The Cassegrain
sub-reflector is the branch of a two-sheet hyperboloid nearest the prime
focus, with its far focus (the feed phase centre) on the axis below.

Offset systems cut their aperture from the parent paraboloid along +x so the
plane of symmetry is the xz plane (phi = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .errors import BlockageDominatesError, DegenerateGeometryError, DomainError

_UNIT_TOL = 1e-12


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _check_unit(v, name):
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > _UNIT_TOL:
        raise ValueError(f"{name} must be a unit vector (|{name}| = {n!r})")


def reflect(direction, normal):
    """Specular reflection ``d' = d - 2 (n . d) n``; works on (..., 3) arrays."""
    d = np.asarray(direction)
    if not np.iscomplexobj(d):
        d = d.astype(float)
    n = np.asarray(normal, dtype=float)
    return d - 2.0 * np.sum(n * d, axis=-1, keepdims=True) * n


def rotate(v, axis, angle_deg):
    """Rodrigues rotation of vector(s) ``v`` about unit ``axis``."""
    k = _unit(axis)
    a = math.radians(angle_deg)
    v = np.asarray(v, dtype=float)
    return (v * math.cos(a) + np.cross(k, v) * math.sin(a)
            + np.outer(v @ k, k).reshape(v.shape) * (1 - math.cos(a)))


# ---------------------------------------------------------------------------
# Surface specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParaboloidSpec:
    """Main reflector: paraboloid of focal length F, cut by a cylinder.

    ``offset_height`` is the distance from the parent axis to the centre of
    the projected aperture (along +x); 0 gives a symmetric dish.
    """

    focal_length: float
    aperture_diameter: float
    offset_height: float = 0.0
    clearance: float = 0.0

    def __post_init__(self):
        if self.focal_length <= 0:
            raise ValueError("focal_length must be > 0")
        if self.aperture_diameter <= 0:
            raise ValueError("aperture_diameter must be > 0")
        if self.offset_height < 0 or self.clearance < 0:
            raise ValueError("offset_height and clearance must be >= 0")

    @property
    def focus(self):
        return np.array([0.0, 0.0, self.focal_length])

    @property
    def aperture_center(self):
        return (self.offset_height, 0.0)

    def inside_rim(self, x, y):
        r = 0.5 * self.aperture_diameter
        return (np.asarray(x) - self.offset_height) ** 2 + np.asarray(y) ** 2 <= r * r * (1 + 1e-12)

    def sag(self, x, y):
        return (np.asarray(x) ** 2 + np.asarray(y) ** 2) / (4.0 * self.focal_length)

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        g = np.stack([2 * p[..., 0], 2 * p[..., 1],
                      np.full(p.shape[:-1], -4.0 * self.focal_length)], axis=-1)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)


@dataclass(frozen=True)
class HyperboloidSpec:
    """Cassegrain sub-reflector.

    The near focus lies at ``prime_focus_z`` on the axis (shared with the main
    reflector focus); the far focus lies ``interfocal_distance`` below it.
    """

    eccentricity: float
    interfocal_distance: float
    diameter: float
    prime_focus_z: float

    def __post_init__(self):
        if not self.eccentricity > 1:
            raise DegenerateGeometryError("hyperboloid eccentricity must be > 1")
        if self.interfocal_distance <= 0 or self.diameter <= 0:
            raise ValueError("interfocal_distance and diameter must be > 0")

    @property
    def c(self):
        return 0.5 * self.interfocal_distance

    @property
    def a(self):
        return self.c / self.eccentricity

    @property
    def b(self):
        return math.sqrt(self.c ** 2 - self.a ** 2)

    @property
    def center_z(self):
        return self.prime_focus_z - self.c

    @property
    def feed_focus_z(self):
        return self.prime_focus_z - 2.0 * self.c

    @property
    def vertex_z(self):
        return self.center_z + self.a

    @property
    def rim_z(self):
        return float(self.sag(0.5 * self.diameter, 0.0))

    def inside_rim(self, x, y):
        r = 0.5 * self.diameter
        return np.asarray(x) ** 2 + np.asarray(y) ** 2 <= r * r * (1 + 1e-12)

    def sag(self, x, y):
        rho2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
        return self.center_z + self.a * np.sqrt(1.0 + rho2 / self.b ** 2)

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        g = np.stack([-p[..., 0] / self.b ** 2, -p[..., 1] / self.b ** 2,
                      (p[..., 2] - self.center_z) / self.a ** 2], axis=-1)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)


@dataclass(frozen=True)
class PlanarMirrorSpec:
    """Flat circular mirror or film.

    ``mmw_transmission_db`` is the one-way MMW insertion loss (dB >= 0);
    ``ir_reflectivity`` is the IR power reflectivity of an IR-reflective face.
    """

    center: tuple
    normal: tuple
    diameter: float
    mmw_transmission_db: float = 0.0
    ir_reflective: bool = True
    ir_reflectivity: float = 1.0

    def __post_init__(self):
        _check_unit(self.normal, "normal")
        if self.diameter <= 0:
            raise ValueError("diameter must be > 0")
        if self.mmw_transmission_db < 0:
            raise ValueError("mmw_transmission_db must be >= 0")
        if not 0.0 <= self.ir_reflectivity <= 1.0:
            raise ValueError("ir_reflectivity must lie in [0, 1]")

    @classmethod
    def tilted(cls, center, tilt_deg, diameter, tilt_axis=(0.0, 1.0, 0.0), **kw):
        """Mirror whose normal is +z rotated by ``tilt_deg`` about ``tilt_axis``."""
        n = rotate(np.array([0.0, 0.0, 1.0]), tilt_axis, tilt_deg)
        return cls(center=tuple(map(float, center)), normal=tuple(_unit(n)),
                   diameter=diameter, **kw)

    @property
    def mmw_amplitude(self):
        return 10.0 ** (-self.mmw_transmission_db / 20.0)

    def basis(self):
        return _plane_basis(np.asarray(self.normal, dtype=float))


def _plane_basis(n):
    """Two in-plane unit vectors; e1 is the direction of steepest tilt."""
    n = _unit(n)
    t = np.array([n[0], n[1], 0.0])
    if np.linalg.norm(t) < 1e-12:
        e1 = np.array([1.0, 0.0, 0.0])
    else:
        e1 = np.cross(np.cross(n, _unit(t)), n)
        e1 = _unit(-e1 if e1 @ _unit(t) < 0 else e1)
    e2 = np.cross(n, e1)
    return e1, e2


@dataclass(frozen=True)
class Obstacle3D:
    """Flat disc or rectangle somewhere in the optical path.

    Rectangles use ``extents = (width, height)`` along ``(axis_u, n x axis_u)``.
    ``transmission`` is an amplitude factor in [0, 1].
    """

    shape: str
    center: tuple
    normal: tuple
    radius: float = 0.0
    extents: tuple = (0.0, 0.0)
    axis_u: tuple = (1.0, 0.0, 0.0)
    transmission: float = 0.0
    label: str = ""

    def __post_init__(self):
        _check_unit(self.normal, "normal")
        if self.shape not in ("disc", "rectangle"):
            raise ValueError(f"unknown obstacle shape {self.shape!r}")
        if self.shape == "disc" and self.radius <= 0:
            raise ValueError("disc radius must be > 0")
        if self.shape == "rectangle" and min(self.extents) <= 0:
            raise ValueError("rectangle extents must be > 0")
        if not 0.0 <= self.transmission <= 1.0:
            raise ValueError("transmission must lie in [0, 1]")

    def in_plane_axes(self):
        n = np.asarray(self.normal, dtype=float)
        if self.shape == "disc":
            return _plane_basis(n)
        u = np.asarray(self.axis_u, dtype=float)
        u = _unit(u - (u @ n) * n)
        return u, np.cross(n, u)

    def contains_local(self, s, t):
        if self.shape == "disc":
            return s * s + t * t <= self.radius ** 2
        return (np.abs(s) <= 0.5 * self.extents[0]) & (np.abs(t) <= 0.5 * self.extents[1])


def mirror_as_obstacle(mirror: PlanarMirrorSpec) -> Obstacle3D:
    return Obstacle3D("disc", tuple(mirror.center), tuple(mirror.normal),
                      radius=0.5 * mirror.diameter,
                      transmission=mirror.mmw_amplitude, label="mirror")


Surface = Union[ParaboloidSpec, HyperboloidSpec, PlanarMirrorSpec, Obstacle3D]


@dataclass(frozen=True)
class ReflectorSystem:
    """One complete antenna configuration.

    ``kind`` is ``"cassegrain"`` (symmetric main + hyperboloid sub) or
    ``"offset"`` (single offset paraboloid fed at its focus).
    """

    kind: str
    main: ParaboloidSpec
    feed_location: tuple
    feed_axis: tuple
    magnification: float
    equivalent_focal_length: float
    feed_half_angle_deg: float
    sub: Optional[HyperboloidSpec] = None
    mirror: Optional[PlanarMirrorSpec] = None
    obstacles: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("cassegrain", "offset"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        fe = self.magnification * self.main.focal_length
        if abs(self.equivalent_focal_length - fe) > 1e-9 * fe:
            raise ValueError("equivalent_focal_length must equal magnification * F")
        if not 0.0 < self.feed_half_angle_deg < 90.0:
            raise DegenerateGeometryError("feed half-angle must lie in (0, 90) deg")
        _check_unit(self.feed_axis, "feed_axis")
        if self.kind == "cassegrain" and self.sub is None:
            raise ValueError("a Cassegrain system needs a sub-reflector")

    @property
    def eccentricity(self):
        return None if self.sub is None else self.sub.eccentricity

    def with_mirror(self, mirror):
        return replace(self, mirror=mirror)

    def with_obstacles(self, obstacles):
        return replace(self, obstacles=tuple(obstacles))


@dataclass(frozen=True)
class Ray:
    origin: tuple
    direction: tuple
    path_length: float = 0.0

    def __post_init__(self):
        _check_unit(self.direction, "direction")
        if self.path_length < 0:
            raise ValueError("path_length must be >= 0")

    @classmethod
    def toward(cls, origin, target, path_length=0.0):
        d = _unit(np.asarray(target, float) - np.asarray(origin, float))
        return cls(tuple(map(float, origin)), tuple(d), path_length)


@dataclass(frozen=True)
class RayHit:
    point: np.ndarray
    normal: np.ndarray
    distance: float

    def reflected(self, ray: Ray) -> Ray:
        d = reflect(np.asarray(ray.direction), self.normal)
        d = d / np.linalg.norm(d)
        return Ray(tuple(self.point), tuple(d), ray.path_length + self.distance)


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------

def synth_cassegrain(main_diameter, main_focal_length, sub_diameter, magnification):
    """Classical Cassegrain from main dish, sub size and magnification.

    The sub-reflector rim is placed on the cone from the prime focus to the
    main rim, and on the cone of half-angle ``theta_e`` from the feed, where
    ``tan(theta_e / 2) = D / (4 M F)``. This fixes the interfocal distance;
    the eccentricity follows as ``(M + 1) / (M - 1)``.

    Raises
    ------
    DegenerateGeometryError
        ``magnification <= 1`` (eccentricity diverges).
    BlockageDominatesError
        Sub-reflector at least as large as the main aperture.
    """
    D, F, Ds, M = map(float, (main_diameter, main_focal_length, sub_diameter, magnification))
    if M <= 1.0:
        raise DegenerateGeometryError(f"magnification must be > 1 (got {M})")
    if F <= 0 or D <= 0 or Ds <= 0:
        raise ValueError("diameters and focal length must be > 0")
    if Ds >= D:
        raise BlockageDominatesError(f"sub diameter {Ds} >= main diameter {D}")

    fe = M * F
    theta_e = 2.0 * math.atan(D / (4.0 * fe))
    theta_0 = 2.0 * math.atan(D / (4.0 * F))
    rs = 0.5 * Ds
    two_c = rs * (1.0 / math.tan(theta_0) + 1.0 / math.tan(theta_e))
    if two_c <= 0:
        raise DegenerateGeometryError("sub-reflector would sit behind the feed")
    e = (M + 1.0) / (M - 1.0)
    sub = HyperboloidSpec(e, two_c, Ds, prime_focus_z=F)
    main = ParaboloidSpec(F, D)
    return ReflectorSystem(
        kind="cassegrain", main=main, sub=sub,
        feed_location=(0.0, 0.0, sub.feed_focus_z), feed_axis=(0.0, 0.0, 1.0),
        magnification=M, equivalent_focal_length=fe,
        feed_half_angle_deg=math.degrees(theta_e),
    )


def offset_rim_angles(parent_focal_length, aperture_diameter, offset_height):
    """Lower and upper rim angles (deg) seen from the focus of an offset dish."""
    F = parent_focal_length
    lo = 2.0 * math.degrees(math.atan((offset_height - 0.5 * aperture_diameter) / (2.0 * F)))
    hi = 2.0 * math.degrees(math.atan((offset_height + 0.5 * aperture_diameter) / (2.0 * F)))
    return lo, hi


def synth_offset(parent_focal_length, aperture_diameter, clearance):
    """Offset paraboloid whose projected aperture is an unblocked circle.

    The lower rim clears the parent axis by ``clearance``; the feed sits at
    the focus, pointed at the bisector of the rim cone.
    """
    F, D, h0 = map(float, (parent_focal_length, aperture_diameter, clearance))
    if F <= 0 or D <= 0:
        raise ValueError("focal length and diameter must be > 0")
    if h0 < 0:
        raise ValueError("clearance must be >= 0")
    h = h0 + 0.5 * D
    if h + 0.5 * D >= 2.0 * F:
        raise DegenerateGeometryError("upper rim angle would reach 90 deg; reduce clearance")
    lo, hi = offset_rim_angles(F, D, h)
    centre = math.radians(0.5 * (lo + hi))
    axis = (math.sin(centre), 0.0, -math.cos(centre))
    main = ParaboloidSpec(F, D, offset_height=h, clearance=h0)
    return ReflectorSystem(
        kind="offset", main=main, feed_location=(0.0, 0.0, F), feed_axis=axis,
        magnification=1.0, equivalent_focal_length=F,
        feed_half_angle_deg=0.5 * (hi - lo),
    )


# ---------------------------------------------------------------------------
# Surface evaluation and ray intersection
# ---------------------------------------------------------------------------

def surface_point(surface: Surface, u, v):
    """Point and unit normal at parameter ``(u, v)``.

    For reflectors ``(u, v)`` are the transverse coordinates ``(x, y)`` in mm
    (the projection onto the aperture plane). For flat mirrors they are
    in-plane offsets from the centre. Quadric normals are the normalised
    gradient of the implicit surface function (at the paraboloid vertex that
    is -z).
    """
    if isinstance(surface, (ParaboloidSpec, HyperboloidSpec)):
        if not surface.inside_rim(u, v):
            raise DomainError(f"({u}, {v}) lies outside the rim")
        p = np.array([u, v, float(surface.sag(u, v))])
        return p, surface.gradient(p)
    if isinstance(surface, PlanarMirrorSpec):
        if u * u + v * v > (0.5 * surface.diameter) ** 2:
            raise DomainError(f"({u}, {v}) lies outside the mirror")
        e1, e2 = surface.basis()
        p = np.asarray(surface.center, float) + u * e1 + v * e2
        return p, np.asarray(surface.normal, float)
    raise TypeError(f"unsupported surface {type(surface).__name__}")


def _smallest_positive(t1, t2, ok1, ok2, eps):
    t1 = np.where(ok1 & (t1 > eps), t1, np.inf)
    t2 = np.where(ok2 & (t2 > eps), t2, np.inf)
    t = np.minimum(t1, t2)
    return np.where(np.isfinite(t), t, np.nan)


def _quadric_roots(A, B, C):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        disc = B * B - 4 * A * C
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        q = -0.5 * (B + np.copysign(sq, B))
        t1 = q / A
        t2 = C / q
        lin = np.abs(A) < 1e-14 * (np.abs(B) + 1e-300)
        t1 = np.where(lin, -C / B, t1)
        t2 = np.where(lin, np.nan, t2)
    return t1, t2


def intersect_many(surface: Surface, origins, directions, eps=1e-9):
    """Vectorised nearest positive intersection parameter (NaN on miss)."""
    o = np.asarray(origins, dtype=float)
    d = np.asarray(directions, dtype=float)
    ox, oy, oz = o[..., 0], o[..., 1], o[..., 2]
    dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]

    if isinstance(surface, ParaboloidSpec):
        F4 = 4.0 * surface.focal_length
        A = dx * dx + dy * dy
        B = 2.0 * (ox * dx + oy * dy) - F4 * dz
        C = ox * ox + oy * oy - F4 * oz
        t1, t2 = _quadric_roots(A, B, C)
        with np.errstate(invalid="ignore"):
            ok1 = surface.inside_rim(ox + t1 * dx, oy + t1 * dy)
            ok2 = surface.inside_rim(ox + t2 * dx, oy + t2 * dy)
        return _smallest_positive(t1, t2, ok1, ok2, eps)

    if isinstance(surface, HyperboloidSpec):
        a2, b2 = surface.a ** 2, surface.b ** 2
        zc = surface.center_z
        oz_ = oz - zc
        A = dz * dz / a2 - (dx * dx + dy * dy) / b2
        B = 2.0 * (oz_ * dz / a2 - (ox * dx + oy * dy) / b2)
        C = oz_ * oz_ / a2 - (ox * ox + oy * oy) / b2 - 1.0
        t1, t2 = _quadric_roots(A, B, C)
        with np.errstate(invalid="ignore"):
            ok1 = surface.inside_rim(ox + t1 * dx, oy + t1 * dy) & (oz_ + t1 * dz > 0)
            ok2 = surface.inside_rim(ox + t2 * dx, oy + t2 * dy) & (oz_ + t2 * dz > 0)
        return _smallest_positive(t1, t2, ok1, ok2, eps)

    if isinstance(surface, (PlanarMirrorSpec, Obstacle3D)):
        n = np.asarray(surface.normal, float)
        c = np.asarray(surface.center, float)
        denom = d @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((c - o) @ n) / denom
        p = o + t[..., None] * d - c
        if isinstance(surface, PlanarMirrorSpec):
            inside = np.sum(p * p, axis=-1) <= (0.5 * surface.diameter) ** 2
        else:
            e1, e2 = surface.in_plane_axes()
            inside = surface.contains_local(p @ e1, p @ e2)
        ok = inside & (np.abs(denom) > 1e-15) & (t > eps)
        return np.where(ok, t, np.nan)

    raise TypeError(f"unsupported surface {type(surface).__name__}")


def surface_normal(surface: Surface, points):
    if isinstance(surface, (ParaboloidSpec, HyperboloidSpec)):
        return surface.gradient(points)
    n = np.asarray(surface.normal, float)
    return np.broadcast_to(n, np.shape(points)).copy()


def intersect_ray(surface: Surface, ray: Ray) -> Optional[RayHit]:
    """Nearest hit of ``ray`` on ``surface`` inside its rim, or ``None``."""
    o = np.asarray(ray.origin, float)
    d = np.asarray(ray.direction, float)
    t = float(intersect_many(surface, o[None], d[None])[0])
    if math.isnan(t):
        return None
    p = o + t * d
    return RayHit(p, surface_normal(surface, p[None])[0], t)


def segment_transmission(obstacles, starts, ends):
    """Product of obstacle transmissions crossed by each segment start->end."""
    starts = np.asarray(starts, float)
    ends = np.asarray(ends, float)
    seg = ends - starts
    length = np.linalg.norm(seg, axis=-1)
    d = seg / length[..., None]
    out = np.ones(starts.shape[:-1])
    for ob in obstacles:
        t = intersect_many(ob, starts, d)
        crossed = np.isfinite(t) & (t < length)
        out = np.where(crossed, out * ob.transmission, out)
    return out
