"""
Aperture-plane blockage masks.

A mask is an ordered list of 2D shadow primitives with amplitude
transmissions; overlapping primitives multiply. A separate uniform factor
models a film that every ray crosses (insertion loss, not a shadow).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateProjectionError
from .geometry import Obstacle3D

SHAPES = ("disc", "ellipse", "rectangle")


@dataclass(frozen=True)
class MaskPrimitive:
    """Shadow outline in aperture-plane coordinates (mm).

    ``size`` is ``(radius,)`` for discs, ``(semi_a, semi_b)`` for ellipses
    and ``(width, height)`` for rectangles, measured before ``rotation_deg``.
    """

    shape: str
    center: tuple
    size: tuple
    rotation_deg: float = 0.0
    transmission: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}")
        want = 1 if self.shape == "disc" else 2
        if len(self.size) != want or min(self.size) <= 0:
            raise ValueError(f"{self.shape} needs {want} positive size value(s)")
        if not 0.0 <= self.transmission <= 1.0:
            raise ValueError("transmission must lie in [0, 1]")

    @classmethod
    def disc(cls, radius, center=(0.0, 0.0), transmission=0.0, label=""):
        return cls("disc", tuple(center), (float(radius),), 0.0, transmission, label)

    @classmethod
    def ellipse(cls, semi_a, semi_b, center=(0.0, 0.0), rotation_deg=0.0,
                transmission=0.0, label=""):
        return cls("ellipse", tuple(center), (float(semi_a), float(semi_b)),
                   rotation_deg, transmission, label)

    @classmethod
    def rectangle(cls, width, height, center=(0.0, 0.0), rotation_deg=0.0,
                  transmission=0.0, label=""):
        return cls("rectangle", tuple(center), (float(width), float(height)),
                   rotation_deg, transmission, label)

    def contains(self, x, y):
        dx = np.asarray(x, float) - self.center[0]
        dy = np.asarray(y, float) - self.center[1]
        if self.shape == "disc":
            return dx * dx + dy * dy <= self.size[0] ** 2
        a = math.radians(self.rotation_deg)
        u = dx * math.cos(a) + dy * math.sin(a)
        v = -dx * math.sin(a) + dy * math.cos(a)
        if self.shape == "ellipse":
            return (u / self.size[0]) ** 2 + (v / self.size[1]) ** 2 <= 1.0
        return (np.abs(u) <= 0.5 * self.size[0]) & (np.abs(v) <= 0.5 * self.size[1])

    @property
    def area(self):
        if self.shape == "disc":
            return math.pi * self.size[0] ** 2
        if self.shape == "ellipse":
            return math.pi * self.size[0] * self.size[1]
        return self.size[0] * self.size[1]


@dataclass(frozen=True)
class BlockageMask:
    primitives: tuple = field(default_factory=tuple)
    film_transmission: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        if not 0.0 < self.film_transmission <= 1.0:
            raise ValueError("film_transmission must lie in (0, 1]")

    @property
    def is_identity(self):
        return not self.primitives and self.film_transmission == 1.0

    def add(self, *prims):
        return replace(self, primitives=self.primitives + tuple(prims))

    def with_film_loss(self, loss_db):
        return replace(self, film_transmission=10.0 ** (-loss_db / 20.0))

    def transmission_map(self, x, y):
        """Product of primitive transmissions (film factor excluded)."""
        t = np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        for p in self.primitives:
            t = np.where(p.contains(x, y), t * p.transmission, t)
        return t


def project_obstacle(obstacle: Obstacle3D, direction, transmission=None) -> MaskPrimitive:
    """Parallel projection of a flat obstacle onto the aperture plane.

    A disc tilted by alpha relative to the projection direction becomes an
    ellipse with semi-axes ``(r, r cos(alpha))``. Rectangles stay rectangles
    only when one edge is perpendicular to the tilt; other cases project to a
    parallelogram, which is rejected.
    """
    d = np.asarray(direction, float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    n = np.asarray(obstacle.normal, float)
    if abs(d @ n) < 1e-12:
        raise DegenerateProjectionError("projection direction lies in the obstacle plane")
    if abs(d[2]) < 1e-12:
        raise DegenerateProjectionError("projection direction parallel to the aperture plane")

    def proj(v):
        return (v - v[2] / d[2] * d)[:2]

    c = proj(np.asarray(obstacle.center, float))
    t = obstacle.transmission if transmission is None else transmission
    e1, e2 = obstacle.in_plane_axes()
    label = obstacle.label

    if obstacle.shape == "disc":
        m = np.column_stack([proj(e1), proj(e2)]) * obstacle.radius
        U, s, _ = np.linalg.svd(m)
        if s[1] < 1e-12 * s[0]:
            raise DegenerateProjectionError("obstacle projects edge-on")
        if abs(s[0] - s[1]) <= 1e-12 * s[0]:
            return MaskPrimitive.disc(s[0], tuple(c), t, label)
        rot = math.degrees(math.atan2(U[1, 0], U[0, 0]))
        return MaskPrimitive.ellipse(s[0], s[1], tuple(c), rot, t, label)

    pu = proj(e1) * obstacle.extents[0]
    pv = proj(e2) * obstacle.extents[1]
    nu, nv = np.linalg.norm(pu), np.linalg.norm(pv)
    if min(nu, nv) < 1e-12 * max(nu, nv):
        raise DegenerateProjectionError("obstacle projects edge-on")
    if abs(pu @ pv) > 1e-9 * nu * nv:
        raise DegenerateProjectionError("rectangle projects to a parallelogram")
    rot = math.degrees(math.atan2(pu[1], pu[0]))
    return MaskPrimitive.rectangle(nu, nv, tuple(c), rot, t, label)


def apply_mask(mask: BlockageMask, field):
    """Multiply aperture samples by the mask and book the losses.

    An identity mask returns ``field`` itself.
    """
    if mask.is_identity:
        return field
    X, Y = field.coordinates()
    t = mask.transmission_map(X, Y) * mask.film_transmission
    co = field.co * t
    cx = field.cx * t
    before = field.power()
    after = float(np.sum(np.abs(co) ** 2 + np.abs(cx) ** 2)) * field.cell_size ** 2
    film_power = mask.film_transmission ** 2
    lb = field.loss_budget
    mask_db = lb.mask_db
    if before > 0 and after > 0:
        mask_db += 10.0 * math.log10(after / (before * film_power))
    elif before > 0:
        mask_db = -math.inf
    lb = replace(lb, mask_db=mask_db,
                 film_db=lb.film_db - 20.0 * math.log10(mask.film_transmission))
    return replace(field, co=co, cx=cx, loss_budget=lb)


def blockage_area_fraction(mask: BlockageMask, aperture_diameter, grid_n=1024):
    """Opaque-equivalent shadow area over aperture area, sampled on the solver grid.

    Each sample contributes ``1 - t`` (amplitude shadow weight), so an opaque
    primitive counts fully and a partially transmitting one fractionally.
    The mask is assumed centred on the aperture.
    """
    if aperture_diameter <= 0:
        raise ValueError("aperture_diameter must be > 0")
    if not mask.primitives:
        return 0.0
    cell = aperture_diameter * 1.02 / grid_n
    xs = (np.arange(grid_n) - 0.5 * (grid_n - 1)) * cell
    X, Y = np.meshgrid(xs, xs)
    inside = X * X + Y * Y <= (0.5 * aperture_diameter) ** 2
    t = mask.transmission_map(X[inside], Y[inside])
    return float(np.sum(1.0 - t) / inside.sum())
