"""Pore configurations on the plane z = 0 and on the unit sphere."""

import enum
import itertools
from dataclasses import dataclass
from math import asin, pi

import numpy as np

from .errors import InvalidInputError

SURFACE_TOL = 1e-12
OVERLAP_MARGIN = 1e-12
GOLDEN_RATIO = (1 + 5 ** 0.5) / 2


class Surface(enum.Enum):
    PLANE = "plane"
    UNIT_SPHERE = "sphere"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"plane": cls.PLANE, "planar": cls.PLANE,
                   "sphere": cls.UNIT_SPHERE, "unitsphere": cls.UNIT_SPHERE,
                   "unit_sphere": cls.UNIT_SPHERE}
        if key not in aliases:
            raise InvalidInputError(f"unknown surface kind {value!r}")
        return aliases[key]


def _on_surface(x, surface):
    if surface is Surface.PLANE:
        return abs(x[2]) <= SURFACE_TOL
    return abs(np.linalg.norm(x) - 1.0) <= SURFACE_TOL


@dataclass(frozen=True)
class Pore:
    """A circular pore.  On the sphere ``radius`` is the chord radius 2 sin(nu/2)."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 3 or not all(np.isfinite(c)):
            raise InvalidInputError("pore center must be a finite 3-vector")
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not r > 0:
            raise InvalidInputError("pore radius must be positive")
        object.__setattr__(self, "radius", r)

    @property
    def half_angle(self) -> float:
        """Angular radius of a spherical cap with this chord radius."""
        return 2 * asin(self.radius / 2)

    @classmethod
    def cap(cls, center, half_angle: float) -> "Pore":
        """Spherical cap given its angular radius."""
        return cls(center, 2 * np.sin(half_angle / 2))


@dataclass(frozen=True)
class PoreConfiguration:
    surface: Surface
    pores: tuple[Pore, ...]
    diffusivity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "surface", Surface.parse(self.surface))
        object.__setattr__(self, "pores", tuple(self.pores))
        if not self.pores:
            raise InvalidInputError("configuration needs at least one pore")
        if not self.diffusivity > 0:
            raise InvalidInputError("diffusivity must be positive")
        for p in self.pores:
            if not _on_surface(np.asarray(p.center), self.surface):
                raise InvalidInputError(f"pore center {p.center} is not on the {self.surface.value}")
            if self.surface is Surface.UNIT_SPHERE and p.radius >= 2:
                raise InvalidInputError("chord radius on the unit sphere must be below 2")

    @classmethod
    def from_centers(cls, surface, centers, radius: float, diffusivity: float = 1.0):
        return cls(surface, tuple(Pore(tuple(c), radius) for c in centers), diffusivity)

    @property
    def centers(self) -> np.ndarray:
        return np.array([p.center for p in self.pores])

    @property
    def radii(self) -> np.ndarray:
        return np.array([p.radius for p in self.pores])

    @property
    def n_pores(self) -> int:
        return len(self.pores)

    def common_radius(self) -> float | None:
        r = self.radii
        if np.all(r == r[0]):
            return float(r[0])
        return None


def chord_distance(x, y, surface: Surface) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    surface = Surface.parse(surface)
    if not (_on_surface(x, surface) and _on_surface(y, surface)):
        raise InvalidInputError("points must lie on the surface")
    if surface is Surface.PLANE:
        return float(np.hypot(x[0] - y[0], x[1] - y[1]))
    # |x - y| directly; sqrt(2 - 2 x.y) loses digits for close points
    return float(min(np.linalg.norm(x - y), 2.0))


def angular_separation(x, y) -> float:
    """Great-circle angle between two unit vectors, accurate at both ends."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(x, y)), np.dot(x, y)))


@dataclass(frozen=True)
class OverlapReport:
    violations: tuple[tuple[int, int], ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_nonoverlap(config: PoreConfiguration) -> OverlapReport:
    """Pairs (1-based) of pores that touch or overlap."""
    bad = []
    pores = config.pores
    for a, b in itertools.combinations(range(len(pores)), 2):
        pa, pb = pores[a], pores[b]
        if config.surface is Surface.PLANE:
            sep = np.hypot(pa.center[0] - pb.center[0], pa.center[1] - pb.center[1])
            limit = pa.radius + pb.radius
        else:
            sep = angular_separation(pa.center, pb.center)
            limit = pa.half_angle + pb.half_angle
        if not sep > limit + OVERLAP_MARGIN:
            bad.append((a + 1, b + 1))
    return OverlapReport(tuple(bad))


def fibonacci_sphere(k: int) -> np.ndarray:
    """N = 2k + 1 Fibonacci spiral points with sin(latitude_j) = 2j/N, j = -k..k."""
    if int(k) != k or k < 1:
        raise InvalidInputError("fibonacci_sphere needs an integer k >= 1")
    n = 2 * k + 1
    j = np.arange(-k, k + 1)
    sin_lat = 2.0 * j / n
    cos_lat = np.sqrt((1 - sin_lat) * (1 + sin_lat))
    phi = 2 * pi * j / GOLDEN_RATIO
    return np.column_stack([cos_lat * np.cos(phi), cos_lat * np.sin(phi), sin_lat])


def _normalize(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def platonic_vertices(solid: str) -> np.ndarray:
    s = str(solid).lower()
    phi = GOLDEN_RATIO
    if s in ("tetra", "tetrahedron"):
        v = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    elif s in ("octa", "octahedron"):
        v = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    elif s == "cube":
        v = list(itertools.product((-1, 1), repeat=3))
    elif s in ("icosa", "icosahedron"):
        v = []
        for a, b in itertools.product((-1, 1), repeat=2):
            v += [(0, a, b * phi), (a, b * phi, 0), (b * phi, 0, a)]
    elif s in ("dodeca", "dodecahedron"):
        v = list(itertools.product((-1, 1), repeat=3))
        for a, b in itertools.product((-1, 1), repeat=2):
            v += [(0, a / phi, b * phi), (a / phi, b * phi, 0), (b * phi, 0, a / phi)]
    else:
        raise InvalidInputError(f"unknown Platonic solid {solid!r}")
    return _normalize(v)


def pattern_planar(kind: str, count: int = 4, scale: float = 2.0) -> np.ndarray:
    kind = str(kind).lower()
    if kind == "square":
        return np.array([(sx * scale, sy * scale, 0.0) for sx in (1, -1) for sy in (1, -1)])
    if kind == "ring":
        if int(count) != count or count < 2:
            raise InvalidInputError("ring pattern needs count >= 2")
        t = 2 * pi * np.arange(count) / count
        return np.column_stack([scale * np.cos(t), scale * np.sin(t), np.zeros(count)])
    raise InvalidInputError(f"unknown planar pattern {kind!r}")


def local_frame(center) -> np.ndarray:
    """Rows e1, e2, e3 of the tangent frame at a point of the unit sphere.

    e3 is the outward normal, e1 and e2 the polar and azimuthal unit vectors.
    """
    x, y, z = center
    theta = np.arctan2(np.hypot(x, y), z)
    phi = np.arctan2(y, x)
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    return np.array([[ct * cp, ct * sp, -st], [-sp, cp, 0.0], [st * cp, st * sp, ct]])
