"""Flat plane. Points are complex numbers; boundary proxies are unit directions.

The flat plane is the degenerate control case of the lab: its boundary
Gromov products are genuinely infinite for non-opposite directions, and no
pair of disjoint curtains is L-separated for any L.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .base import GeodesicSeg, GeometryError, ModelSpace

__all__ = ["EuclideanBoundary", "EuclideanGeodesic", "EuclideanPlane"]


@dataclass(frozen=True)
class EuclideanBoundary:
    """Ideal point of the flat plane: a unit direction."""

    direction: complex

    def __post_init__(self):
        if abs(abs(self.direction) - 1.0) > 1e-9:
            raise GeometryError("boundary direction must be a unit vector")


class EuclideanGeodesic(GeodesicSeg):
    __slots__ = ("unit",)

    def __init__(self, space, a: complex, b: complex):
        length = abs(b - a)
        super().__init__(space, a, b, length)
        self.unit = (b - a) / length if length > 0 else 1.0 + 0.0j

    def eval(self, t: float) -> complex:
        t = self._check_param(t)
        return self.a + t * self.unit


class EuclideanPlane(ModelSpace):
    kind = "euclidean"

    @property
    def basepoint(self) -> complex:
        return 0.0 + 0.0j

    def point(self, x: float, y: float) -> complex:
        return complex(x, y)

    def check_point(self, x) -> None:
        if not isinstance(x, complex):
            raise GeometryError(f"not a plane point: {x!r}")
        if not (math.isfinite(x.real) and math.isfinite(x.imag)):
            raise GeometryError("coordinates must be finite")

    def distance(self, x: complex, y: complex) -> float:
        return abs(x - y)

    def geodesic(self, x: complex, y: complex) -> EuclideanGeodesic:
        return EuclideanGeodesic(self, x, y)

    def project(self, geo: EuclideanGeodesic, x: complex):
        if geo.length == 0.0:
            return geo.a, 0.0
        t = (x - geo.a).real * geo.unit.real + (x - geo.a).imag * geo.unit.imag
        t = min(max(t, 0.0), geo.length)
        return geo.eval(t), t

    def busemann(self, xi: EuclideanBoundary, base: complex, z: complex) -> float:
        d = xi.direction
        rel = z - base
        return -(d.real * rel.real + d.imag * rel.imag)

    def gromov_product_boundary(self, x: EuclideanBoundary, y: EuclideanBoundary,
                                o: complex) -> float:
        # flat plane: the product diverges unless the directions are opposite
        if abs(x.direction + y.direction) < 1e-9:
            return 0.0
        return math.inf

    def boundary_of_ray(self, o: complex, z: complex) -> EuclideanBoundary:
        if z == o:
            raise GeometryError("ray needs two distinct points")
        return EuclideanBoundary((z - o) / abs(z - o))

    def sample_point(self, rng, radius: float, center: complex | None = None):
        if center is None:
            center = self.basepoint
        r = radius * math.sqrt(rng.uniform(0.0, 1.0))
        phi = rng.uniform(0.0, 2.0 * math.pi)
        return center + cmath.rect(r, phi)

    def special_params(self, geo: EuclideanGeodesic):
        return []

    def fiber_probe(self, geo: EuclideanGeodesic, t: float, offsets, rng=None):
        base = geo.eval(t)
        normal = geo.unit * 1j
        return [base + s * normal for s in offsets]
