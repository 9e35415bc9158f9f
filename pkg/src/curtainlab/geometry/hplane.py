"""Upper half-plane model of the hyperbolic plane.

Points are complex numbers with positive imaginary part; ideal points are
reals or INFINITY. Each geodesic carries a real Moebius map sending it to
the positive imaginary axis, where evaluation, projection and perpendicular
fibers are one-liners: the projection of w onto the axis is i|w|, and
arclength along the axis is log of the height. Everything is closed form;
distances use the asinh form of the metric for stability near small
separations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .base import GeodesicSeg, GeometryError, ModelSpace

INFINITY = math.inf

__all__ = ["INFINITY", "HBoundary", "HGeodesic", "HyperbolicPlane",
           "mobius_apply", "mobius_boundary"]


@dataclass(frozen=True)
class HBoundary:
    """Ideal point of the half-plane: a real number or INFINITY."""

    xi: float

    def __post_init__(self):
        if not (math.isfinite(self.xi) or math.isinf(self.xi)):
            raise GeometryError("ideal point must be real or infinity")

    def is_infinity(self) -> bool:
        return math.isinf(self.xi)


def mobius_apply(m, z: complex) -> complex:
    a, b, c, d = m
    return (a * z + b) / (c * z + d)


def mobius_boundary(m, xi: float) -> float:
    """Action of a real Moebius matrix on the circle at infinity."""
    a, b, c, d = m
    if math.isinf(xi):
        return a / c if c != 0.0 else INFINITY
    den = c * xi + d
    if den == 0.0:
        return INFINITY
    return (a * xi + b) / den


def _axis_map(p: float, q: float):
    """Real Moebius matrix (det > 0) with p -> 0, q -> infinity."""
    if math.isinf(q):
        return (1.0, -p, 0.0, 1.0)
    if math.isinf(p):
        return (0.0, -1.0, 1.0, -q)
    if p > q:
        return (1.0, -p, 1.0, -q)
    return (-1.0, p, 1.0, -q)


def _inverse(m):
    a, b, c, d = m
    return (d, -b, -c, a)


def _line_endpoints(x: complex, y: complex):
    """Ideal endpoints (behind x, ahead of y) of the geodesic through x, y."""
    if abs(x.real - y.real) < 1e-13 * (1.0 + abs(x.real)):
        if y.imag > x.imag:
            return x.real, INFINITY
        return INFINITY, x.real
    c = (abs(x) ** 2 - abs(y) ** 2) / (2.0 * (x.real - y.real))
    r = abs(x - c)
    if y.real > x.real:
        return c - r, c + r
    return c + r, c - r


class HGeodesic(GeodesicSeg):
    __slots__ = ("m", "minv", "t0", "p", "q")

    def __init__(self, space, a: complex, b: complex):
        length = space.distance(a, b)
        super().__init__(space, a, b, length)
        if length == 0.0:
            self.m = self.minv = None
            self.t0 = 0.0
            self.p = self.q = None
            return
        self.p, self.q = _line_endpoints(a, b)
        self.m = _axis_map(self.p, self.q)
        self.minv = _inverse(self.m)
        self.t0 = math.log(mobius_apply(self.m, a).imag)

    def eval(self, t: float) -> complex:
        t = self._check_param(t)
        if self.m is None:
            return self.a
        return mobius_apply(self.minv, 1j * math.exp(self.t0 + t))

    def raw_param(self, x: complex) -> float:
        """Arclength coordinate of the projection of x onto the full line."""
        w = mobius_apply(self.m, x)
        return math.log(abs(w)) - self.t0


class HyperbolicPlane(ModelSpace):
    kind = "hplane"

    @property
    def basepoint(self) -> complex:
        return 1j

    def point(self, re: float, im: float) -> complex:
        if im <= 0:
            raise GeometryError("half-plane point needs positive imaginary part")
        return complex(re, im)

    def check_point(self, x) -> None:
        if not isinstance(x, complex) or not x.imag > 0:
            raise GeometryError(f"not an upper half-plane point: {x!r}")
        if not (math.isfinite(x.real) and math.isfinite(x.imag)):
            raise GeometryError("coordinates must be finite")

    def distance(self, x: complex, y: complex) -> float:
        return 2.0 * math.asinh(abs(x - y) / (2.0 * math.sqrt(x.imag * y.imag)))

    def geodesic(self, x: complex, y: complex) -> HGeodesic:
        return HGeodesic(self, x, y)

    def project(self, geo: HGeodesic, x: complex):
        if geo.length == 0.0:
            return geo.a, 0.0
        t = min(max(geo.raw_param(x), 0.0), geo.length)
        return geo.eval(t), t

    def busemann(self, xi: HBoundary, base: complex, z: complex) -> float:
        if xi.is_infinity():
            return math.log(base.imag) - math.log(z.imag)
        ratio = abs(z - xi.xi) / abs(base - xi.xi)
        return 2.0 * math.log(ratio) - math.log(z.imag) + math.log(base.imag)

    def gromov_product_boundary(self, x: HBoundary, y: HBoundary,
                                o: complex) -> float:
        if x.xi == y.xi:
            return math.inf
        if x.is_infinity():
            return math.log(abs(o - y.xi) / o.imag)
        if y.is_infinity():
            return math.log(abs(o - x.xi) / o.imag)
        val = abs(o - x.xi) * abs(o - y.xi) / (o.imag * abs(x.xi - y.xi))
        return math.log(val)

    def boundary_of_ray(self, o: complex, z: complex) -> HBoundary:
        if o == z:
            raise GeometryError("ray needs two distinct points")
        _, ahead = _line_endpoints(o, z)
        return HBoundary(ahead)

    def sample_point(self, rng, radius: float, center: complex | None = None):
        if center is None:
            center = self.basepoint
        r = rng.uniform(0.0, radius)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        return self.ray_point(center, phi, r)

    def ray_point(self, z0: complex, phi: float, r: float) -> complex:
        """Point at hyperbolic distance r from z0 along tangent angle phi."""
        if r == 0.0:
            return z0
        behind, ahead = self._tangent_endpoints(z0, phi)
        m = _axis_map(behind, ahead)
        y0 = mobius_apply(m, z0).imag
        return mobius_apply(_inverse(m), 1j * y0 * math.exp(r))

    def _tangent_endpoints(self, z0: complex, phi: float):
        c, s = math.cos(phi), math.sin(phi)
        if abs(c) < 1e-12:
            if s > 0:
                return z0.real, INFINITY
            return INFINITY, z0.real
        center = z0.real + z0.imag * (s / c)
        radius = z0.imag / abs(c)
        if c > 0:
            return center - radius, center + radius
        return center + radius, center - radius

    def special_params(self, geo: HGeodesic):
        return []

    def fiber_probe(self, geo: HGeodesic, t: float, offsets, rng=None):
        """Exact fiber: the perpendicular geodesic at geo.eval(t)."""
        if geo.m is None:
            return [geo.a]
        y = math.exp(geo.t0 + self._clamp(t, geo))
        out = []
        for s in offsets:
            theta = 2.0 * math.atan(math.exp(s))
            w = y * complex(math.cos(theta), math.sin(theta))
            out.append(mobius_apply(geo.minv, w))
        return out

    @staticmethod
    def _clamp(t: float, geo: HGeodesic) -> float:
        return min(max(t, 0.0), geo.length)
