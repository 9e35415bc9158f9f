"""Shared metric-kernel interface for the four model spaces.

Every space exposes exact closed-form distance, unit-speed geodesics,
closest-point projection onto geodesic segments, Busemann functions for
boundary proxies, and Gromov products (interior, mixed, and boundary).
All values are immutable after construction and every operation is pure.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

__all__ = ["GeometryError", "GeodesicSeg", "ModelSpace"]


class GeometryError(ValueError):
    """Invalid coordinates or out-of-domain geometric request."""


class GeodesicSeg(ABC):
    """Unit-speed geodesic segment with endpoints ``a``, ``b``.

    Contract: eval(0) == a, eval(length) == b, and
    d(eval(s), eval(t)) == |s - t| for s, t in [0, length].
    """

    __slots__ = ("space", "a", "b", "length")

    def __init__(self, space, a, b, length):
        self.space = space
        self.a = a
        self.b = b
        self.length = float(length)

    @abstractmethod
    def eval(self, t: float):
        """Point at arclength t from ``a``; t must lie in [0, length]."""

    def _check_param(self, t: float) -> float:
        if t < -1e-9 or t > self.length + 1e-9:
            raise GeometryError(f"parameter {t} outside [0, {self.length}]")
        return min(max(t, 0.0), self.length)

    def __repr__(self):
        return f"{type(self).__name__}({self.a!r} -> {self.b!r}, length={self.length:.6g})"


class ModelSpace(ABC):
    """Proper CAT(0) model space with exact metric oracles."""

    #: short identifier used in configs and reports
    kind: str

    @property
    @abstractmethod
    def basepoint(self):
        """Distinguished basepoint o."""

    @abstractmethod
    def check_point(self, x) -> None:
        """Raise GeometryError if x is not a valid point of this space."""

    @abstractmethod
    def distance(self, x, y) -> float:
        """Exact closed-form metric value."""

    @abstractmethod
    def geodesic(self, x, y) -> GeodesicSeg:
        """Unit-speed geodesic segment from x to y (length 0 allowed)."""

    @abstractmethod
    def project(self, geo: GeodesicSeg, x):
        """Closest-point projection onto the segment: (foot, parameter).

        Unique by CAT(0) convexity; foot == geo.eval(parameter).
        """

    @abstractmethod
    def busemann(self, xi, base, z) -> float:
        """Horofunction b_xi normalized to 0 at ``base``, evaluated at z."""

    @abstractmethod
    def gromov_product_boundary(self, x, y, o) -> float:
        """Gromov product of two boundary proxies; math.inf when coincident."""

    @abstractmethod
    def boundary_of_ray(self, o, z):
        """Boundary proxy of the geodesic ray from o through z (o != z)."""

    @abstractmethod
    def sample_point(self, rng, radius: float, center=None):
        """Random point within distance ~radius of ``center`` (audit sampling)."""

    def gromov_product(self, x, y, o) -> float:
        """(x|y)_o = (d(x,o) + d(y,o) - d(x,y)) / 2 for interior points."""
        val = 0.5 * (self.distance(x, o) + self.distance(y, o) - self.distance(x, y))
        return max(val, 0.0)

    def mixed_gromov_product(self, m, x, o) -> float:
        """(m|x)_o = (d(o,m) - b_x^o(m)) / 2 for m interior, x on the boundary."""
        return 0.5 * (self.distance(o, m) - self.busemann(x, o, m))

    def midpoint(self, x, y):
        return self.geodesic(x, y).eval(0.5 * self.distance(x, y))

    # --- hooks used by the curtain machinery -------------------------------

    def geo_param(self, geo: GeodesicSeg, x) -> float:
        """Projection parameter of x on ``geo`` (second member of project)."""
        return self.project(geo, x)[1]

    def special_params(self, geo: GeodesicSeg):
        """Parameters where projection fibers are thicker than generic
        (tree vertices); empty for smooth spaces."""
        return []

    @abstractmethod
    def fiber_probe(self, geo: GeodesicSeg, t: float, offsets, rng=None):
        """Points of the projection fiber over geo.eval(t), at the given
        transversal offsets (exact where the space admits it, sampled on
        trees). Used to sample curtains away from their poles."""

    def __repr__(self):
        return f"{type(self).__name__}()"


def stable_acosh(x: float) -> float:
    """acosh that tolerates tiny negative rounding of x-1."""
    if x < 1.0:
        if x < 1.0 - 1e-9:
            raise GeometryError(f"acosh argument {x} < 1")
        return 0.0
    return math.acosh(x)
