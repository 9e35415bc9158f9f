"""Product of a regular tree with the real line, carrying the l2 metric.

This is the lab's flat-strip pathology generator: every axis of an isometry
extends to a flat strip or plane, so nothing here is contracting, and no
pair of disjoint curtains is L-separated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .base import GeodesicSeg, GeometryError, ModelSpace
from .tree import RegularTree, TreeBoundary, TreePoint

__all__ = ["ProductPoint", "ProductBoundary", "ProductGeodesic", "TreeTimesLine"]


@dataclass(frozen=True)
class ProductPoint:
    tree: TreePoint
    r: float


@dataclass(frozen=True)
class ProductBoundary:
    """Ideal point: direction split (alpha, beta) with alpha >= 0 toward a
    tree end (present iff alpha > 0) and beta along the line factor."""

    tree: TreeBoundary | None
    alpha: float
    beta: float

    def __post_init__(self):
        if abs(self.alpha ** 2 + self.beta ** 2 - 1.0) > 1e-9 or self.alpha < 0:
            raise GeometryError("boundary weight must satisfy alpha^2+beta^2=1, alpha>=0")
        if self.alpha > 1e-12 and self.tree is None:
            raise GeometryError("tree end required when alpha > 0")


class ProductGeodesic(GeodesicSeg):
    __slots__ = ("tree_geo", "alpha", "beta")

    def __init__(self, space, a: ProductPoint, b: ProductPoint):
        tree_geo = space.tree.geodesic(a.tree, b.tree)
        lt = tree_geo.length
        lr = b.r - a.r
        length = math.hypot(lt, lr)
        super().__init__(space, a, b, length)
        self.tree_geo = tree_geo
        if length > 0:
            self.alpha = lt / length
            self.beta = lr / length
        else:
            self.alpha = 0.0
            self.beta = 0.0

    def eval(self, t: float) -> ProductPoint:
        t = self._check_param(t)
        sigma = min(self.alpha * t, self.tree_geo.length)
        return ProductPoint(self.tree_geo.eval(sigma), self.a.r + self.beta * t)


class TreeTimesLine(ModelSpace):
    def __init__(self, q: int = 3):
        self.tree = RegularTree(q)
        self.q = q
        self.kind = f"product(q={q})"

    @property
    def basepoint(self) -> ProductPoint:
        return ProductPoint(self.tree.basepoint, 0.0)

    def check_point(self, x) -> None:
        if not isinstance(x, ProductPoint):
            raise GeometryError(f"not a product point: {x!r}")
        self.tree.check_point(x.tree)
        if not math.isfinite(x.r):
            raise GeometryError("line coordinate must be finite")

    def distance(self, x: ProductPoint, y: ProductPoint) -> float:
        return math.hypot(self.tree.distance(x.tree, y.tree), x.r - y.r)

    def geodesic(self, x: ProductPoint, y: ProductPoint) -> ProductGeodesic:
        return ProductGeodesic(self, x, y)

    def project(self, geo: ProductGeodesic, x: ProductPoint):
        if geo.length == 0.0:
            return geo.a, 0.0
        alpha, beta = geo.alpha, geo.beta
        c = x.r - geo.a.r
        if alpha <= 1e-15:
            t = min(max(beta * c, 0.0), geo.length)
            return geo.eval(t), t
        _, tau = self.tree.project(geo.tree_geo, x.tree)
        foot = geo.tree_geo.eval(tau)
        h = self.tree.distance(x.tree, foot)
        split = tau / alpha
        candidates = []
        t1 = min(max(alpha * (tau + h) + beta * c, 0.0), min(split, geo.length))
        candidates.append(t1)
        t2 = min(max(alpha * (tau - h) + beta * c, max(split, 0.0)), geo.length)
        candidates.append(t2)

        def f(t):
            return (abs(alpha * t - tau) + h) ** 2 + (c - beta * t) ** 2

        t = min(candidates, key=f)
        return geo.eval(t), t

    def busemann(self, xi: ProductBoundary, base: ProductPoint,
                 z: ProductPoint) -> float:
        val = xi.beta * (base.r - z.r)
        if xi.alpha > 1e-12:
            val += xi.alpha * self.tree.busemann(xi.tree, base.tree, z.tree)
        return val

    def gromov_product_boundary(self, x: ProductBoundary, y: ProductBoundary,
                                o: ProductPoint) -> float:
        if abs(x.beta + y.beta) > 1e-9:
            return math.inf
        alpha = x.alpha
        if alpha <= 1e-12:
            return 0.0
        tree_val = self.tree.gromov_product_boundary(x.tree, y.tree, o.tree)
        return alpha * tree_val

    def boundary_of_ray(self, o: ProductPoint, z: ProductPoint) -> ProductBoundary:
        d = self.distance(o, z)
        if d <= 0:
            raise GeometryError("ray needs two distinct points")
        dt = self.tree.distance(o.tree, z.tree)
        alpha = dt / d
        beta = (z.r - o.r) / d
        tree_b = self.tree.boundary_of_ray(o.tree, z.tree) if dt > 0 else None
        return ProductBoundary(tree_b, alpha, beta)

    def sample_point(self, rng, radius: float, center: ProductPoint | None = None):
        if center is None:
            center = self.basepoint
        rt = radius / math.sqrt(2.0)
        tree_pt = self.tree.sample_point(rng, rt, center.tree)
        return ProductPoint(tree_pt, center.r + rng.uniform(-rt, rt))

    def special_params(self, geo: ProductGeodesic):
        if geo.alpha <= 1e-12:
            return []
        return [min(t / geo.alpha, geo.length)
                for t in self.tree.special_params(geo.tree_geo)]

    def fiber_probe(self, geo: ProductGeodesic, t: float, offsets, rng=None):
        """Probe points near the fiber; callers must verify membership."""
        p = geo.eval(t)
        out = [p]
        sigma = min(geo.alpha * t, geo.tree_geo.length)
        tree_fiber = self.tree.fiber_probe(geo.tree_geo, sigma,
                                           [abs(s) for s in offsets], rng)
        out.extend(ProductPoint(tp, p.r) for tp in tree_fiber[1:])
        out.extend(ProductPoint(p.tree, p.r + s) for s in offsets if s != 0.0)
        return out
