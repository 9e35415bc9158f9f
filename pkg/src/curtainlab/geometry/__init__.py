"""Exact metric kernels for the four model CAT(0) spaces."""

from .base import GeodesicSeg, GeometryError, ModelSpace
from .euclidean import EuclideanBoundary, EuclideanGeodesic, EuclideanPlane
from .hplane import (INFINITY, HBoundary, HGeodesic, HyperbolicPlane,
                     mobius_apply, mobius_boundary)
from .product import (ProductBoundary, ProductGeodesic, ProductPoint,
                      TreeTimesLine)
from .tree import (BoundaryDepthError, RegularTree, TreeBoundary, TreeGeodesic,
                   TreePoint)
from .words import Alphabet, common_prefix_len

__all__ = [
    "Alphabet", "BoundaryDepthError", "EuclideanBoundary", "EuclideanGeodesic",
    "EuclideanPlane", "GeodesicSeg", "GeometryError", "HBoundary", "HGeodesic",
    "HyperbolicPlane", "INFINITY", "ModelSpace", "ProductBoundary",
    "ProductGeodesic", "ProductPoint", "RegularTree", "TreeBoundary",
    "TreeGeodesic", "TreePoint", "TreeTimesLine", "common_prefix_len",
    "mobius_apply", "mobius_boundary",
]
