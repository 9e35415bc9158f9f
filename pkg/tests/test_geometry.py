"""Metric kernel checks: axioms, geodesics, projections, Busemann, products."""

import math

import numpy as np
import pytest

from curtainlab.geometry import (EuclideanBoundary, GeometryError, HBoundary,
                                 INFINITY, ProductBoundary, ProductPoint,
                                 TreeBoundary, TreePoint)
from curtainlab.harness import sample_boundary_proxy

TOL = 1e-9


def golden_section_param(space, geo, x, iters=80):
    """Independent projection oracle: golden-section on the evaluator."""
    lo, hi = 0.0, geo.length
    invphi = (math.sqrt(5) - 1) / 2
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc = space.distance(x, geo.eval(c))
    fd = space.distance(x, geo.eval(d))
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = space.distance(x, geo.eval(c))
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = space.distance(x, geo.eval(d))
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def test_distance_examples(tree, hplane, eplane):
    assert eplane.distance(0j, 3 + 4j) == pytest.approx(5.0, abs=TOL)
    # closed form cosh d = 1 + |z-w|^2 / (2 Im z Im w); cosh(ln 2) = 1.25
    d = hplane.distance(1j, 2j)
    assert d == pytest.approx(math.log(2), abs=TOL)
    assert math.cosh(d) == pytest.approx(1.25, abs=TOL)
    assert tree.distance(tree.basepoint, tree.vertex("ab")) == 2.0


def test_metric_axioms_sampled(all_spaces, rng):
    for space in all_spaces:
        for _ in range(2000):
            x = space.sample_point(rng, 8.0)
            y = space.sample_point(rng, 8.0)
            z = space.sample_point(rng, 8.0)
            assert space.distance(x, x) <= TOL
            assert abs(space.distance(x, y) - space.distance(y, x)) <= TOL
            assert space.distance(x, z) <= \
                space.distance(x, y) + space.distance(y, z) + TOL


def test_geodesic_unit_speed_and_midpoint(all_spaces, rng):
    for space in all_spaces:
        for _ in range(400):
            x = space.sample_point(rng, 8.0)
            y = space.sample_point(rng, 8.0)
            geo = space.geodesic(x, y)
            assert space.distance(geo.eval(0.0), x) <= TOL
            assert space.distance(geo.eval(geo.length), y) <= TOL
            if geo.length > 0:
                s, t = sorted(rng.uniform(0.0, geo.length, 2))
                assert space.distance(geo.eval(s), geo.eval(t)) == \
                    pytest.approx(t - s, abs=TOL)
                mid = space.midpoint(x, y)
                assert space.distance(x, mid) == \
                    pytest.approx(geo.length / 2, abs=TOL)


def test_geodesic_examples(tree, hplane, eplane):
    geo = eplane.geodesic(0j, 2 + 0j)
    assert geo.eval(1.0) == pytest.approx(1 + 0j)
    geo = tree.geodesic(tree.basepoint, tree.vertex("aa"))
    assert geo.eval(1.0) == tree.vertex("a")
    # vertical geodesic z(t) = i e^t, checked through the distance oracle
    geo = hplane.geodesic(1j, 4j)
    p = geo.eval(math.log(2))
    assert abs(p - 2j) < 1e-12
    assert hplane.distance(1j, p) == pytest.approx(math.log(2), abs=TOL)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def test_projection_examples(tree, hplane, eplane):
    foot, _ = eplane.project(eplane.geodesic(-1j, 1j), 1 + 0j)
    assert abs(foot) < TOL
    # tree oracle: enumerate segment points, pick the distance minimizer
    geo = tree.geodesic(tree.vertex("a"), tree.vertex("aa"))
    x = tree.vertex("b")
    foot, t = tree.project(geo, x)
    grid = np.linspace(0.0, geo.length, 41)
    dists = [tree.distance(x, geo.eval(s)) for s in grid]
    assert tree.distance(x, foot) <= min(dists) + TOL
    assert foot == tree.vertex("a")
    # half-plane: foot of 1+i on the imaginary axis is i*sqrt(2)
    geo = hplane.geodesic(1j, 4j)
    foot, t = hplane.project(geo, 1 + 1j)
    assert abs(foot - 1j * math.sqrt(2)) < 1e-7


def test_projection_against_golden_section(hplane, product, rng):
    for space in (hplane, product):
        for _ in range(40):
            a = space.sample_point(rng, 5.0)
            b = space.sample_point(rng, 5.0)
            if space.distance(a, b) < 0.3:
                continue
            geo = space.geodesic(a, b)
            x = space.sample_point(rng, 5.0)
            _, t = space.project(geo, x)
            t_oracle = golden_section_param(space, geo, x)
            assert abs(t - t_oracle) < 1e-6


def test_projection_lipschitz_and_idempotent(all_spaces, rng):
    for space in all_spaces:
        for _ in range(500):
            a = space.sample_point(rng, 8.0)
            b = space.sample_point(rng, 8.0)
            if space.distance(a, b) < 0.2:
                continue
            geo = space.geodesic(a, b)
            x = space.sample_point(rng, 8.0)
            y = space.sample_point(rng, 8.0)
            px, _ = space.project(geo, x)
            py, _ = space.project(geo, y)
            assert space.distance(px, py) <= space.distance(x, y) + TOL
            seg = space.geodesic(x, px)
            if seg.length > 0:
                xp = seg.eval(float(rng.uniform(0, seg.length)))
                pxp, _ = space.project(geo, xp)
                assert space.distance(pxp, px) <= 1e-7


# ---------------------------------------------------------------------------
# Busemann functions
# ---------------------------------------------------------------------------


def test_busemann_examples(tree, hplane):
    alpha = tree.alphabet
    xi = TreeBoundary.periodic(alpha, alpha.parse("a"))
    e = tree.basepoint
    assert tree.busemann(xi, e, e) == 0.0
    assert tree.busemann(xi, e, tree.vertex("a")) == -1.0
    # numeric limit oracle along x_n = i * 1e6
    xn = 1j * 1e6
    approx = hplane.distance(xn, 2j) - hplane.distance(xn, 1j)
    val = hplane.busemann(HBoundary(INFINITY), 1j, 2j)
    assert val == pytest.approx(-math.log(2), abs=TOL)
    assert val == pytest.approx(approx, abs=1e-6)


def test_busemann_base_normalization(all_spaces, rng):
    for space in all_spaces:
        for _ in range(50):
            xi = sample_boundary_proxy(space, rng)
            base = space.sample_point(rng, 4.0)
            assert space.busemann(xi, base, base) == pytest.approx(0.0, abs=TOL)


def test_busemann_lipschitz(all_spaces, rng):
    for space in all_spaces:
        for _ in range(500):
            xi = sample_boundary_proxy(space, rng)
            z = space.sample_point(rng, 8.0)
            w = space.sample_point(rng, 8.0)
            bz = space.busemann(xi, space.basepoint, z)
            bw = space.busemann(xi, space.basepoint, w)
            assert abs(bz - bw) <= space.distance(z, w) + TOL


def test_busemann_finite_depth_agreement(tree, hplane, eplane, product, rng):
    """b agrees with d(x_D, z) - d(x_D, base) at space-adapted depths.

    Trees are exact at depth 1000. The half-plane converges exponentially
    but its coordinates only represent depths up to ~700, so depth 300.
    Flat directions have a quadratic tail r^2/(2D), so the flat plane uses
    a huge depth (closed forms, no iteration) and the product a moderate
    one with the derived truncation budget added to the tolerance.
    """
    alpha = tree.alphabet
    for _ in range(20):
        xi = TreeBoundary.random_stream(alpha, rng)
        z = tree.sample_point(rng, 6.0)
        xd = tree.vertex(xi.prefix(1000))
        approx = tree.distance(xd, z) - tree.distance(xd, tree.basepoint)
        assert tree.busemann(xi, tree.basepoint, z) == pytest.approx(approx, abs=1e-6)
    for _ in range(20):
        xi = sample_boundary_proxy(hplane, rng)
        z = hplane.sample_point(rng, 6.0)
        xd = _h_deep_point(hplane, xi, 300.0)
        approx = hplane.distance(xd, z) - hplane.distance(xd, hplane.basepoint)
        assert hplane.busemann(xi, hplane.basepoint, z) == \
            pytest.approx(approx, abs=1e-6)
    for _ in range(20):
        xi = sample_boundary_proxy(eplane, rng)
        z = eplane.sample_point(rng, 6.0)
        depth = 1e9
        xd = eplane.basepoint + depth * xi.direction
        approx = abs(xd - z) - abs(xd - eplane.basepoint)
        assert eplane.busemann(xi, eplane.basepoint, z) == \
            pytest.approx(approx, abs=1e-6)
    for _ in range(10):
        xi = sample_boundary_proxy(product, rng)
        z = product.sample_point(rng, 2.0)
        depth = 1e5
        xd = _product_deep_point(product, xi, depth)
        approx = product.distance(xd, z) - product.distance(xd, product.basepoint)
        trunc = (2.0 * 2.0) ** 2 / (2.0 * depth)  # derived quadratic tail bound
        assert product.busemann(xi, product.basepoint, z) == \
            pytest.approx(approx, abs=1e-6 + 1.5 * trunc)


def _h_deep_point(hplane, xi, depth):
    o = hplane.basepoint
    from curtainlab.geometry.hplane import _axis_map, _inverse, mobius_apply
    if math.isinf(xi.xi):
        behind = o.real
    else:
        c = (abs(o) ** 2 - xi.xi ** 2) / (2.0 * (o.real - xi.xi))
        behind = 2.0 * c - xi.xi
    m = _axis_map(behind, xi.xi)
    y0 = mobius_apply(m, o).imag
    return mobius_apply(_inverse(m), 1j * y0 * math.exp(depth))


def _product_deep_point(product, xi, depth):
    r = product.basepoint.r + xi.beta * depth
    if xi.alpha <= 1e-12:
        return ProductPoint(product.basepoint.tree, r)
    tree_depth = xi.alpha * depth
    k = int(tree_depth)
    word = xi.tree.prefix(k)
    tp = TreePoint(word[: k], None, 0.0)
    if tree_depth - k > 1e-9:
        word_k1 = xi.tree.prefix(k + 1)
        tp = TreePoint(word_k1[:k], word_k1[k], tree_depth - k)
    return ProductPoint(tp, r)


def test_boundary_proxy_invariants(tree, rng):
    xi = TreeBoundary.random_stream(tree.alphabet, rng)
    first = xi.prefix(10)
    xi.prefix(200)
    assert xi.prefix(10) == first  # deepening never rewrites letters
    with pytest.raises(GeometryError):
        TreeBoundary(tree.alphabet, tree.alphabet.parse("a") + tree.alphabet.parse("A"))
    with pytest.raises(GeometryError):
        HBoundary(float("nan"))
    with pytest.raises(GeometryError):
        EuclideanBoundary(2.0 + 0j)
    with pytest.raises(GeometryError):
        ProductBoundary(None, 1.0, 0.0)  # alpha > 0 needs a tree end


# ---------------------------------------------------------------------------
# Gromov products
# ---------------------------------------------------------------------------


def test_gromov_product_examples(tree, eplane, rng):
    o = tree.basepoint
    for space in (tree, eplane):
        x = space.sample_point(rng, 5.0)
        assert space.gromov_product(x, space.basepoint, space.basepoint) == \
            pytest.approx(0.0, abs=TOL)
    # common-prefix length: formula gives (2 + 2 - 2) / 2
    assert tree.gromov_product(tree.vertex("ab"), tree.vertex("aB"), o) == 1.0
    val = eplane.gromov_product(2 + 0j, 2j, 0j)
    assert val == pytest.approx(2 - math.sqrt(2), abs=TOL)


def test_gromov_product_boundary_examples(tree):
    alpha = tree.alphabet
    e = tree.basepoint
    xi_a = TreeBoundary.periodic(alpha, alpha.parse("a"))
    xi_ab = TreeBoundary.periodic(alpha, alpha.parse("ab"))
    xi_b = TreeBoundary.periodic(alpha, alpha.parse("b"))
    assert tree.gromov_product_boundary(xi_a, xi_a, e) == math.inf
    assert tree.gromov_product_boundary(xi_a, xi_ab, e) == 1.0
    assert tree.gromov_product_boundary(xi_a, xi_b, e) == 0.0


def test_gromov_boundary_limit_of_interior(tree, hplane, rng):
    # tree: interior products from the root are monotone in the depth and
    # stabilize at the boundary value; from other points they still converge
    alpha = tree.alphabet
    for _ in range(20):
        x = TreeBoundary.random_stream(alpha, rng)
        y = TreeBoundary.random_stream(alpha, rng)
        lim_root = tree.gromov_product_boundary(x, y, tree.basepoint)
        if math.isinf(lim_root):
            continue
        prev = -1.0
        vals = []
        for depth in (2, 4, 8, 16, 32):
            v = tree.gromov_product(tree.vertex(x.prefix(depth)),
                                    tree.vertex(y.prefix(depth)), tree.basepoint)
            assert v >= prev - TOL
            prev = v
            vals.append(v)
        assert vals[-1] == pytest.approx(lim_root, abs=TOL)
        o = tree.sample_point(rng, 3.0)
        lim = tree.gromov_product_boundary(x, y, o)
        deep = tree.gromov_product(tree.vertex(x.prefix(32)),
                                   tree.vertex(y.prefix(32)), o)
        assert deep == pytest.approx(lim, abs=TOL)
    # half-plane: interior products at depth 12 agree to 1e-4
    for _ in range(20):
        x = sample_boundary_proxy(hplane, rng)
        y = sample_boundary_proxy(hplane, rng)
        if x.xi == y.xi:
            continue
        o = hplane.sample_point(rng, 3.0)
        lim = hplane.gromov_product_boundary(x, y, o)
        xd = _h_deep_point(hplane, x, 12.0)
        yd = _h_deep_point(hplane, y, 12.0)
        assert hplane.gromov_product(xd, yd, o) == pytest.approx(lim, abs=1e-4)


def test_mixed_gromov_product_examples(tree):
    alpha = tree.alphabet
    e = tree.basepoint
    xi = TreeBoundary.periodic(alpha, alpha.parse("a"))
    assert tree.mixed_gromov_product(e, xi, e) == 0.0
    assert tree.mixed_gromov_product(tree.vertex("a"), xi, e) == 1.0
    assert tree.mixed_gromov_product(tree.vertex("b"), xi, e) == 0.0


def test_flat_boundary_products_diverge(eplane):
    """Genuinely flat geometry: only opposite directions have a finite
    boundary Gromov product."""
    u = EuclideanBoundary(1 + 0j)
    assert eplane.gromov_product_boundary(u, EuclideanBoundary(-1 + 0j), 0j) == 0.0
    assert math.isinf(eplane.gromov_product_boundary(u, EuclideanBoundary(1j), 0j))
    assert math.isinf(eplane.gromov_product_boundary(u, u, 0j))


def test_point_validation(tree, hplane, eplane, product):
    with pytest.raises(GeometryError):
        tree.check_point(TreePoint((0, 1), None, 0.0))  # a then A backtracks
    with pytest.raises(GeometryError):
        hplane.check_point(1 - 1j)
    with pytest.raises(GeometryError):
        eplane.check_point(complex(math.inf, 0.0))
    with pytest.raises(GeometryError):
        product.check_point(ProductPoint(TreePoint(()), math.nan))
