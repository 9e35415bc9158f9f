"""Curtain combinatorics: duals, chains, the falsifier, bounds, audits."""

import math

import numpy as np
import pytest

from curtainlab.curtains import (Chain, ChainError, Curtain, CurtainError,
                                 PoleHitError, SearchBudget, bottleneck_audit,
                                 curtain_sample_points, d_inf, d_L_lower,
                                 dual_curtain, four_point_audit,
                                 greedy_dual_L_chain, is_chain, l_separated,
                                 separates, star_convexity_audit)

TINY = SearchBudget(candidates=3, max_probe_structured=3, fiber_offsets=1.0)


# ---------------------------------------------------------------------------
# construction and sides
# ---------------------------------------------------------------------------


def test_dual_curtain_examples(tree, hplane, eplane):
    geo = tree.geodesic(tree.basepoint, tree.vertex("aa"))
    h = dual_curtain(geo, 1.0)
    lo, hi = h.pole_interval
    assert (lo, hi) == (0.5, 1.5)  # pole straddles the vertex a
    assert h.contains(tree.vertex("a"))

    slab = dual_curtain(eplane.geodesic(0j, 10 + 0j), 5.0)
    assert slab.side_of(4.5 + 7j) == 0 and slab.side_of(5.5 - 3j) == 0
    assert slab.side_of(4.4 + 0j) == -1 and slab.side_of(5.6 + 0j) == 1

    # curtain on the axis i -> e^4 i at t=2: the annulus e^1.5 <= |z| <= e^2.5
    geo = hplane.geodesic(1j, 1j * math.exp(4.0))
    h = dual_curtain(geo, 2.0)
    for r, side in ((1.4, -1), (1.6, 0), (2.4, 0), (2.6, 1)):
        z = math.exp(r) * complex(math.cos(1.0), math.sin(1.0))
        assert h.side_of(z) == side


def test_pole_parameter_domain(eplane):
    geo = eplane.geodesic(0j, 3 + 0j)
    with pytest.raises(CurtainError):
        Curtain(geo, 0.3)   # pole would leave the parameter interval
    with pytest.raises(CurtainError):
        Curtain(geo, 2.8)


def test_side_of_examples(tree):
    geo = tree.geodesic(tree.basepoint, tree.vertex("aa"))
    h = dual_curtain(geo, 1.0)
    assert h.side_of(tree.vertex("b")) == -1   # projects to e, parameter 0
    assert h.side_of(tree.vertex("a")) == 0
    assert h.side_of(tree.vertex("aab")) == 1


def test_separates(eplane, rng):
    x, y = 0j, 3 + 0j
    h = dual_curtain(eplane.geodesic(x, y), 1.5)
    assert separates(h, [x], [y])
    assert not separates(h, [x], [x])
    slab = dual_curtain(eplane.geodesic(0j, 10 + 0j), 5.0)
    assert separates(slab, [0 + 9j], [9 - 9j])
    with pytest.raises(PoleHitError):
        separates(slab, [5 + 1j], [9 + 0j])


def test_is_chain(eplane, tree, rng):
    geo = eplane.geodesic(0j, 10 + 0j)
    chain = is_chain([Curtain(geo, t) for t in (1.0, 2.5, 4.0)], -1 + 0j, rng)
    assert chain.size == 3
    single = is_chain([Curtain(geo, 5.0)], 0j, rng)
    assert single.size == 1
    tg = tree.geodesic(tree.basepoint, tree.vertex("aaaa"))
    assert is_chain([Curtain(tg, t) for t in (1.0, 2.2, 3.4)],
                    tree.basepoint, rng).size == 3
    crossing = [dual_curtain(eplane.geodesic(-5 + 0j, 5 + 0j), 5.0),
                dual_curtain(eplane.geodesic(-5j, 5j), 5.0)]
    with pytest.raises(ChainError):
        is_chain(crossing, -5 - 5j, rng)


# ---------------------------------------------------------------------------
# d_inf
# ---------------------------------------------------------------------------


def test_d_inf_examples(tree, eplane, rng):
    val, chain = d_inf(eplane, 0j, 2.3 + 0j)
    assert val == 3 and chain.size == 2
    val, chain = d_inf(eplane, 0j, 1 + 0j)
    assert val == 1 and chain.size == 0
    val, chain = d_inf(tree, tree.basepoint, tree.vertex("aaa"))
    assert val == 3 and chain.size == 2
    # brute-force halfspace check of the realizing chain
    for h in chain:
        assert h.side_of(tree.basepoint) == -1
        assert h.side_of(tree.vertex("aaa")) == 1
    is_chain(chain.curtains, tree.basepoint, rng)


def test_d_inf_matches_ceiling(all_spaces, rng):
    for space in all_spaces:
        for _ in range(60):
            x = space.sample_point(rng, 7.0)
            y = space.sample_point(rng, 7.0)
            d = space.distance(x, y)
            if d <= 0:
                continue
            val, chain = d_inf(space, x, y)
            assert val == math.ceil(round(d, 9))
            assert chain.size == val - 1
            for h in chain:
                assert h.side_of(x) == -1 and h.side_of(y) == 1


# ---------------------------------------------------------------------------
# L-separation falsifier
# ---------------------------------------------------------------------------


def test_euclidean_parallel_slabs_falsified(eplane, rng):
    axis = eplane.geodesic(0j, 20 + 0j)
    h1, h2 = dual_curtain(axis, 5.0), dual_curtain(axis, 10.0)
    rep = l_separated(h1, h2, 10, rng=rng)
    assert rep.falsified
    assert len(rep.witness_curtains) == 11
    # witness chain re-validates and meets both curtains
    chain = is_chain(rep.witness_curtains, rep.witness_ref, rng)
    assert chain.size == 11
    for h, (w1, w2) in zip(rep.witness_curtains, rep.witness_points):
        assert h.contains(w1) and h1.contains(w1)
        assert h.contains(w2) and h2.contains(w2)


def test_tree_certified(tree, rng):
    geo = tree.geodesic(tree.basepoint, tree.vertex("aaaaaa"))
    rep = l_separated(dual_curtain(geo, 1.0), dual_curtain(geo, 5.0), 1,
                      SearchBudget(candidates=40), rng=rng)
    assert rep.verdict == "certified-up-to-budget"
    assert rep.candidates_tried == 40
    rec = rep.to_record(inputs_digest="t")
    assert rec["verdict"] == "certified-up-to-budget"
    assert rec["budget"]["candidates"] == 40


def test_l_separated_domain_errors(eplane, rng):
    axis = eplane.geodesic(0j, 20 + 0j)
    h1 = dual_curtain(axis, 5.0)
    with pytest.raises(CurtainError):
        l_separated(h1, h1, 2, rng=rng)
    h_overlap = dual_curtain(axis, 5.4)
    with pytest.raises(CurtainError):
        l_separated(h1, h_overlap, 2, rng=rng)
    with pytest.raises(CurtainError):
        l_separated(h1, dual_curtain(axis, 10.0), 0, rng=rng)


# ---------------------------------------------------------------------------
# greedy dual chains and the metric sandwich
# ---------------------------------------------------------------------------


def test_greedy_examples(tree, eplane, rng):
    chain = greedy_dual_L_chain(tree, tree.basepoint, tree.vertex("a" * 12), 1,
                                SearchBudget(candidates=12), rng)
    assert chain.size >= 2          # hence d_L_lower >= 3
    for h in chain:
        assert h.side_of(tree.basepoint) == -1
        assert h.side_of(tree.vertex("a" * 12)) == 1
    assert greedy_dual_L_chain(eplane, 0j, 15 + 0j, 5, rng=rng).size <= 1
    assert greedy_dual_L_chain(eplane, 0j, 0.9 + 0j, 1, rng=rng).size == 0


def test_d_L_lower_sandwich(all_spaces, rng):
    for space in all_spaces:
        for _ in range(25):
            x = space.sample_point(rng, 6.0)
            y = space.sample_point(rng, 6.0)
            d = space.distance(x, y)
            if d <= 0:
                continue
            dl = d_L_lower(space, x, y, 1, TINY, rng)
            di, _ = d_inf(space, x, y)
            assert dl <= di


def test_d_L_lower_monotone_in_L(tree, eplane, hplane, rng):
    """Larger L is a weaker separation requirement, so the certified lower
    bound can only grow with L."""
    cases = [(tree, tree.basepoint, tree.vertex("a" * 9)),
             (eplane, 0j, 8 + 3j),
             (hplane, 1j, hplane.ray_point(1j, 0.7, 9.0))]
    for space, x, y in cases:
        values = [d_L_lower(space, x, y, L, TINY, np.random.default_rng(5))
                  for L in (1, 2, 3)]
        assert values == sorted(values)


def test_euclidean_degeneracy_any_budget(eplane, rng):
    for budget in (TINY, SearchBudget(candidates=60)):
        for _ in range(10):
            x = eplane.sample_point(rng, 8.0)
            y = eplane.sample_point(rng, 8.0)
            if abs(x - y) < 0.2:
                continue
            assert d_L_lower(eplane, x, y, 1, budget, rng) <= 2


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------


def test_bottleneck_tree_and_trivial(tree):
    x1, y1 = tree.basepoint, tree.vertex("a" * 10)
    geo = tree.geodesic(x1, y1)
    chain = Chain(tuple(Curtain(geo, t).oriented(x1) for t in (2.0, 5.0, 8.0)), x1)
    res = bottleneck_audit(tree, chain, tree.vertex("bb"),
                           tree.vertex("a" * 9 + "b"), 1)
    assert res.passed
    trivial = bottleneck_audit(tree, chain, x1, y1, 1)
    assert trivial.max_excess <= -(2 * 1 + 1) + 1e-9


def test_bottleneck_hypothesis_errors(tree):
    x1, y1 = tree.basepoint, tree.vertex("a" * 10)
    geo = tree.geodesic(x1, y1)
    chain = Chain(tuple(Curtain(geo, t).oriented(x1) for t in (2.0, 5.0, 8.0)), x1)
    with pytest.raises(CurtainError):
        bottleneck_audit(tree, chain, tree.vertex("a" * 9), y1, 1)  # x2 beyond h1
    two = Chain(chain.curtains[:2], x1)
    with pytest.raises(CurtainError):
        bottleneck_audit(tree, two, x1, y1, 1)


def test_bottleneck_hyperbolic_random(hplane, rng):
    fails = 0
    tried = 0
    while tried < 25:
        a = hplane.sample_point(rng, 3.0)
        b = hplane.ray_point(a, float(rng.uniform(0, 2 * math.pi)),
                             float(rng.uniform(9.0, 13.0)))
        geo = hplane.geodesic(a, b)
        d = geo.length
        ts = (d / 2 - 2.6, d / 2, d / 2 + 2.6)
        try:
            chain = Chain(tuple(Curtain(geo, t).oriented(a) for t in ts), a)
            res = bottleneck_audit(hplane, chain,
                                   hplane.sample_point(rng, 1.5, a),
                                   hplane.sample_point(rng, 1.5, b), 1,
                                   samples=64)
        except CurtainError:
            continue
        tried += 1
        if not res.passed:
            fails += 1
    assert fails == 0


def test_star_convexity(tree, hplane, eplane, rng):
    slab = dual_curtain(eplane.geodesic(0j, 10 + 0j), 5.0)
    assert star_convexity_audit(eplane, slab, rng, 60) == 0
    ht = dual_curtain(tree.geodesic(tree.basepoint, tree.vertex("aaaa")), 2.0)
    assert star_convexity_audit(tree, ht, rng, 60) == 0
    hh = dual_curtain(hplane.geodesic(1j, hplane.ray_point(1j, 1.1, 8.0)), 3.0)
    assert star_convexity_audit(hplane, hh, rng, 60) == 0


def test_four_point_audit(tree, eplane, rng):
    res = four_point_audit(eplane, 1, 20, rng, radius=8.0, budget=TINY)
    assert res.delta <= 2.0  # all d_L_lower values are at most 2 here
    res_t = four_point_audit(tree, 1, 15, rng, radius=10.0, budget=TINY)
    assert math.isfinite(res_t.delta)
    # degenerate quadruple: all products vanish
    o = tree.basepoint
    assert d_L_lower(tree, o, o, 1, TINY, rng) == 0


def test_curtain_sample_points_members(all_spaces, rng):
    for space in all_spaces:
        for _ in range(5):
            x = space.sample_point(rng, 6.0)
            y = space.sample_point(rng, 6.0)
            if space.distance(x, y) < 2.0:
                continue
            h = dual_curtain(space.geodesic(x, y),
                             space.distance(x, y) / 2.0)
            for p in curtain_sample_points(h, rng, k=6, span=3.0):
                assert h.contains(p)
