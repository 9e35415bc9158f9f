"""Group elements, trajectories, classification, contracting fractions."""

import math

import numpy as np
import pytest

from curtainlab.geometry import GeometryError, ProductPoint
from curtainlab.walker import (EuclideanIsometry, MoebiusIsometry,
                               ProductIsometry, TreeIsometry, WalkConfig,
                               axis_segment, batch_displacements, classify,
                               contracting_fraction, displacement_series,
                               trajectory, translation_length)


def f2_config(tree, n=50, trials=20, seed=11):
    gens = [TreeIsometry(tree, w) for w in ("a", "A", "b", "B")]
    return WalkConfig(tree, gens, [0.25] * 4, n, trials, seed)


def reflected_walk_zero_prob(n):
    """Exact P(reduced word empty at step n) for the uniform F2 walk."""
    p = np.zeros(n + 1)
    p[0] = 1.0
    up = np.full(n, 0.75)
    up[0] = 1.0
    for _ in range(n):
        q = np.zeros_like(p)
        q[1:] += p[:-1] * np.where(np.arange(n) == 0, 1.0, 0.75)
        q[:-1] += p[1:] * 0.25
        p = q
    return p[0]


# ---------------------------------------------------------------------------
# composition and action
# ---------------------------------------------------------------------------


def test_compose_examples(tree, hplane, eplane):
    w = TreeIsometry(tree, "ab").compose(TreeIsometry(tree, "Ba"))
    assert w.digest() == "aa"
    g = MoebiusIsometry(hplane, (2, 1, 1, 1))
    assert g.compose(g.inverse()).is_identity()
    quarter = EuclideanIsometry(eplane, math.pi / 2, 1 + 0j)
    sq = quarter.compose(quarter)
    assert sq.angle == pytest.approx(math.pi)
    assert sq.trans == pytest.approx(1 + 1j)


def test_compose_associative(tree, hplane, rng):
    gens = [TreeIsometry(tree, w) for w in ("a", "A", "b", "B")]
    for _ in range(50):
        a, b, c = (gens[rng.integers(4)] for _ in range(3))
        assert (a.compose(b)).compose(c).digest() == a.compose(b.compose(c)).digest()


def test_act_examples(tree, hplane):
    assert TreeIsometry(tree, "a").act(tree.basepoint) == tree.vertex("a")
    g = MoebiusIsometry(hplane, (2, 0, 0, 0.5))
    assert g.act(1j) == pytest.approx(4j)
    ident = TreeIsometry(tree, ())
    p = tree.vertex("ab")
    assert ident.act(p) == p


def test_act_preserves_distance(all_spaces, rng):
    from curtainlab.harness import build_preset
    presets = {"tree(q=3)": "f2-uniform", "hplane": "fuchsian-schottky",
               "euclidean": "euclidean-centered", "product(q=3)": "product-tree-line"}
    for space in all_spaces:
        cfg = build_preset(presets[space.kind], 10, 2, 1)
        g = cfg.generators[0].compose(cfg.generators[2])
        for _ in range(200):
            x = cfg.space.sample_point(rng, 6.0)
            y = cfg.space.sample_point(rng, 6.0)
            assert cfg.space.distance(g.act(x), g.act(y)) == \
                pytest.approx(cfg.space.distance(x, y), abs=1e-9)


def test_tree_action_on_edge_points(tree, rng):
    g = TreeIsometry(tree, "Ab")
    for _ in range(100):
        x = tree.sample_point(rng, 5.0)
        y = tree.sample_point(rng, 5.0)
        gx, gy = g.act(x), g.act(y)
        tree.check_point(gx)
        tree.check_point(gy)
        assert tree.distance(gx, gy) == pytest.approx(tree.distance(x, y), abs=1e-9)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


def test_trajectory_basics(tree):
    cfg = f2_config(tree)
    traj = trajectory(cfg, 0, n=0)
    assert len(traj) == 1 and traj[0][0].is_identity() and traj[0][1] == 0.0
    traj = trajectory(cfg, 0, n=3)
    z3, d3 = traj[3]
    assert len(z3.word) <= 3 and d3 == len(z3.word)


def test_trajectory_dirac(tree):
    cfg = WalkConfig(tree, [TreeIsometry(tree, "a")], [1.0], 5, 1, 3)
    traj = trajectory(cfg, 0)
    assert traj[5][0].digest() == "aaaaa"
    assert traj[5][1] == 5.0


def test_trajectory_reproducible(tree):
    cfg = f2_config(tree, n=40, seed=99)
    a = trajectory(cfg, 7)
    b = trajectory(cfg, 7)
    assert [z.digest() for z, _ in a] == [z.digest() for z, _ in b]
    other = trajectory(cfg, 8)
    assert [z.digest() for z, _ in a] != [z.digest() for z, _ in other]
    series = displacement_series(cfg, 7, range(1, 41))
    assert np.array_equal(series, np.array([d for _, d in a[1:]]))


def test_subadditivity(tree, hplane, rng):
    cfg = f2_config(tree, n=60, seed=5)
    for trial in range(5):
        traj = trajectory(cfg, trial)
        for _ in range(20):
            n = int(rng.integers(1, 30))
            m = int(rng.integers(1, 30))
            znm = traj[n + m][0]
            zn = traj[n][0]
            middle = zn.inverse().compose(znm)
            o = cfg.basepoint
            assert traj[n + m][1] <= traj[n][1] + \
                cfg.space.distance(middle.act(o), o) + 1e-9
    from curtainlab.harness import build_preset
    hcfg = build_preset("fuchsian-schottky", 8, 3, 5)
    for trial in range(3):
        traj = trajectory(hcfg, trial)
        for n in range(1, 4):
            for m in range(1, 4):
                middle = traj[n][0].inverse().compose(traj[n + m][0])
                o = hcfg.basepoint
                assert traj[n + m][1] <= traj[n][1] + \
                    hcfg.space.distance(middle.act(o), o) + 1e-9


# ---------------------------------------------------------------------------
# translation length and classification
# ---------------------------------------------------------------------------


def test_translation_length_examples(tree, hplane, eplane):
    est, exact = translation_length(TreeIsometry(tree, "ab"), 50)
    assert exact == 2.0 and est == pytest.approx(2.0, abs=1e-9)
    est, exact = translation_length(MoebiusIsometry(hplane, (2, 0, 0, 0.5)), 64)
    assert exact == pytest.approx(2 * math.log(2), abs=1e-9)
    assert est == pytest.approx(2 * math.log(2), abs=1e-9)
    est, exact = translation_length(EuclideanIsometry(eplane, 1.0, 1 + 0j), 64)
    assert exact == 0.0  # elliptic rotation: bounded orbit


def test_translation_length_convergence_bound(tree):
    g = TreeIsometry(tree, "ba").compose(TreeIsometry(tree, "ab")) \
        .compose(TreeIsometry(tree, "ba").inverse())
    axis = axis_segment(g)
    o = tree.basepoint
    dist_to_axis = tree.distance(o, tree.project(axis, o)[0])
    for n_iter in (10, 25, 50):
        est, exact = translation_length(g, n_iter)
        assert abs(est - exact) <= 2 * dist_to_axis / n_iter + 1e-9


def test_classify_examples(tree, hplane, eplane, product, rng):
    cls = classify(TreeIsometry(tree, "ab"), probe_balls=30, rng=rng)
    assert cls.kind == "axial" and cls.contracting == "yes" and cls.length == 2.0
    assert cls.evidence["probe"]["max_projection_diameter"] <= 1.0

    trans = classify(EuclideanIsometry(eplane, 0.0, 1 + 0j), probe_balls=30, rng=rng)
    assert trans.kind == "axial" and trans.contracting == "no"
    assert trans.evidence["probe"]["max_projection_diameter"] > 1.5

    g = MoebiusIsometry(hplane, (2, 0, 0, 0.5))
    assert classify(g).kind == "axial" and classify(g).contracting == "yes"
    assert classify(MoebiusIsometry(hplane, (1, 1, 0, 1))).kind == "parabolic"
    rot = math.cos(0.4), math.sin(0.4)
    assert classify(MoebiusIsometry(hplane, (rot[0], -rot[1], rot[1], rot[0]))).kind \
        == "elliptic"

    pw = classify(ProductIsometry(product, product.tree.alphabet.parse("a"), 1.0))
    assert pw.kind == "axial" and pw.contracting == "no"
    assert pw.length == pytest.approx(math.hypot(1.0, 1.0))
    shift = classify(ProductIsometry(product, (), 1.0))
    assert shift.kind == "axial" and shift.contracting == "no"
    assert classify(ProductIsometry(product, (), 0.0)).kind == "identity"


def test_classify_contracting_implies_axial(tree, hplane, eplane, product, rng):
    pool = [TreeIsometry(tree, "ab"), TreeIsometry(tree, ()),
            MoebiusIsometry(hplane, (2, 0, 0, 0.5)),
            MoebiusIsometry(hplane, (1, 1, 0, 1)),
            EuclideanIsometry(eplane, 0.0, 1 + 0j),
            EuclideanIsometry(eplane, 0.5, 1 + 0j),
            ProductIsometry(product, product.tree.alphabet.parse("b"), -2.0)]
    for g in pool:
        cls = classify(g)
        if cls.contracting == "yes":
            assert cls.kind == "axial" and cls.length > 0


def test_classify_conjugation_invariant(tree, hplane, rng):
    gens_t = [TreeIsometry(tree, w) for w in ("a", "A", "b", "B")]
    for _ in range(40):
        g = gens_t[rng.integers(4)]
        for _ in range(int(rng.integers(0, 5))):
            g = g.compose(gens_t[rng.integers(4)])
        h = gens_t[rng.integers(4)].compose(gens_t[rng.integers(4)])
        conj = h.compose(g).compose(h.inverse())
        assert classify(conj).kind == classify(g).kind
        assert classify(conj).length == pytest.approx(classify(g).length, abs=1e-9)
    from curtainlab.harness import build_preset
    hg = build_preset("fuchsian-schottky", 10, 2, 1).generators
    for _ in range(40):
        g = hg[rng.integers(4)]
        h = hg[rng.integers(4)]
        conj = h.compose(g).compose(h.inverse())
        assert classify(conj).kind == classify(g).kind
        assert classify(conj).length == pytest.approx(classify(g).length, abs=1e-9)


# ---------------------------------------------------------------------------
# contracting fractions
# ---------------------------------------------------------------------------


def test_contracting_fraction_presets(tree, eplane):
    from curtainlab.harness import build_preset
    cfg_e = build_preset("euclidean-centered", 40, 40, 3)
    frac = contracting_fraction(cfg_e, [10, 20, 40])
    assert all(v == 0.0 for v in frac.values())

    cfg_d = build_preset("f2-dirac-a", 16, 10, 3)
    frac = contracting_fraction(cfg_d, [1, 4, 16])
    assert all(v == 1.0 for v in frac.values())

    cfg_p = build_preset("product-tree-line", 30, 30, 3)
    frac = contracting_fraction(cfg_p, [10, 30])
    assert all(v == 0.0 for v in frac.values())


def test_contracting_fraction_f2_oracle(tree):
    cfg = f2_config(tree, n=50, trials=500, seed=23)
    frac = contracting_fraction(cfg, [50])[50]
    assert frac >= 0.9
    # exact Markov oracle: Z_n contracting iff the reduced word is nonempty
    p0 = reflected_walk_zero_prob(50)
    assert frac >= 1.0 - p0 - 3 * math.sqrt(p0 / 500) - 0.01


def test_walkconfig_validation(tree):
    gens = [TreeIsometry(tree, w) for w in ("a", "A")]
    with pytest.raises(ValueError):
        WalkConfig(tree, gens, [0.6, 0.6], 10, 5, 1)
    with pytest.raises(ValueError):
        WalkConfig(tree, gens, [0.5], 10, 5, 1)
    WalkConfig(tree, gens, [0.5, 0.5], 10, 5, 1)  # valid


def test_batch_matches_series(tree):
    cfg = f2_config(tree, n=64, trials=6, seed=41)
    batch = batch_displacements(cfg, [16, 32, 64])
    for t in range(6):
        assert np.array_equal(batch[t], displacement_series(cfg, t, [16, 32, 64]))
