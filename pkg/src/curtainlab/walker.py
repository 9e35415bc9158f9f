"""Group elements, random-walk trajectories, and isometry classification.

Isometries are exact per space: reduced words on trees, 2x2 real matrices
of determinant one modulo sign on the hyperbolic plane, rigid motions of
the flat plane, and (word, shift) pairs on the product. Trajectories are
reproducible: trial i draws its increments from a Philox stream keyed by
(master seed, i), one uniform per step, through `rng.increment_indices`.

Long hyperbolic-plane walks overflow raw matrices (entries grow like
e^(d/2)), so displacement series switch to a boundary-asymptotic recursion
once the inverse-orbit point is deep enough: track (distance, ideal
direction) of Z_n^{-1} o and update with the closed-form horofunction.
The switch threshold keeps both the coordinate round-off and the
asymptotic truncation far below experiment tolerances.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (EuclideanBoundary, EuclideanPlane, GeometryError,
                       HBoundary, HyperbolicPlane, ProductBoundary,
                       ProductPoint, RegularTree, TreeBoundary, TreePoint,
                       TreeTimesLine, mobius_apply, mobius_boundary)
from .rng import increment_indices

__all__ = [
    "Isometry", "TreeIsometry", "MoebiusIsometry", "EuclideanIsometry",
    "ProductIsometry", "WalkConfig", "Classification", "trajectory",
    "displacement_series", "batch_displacements", "batch_elements",
    "translation_length", "classify", "contracting_fraction", "axis_segment",
]

_H_SWITCH_HI = 22.0
_H_SWITCH_LO = 18.0


class Isometry:
    """Common surface of the exact per-space group elements."""

    space = None

    def compose(self, other: "Isometry") -> "Isometry":
        raise NotImplementedError

    def inverse(self) -> "Isometry":
        raise NotImplementedError

    def act(self, x):
        raise NotImplementedError

    def act_boundary(self, xi):
        raise NotImplementedError

    def is_identity(self) -> bool:
        raise NotImplementedError

    def digest(self) -> str:
        raise NotImplementedError

    def __mul__(self, other):
        return self.compose(other)

    def __repr__(self):
        return f"{type(self).__name__}({self.digest()})"


class TreeIsometry(Isometry):
    __slots__ = ("space", "word")

    def __init__(self, space: RegularTree, word):
        if isinstance(word, str):
            word = space.alphabet.parse(word)
        word = tuple(word)
        if not space.alphabet.is_reduced(word):
            raise GeometryError("tree isometry word must be reduced")
        self.space = space
        self.word = word

    def compose(self, other: "TreeIsometry") -> "TreeIsometry":
        if other.space is not self.space:
            raise GeometryError("isometries act on different spaces")
        return TreeIsometry(self.space,
                            self.space.alphabet.reduce_concat(self.word, other.word))

    def inverse(self) -> "TreeIsometry":
        return TreeIsometry(self.space, self.space.alphabet.inverse(self.word))

    def act(self, x: TreePoint) -> TreePoint:
        alpha = self.space.alphabet
        u = alpha.reduce_concat(self.word, x.anchor)
        if x.direction is None:
            return TreePoint(u)
        u2 = alpha.reduce_concat(self.word, x.anchor + (x.direction,))
        if len(u2) == len(u) + 1:
            return TreePoint(u, u2[-1], x.offset)
        return TreePoint(u2, u[-1], 1.0 - x.offset)

    def act_boundary(self, xi: TreeBoundary) -> TreeBoundary:
        return xi.translate(self.word)

    def is_identity(self) -> bool:
        return not self.word

    def digest(self) -> str:
        return self.space.alphabet.format(self.word)


class MoebiusIsometry(Isometry):
    __slots__ = ("space", "m")

    def __init__(self, space: HyperbolicPlane, mat):
        a, b, c, d = (float(v) for v in np.asarray(mat).reshape(4))
        det = a * d - b * c
        if det <= 0:
            raise GeometryError("matrix must have positive determinant")
        s = 1.0 / math.sqrt(det)
        a, b, c, d = a * s, b * s, c * s, d * s
        for v in (a, b, c, d):
            if abs(v) > 1e-12:
                if v < 0:
                    a, b, c, d = -a, -b, -c, -d
                break
        self.space = space
        self.m = (a, b, c, d)

    def compose(self, other: "MoebiusIsometry") -> "MoebiusIsometry":
        a1, b1, c1, d1 = self.m
        a2, b2, c2, d2 = other.m
        return MoebiusIsometry(self.space,
                               (a1 * a2 + b1 * c2, a1 * b2 + b1 * d2,
                                c1 * a2 + d1 * c2, c1 * b2 + d1 * d2))

    def inverse(self) -> "MoebiusIsometry":
        a, b, c, d = self.m
        return MoebiusIsometry(self.space, (d, -b, -c, a))

    def act(self, x: complex) -> complex:
        return mobius_apply(self.m, x)

    def act_boundary(self, xi: HBoundary) -> HBoundary:
        return HBoundary(mobius_boundary(self.m, xi.xi))

    def trace(self) -> float:
        return self.m[0] + self.m[3]

    def busemann_cocycle(self, xi: HBoundary, o: complex) -> float:
        """beta(g, xi) = b_xi(g^-1 o) evaluated on the matrix entries.

        Algebraically identical to the kernel formula but avoids forming
        g^-1 o, whose imaginary part loses precision once displacements
        exceed ~35: with (a, b, c, d) the inverse matrix,
        b_xi(g^-1 o) = 2 ln|(a o + b) - xi (c o + d)| - 2 ln|o - xi|,
        and 2 ln|c o + d| for xi at infinity.
        """
        a, b, c, d = self.inverse().m
        if math.isinf(xi.xi):
            return 2.0 * math.log(abs(c * o + d))
        num = (a * o + b) - xi.xi * (c * o + d)
        return 2.0 * (math.log(abs(num)) - math.log(abs(o - xi.xi)))

    def is_identity(self) -> bool:
        a, b, c, d = self.m
        return abs(a - 1) < 1e-9 and abs(d - 1) < 1e-9 and abs(b) < 1e-9 and abs(c) < 1e-9

    def fixed_boundary_points(self):
        """Ideal fixed points (repelling, attracting) of an axial element."""
        a, b, c, d = self.m
        tr = a + d
        if abs(tr) <= 2.0 + 1e-12:
            raise GeometryError("only axial elements have an axis")
        disc = math.sqrt(tr * tr - 4.0)
        if abs(c) < 1e-14:
            other = b / (d - a) if abs(d - a) > 1e-14 else math.inf
            if abs(a) > abs(d):
                return other, math.inf
            return math.inf, other
        lam_plus = (tr + math.copysign(disc, tr)) / 2.0
        lam_minus = (tr - math.copysign(disc, tr)) / 2.0
        p_plus = (lam_plus - d) / c
        p_minus = (lam_minus - d) / c
        # eigenvalue with |lambda| > 1 marks the attracting fixed point
        if abs(lam_plus) > abs(lam_minus):
            return p_minus, p_plus
        return p_plus, p_minus

    def digest(self) -> str:
        return "[" + ",".join(f"{v:.12g}" for v in self.m) + "]"


class EuclideanIsometry(Isometry):
    __slots__ = ("space", "angle", "trans")

    def __init__(self, space: EuclideanPlane, angle: float, trans: complex):
        self.space = space
        self.angle = math.remainder(float(angle), 2.0 * math.pi)
        self.trans = complex(trans)

    def compose(self, other: "EuclideanIsometry") -> "EuclideanIsometry":
        rot = cmath.exp(1j * self.angle)
        return EuclideanIsometry(self.space, self.angle + other.angle,
                                 self.trans + rot * other.trans)

    def inverse(self) -> "EuclideanIsometry":
        rot = cmath.exp(-1j * self.angle)
        return EuclideanIsometry(self.space, -self.angle, -rot * self.trans)

    def act(self, x: complex) -> complex:
        return cmath.exp(1j * self.angle) * x + self.trans

    def act_boundary(self, xi: EuclideanBoundary) -> EuclideanBoundary:
        d = cmath.exp(1j * self.angle) * xi.direction
        return EuclideanBoundary(d / abs(d))

    def is_identity(self) -> bool:
        return abs(self.angle) < 1e-12 and abs(self.trans) < 1e-12

    def digest(self) -> str:
        return f"({self.angle:.12g};{self.trans.real:.12g},{self.trans.imag:.12g})"


class ProductIsometry(Isometry):
    __slots__ = ("space", "tree_part", "shift")

    def __init__(self, space: TreeTimesLine, word, shift: float):
        self.space = space
        self.tree_part = TreeIsometry(space.tree, word)
        self.shift = float(shift)

    @property
    def word(self):
        return self.tree_part.word

    def compose(self, other: "ProductIsometry") -> "ProductIsometry":
        return ProductIsometry(self.space,
                               self.tree_part.compose(other.tree_part).word,
                               self.shift + other.shift)

    def inverse(self) -> "ProductIsometry":
        return ProductIsometry(self.space, self.tree_part.inverse().word,
                               -self.shift)

    def act(self, x: ProductPoint) -> ProductPoint:
        return ProductPoint(self.tree_part.act(x.tree), x.r + self.shift)

    def act_boundary(self, xi: ProductBoundary) -> ProductBoundary:
        tree_b = xi.tree.translate(self.word) if xi.tree is not None else None
        return ProductBoundary(tree_b, xi.alpha, xi.beta)

    def is_identity(self) -> bool:
        return not self.word and self.shift == 0.0

    def digest(self) -> str:
        return f"({self.tree_part.digest()};{self.shift:.12g})"


# ---------------------------------------------------------------------------
# walk configuration and trajectories
# ---------------------------------------------------------------------------


@dataclass
class WalkConfig:
    """Step distribution mu (finite support), horizon, trial count, seed."""

    space: object
    generators: list
    weights: list
    n: int
    trials: int
    seed: int
    basepoint: object = None

    def __post_init__(self):
        if self.basepoint is None:
            self.basepoint = self.space.basepoint
        w = np.asarray(self.weights, dtype=float)
        if len(self.generators) != w.size or w.size == 0:
            raise ValueError("generators and weights must align and be nonempty")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1")
        self._check_support_sanity()

    def _check_support_sanity(self):
        """Weak admissibility probe: the support plus inverses must reach at
        least as many distinct elements at word length <= 3 as it has
        distinct generators."""
        gens = list(self.generators) + [g.inverse() for g in self.generators]
        seen = {g.digest() for g in gens}
        k = len({g.digest() for g in self.generators})
        frontier = list(gens)
        for _ in range(2):
            frontier = [f.compose(g) for f in frontier for g in gens]
            seen.update(f.digest() for f in frontier)
            if len(seen) >= k:
                break
        if len(seen) < k:
            raise ValueError("support fails the word-length-3 reachability check")

    def increments(self, trial: int, n: int | None = None) -> np.ndarray:
        return increment_indices(self.seed, trial, self.n if n is None else n,
                                 self.weights)


def identity_of(space) -> Isometry:
    if isinstance(space, RegularTree):
        return TreeIsometry(space, ())
    if isinstance(space, HyperbolicPlane):
        return MoebiusIsometry(space, (1.0, 0.0, 0.0, 1.0))
    if isinstance(space, EuclideanPlane):
        return EuclideanIsometry(space, 0.0, 0.0)
    if isinstance(space, TreeTimesLine):
        return ProductIsometry(space, (), 0.0)
    raise GeometryError(f"unknown space {space!r}")


def trajectory(cfg: WalkConfig, trial: int, n: int | None = None):
    """Materialized trajectory [(Z_0, 0), (Z_1, d_1), ...] up to n steps.

    Deterministic in (cfg.seed, trial). For long horizons prefer
    `displacement_series`, which avoids retaining every prefix element.
    """
    n = cfg.n if n is None else n
    idx = cfg.increments(trial, n)
    o = cfg.basepoint
    z = identity_of(cfg.space)
    out = [(z, 0.0)]
    for j in idx:
        z = z.compose(cfg.generators[j])
        out.append((z, cfg.space.distance(z.act(o), o)))
    return out


# ---------------------------------------------------------------------------
# displacement kernels
# ---------------------------------------------------------------------------


def _tree_letter_table(cfg: WalkConfig):
    """Letters of the generators when all are single letters, else None."""
    letters = []
    for g in cfg.generators:
        word = g.word if isinstance(g, TreeIsometry) else getattr(g, "word", None)
        if word is None or len(word) != 1:
            return None
        letters.append(word[0])
    return np.asarray(letters, dtype=np.int8)


def _tree_walk_batch(alphabet, letter_of_gen, idx_rows, ns, keep_stacks=False):
    """Vectorized reduced-word walk across trials.

    idx_rows: (M, n) generator indices. Returns (lengths at ns: (M, len(ns)),
    final stacks or None, final tops)."""
    m, n = idx_rows.shape
    inv = np.asarray(alphabet.inv, dtype=np.int8)
    letters = letter_of_gen[idx_rows]  # (M, n) int8
    stack = np.zeros((m, n + 1), dtype=np.int8)
    tops = np.zeros(m, dtype=np.int64)
    rows = np.arange(m)
    out = np.zeros((m, len(ns)), dtype=np.float64)
    ns_pos = {nn: i for i, nn in enumerate(ns)}
    for k in range(n):
        lam = letters[:, k]
        nonempty = tops > 0
        top_letter = stack[rows, np.maximum(tops - 1, 0)]
        cancel = nonempty & (top_letter == inv[lam])
        tops = np.where(cancel, tops - 1, tops + 1)
        push = ~cancel
        stack[rows[push], tops[push] - 1] = lam[push]
        if (k + 1) in ns_pos:
            out[:, ns_pos[k + 1]] = tops
    return out, (stack if keep_stacks else None), tops


def _h2_displacement_trial(cfg: WalkConfig, trial: int, ns, record_boundary=False):
    """Stable displacement series for one hyperbolic-plane trial.

    Tracks q_n = Z_n^{-1} o exactly while d(o, q_n) is small and switches to
    the (distance, ideal endpoint) representation beyond _H_SWITCH_HI, where
    the update is the closed-form horofunction increment.
    """
    space: HyperbolicPlane = cfg.space
    o = cfg.basepoint
    idx = cfg.increments(trial, max(ns))
    ginv = [g.inverse().m for g in cfg.generators]
    go = [g.act(o) for g in cfg.generators]
    q = o
    mode_asym = False
    d = 0.0
    xi = 0.0
    out = {}
    want = set(ns)
    for k, j in enumerate(idx, start=1):
        if not mode_asym:
            q = mobius_apply(ginv[j], q)
            d = space.distance(o, q)
            if d > _H_SWITCH_HI:
                xi = _ray_endpoint(o, q)
                mode_asym = True
        else:
            z = go[j]
            if math.isinf(xi):
                b = math.log(o.imag) - math.log(z.imag)
            else:
                ratio = abs(z - xi) / abs(o - xi)
                b = 2.0 * math.log(ratio) - math.log(z.imag) + math.log(o.imag)
            d += b
            xi = mobius_boundary(ginv[j], xi)
            if d < _H_SWITCH_LO:
                q = _point_toward(space, o, xi, d)
                mode_asym = False
        if k in want:
            out[k] = d
    series = np.array([out[nn] for nn in ns])
    if record_boundary:
        return series, (xi if mode_asym else _ray_endpoint(o, q) if d > 0 else None)
    return series


def _ray_endpoint(o: complex, q: complex) -> float:
    from .geometry.hplane import _line_endpoints
    _, ahead = _line_endpoints(o, q)
    return ahead


def _point_toward(space: HyperbolicPlane, o: complex, xi: float, d: float) -> complex:
    from .geometry.hplane import _axis_map, _inverse
    if math.isinf(xi):
        behind = o.real
    elif abs(o.real - xi) < 1e-13:
        behind = math.inf
    else:
        c = (abs(o) ** 2 - xi * xi) / (2.0 * (o.real - xi))
        behind = 2.0 * c - xi
    m = _axis_map(behind, xi)
    y0 = mobius_apply(m, o).imag
    return mobius_apply(_inverse(m), 1j * y0 * math.exp(d))


def displacement_series(cfg: WalkConfig, trial: int, ns) -> np.ndarray:
    """d(Z_n o, o) at the requested step counts; one trial."""
    ns = sorted(set(int(v) for v in ns))
    space = cfg.space
    if isinstance(space, HyperbolicPlane):
        return _h2_displacement_trial(cfg, trial, ns)
    if isinstance(space, RegularTree):
        table = _tree_letter_table(cfg)
        if table is not None:
            idx = cfg.increments(trial, max(ns))[None, :]
            lengths, _, _ = _tree_walk_batch(space.alphabet, table, idx, ns)
            return lengths[0]
    if isinstance(space, EuclideanPlane):
        return _euclid_series(cfg, trial, ns)
    if isinstance(space, TreeTimesLine):
        return _product_series(cfg, trial, ns)
    # generic fallback: exact composition
    idx = cfg.increments(trial, max(ns))
    z = identity_of(space)
    o = cfg.basepoint
    out = []
    want = set(ns)
    for k, j in enumerate(idx, start=1):
        z = z.compose(cfg.generators[j])
        if k in want:
            out.append(space.distance(z.act(o), o))
    return np.array(out)


def _euclid_series(cfg, trial, ns):
    idx = cfg.increments(trial, max(ns))
    angles = np.array([g.angle for g in cfg.generators])
    if np.any(np.abs(angles) > 1e-12):
        # rotations present: fall back to exact composition
        z = identity_of(cfg.space)
        o = cfg.basepoint
        out = []
        want = set(ns)
        for k, j in enumerate(idx, start=1):
            z = z.compose(cfg.generators[j])
            if k in want:
                out.append(cfg.space.distance(z.act(o), o))
        return np.array(out)
    steps = np.array([g.trans for g in cfg.generators])[idx]
    pos = np.cumsum(steps)
    sel = np.asarray(ns, dtype=np.int64) - 1
    return np.abs(pos[sel])


def _product_series(cfg, trial, ns):
    space: TreeTimesLine = cfg.space
    idx = cfg.increments(trial, max(ns))
    table = _tree_letter_table(cfg)
    shifts = np.array([g.shift for g in cfg.generators])[idx]
    r = np.cumsum(shifts)
    sel = np.asarray(ns, dtype=np.int64) - 1
    if table is not None:
        lengths, _, _ = _tree_walk_batch(space.tree.alphabet, table, idx[None, :], ns)
        return np.hypot(lengths[0], r[sel])
    z = identity_of(space)
    o = cfg.basepoint
    out = []
    want = set(ns)
    for k, j in enumerate(idx, start=1):
        z = z.compose(cfg.generators[j])
        if k in want:
            out.append(space.distance(z.act(o), o))
    return np.array(out)


def batch_displacements(cfg: WalkConfig, ns, trials: int | None = None,
                        trial_offset: int = 0) -> np.ndarray:
    """(trials, len(ns)) displacement matrix, trial-keyed and reproducible.

    ``trial_offset`` shifts the trial indices into a disjoint stream range,
    giving a batch independent of (but reproducible alongside) the default.
    """
    trials = cfg.trials if trials is None else trials
    ns = sorted(set(int(v) for v in ns))
    space = cfg.space
    if isinstance(space, RegularTree):
        table = _tree_letter_table(cfg)
        if table is not None:
            idx = np.stack([cfg.increments(trial_offset + t, max(ns))
                            for t in range(trials)])
            lengths, _, _ = _tree_walk_batch(space.alphabet, table, idx, ns)
            return lengths
    return np.stack([displacement_series(cfg, trial_offset + t, ns)
                     for t in range(trials)])


def batch_elements(cfg: WalkConfig, ns, trials: int | None = None):
    """Group elements Z_n for each trial at each requested n.

    Returns a list over trials of dicts {n: Isometry}. Horizons must stay
    moderate for matrix elements (entries grow like e^(d/2))."""
    trials = cfg.trials if trials is None else trials
    ns = sorted(set(int(v) for v in ns))
    out = []
    for t in range(trials):
        idx = cfg.increments(t, max(ns))
        z = identity_of(cfg.space)
        want = set(ns)
        snap = {}
        for k, j in enumerate(idx, start=1):
            z = z.compose(cfg.generators[j])
            if k in want:
                snap[k] = z
        out.append(snap)
    return out


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass
class Classification:
    kind: str                      # identity | elliptic | parabolic | axial
    length: float                  # translation length
    contracting: str               # yes | no | unknown
    evidence: dict = field(default_factory=dict)


def translation_length(g: Isometry, iterations: int = 64):
    """(orbit estimate d(g^N o, o)/N, exact value when available)."""
    if iterations < 1:
        raise ValueError("need at least one iteration")
    space = g.space
    o = space.basepoint
    power = identity_of(space)
    base = g
    k = iterations
    # binary powering keeps composition count logarithmic
    while k:
        if k & 1:
            power = power.compose(base)
        k >>= 1
        if k:
            base = base.compose(base)
    estimate = space.distance(power.act(o), o) / iterations
    return estimate, _exact_translation_length(g)


def _exact_translation_length(g: Isometry):
    if isinstance(g, TreeIsometry):
        _, core = g.space.alphabet.cyclic_reduce(g.word)
        if len(core) == 1 and g.space.alphabet.inv[core[0]] == core[0]:
            return 0.0  # involutive letter: inverts an edge
        return float(len(core))
    if isinstance(g, MoebiusIsometry):
        tr = abs(g.trace())
        if tr > 2.0 + 1e-12:
            return 2.0 * math.acosh(tr / 2.0)
        return 0.0
    if isinstance(g, EuclideanIsometry):
        if abs(g.angle) < 1e-12:
            return abs(g.trans)
        return 0.0
    if isinstance(g, ProductIsometry):
        return math.hypot(_exact_translation_length(g.tree_part), abs(g.shift))
    return None


def axis_segment(g: Isometry, halfspan: float = 12.0):
    """Geodesic segment along an axis of an axial isometry."""
    space = g.space
    if isinstance(g, TreeIsometry):
        prefix, core = space.alphabet.cyclic_reduce(g.word)
        if not core:
            raise GeometryError("identity has no axis")
        reps = int(math.ceil(halfspan / len(core))) + 1
        fwd = prefix
        for _ in range(reps):
            fwd = space.alphabet.reduce_concat(fwd, core)
        bwd = prefix
        inv_core = space.alphabet.inverse(core)
        for _ in range(reps):
            bwd = space.alphabet.reduce_concat(bwd, inv_core)
        return space.geodesic(space.vertex(bwd), space.vertex(fwd))
    if isinstance(g, MoebiusIsometry):
        rep, att = g.fixed_boundary_points()
        line_a = _h_axis_point(rep, att, -halfspan)
        line_b = _h_axis_point(rep, att, halfspan)
        return space.geodesic(line_a, line_b)
    if isinstance(g, EuclideanIsometry):
        if abs(g.angle) > 1e-12 or abs(g.trans) == 0.0:
            raise GeometryError("only translations have an axis here")
        u = g.trans / abs(g.trans)
        return space.geodesic(-halfspan * u, halfspan * u)
    if isinstance(g, ProductIsometry):
        tree_len = _exact_translation_length(g.tree_part)
        if tree_len > 0:
            tgeo = axis_segment(g.tree_part, halfspan)
            slope = g.shift / tree_len  # line drift per unit of tree arc
            r_span = tgeo.length * slope
            a = ProductPoint(tgeo.a, -r_span / 2.0)
            b = ProductPoint(tgeo.b, +r_span / 2.0)
            return space.geodesic(a, b)
        if g.shift == 0.0:
            raise GeometryError("identity has no axis")
        base = space.basepoint
        return space.geodesic(ProductPoint(base.tree, base.r - halfspan),
                              ProductPoint(base.tree, base.r + halfspan))
    raise GeometryError(f"no axis construction for {g!r}")


def _h_axis_point(rep: float, att: float, s: float) -> complex:
    from .geometry.hplane import _axis_map, _inverse
    m = _axis_map(rep, att)
    return mobius_apply(_inverse(m), 1j * math.exp(s))


def _contraction_probe(g: Isometry, rng, balls: int = 50, radius_cap: float = 4.0,
                       samples_per_ball: int = 12):
    """Evidence record: projection diameters of random balls disjoint from
    the axis. Bounded diameters back a `yes`; growing ones back a `no`."""
    space = g.space
    axis = axis_segment(g)
    diam_max = 0.0
    used = 0
    for _ in range(balls):
        center = space.sample_point(rng, 10.0)
        foot, _ = space.project(axis, center)
        gap = space.distance(center, foot)
        if gap < 0.3:
            continue
        r = min(radius_cap, 0.8 * gap)
        params = []
        for _ in range(samples_per_ball):
            p = space.sample_point(rng, r, center)
            if space.distance(p, center) > gap - 1e-9:
                continue
            params.append(space.geo_param(axis, p))
        if len(params) >= 2:
            used += 1
            diam_max = max(diam_max, max(params) - min(params))
    return {"balls_used": used, "max_projection_diameter": diam_max}


def classify(g: Isometry, probe_balls: int = 0, rng=None) -> Classification:
    """Exact per-space classification; the optional ball probe is evidence
    attached to the record, never the verdict."""
    evidence = {}
    if isinstance(g, TreeIsometry):
        if not g.word:
            cls = Classification("identity", 0.0, "no")
        else:
            _, core = g.space.alphabet.cyclic_reduce(g.word)
            if len(core) == 1 and g.space.alphabet.inv[core[0]] == core[0]:
                cls = Classification("elliptic", 0.0, "no",
                                     {"reason": "involutive letter inverts an edge"})
            else:
                cls = Classification("axial", float(len(core)), "yes",
                                     {"reason": "trees contain no flat half-planes"})
    elif isinstance(g, MoebiusIsometry):
        if g.is_identity():
            cls = Classification("identity", 0.0, "no")
        else:
            tr = abs(g.trace())
            if tr > 2.0 + 1e-9:
                cls = Classification("axial", 2.0 * math.acosh(tr / 2.0), "yes",
                                     {"reason": "|trace| > 2 in the hyperbolic plane"})
            elif tr > 2.0 - 1e-9:
                cls = Classification("parabolic", 0.0, "no",
                                     {"reason": "|trace| = 2"})
            else:
                cls = Classification("elliptic", 0.0, "no",
                                     {"reason": "|trace| < 2"})
    elif isinstance(g, EuclideanIsometry):
        if g.is_identity():
            cls = Classification("identity", 0.0, "no")
        elif abs(g.angle) < 1e-12:
            cls = Classification("axial", abs(g.trans), "no",
                                 {"reason": "translation axes bound flat half-planes"})
        else:
            cls = Classification("elliptic", 0.0, "no",
                                 {"reason": "rigid motion with rotation has a fixed point"})
    elif isinstance(g, ProductIsometry):
        tree_cls = classify(g.tree_part)
        if g.is_identity():
            cls = Classification("identity", 0.0, "no")
        elif tree_cls.kind == "axial":
            cls = Classification("axial", math.hypot(tree_cls.length, g.shift), "no",
                                 {"reason": "tree axis times the line factor is a flat plane"})
        elif g.shift != 0.0:
            reason = ("pure line shift: flat plane through any tree geodesic"
                      if tree_cls.kind == "identity"
                      else "elliptic tree part times shift: axis in a flat strip")
            cls = Classification("axial", abs(g.shift), "no", {"reason": reason})
        else:
            cls = Classification("elliptic", 0.0, "no",
                                 {"reason": "elliptic tree part, no shift"})
    else:
        raise GeometryError(f"cannot classify {g!r}")
    cls.evidence.update(evidence)
    if probe_balls > 0 and cls.kind == "axial":
        if rng is None:
            rng = np.random.default_rng(0)
        try:
            cls.evidence["probe"] = _contraction_probe(g, rng, balls=probe_balls)
        except GeometryError:
            pass
    return cls


def contracting_fraction(cfg: WalkConfig, n_grid) -> dict:
    """Fraction of trials whose Z_n is a contracting isometry, per n."""
    grid = sorted(set(int(v) for v in n_grid))
    elements = batch_elements(cfg, grid)
    out = {}
    for nn in grid:
        hits = sum(1 for snap in elements
                   if classify(snap[nn]).contracting == "yes")
        out[nn] = hits / len(elements)
    return out
