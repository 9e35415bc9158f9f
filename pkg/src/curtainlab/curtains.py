"""Curtain combinatorics: dual curtains, chains, L-separation, audits.

A curtain dual to a geodesic at parameter t is the preimage, under
closest-point projection onto the geodesic, of the pole [t-1/2, t+1/2].
Side queries reduce to comparing the projection parameter with the pole
window; the pole is closed, and a 1e-9 band absorbs float rounding.

L-separation quantifies over all chains, which sampling cannot decide, so
it is exposed as a sound falsifier with an explicit search budget:
a `falsified` verdict carries an independently checkable witness chain,
while `certified-up-to-budget` is only as strong as the budget it records.
The greedy dual chain built on top therefore yields a certified *lower*
bound for the hyperbolic-model metric; the ceiling of the distance is the
matching upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry.base import GeodesicSeg, GeometryError, ModelSpace

POLE_EDGE_TOL = 1e-9

MINUS, POLE, PLUS = -1, 0, 1

__all__ = [
    "Curtain", "Chain", "ChainError", "CurtainError", "PoleHitError",
    "SearchBudget", "SeparationReport", "DEFAULT_BUDGET", "dual_curtain",
    "side_of", "separates", "is_chain", "d_inf", "l_separated",
    "greedy_dual_L_chain", "d_L_lower", "bottleneck_audit",
    "star_convexity_audit", "four_point_audit", "curtain_sample_points",
]


class CurtainError(GeometryError):
    """Domain error in curtain machinery."""


class PoleHitError(CurtainError):
    """A sample landed on a pole, so a separation query is indeterminate."""


class ChainError(CurtainError):
    """A family of curtains fails the chain certificate."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class Curtain:
    """Curtain dual to ``dual`` at parameter t, with closed pole [t-1/2, t+1/2]."""

    dual: GeodesicSeg
    t: float
    flip: bool = False

    def __post_init__(self):
        if self.t - 0.5 < -POLE_EDGE_TOL or self.t + 0.5 > self.dual.length + POLE_EDGE_TOL:
            raise CurtainError(
                f"pole [{self.t - 0.5}, {self.t + 0.5}] leaves the parameter "
                f"interval [0, {self.dual.length}]")

    @property
    def space(self) -> ModelSpace:
        return self.dual.space

    @property
    def pole_interval(self):
        return (self.t - 0.5, self.t + 0.5)

    def pole_center(self):
        return self.dual.eval(self.t)

    def pole_geodesic(self) -> GeodesicSeg:
        lo, hi = self.pole_interval
        return self.space.geodesic(self.dual.eval(max(lo, 0.0)),
                                   self.dual.eval(min(hi, self.dual.length)))

    def param_of(self, x) -> float:
        return self.space.geo_param(self.dual, x)

    def side_of(self, x) -> int:
        s = self.param_of(x)
        lo, hi = self.pole_interval
        if s < lo - POLE_EDGE_TOL:
            raw = MINUS
        elif s > hi + POLE_EDGE_TOL:
            raw = PLUS
        else:
            raw = POLE
        return -raw if self.flip else raw

    def contains(self, x) -> bool:
        return self.side_of(x) == POLE

    def oriented(self, minus_ref) -> "Curtain":
        """Copy flipped so that ``minus_ref`` lies on the minus side."""
        s = self.side_of(minus_ref)
        if s == POLE:
            raise PoleHitError("orientation reference lies on the pole")
        return self if s == MINUS else replace(self, flip=not self.flip)

    def pole_points(self, k: int = 5):
        lo, hi = self.pole_interval
        lo, hi = max(lo, 0.0), min(hi, self.dual.length)
        return [self.dual.eval(t) for t in np.linspace(lo, hi, k)]


def dual_curtain(geo: GeodesicSeg, t: float) -> Curtain:
    return Curtain(geo, float(t))


def side_of(h: Curtain, x) -> int:
    return h.side_of(x)


def separates(h: Curtain, A, B) -> bool:
    """True iff A lies in one open halfspace and B in the other."""
    sides_a = {h.side_of(x) for x in A}
    sides_b = {h.side_of(x) for x in B}
    if POLE in sides_a or POLE in sides_b:
        raise PoleHitError("sample on the pole; separation indeterminate")
    return len(sides_a) == 1 and len(sides_b) == 1 and sides_a != sides_b


def curtain_sample_points(h: Curtain, rng, k: int = 12, span: float = 6.0):
    """Verified points of the curtain: pole points plus fiber probes."""
    space = h.space
    pts = list(h.pole_points(5))
    lo, hi = h.pole_interval
    lo, hi = max(lo, 0.0), min(hi, h.dual.length)
    params = {lo + 0.05, h.t, hi - 0.05}
    for t in space.special_params(h.dual):
        if lo <= t <= hi:
            params.add(t)
    offsets = [s for s in np.linspace(-span, span, max(2 * k, 8)) if abs(s) > 1e-6]
    for t in sorted(params):
        for p in space.fiber_probe(h.dual, t, offsets, rng):
            if h.contains(p):
                pts.append(p)
    return pts


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chain:
    """Ordered curtains, each oriented so ``ref`` lies on its minus side."""

    curtains: tuple
    ref: object

    @property
    def size(self) -> int:
        return len(self.curtains)

    def __len__(self) -> int:
        return len(self.curtains)

    def __iter__(self):
        return iter(self.curtains)

    def __getitem__(self, i):
        return self.curtains[i]


def is_chain(curtains, ref, rng=None, samples: int = 8, span: float = 4.0) -> Chain:
    """Certify the chain property on sampled points, or raise ChainError.

    The certificate is the strong nested form: sampled points of every
    earlier curtain lie on the minus side of every later one and vice
    versa (with all curtains oriented so ``ref`` is on the minus side).
    Curtains dual to a common geodesic with pole gaps above 1 satisfy it
    exactly; crossing curtains fail with a witness index pair.
    """
    if not curtains:
        raise ChainError("empty curtain family")
    if rng is None:
        rng = np.random.default_rng(0)
    oriented = [h.oriented(ref) for h in curtains]
    samples_of = [curtain_sample_points(h, rng, k=samples, span=span)
                  for h in oriented]
    for i, hi_c in enumerate(oriented):
        for j in range(len(oriented)):
            if i == j:
                continue
            want = MINUS if j < i else PLUS
            for p in samples_of[j]:
                if hi_c.side_of(p) != want:
                    raise ChainError(
                        f"curtain {i} does not separate its neighbours: sample "
                        f"of curtain {j} on the wrong side", witness=(i, j))
    return Chain(tuple(oriented), ref)


def d_inf(space: ModelSpace, x, y):
    """Ceiling distance together with a realizing chain of dual curtains.

    Returns (value, Chain): value = ceil(d(x, y)) and the chain has
    value - 1 curtains dual to [x, y], mutually separated with gaps > 1.
    """
    d = space.distance(x, y)
    if d <= 0:
        raise CurtainError("d_inf needs distinct points")
    val = int(math.ceil(d - POLE_EDGE_TOL))
    k = val - 1
    geo = space.geodesic(x, y)
    if k <= 0:
        return val, Chain((), x)
    if k == 1:
        ts = [d / 2.0]
    else:
        delta = (d - k) / 4.0
        step = (d - 1.0 - 2.0 * delta) / (k - 1)
        ts = [0.5 + delta + i * step for i in range(k)]
    chain = tuple(Curtain(geo, t) for t in ts)
    return val, Chain(chain, x)


# ---------------------------------------------------------------------------
# L-separation falsifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchBudget:
    """Search effort knobs for the L-separation falsifier."""

    window_radius: float | None = None  # default: d(pole centers) + 10
    candidates: int = 200
    chain_depth: int | None = None      # default: L + 2
    fiber_offsets: float = 0.5          # grid step along transversal fibers
    pole_samples: int = 3
    max_probe_structured: int = 6

    def resolved(self, gap: float, L: int) -> "SearchBudget":
        out = self
        if out.window_radius is None:
            out = replace(out, window_radius=gap + 10.0)
        if out.chain_depth is None:
            out = replace(out, chain_depth=L + 2)
        return out


DEFAULT_BUDGET = SearchBudget()


@dataclass
class SeparationReport:
    """Outcome of a budgeted L-separation query."""

    L: int
    verdict: str  # "certified-up-to-budget" | "falsified"
    budget: SearchBudget
    seed: int
    candidates_tried: int = 0
    witness_curtains: tuple = ()
    witness_points: tuple = ()   # (point in h_i & h1, point in h_i & h2) per curtain
    witness_ref: object = None

    @property
    def falsified(self) -> bool:
        return self.verdict == "falsified"

    def to_record(self, op: str = "l_separated", inputs_digest: str = ""):
        rec = {
            "op": op,
            "inputs_digest": inputs_digest,
            "verdict": self.verdict,
            "budget": {
                "window_radius": self.budget.window_radius,
                "candidates": self.budget.candidates,
                "chain_depth": self.budget.chain_depth,
            },
            "seed": self.seed,
            "candidates_tried": self.candidates_tried,
        }
        if self.falsified:
            rec["witness"] = {
                "chain_size": len(self.witness_curtains),
                "pole_params": [h.t for h in self.witness_curtains],
            }
        return rec


def _disjoint_or_raise(h1: Curtain, h2: Curtain, rng):
    if h1 is h2:
        raise CurtainError("a curtain is not L-separated from itself")
    for p in h1.pole_points(5):
        if h2.contains(p):
            raise CurtainError("curtains are not disjoint (sampled)")
    for p in h2.pole_points(5):
        if h1.contains(p):
            raise CurtainError("curtains are not disjoint (sampled)")
    for p in curtain_sample_points(h1, rng, k=6, span=3.0):
        if h2.contains(p):
            raise CurtainError("curtains are not disjoint (sampled)")


def _find_witness(hc: Curtain, target: Curtain, span: float, step: float, rng):
    """Point lying in both curtains, or None. Sound: membership is verified."""
    for p in hc.pole_points(5):
        if target.contains(p):
            return p
    space = hc.space
    lo, hi = hc.pole_interval
    lo, hi = max(lo, 0.0), min(hi, hc.dual.length)
    params = [lo + 0.05, hc.t, hi - 0.05]
    params += [t for t in space.special_params(hc.dual) if lo <= t <= hi]
    grid = np.arange(step, span + step / 2, step)
    # center-out order: the crossing, when it exists, is usually close by
    offsets = [s for mag in grid for s in (mag, -mag)]
    for t in params[:5]:
        for p in space.fiber_probe(hc.dual, t, offsets, rng):
            if hc.contains(p) and target.contains(p):
                return p
    return None


def _structured_probes(h1: Curtain, h2: Curtain, half_len: float, rng, limit: int):
    """Transversal candidate geodesics crossing the gap between two curtains."""
    space = h1.space
    conn = space.geodesic(h1.pole_center(), h2.pole_center())
    probes = []
    fracs = [0.5, 0.25, 0.75]
    for f in fracs:
        t = f * conn.length
        pts = space.fiber_probe(conn, t, [-half_len, half_len], rng)
        pts = [p for p in pts if space.distance(p, conn.eval(t)) > 0.6]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                geo = space.geodesic(pts[i], pts[j])
                if geo.length >= 1.6:
                    probes.append(geo)
                if len(probes) >= limit:
                    return probes
    return probes


def l_separated(h1: Curtain, h2: Curtain, L: int, budget: SearchBudget | None = None,
                rng=None, seed: int = 0) -> SeparationReport:
    """Budgeted falsifier for L-separation of two disjoint curtains.

    Searches for a chain of more than L curtains, every one of which meets
    both h1 and h2, assembling candidates dual to transversal probe
    geodesics. Falsification is sound (the witness chain and its membership
    points re-verify); certification is only relative to the budget.
    """
    if L < 1:
        raise CurtainError("L must be a positive integer")
    if rng is None:
        rng = np.random.default_rng(seed)
    space = h1.space
    gap = space.distance(h1.pole_center(), h2.pole_center())
    budget = (budget or DEFAULT_BUDGET).resolved(gap, L)
    _disjoint_or_raise(h1, h2, rng)

    depth = budget.chain_depth
    span = budget.window_radius
    half_len = 0.5 * (depth * 1.05 + 1.4)
    mid = space.geodesic(h1.pole_center(), h2.pole_center())
    center = mid.eval(mid.length / 2.0)

    candidates = _structured_probes(h1, h2, half_len, rng,
                                    budget.max_probe_structured)
    tried = 0
    report = SeparationReport(L=L, verdict="certified-up-to-budget",
                              budget=budget, seed=seed)
    n_random = max(budget.candidates - len(candidates), 0)

    def random_probe():
        a = space.sample_point(rng, span, center)
        b = space.sample_point(rng, span, center)
        return space.geodesic(a, b)

    idx = 0
    while idx < len(candidates) + n_random:
        geo = candidates[idx] if idx < len(candidates) else random_probe()
        idx += 1
        tried += 1
        if geo.length < 1.6:
            continue
        found = []
        # scan a centered window of at most chain_depth+1 pole positions
        n_slots = min(int((geo.length - 1.1) / 1.05) + 1, depth + 1)
        t = max(0.55, geo.length / 2.0 - 1.05 * n_slots / 2.0)
        while t + 0.5 <= geo.length - 0.05 and len(found) <= L:
            hc = Curtain(geo, t)
            w1 = _find_witness(hc, h1, span, budget.fiber_offsets, rng)
            if w1 is not None:
                w2 = _find_witness(hc, h2, span, budget.fiber_offsets, rng)
                if w2 is not None:
                    found.append((hc, w1, w2))
            t += 1.05
        if len(found) > L:
            report.verdict = "falsified"
            report.witness_curtains = tuple(h for h, _, _ in found)
            report.witness_points = tuple((w1, w2) for _, w1, w2 in found)
            report.witness_ref = geo.a
            report.candidates_tried = tried
            return report
    report.candidates_tried = tried
    return report


# ---------------------------------------------------------------------------
# greedy dual L-chains: the certified d_L lower bound
# ---------------------------------------------------------------------------


def greedy_dual_L_chain(space: ModelSpace, x, y, L: int,
                        budget: SearchBudget | None = None, rng=None,
                        seed: int = 0) -> Chain:
    """Maximal-by-greedy chain of curtains dual to [x, y], pairwise
    budget-certified L-separated.

    Poles are scanned left to right at step 1 from the smallest admissible
    parameter; a candidate is accepted when it is disjoint from and
    certified against every accepted predecessor. 1 + size is the
    artifact's certified lower bound for d_L(x, y).
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    d = space.distance(x, y)
    accepted = []
    if d <= 1.2:
        return Chain((), x)
    geo = space.geodesic(x, y)
    t = 0.6
    while t + 0.5 <= d - 0.1 + POLE_EDGE_TOL:
        ok = True
        if accepted and t - accepted[-1].t <= 1.0 + 1e-9:
            ok = False  # poles not disjoint: cannot be L-separated
        if ok:
            hc = Curtain(geo, t)
            for prev in accepted:
                rep = l_separated(prev, hc, L, budget, rng, seed)
                if rep.falsified:
                    ok = False
                    break
            if ok:
                accepted.append(hc)
        t += 1.0
    return Chain(tuple(h.oriented(x) for h in accepted), x)


def d_L_lower(space: ModelSpace, x, y, L: int, budget: SearchBudget | None = None,
              rng=None, seed: int = 0) -> int:
    """Certified lower bound for d_L: 1 + size of the greedy dual L-chain."""
    if space.distance(x, y) <= 0:
        return 0
    return 1 + greedy_dual_L_chain(space, x, y, L, budget, rng, seed).size


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------


@dataclass
class BottleneckResult:
    max_excess: float
    samples_on_pole: int

    @property
    def passed(self) -> bool:
        return self.max_excess <= 0.0


def bottleneck_audit(space: ModelSpace, chain3: Chain, x2, y2, L: int,
                     samples: int = 64) -> BottleneckResult:
    """Check d(p, proj(p)) <= 2L+1 for p on [x2, y2] through the middle curtain.

    ``chain3`` must be three curtains dual to a common geodesic [x1, y1]
    separating {x1, x2} from {y1, y2}.
    """
    if chain3.size != 3:
        raise CurtainError("bottleneck audit needs a chain of exactly 3 curtains")
    gamma = chain3[0].dual
    if any(h.dual is not gamma for h in chain3):
        raise CurtainError("bottleneck audit needs curtains dual to one geodesic")
    x1, y1 = gamma.a, gamma.b
    for h in chain3:
        for p, want in ((x1, MINUS), (x2, MINUS), (y1, PLUS), (y2, PLUS)):
            if h.side_of(p) != want:
                raise CurtainError("chain does not separate {x1,x2} from {y1,y2}")
    seg = space.geodesic(x2, y2)
    mid = chain3[1]
    max_excess = -math.inf
    hits = 0
    for t in np.linspace(0.0, seg.length, samples):
        p = seg.eval(t)
        if mid.side_of(p) == POLE:
            hits += 1
            foot, _ = space.project(gamma, p)
            max_excess = max(max_excess, space.distance(p, foot) - (2 * L + 1))
    if hits == 0:
        raise CurtainError("no sample of [x2, y2] met the middle curtain; "
                           "refine the sample grid")
    return BottleneckResult(max_excess, hits)


def star_convexity_audit(space: ModelSpace, h: Curtain, rng, n_samples: int = 100,
                         span: float = 6.0, seg_samples: int = 24) -> int:
    """Count violations of [x, proj_pole(x)] staying inside the curtain."""
    pole_geo = h.pole_geodesic()
    pts = curtain_sample_points(h, rng, k=max(n_samples // 4, 4), span=span)
    violations = 0
    checked = 0
    for x in pts:
        if checked >= n_samples:
            break
        checked += 1
        foot, _ = space.project(pole_geo, x)
        seg = space.geodesic(x, foot)
        for t in np.linspace(0.0, seg.length, seg_samples):
            if not h.contains(seg.eval(t)):
                violations += 1
                break
    return violations


@dataclass
class FourPointResult:
    delta: float
    quadruples: int
    products_infinite: int


def four_point_audit(space: ModelSpace, L: int, n_quadruples: int, rng,
                     radius: float = 10.0,
                     budget: SearchBudget | None = None) -> FourPointResult:
    """Empirical hyperbolicity defect of the d_L lower bound.

    Samples quadruples (o fixed at the basepoint), computes Gromov products
    in the d_L_lower pseudo-metric and returns the worst four-point defect
    min((x|y), (y|z)) - (x|z).
    """
    o = space.basepoint
    worst = 0.0
    infinities = 0
    cache = {}

    def dl(a, b):
        key = (id(a), id(b))
        if key not in cache:
            cache[key] = float(d_L_lower(space, a, b, L, budget, rng))
        return cache[key]

    for _ in range(n_quadruples):
        x = space.sample_point(rng, radius)
        y = space.sample_point(rng, radius)
        z = space.sample_point(rng, radius)

        def prod(a, b):
            return 0.5 * (dl(a, o) + dl(b, o) - dl(a, b))

        pxy, pyz, pxz = prod(x, y), prod(y, z), prod(x, z)
        worst = max(worst, min(pxy, pyz) - pxz)
    return FourPointResult(worst, n_quadruples, infinities)
