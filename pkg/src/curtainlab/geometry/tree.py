"""Regular tree of valence q+1 with exact integer-arithmetic kernels.

Vertices are reduced words over an involutive alphabet (see ``words``);
points on edge interiors carry (anchor vertex, edge direction, offset).
Every point also has a canonical "ray form": the word of the far endpoint
of its edge together with its depth (distance from the root vertex e).
Distances, geodesics, projections, Busemann functions and Gromov products
all reduce to common-prefix bookkeeping on ray words, so they are exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .base import GeodesicSeg, GeometryError, ModelSpace
from .words import Alphabet, common_prefix_len

_SNAP = 1e-12

__all__ = ["TreePoint", "TreeBoundary", "TreeGeodesic", "RegularTree",
           "BoundaryDepthError"]


@dataclass(frozen=True)
class TreePoint:
    """Tree point: a vertex (direction None) or an edge-interior point."""

    anchor: tuple
    direction: int | None = None
    offset: float = 0.0

    @property
    def ray_word(self) -> tuple:
        if self.direction is None:
            return self.anchor
        return self.anchor + (self.direction,)

    @property
    def depth(self) -> float:
        return len(self.anchor) + self.offset

    def is_vertex(self) -> bool:
        return self.direction is None


def _point_on_ray(word: tuple, s: float) -> TreePoint:
    """Point at depth s on the root ray through ``word`` (s <= len(word))."""
    if s < -_SNAP:
        raise GeometryError(f"negative ray depth {s}")
    s = max(s, 0.0)
    k = int(math.floor(s + _SNAP))
    frac = s - k
    if frac < _SNAP:
        return TreePoint(word[:k])
    if k + 1 > len(word):
        raise GeometryError("ray word too short for requested depth")
    return TreePoint(word[:k], word[k], frac)


class BoundaryDepthError(GeometryError):
    """A boundary proxy was asked for letters beyond its materialized depth."""


class TreeBoundary:
    """Finite-depth proxy of a tree boundary point: an infinite reduced word.

    Holds a materialized prefix plus an optional lazy letter source; already
    materialized letters never change when the prefix is deepened.
    """

    __slots__ = ("alphabet", "_prefix", "_source")

    def __init__(self, alphabet: Alphabet, prefix, source=None):
        prefix = tuple(prefix)
        if not alphabet.is_reduced(prefix):
            raise GeometryError("boundary prefix must be a reduced word")
        if source is None and not prefix:
            raise GeometryError("boundary proxy needs at least one letter")
        self.alphabet = alphabet
        self._prefix = list(prefix)
        self._source = source

    # -- constructors --------------------------------------------------------

    @classmethod
    def periodic(cls, alphabet: Alphabet, word) -> "TreeBoundary":
        word = tuple(word)
        if not word:
            raise GeometryError("periodic boundary word must be nonempty")
        doubled = alphabet.reduce_concat(word, word)
        if len(doubled) != 2 * len(word):
            raise GeometryError("word does not repeat to a reduced infinite word")
        cycle = itertools.cycle(word)
        return cls(alphabet, (), source=lambda: next(cycle))

    @classmethod
    def from_word(cls, alphabet: Alphabet, word) -> "TreeBoundary":
        """Finite-depth proxy: exactly the given prefix, not extendable."""
        return cls(alphabet, tuple(word))

    @classmethod
    def random_stream(cls, alphabet: Alphabet, rng) -> "TreeBoundary":
        state = {"last": None}

        def draw():
            choices = list(alphabet.extensions(state["last"]))
            letter = choices[int(rng.integers(len(choices)))]
            state["last"] = letter
            return letter

        return cls(alphabet, (), source=draw)

    # -- letter access -------------------------------------------------------

    @property
    def materialized_depth(self) -> int:
        return len(self._prefix)

    @property
    def extendable(self) -> bool:
        return self._source is not None

    def letter(self, i: int) -> int:
        while len(self._prefix) <= i:
            if self._source is None:
                raise BoundaryDepthError(
                    f"proxy materialized to depth {len(self._prefix)}, need {i + 1}")
            nxt = self._source()
            if self._prefix and nxt == self.alphabet.inv[self._prefix[-1]]:
                raise GeometryError("boundary letter source produced a backtrack")
            self._prefix.append(nxt)
        return self._prefix[i]

    def prefix(self, depth: int) -> tuple:
        if depth > 0:
            self.letter(depth - 1)
        return tuple(self._prefix[:depth])

    def available_prefix(self) -> tuple:
        return tuple(self._prefix)

    # -- geometry helpers ----------------------------------------------------

    def common_with_word(self, word: tuple) -> int:
        """Common prefix length with a finite word (always decidable)."""
        for i, x in enumerate(word):
            if self.letter(i) != x:
                return i
        return len(word)

    def diverge_depth(self, other: "TreeBoundary", cap: int) -> int | None:
        """First index where the two proxies differ; None if indistinguishable
        up to ``cap`` or up to the available depth of both."""
        i = 0
        while i < cap:
            try:
                a = self.letter(i)
                b = other.letter(i)
            except BoundaryDepthError:
                return None
            if a != b:
                return i
            i += 1
        return None

    def translate(self, gword: tuple) -> "TreeBoundary":
        """Boundary point g . xi for a reduced word g (left action).

        Lazy: the result pulls letters from this proxy on demand, shifted by
        the cancellation depth at the junction.
        """
        alpha = self.alphabet
        m = len(gword)
        k = 0
        while k < m and self.letter(k) == alpha.inv[gword[m - 1 - k]]:
            k += 1
        head = gword[: m - k]
        counter = itertools.count(k)

        def draw(it=counter, base=self):
            return base.letter(next(it))

        return TreeBoundary(alpha, head, source=draw)

    def __repr__(self):
        shown = self.alphabet.format(tuple(self._prefix[:8]))
        more = "..." if self.extendable or len(self._prefix) > 8 else ""
        return f"TreeBoundary({shown}{more})"


class TreeGeodesic(GeodesicSeg):
    """Geodesic segment through the branch point at depth m on both ray words."""

    __slots__ = ("wx", "sx", "wy", "sy", "m")

    def __init__(self, space, x: TreePoint, y: TreePoint):
        wx, wy = x.ray_word, y.ray_word
        sx, sy = x.depth, y.depth
        c = common_prefix_len(wx, wy)
        m = min(float(c), sx, sy)
        super().__init__(space, x, y, sx + sy - 2 * m)
        self.wx, self.sx, self.wy, self.sy, self.m = wx, sx, wy, sy, m

    def eval(self, t: float) -> TreePoint:
        t = self._check_param(t)
        down = self.sx - self.m
        if t <= down:
            return _point_on_ray(self.wx, self.sx - t)
        return _point_on_ray(self.wy, self.m + (t - down))


class RegularTree(ModelSpace):
    """(q+1)-regular tree rooted at the empty word."""

    def __init__(self, q: int = 3):
        if q < 2:
            raise GeometryError("regular tree requires q >= 2 (valence >= 3)")
        self.q = q
        self.alphabet = Alphabet.regular(q + 1)
        self.kind = f"tree(q={q})"

    @property
    def basepoint(self) -> TreePoint:
        return TreePoint(())

    def vertex(self, word) -> TreePoint:
        if isinstance(word, str):
            word = self.alphabet.parse(word)
        word = tuple(word)
        if not self.alphabet.is_reduced(word):
            raise GeometryError(f"word {word} is not reduced")
        return TreePoint(word)

    def check_point(self, x) -> None:
        if not isinstance(x, TreePoint):
            raise GeometryError(f"not a tree point: {x!r}")
        if not self.alphabet.is_reduced(x.anchor):
            raise GeometryError("anchor word not reduced")
        if any(not 0 <= l < self.alphabet.size for l in x.anchor):
            raise GeometryError("letter out of range")
        if x.direction is None:
            if x.offset != 0.0:
                raise GeometryError("vertex point must have offset 0")
        else:
            if not 0.0 < x.offset < 1.0:
                raise GeometryError("edge offset must lie in (0, 1)")
            last = x.anchor[-1] if x.anchor else None
            if x.direction not in self.alphabet.extensions(last):
                raise GeometryError("edge direction backtracks")

    # -- metric kernel -------------------------------------------------------

    def distance(self, x: TreePoint, y: TreePoint) -> float:
        c = common_prefix_len(x.ray_word, y.ray_word)
        return x.depth + y.depth - 2.0 * min(float(c), x.depth, y.depth)

    def geodesic(self, x: TreePoint, y: TreePoint) -> TreeGeodesic:
        return TreeGeodesic(self, x, y)

    def project(self, geo: TreeGeodesic, x: TreePoint):
        t = 0.5 * (self.distance(x, geo.a) + geo.length - self.distance(x, geo.b))
        t = min(max(t, 0.0), geo.length)
        return geo.eval(t), t

    def busemann(self, xi: TreeBoundary, base: TreePoint, z: TreePoint) -> float:
        def radial(p: TreePoint) -> float:
            c = xi.common_with_word(p.ray_word)
            return p.depth - 2.0 * min(float(c), p.depth)

        return radial(z) - radial(base)

    def gromov_product_boundary(self, x: TreeBoundary, y: TreeBoundary,
                                o: TreePoint, cap: int = 4096) -> float:
        if x is y:
            return math.inf
        c = x.diverge_depth(y, cap)
        if c is None:
            return math.inf
        n = max(c, int(math.ceil(o.depth))) + 2
        try:
            vx = self.vertex(x.prefix(n))
            vy = self.vertex(y.prefix(n))
        except BoundaryDepthError:
            m = min(x.materialized_depth, y.materialized_depth)
            if m <= c:
                return math.inf
            vx = self.vertex(x.prefix(m))
            vy = self.vertex(y.prefix(m))
        return self.gromov_product(vx, vy, o)

    def boundary_of_ray(self, o: TreePoint, z: TreePoint) -> TreeBoundary:
        if self.distance(o, z) <= 0:
            raise GeometryError("ray needs two distinct points")
        c = common_prefix_len(o.ray_word, z.ray_word)
        m = min(float(c), o.depth, z.depth)
        if z.depth > m + _SNAP:
            # the ray exits through z going deeper: tail extends z's ray word
            word = z.ray_word[: int(math.ceil(z.depth - _SNAP))]
            return TreeBoundary(self.alphabet, word,
                                source=_canonical_extender(self.alphabet, word))
        # the ray heads rootward at z: continue to the root, leave through the
        # smallest branch that does not backtrack toward the arrival edge
        arrival = z.ray_word[0] if z.ray_word else o.ray_word[0]
        first = min(l for l in range(self.alphabet.size) if l != arrival)
        word = (first,)
        return TreeBoundary(self.alphabet, word,
                            source=_canonical_extender(self.alphabet, word))

    # -- sampling and curtain hooks ------------------------------------------

    def sample_point(self, rng, radius: float, center: TreePoint | None = None):
        if center is None:
            center = self.basepoint
        r = float(rng.uniform(0.0, radius))
        nsteps = int(math.ceil(r - _SNAP))
        if nsteps == 0:
            return center
        # walk nsteps edges from (the nearest vertex to) center, never
        # backtracking, then place the point at distance r along the path
        word = list(center.anchor)
        if not center.is_vertex() and rng.random() < center.offset:
            word.append(center.direction)
        last_edge = None  # (parent_word, letter, went_down)
        for _ in range(nsteps):
            options = []
            if word:
                options.append("up")
            last = word[-1] if word else None
            options.extend(self.alphabet.extensions(last))
            if last_edge is not None:  # no immediate backtrack: stay geodesic
                _, letter, went_down = last_edge
                options = [o for o in options
                           if o != ("up" if went_down else letter)]
            choice = options[int(rng.integers(len(options)))]
            if choice == "up":
                letter = word.pop()
                last_edge = (tuple(word), letter, False)
            else:
                last_edge = (tuple(word), choice, True)
                word.append(choice)
        frac = r - (nsteps - 1)
        if frac >= 1.0 - _SNAP:
            return TreePoint(tuple(word))
        pw, letter, went_down = last_edge
        if went_down:
            return TreePoint(pw, letter, frac)
        return TreePoint(pw, letter, 1.0 - frac)

    def special_params(self, geo: TreeGeodesic):
        """Parameters of the geodesic's vertices (the only thick fibers)."""
        out = []
        down = geo.sx - geo.m
        k = math.ceil(geo.m - _SNAP)
        while k <= geo.sx + _SNAP:
            t = geo.sx - k
            if -_SNAP <= t <= geo.length + _SNAP:
                out.append(min(max(t, 0.0), geo.length))
            k += 1
        k = math.ceil(geo.m - _SNAP)
        while k <= geo.sy + _SNAP:
            t = down + (k - geo.m)
            if -_SNAP <= t <= geo.length + _SNAP:
                out.append(min(max(t, 0.0), geo.length))
            k += 1
        return sorted(set(round(t, 9) for t in out))

    def fiber_probe(self, geo: TreeGeodesic, t: float, offsets, rng=None):
        """Points projecting to geo.eval(t): branch walks off a vertex."""
        p = geo.eval(t)
        if not p.is_vertex():
            return [p]
        along = set()
        if t > _SNAP:
            along.add(self._step_toward(p, geo.eval(max(t - 0.25, 0.0))))
        if t < geo.length - _SNAP:
            along.add(self._step_toward(p, geo.eval(min(t + 0.25, geo.length))))
        moves = []
        if p.anchor and "up" not in along:
            moves.append("up")
        last = p.anchor[-1] if p.anchor else None
        moves.extend(l for l in self.alphabet.extensions(last) if l not in along)
        out = [p]
        if not moves:
            return out
        for i, s in enumerate(offsets):
            if s <= _SNAP:
                continue
            move = moves[i % len(moves)] if rng is None else \
                moves[int(rng.integers(len(moves)))]
            out.append(self._branch_walk(p, move, s))
        return out

    def _branch_walk(self, v: TreePoint, first_move, dist: float) -> TreePoint:
        """Point at distance ``dist`` from vertex v, leaving via ``first_move``
        and then always extending by the smallest admissible letter."""
        if first_move == "up":
            parent = v.anchor[:-1]
            arrival = v.anchor[-1]
            if dist <= 1.0 - _SNAP:
                return TreePoint(parent, arrival, 1.0 - dist)
            word = list(parent)
            forbidden = arrival  # stepping back down to v
            remaining = dist - 1.0
        else:
            word = list(v.anchor) + [first_move]
            forbidden = None
            remaining = dist - 1.0
            if remaining <= _SNAP:
                return _point_on_ray(tuple(word), len(v.anchor) + dist)
        while remaining > _SNAP:
            last = word[-1] if word else None
            choices = [l for l in self.alphabet.extensions(last) if l != forbidden]
            forbidden = None
            word.append(min(choices))
            remaining -= 1.0
        return _point_on_ray(tuple(word), len(word) + min(remaining, 0.0))

    def _step_toward(self, v: TreePoint, q: TreePoint):
        """Move ('up' or a letter) of the edge at vertex v toward point q."""
        wv, wq = v.anchor, q.ray_word
        c = common_prefix_len(wv, wq)
        if c < len(wv) or q.depth < v.depth:
            return "up"
        return wq[len(wv)] if len(wq) > len(wv) else "up"

    def __repr__(self):
        return f"RegularTree(q={self.q})"


def _canonical_extender(alphabet: Alphabet, start_word):
    state = {"last": start_word[-1] if start_word else None}

    def draw():
        letter = min(alphabet.extensions(state["last"]))
        state["last"] = letter
        return letter

    return draw
