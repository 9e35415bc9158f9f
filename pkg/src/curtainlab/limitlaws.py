"""Limit laws of the walk: cocycle, drift, boundary measures, psi, CLT.

The horofunction cocycle beta(g, x) = b_x(g^-1 o) is evaluated with the
exact per-space Busemann kernels, so the cocycle identity holds to float
rounding. The boundary measures nu and nu-check are realized as empirical
sets of finite-depth proxies from forward and inverse-increment walks;
every report records the depth and count used.

Batch independence is organized through trial-index offsets into the
Philox key space: the centering batch (the drift estimate used inside the
CLT statistic), the forward boundary batch, the reversed boundary batch
and auxiliary pair draws all live in disjoint index ranges of the same
master seed, so runs are reproducible end to end while estimates stay
independent of the samples they center.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .geometry import (EuclideanPlane, GeometryError, HBoundary,
                       HyperbolicPlane, ProductPoint, RegularTree,
                       TreeBoundary, TreeTimesLine)
from .rng import trial_generator
from .walker import (MoebiusIsometry, WalkConfig, batch_displacements,
                     batch_elements, classify, displacement_series,
                     identity_of, _tree_letter_table, _tree_walk_batch)

__all__ = [
    "CENTERING_OFFSET", "FORWARD_OFFSET", "REVERSED_OFFSET", "AUX_OFFSET",
    "BoundarySampleSet", "DriftReport", "GapReport", "LimitLawReport",
    "MonitorReport", "PsiEstimator", "VarianceReport", "busemann_cocycle",
    "cocycle_residual", "clt_report", "displacement_busemann_gap",
    "drift_estimate", "estimate_psi", "geometric_estimates_monitor",
    "sample_boundary", "stationarity_check", "variance_estimate",
    "cocycle_average",
]

# disjoint trial-index ranges of one master seed (Philox keys are 64-bit)
CENTERING_OFFSET = 1 << 33
FORWARD_OFFSET = 1 << 34
REVERSED_OFFSET = 3 << 33
AUX_OFFSET = 1 << 35


# ---------------------------------------------------------------------------
# cocycle
# ---------------------------------------------------------------------------


def busemann_cocycle(space, g, xi, o) -> float:
    """beta(g, x) = b_x(g^-1 o), the horofunction cocycle.

    Matrix isometries use the conditioning-safe evaluation on the matrix
    entries (same closed form, no intermediate near-boundary point).
    """
    if isinstance(g, MoebiusIsometry):
        return g.busemann_cocycle(xi, o)
    return space.busemann(xi, o, g.inverse().act(o))


def cocycle_residual(space, g1, g2, xi, o) -> float:
    """beta(g1 g2, x) - beta(g1, g2 x) - beta(g2, x); zero in exact arithmetic."""
    lhs = busemann_cocycle(space, g1.compose(g2), xi, o)
    mid = busemann_cocycle(space, g1, g2.act_boundary(xi), o)
    rhs = busemann_cocycle(space, g2, xi, o)
    return lhs - mid - rhs


# ---------------------------------------------------------------------------
# drift
# ---------------------------------------------------------------------------


@dataclass
class DriftReport:
    lambda_hat: float
    se: float
    ci95: tuple
    n: int
    trials: int
    tail_grid: list = field(default_factory=list)
    tail_probs: list = field(default_factory=list)
    tail_rate: float = math.nan  # fitted exponent of P(d <= r n) ~ e^(-kappa n)

    def summary(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat, "se": self.se,
            "ci95": list(self.ci95), "n": self.n, "trials": self.trials,
            "tail_grid": self.tail_grid, "tail_probs": self.tail_probs,
            "tail_rate": self.tail_rate,
        }


def drift_estimate(cfg: WalkConfig, n: int | None = None,
                   trials: int | None = None, trial_offset: int = 0,
                   tail_grid=None) -> DriftReport:
    """Mean displacement rate over independent trials, with a linear-escape
    tail report: the empirical probability of d(Z_n o, o) <= (lambda/2) n
    on a grid of horizons, and the exponential rate fitted to it."""
    n = cfg.n if n is None else int(n)
    trials = cfg.trials if trials is None else int(trials)
    if tail_grid is None:
        tail_grid = sorted({max(n // 8, 1), max(n // 4, 1), max(n // 2, 1), n})
    ns = sorted(set(tail_grid) | {n})
    disp = _offset_displacements(cfg, ns, trials, trial_offset)
    at_n = disp[:, ns.index(n)]
    lam = float(at_n.mean() / n)
    se = float(at_n.std(ddof=1) / math.sqrt(trials) / n) if trials > 1 else math.inf
    r = 0.5 * lam
    probs = []
    for i, nn in enumerate(ns):
        if nn in tail_grid:
            probs.append(float(np.mean(disp[:, i] <= r * nn)))
    kappa = math.nan
    pts = [(nn, p) for nn, p in zip(tail_grid, probs) if p > 0]
    if len(pts) >= 2:
        xs = np.array([p[0] for p in pts], dtype=float)
        ys = np.log([p[1] for p in pts])
        kappa = float(-np.polyfit(xs, ys, 1)[0])
    elif len(pts) <= 1:
        kappa = math.inf  # tail already empty on the grid
    return DriftReport(lam, se, (lam - 1.96 * se, lam + 1.96 * se), n, trials,
                       list(tail_grid), probs, kappa)


def _offset_displacements(cfg, ns, trials, trial_offset):
    return batch_displacements(cfg, ns, trials, trial_offset)


# ---------------------------------------------------------------------------
# boundary sampling
# ---------------------------------------------------------------------------


@dataclass
class BoundarySampleSet:
    space: object
    points: list
    weights: np.ndarray
    provenance: str          # "forward" (nu) or "reversed" (nu-check)
    depth: int
    count: int
    skipped: int = 0
    _psi_cache: dict = field(default_factory=dict, repr=False)

    def psi_estimator(self, o) -> "PsiEstimator":
        key = id(o)
        if key not in self._psi_cache:
            self._psi_cache[key] = PsiEstimator(self, o)
        return self._psi_cache[key]


def sample_boundary(cfg: WalkConfig, direction: str, depth: int, count: int,
                    trial_offset: int | None = None) -> BoundarySampleSet:
    """Empirical hitting samples: proxies toward Z_depth o (forward) or the
    inverse-increment walk (reversed, sampling the reflected measure).

    Refuses when the drift is indistinguishable from zero, since boundary
    convergence is unjustified there.
    """
    if direction not in ("forward", "reversed"):
        raise ValueError("direction must be 'forward' or 'reversed'")
    probe_n = min(depth, cfg.n)
    probe = drift_estimate(cfg, n=probe_n, trials=min(cfg.trials, 200),
                           trial_offset=CENTERING_OFFSET + (1 << 20))
    if not probe.lambda_hat > 3.0 * probe.se:
        raise ValueError(
            f"drift {probe.lambda_hat:.4g} indistinguishable from 0 "
            f"(se {probe.se:.2g}); boundary sampling refused")
    if probe_n >= 16:
        # a diffusive (zero-drift) walk shows lambda(n)/lambda(n/4) ~ 1/2,
        # a positive-drift one ~ 1; refuse the diffusive signature
        short = drift_estimate(cfg, n=probe_n // 4,
                               trials=min(cfg.trials, 200),
                               trial_offset=CENTERING_OFFSET + (1 << 21))
        if probe.lambda_hat < 0.75 * short.lambda_hat:
            raise ValueError(
                f"drift estimate decays with the horizon "
                f"({short.lambda_hat:.4g} at n={probe_n // 4} vs "
                f"{probe.lambda_hat:.4g} at n={probe_n}): indistinguishable "
                f"from 0; boundary sampling refused")
    if trial_offset is None:
        trial_offset = FORWARD_OFFSET if direction == "forward" else REVERSED_OFFSET
    walk_cfg = cfg
    if direction == "reversed":
        walk_cfg = WalkConfig(cfg.space, [g.inverse() for g in cfg.generators],
                              cfg.weights, cfg.n, cfg.trials, cfg.seed,
                              cfg.basepoint)
    points, skipped = _boundary_points(walk_cfg, depth, count, trial_offset)
    w = np.full(len(points), 1.0 / len(points))
    return BoundarySampleSet(cfg.space, points, w, direction, depth, count,
                             skipped)


def _boundary_points(cfg: WalkConfig, depth: int, count: int, offset: int):
    space = cfg.space
    o = cfg.basepoint
    points = []
    skipped = 0
    if isinstance(space, RegularTree) and _tree_letter_table(cfg) is not None:
        table = _tree_letter_table(cfg)
        block = count
        t = 0
        while len(points) < count:
            idx = np.stack([cfg.increments(offset + t + i, depth)
                            for i in range(block)])
            _, stacks, tops = _tree_walk_batch(space.alphabet, table, idx,
                                               [depth], keep_stacks=True)
            for row in range(block):
                if len(points) >= count:
                    break
                k = int(tops[row])
                if k == 0:
                    skipped += 1
                    continue
                word = tuple(int(v) for v in stacks[row, :k])
                points.append(TreeBoundary.from_word(space.alphabet, word))
            t += block
            block = max(count - len(points), 1)
        return points, skipped
    if isinstance(space, HyperbolicPlane):
        snaps = _elements_at(cfg, depth, count, offset)
        for z in snaps:
            cls = classify(z)
            if cls.kind != "axial":
                skipped += 1
                points.append(None)
                continue
            _, att = z.fixed_boundary_points()
            points.append(HBoundary(att))
        points = [p for p in points if p is not None]
        extra = offset + count
        while len(points) < count:  # replace skipped trials with fresh ones
            z = _elements_at(cfg, depth, 1, extra)[0]
            extra += 1
            if classify(z).kind == "axial":
                points.append(HBoundary(z.fixed_boundary_points()[1]))
        return points, skipped
    # generic route: ray toward Z_depth o
    snaps = _elements_at(cfg, depth, count, offset)
    extra = offset + count
    for z in snaps:
        zo = z.act(o)
        if space.distance(zo, o) <= 0:
            skipped += 1
            continue
        points.append(space.boundary_of_ray(o, zo))
    while len(points) < count:
        z = _elements_at(cfg, depth, 1, extra)[0]
        extra += 1
        zo = z.act(o)
        if space.distance(zo, o) > 0:
            points.append(space.boundary_of_ray(o, zo))
    return points, skipped


def _elements_at(cfg, depth, count, offset):
    out = []
    for t in range(count):
        idx = cfg.increments(offset + t, depth)
        z = identity_of(cfg.space)
        for j in idx:
            z = z.compose(cfg.generators[j])
        out.append(z)
    return out


# ---------------------------------------------------------------------------
# stationarity check on cylinders
# ---------------------------------------------------------------------------


@dataclass
class StationarityReport:
    tv_distance: float
    cylinders: dict          # word string -> (empirical, pushforward)

    def frequency(self, word: str) -> float:
        return self.cylinders[word][0]


def stationarity_check(samples: BoundarySampleSet, cfg: WalkConfig) -> StationarityReport:
    """Total-variation distance on depth-2 cylinders between the empirical
    measure and its pushforward mixture sum_g mu(g) g.nu-hat."""
    space = samples.space
    if not isinstance(space, RegularTree):
        raise GeometryError("cylinder stationarity check needs a tree")
    alpha = space.alphabet
    cylinders = [(x, y) for x in range(alpha.size)
                 for y in alpha.extensions(x)]
    emp = {c: 0.0 for c in cylinders}
    for p, w in zip(samples.points, samples.weights):
        emp[(p.letter(0), p.letter(1))] += w
    push = {c: 0.0 for c in cylinders}
    for g, mu_g in zip(cfg.generators, cfg.weights):
        for p, w in zip(samples.points, samples.weights):
            q = g.act_boundary(p)
            push[(q.letter(0), q.letter(1))] += mu_g * w
    tv = 0.5 * sum(abs(emp[c] - push[c]) for c in cylinders)
    table = {alpha.format(c): (emp[c], push[c]) for c in cylinders}
    return StationarityReport(tv, table)


# ---------------------------------------------------------------------------
# psi
# ---------------------------------------------------------------------------


class PsiEstimator:
    """psi(x) = -2 * average of (x|y)_o over an empirical nu-check set.

    Trees with the root basepoint use a prefix-count trie (the Gromov
    product of boundary words based at the root is their common prefix
    length), which makes a psi evaluation O(agreement depth). Other cases
    fall back to pairwise products. Coincidence pairs, where the product is
    infinite, are rejected from the average and counted.
    """

    _TRIE_DEPTH = 64

    def __init__(self, samples: BoundarySampleSet, o):
        self.samples = samples
        self.o = o
        self.space = samples.space
        self.rejected = 0
        self._trie = None
        if isinstance(self.space, RegularTree) and \
                self.space.distance(o, self.space.basepoint) == 0.0:
            self._trie = self._build_trie()
        self._h_xis = None
        if isinstance(self.space, HyperbolicPlane):
            self._h_xis = np.array([p.xi for p in samples.points])

    def _build_trie(self):
        root = {}
        for p in self.samples.points:
            node = root
            prefix = p.available_prefix()[: self._TRIE_DEPTH]
            for letter in prefix:
                nxt = node.get(letter)
                if nxt is None:
                    nxt = {"#": 0}
                    node[letter] = nxt
                nxt["#"] += 1
                node = nxt
        return root

    def __call__(self, x) -> float:
        if self._trie is not None:
            total = 0.0
            node = self._trie
            depth = 0
            while depth < self._TRIE_DEPTH:
                try:
                    letter = x.letter(depth)
                except GeometryError:
                    break
                node = node.get(letter)
                if node is None:
                    break
                total += node["#"]
                depth += 1
            return -2.0 * total / len(self.samples.points)
        if self._h_xis is not None:
            o = self.o
            xis = self._h_xis
            finite = np.isfinite(xis)
            if math.isinf(x.xi):
                self.rejected += int(xis.size - finite.sum())
                if not finite.any():
                    return 0.0
                vals = np.log(np.abs(o - xis[finite]) / o.imag)
                return -2.0 * float(vals.mean())
            same = finite & (xis == x.xi)
            self.rejected += int(same.sum())
            parts = []
            keep = finite & ~same
            if keep.any():
                parts.append(np.log(np.abs(o - x.xi) * np.abs(o - xis[keep])
                                    / (o.imag * np.abs(x.xi - xis[keep]))))
            n_inf = int((~finite).sum())
            if n_inf:
                parts.append(np.full(n_inf, math.log(abs(o - x.xi) / o.imag)))
            if not parts:
                return 0.0
            allv = np.concatenate(parts)
            return -2.0 * float(allv.mean())
        # generic pairwise route
        vals = []
        for p, w in zip(self.samples.points, self.samples.weights):
            v = self.space.gromov_product_boundary(x, p, self.o)
            if math.isinf(v):
                self.rejected += 1
                continue
            vals.append(v * w)
        total_w = sum(w for p, w in zip(self.samples.points, self.samples.weights))
        if not vals:
            return 0.0
        return -2.0 * float(sum(vals) / total_w)


def estimate_psi(x, check_samples: BoundarySampleSet, o) -> float:
    """psi-hat(x) against an empirical nu-check sample set."""
    return check_samples.psi_estimator(o)(x)


# ---------------------------------------------------------------------------
# variance of the centered cocycle
# ---------------------------------------------------------------------------


@dataclass
class VarianceReport:
    sigma2: float
    se: float
    pairs: int
    psi_rejections: int

    @property
    def nondegenerate(self) -> bool:
        return self.sigma2 > 3.0 * self.se

    def summary(self) -> dict:
        return {"sigma2": self.sigma2, "se": self.se, "pairs": self.pairs,
                "nondegenerate": self.nondegenerate,
                "psi_rejections": self.psi_rejections}


def variance_estimate(cfg: WalkConfig, psi: PsiEstimator, lambda_hat: float,
                      x_samples: BoundarySampleSet, pairs: int = 20000,
                      seed_salt: int = 0) -> VarianceReport:
    """Monte-Carlo mean of (beta(g,x) - psi(x) + psi(gx) - lambda)^2 over
    (g, x) ~ mu (x) empirical nu."""
    rng = trial_generator(cfg.seed, AUX_OFFSET + seed_salt)
    o = cfg.basepoint
    gi = rng.choice(len(cfg.generators), size=pairs, p=np.asarray(cfg.weights))
    xi_idx = rng.choice(len(x_samples.points), size=pairs, p=x_samples.weights)
    before = psi.rejected
    vals = np.empty(pairs)
    for k in range(pairs):
        g = cfg.generators[int(gi[k])]
        x = x_samples.points[int(xi_idx[k])]
        beta = busemann_cocycle(cfg.space, g, x, o)
        v = beta - psi(x) + psi(g.act_boundary(x)) - lambda_hat
        vals[k] = v * v
    sigma2 = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(pairs)) if pairs > 1 else math.inf
    return VarianceReport(sigma2, se, pairs, psi.rejected - before)


def cocycle_average(cfg: WalkConfig, x_samples: BoundarySampleSet,
                    pairs: int = 20000, seed_salt: int = 1):
    """Monte-Carlo mean and se of beta(g, x) over (g, x) ~ mu (x) nu-hat;
    the paper-level identity says this equals the drift."""
    rng = trial_generator(cfg.seed, AUX_OFFSET + 7 + seed_salt)
    o = cfg.basepoint
    gi = rng.choice(len(cfg.generators), size=pairs, p=np.asarray(cfg.weights))
    xi_idx = rng.choice(len(x_samples.points), size=pairs, p=x_samples.weights)
    vals = np.empty(pairs)
    for k in range(pairs):
        g = cfg.generators[int(gi[k])]
        x = x_samples.points[int(xi_idx[k])]
        vals[k] = busemann_cocycle(cfg.space, g, x, o)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(pairs))


# ---------------------------------------------------------------------------
# CLT report
# ---------------------------------------------------------------------------


@dataclass
class LimitLawReport:
    n: int
    trials: int
    lambda_hat: float
    lambda_se: float
    samples: np.ndarray          # S_n = (d(Z_n o, o) - n lambda_hat) / sqrt(n)
    var_empirical: float
    sigma2_formula: float
    sigma2_se: float
    ks_formula: tuple            # (statistic, p-value) vs N(0, sigma2_formula)
    ks_empirical: tuple          # (statistic, p-value) vs N(0, var_empirical)
    degenerate: bool
    nondegenerate_verdict: bool
    psi_sup: float = math.nan
    psi_inf: float = math.nan

    def summary(self) -> dict:
        return {
            "n": self.n, "trials": self.trials,
            "lambda_hat": self.lambda_hat, "lambda_se": self.lambda_se,
            "var_empirical": self.var_empirical,
            "sigma2_formula": self.sigma2_formula,
            "sigma2_se": self.sigma2_se,
            "ks_formula": list(self.ks_formula),
            "ks_empirical": list(self.ks_empirical),
            "degenerate": self.degenerate,
            "nondegenerate_verdict": self.nondegenerate_verdict,
            "psi_sup": self.psi_sup, "psi_inf": self.psi_inf,
        }


def clt_report(cfg: WalkConfig, lambda_hat: float, lambda_se: float,
               variance: VarianceReport | None = None,
               n: int | None = None, trials: int | None = None) -> LimitLawReport:
    """Normalized displacement samples with KS normality tests.

    ``lambda_hat`` must come from a batch independent of the one sampled
    here (drift_estimate with CENTERING_OFFSET); the KS test runs against
    the variance-formula normal when available and against the fitted
    normal always.
    """
    n = cfg.n if n is None else int(n)
    trials = cfg.trials if trials is None else int(trials)
    if trials < 200:
        raise ValueError("CLT report needs at least 200 trials")
    disp = batch_displacements(cfg, [n], trials)[:, 0]
    s = (disp - n * lambda_hat) / math.sqrt(n)
    var_emp = float(np.var(s, ddof=1))
    degenerate = var_emp < 1e-12
    if degenerate:
        ks_emp = (math.nan, math.nan)
    else:
        ks_emp = tuple(float(v) for v in
                       stats.kstest(s, "norm", args=(0.0, math.sqrt(var_emp)))[:2])
    sigma2 = variance.sigma2 if variance is not None else math.nan
    sigma2_se = variance.se if variance is not None else math.nan
    if variance is not None and variance.sigma2 > 1e-12 and not degenerate:
        ks_formula = tuple(float(v) for v in
                           stats.kstest(s, "norm",
                                        args=(0.0, math.sqrt(variance.sigma2)))[:2])
    else:
        ks_formula = (math.nan, math.nan)
    verdict = bool(variance.nondegenerate) if variance is not None else not degenerate
    return LimitLawReport(n, trials, lambda_hat, lambda_se, s, var_emp,
                          sigma2, sigma2_se, ks_formula, ks_emp,
                          degenerate, verdict)


# ---------------------------------------------------------------------------
# displacement vs Busemann gap
# ---------------------------------------------------------------------------


@dataclass
class GapReport:
    n_max: int
    max_gap: float
    slope: float
    gaps: np.ndarray

    def summary(self) -> dict:
        return {"n_max": self.n_max, "max_gap": self.max_gap,
                "slope": self.slope}


def displacement_busemann_gap(cfg: WalkConfig, trial: int,
                              n_max: int | None = None) -> GapReport:
    """Series n -> |beta(Z_n, xi+) - d(Z_n o, o)| for the trajectory's own
    forward limit proxy xi+.

    beta(Z_n, xi+) = b_{xi+}(Z_n^{-1} o) tracks the displacement to within
    an almost-surely bounded gap; the report carries the max and the
    least-squares slope of the series (the testable surrogate of
    boundedness).
    """
    n_max = cfg.n if n_max is None else int(n_max)
    space = cfg.space
    if isinstance(space, RegularTree) and _tree_letter_table(cfg) is not None:
        return _tree_gap(cfg, trial, n_max)
    # generic route for small horizons
    idx = cfg.increments(trial, n_max)
    o = cfg.basepoint
    z = identity_of(space)
    elements = []
    for j in idx:
        z = z.compose(cfg.generators[j])
        elements.append(z)
    zo = elements[-1].act(o)
    if space.distance(zo, o) <= 0:
        raise ValueError("trajectory ended at the basepoint; no forward proxy")
    xi_plus = space.boundary_of_ray(o, zo)
    gaps = np.empty(n_max)
    for k, zk in enumerate(elements):
        b = space.busemann(xi_plus, o, zk.inverse().act(o))
        gaps[k] = abs(b - space.distance(zk.act(o), o))
    return _gap_report(gaps, n_max)


def _tree_gap(cfg: WalkConfig, trial: int, n_max: int) -> GapReport:
    space: RegularTree = cfg.space
    alpha = space.alphabet
    inv = alpha.inv
    table = _tree_letter_table(cfg)
    idx = cfg.increments(trial, n_max)
    letters = [int(table[j]) for j in idx]
    # forward word (for the limit proxy), then the inverse-word series
    word = []
    for lam in letters:
        if word and word[-1] == inv[lam]:
            word.pop()
        else:
            word.append(lam)
    if not word:
        raise ValueError("trajectory ended at the basepoint; no forward proxy")
    xi = tuple(word)
    xi_len = len(xi)
    inv_word = deque()
    gaps = np.empty(n_max)
    for k, lam in enumerate(letters):
        front = inv[lam]
        if inv_word and inv_word[0] == inv[front]:
            inv_word.popleft()
        else:
            inv_word.appendleft(front)
        # common prefix of the inverse word with xi+ (bounded, so O(1)-ish)
        c = 0
        for v in inv_word:
            if c >= xi_len or xi[c] != v:
                break
            c += 1
        s = len(inv_word)  # = d(Z_k o, o)
        gaps[k] = abs((s - 2.0 * c) - s)
    return _gap_report(gaps, n_max)


def _gap_report(gaps: np.ndarray, n_max: int) -> GapReport:
    ns = np.arange(1, n_max + 1, dtype=float)
    slope = float(np.polyfit(ns, gaps, 1)[0]) if n_max > 1 else 0.0
    return GapReport(n_max, float(gaps.max()), slope, gaps)


# ---------------------------------------------------------------------------
# geometric estimates monitor
# ---------------------------------------------------------------------------


@dataclass
class MonitorReport:
    n_max: int
    eps: float
    L: int
    lambda_hat: float
    ok1: np.ndarray   # (Z_n x | Z_n o)_o >= (lambda - eps) n
    ok2: np.ndarray   # (y | Z_n o)_o <= eps n
    ok3: np.ndarray   # (y | Z_n x)_o <= eps n + (2L + 1)
    first_failures: tuple
    pass_rates_from: int = 100

    def pass_rate(self, which: int, n_from: int | None = None) -> float:
        arr = (self.ok1, self.ok2, self.ok3)[which - 1]
        n_from = self.pass_rates_from if n_from is None else n_from
        tail = arr[n_from - 1:]
        return float(tail.mean()) if tail.size else math.nan

    def summary(self) -> dict:
        return {
            "n_max": self.n_max, "eps": self.eps, "L": self.L,
            "lambda_hat": self.lambda_hat,
            "first_failures": list(self.first_failures),
            "pass_rates": [self.pass_rate(i) for i in (1, 2, 3)],
        }


def geometric_estimates_monitor(cfg: WalkConfig, trial: int, x, y, eps: float,
                                L: int, lambda_hat: float,
                                n_max: int | None = None) -> MonitorReport:
    """Per-step truth values of the three walk estimates, for x ~ nu and
    y ~ nu-check boundary proxies."""
    if not 0.0 < eps < lambda_hat / 2.0:
        raise ValueError("eps must lie in (0, lambda_hat / 2)")
    n_max = cfg.n if n_max is None else int(n_max)
    space = cfg.space
    if isinstance(space, RegularTree) and _tree_letter_table(cfg) is not None:
        p1, p2, p3 = _tree_monitor_products(cfg, trial, x, y, n_max)
    else:
        p1, p2, p3 = _generic_monitor_products(cfg, trial, x, y, n_max)
    ns = np.arange(1, n_max + 1, dtype=float)
    ok1 = p1 >= (lambda_hat - eps) * ns
    ok2 = p2 <= eps * ns
    ok3 = p3 <= eps * ns + (2 * L + 1)
    firsts = tuple(int(np.argmin(arr) + 1) if not arr.all() else 0
                   for arr in (ok1, ok2, ok3))
    return MonitorReport(n_max, eps, L, lambda_hat, ok1, ok2, ok3, firsts)


def _tree_monitor_products(cfg, trial, x: TreeBoundary, y: TreeBoundary, n_max):
    """Exact prefix arithmetic for the three Gromov products on trees.

    With w_n the reduced word of Z_n: the concatenation w_n * x cancels
    k_n letters at the junction, so (Z_n x | Z_n o)_o = |w_n| - k_n;
    (y | Z_n o)_o is the common prefix of w_n with y; and (y | Z_n x)_o is
    the common prefix of y with the reduced word of w_n * x.
    """
    space: RegularTree = cfg.space
    alpha = space.alphabet
    inv = alpha.inv
    table = _tree_letter_table(cfg)
    idx = cfg.increments(trial, n_max)
    word = []
    p1 = np.empty(n_max)
    p2 = np.empty(n_max)
    p3 = np.empty(n_max)
    from .geometry.tree import BoundaryDepthError
    for k, j in enumerate(idx):
        lam = int(table[j])
        if word and word[-1] == inv[lam]:
            word.pop()
        else:
            word.append(lam)
        s = len(word)
        # cancellation depth of x's head against w_n's tail
        kc = 0
        try:
            while kc < s and x.letter(kc) == inv[word[s - 1 - kc]]:
                kc += 1
        except BoundaryDepthError:
            pass
        p1[k] = s - kc
        # common prefix of w_n with y
        c = 0
        try:
            while c < s and y.letter(c) == word[c]:
                c += 1
        except BoundaryDepthError:
            pass
        p2[k] = c
        # common prefix of y with reduce(w_n x): first s-kc letters come from
        # w_n, the rest from x shifted by kc
        c3 = 0
        head = s - kc
        try:
            while c3 < head and y.letter(c3) == word[c3]:
                c3 += 1
            if c3 == head:
                while x.letter(kc + c3 - head) == y.letter(c3):
                    c3 += 1
        except BoundaryDepthError:
            pass
        p3[k] = c3
    return p1, p2, p3


def _generic_monitor_products(cfg, trial, x, y, n_max):
    space = cfg.space
    o = cfg.basepoint
    idx = cfg.increments(trial, n_max)
    z = identity_of(space)
    p1 = np.empty(n_max)
    p2 = np.empty(n_max)
    p3 = np.empty(n_max)
    for k, j in enumerate(idx):
        z = z.compose(cfg.generators[j])
        zo = z.act(o)
        zx = z.act_boundary(x)
        p1[k] = space.mixed_gromov_product(zo, zx, o)
        p2[k] = space.mixed_gromov_product(zo, y, o)
        p3[k] = space.gromov_product_boundary(y, zx, o)
    return p1, p2, p3
