"""Exact and Monte Carlo correlations of local rules, plus identity checks.

Two independent computation routes coexist deliberately:

* an exact route that enumerates every labeling of the (small) union of
  rule supports, with per-site value tables so the enumeration itself is
  vectorized, and
* a Monte Carlo route with counter-based sampling, fixed-size chunks and
  a fixed reduction order, so estimates are byte-stable under any thread
  count.

Exact identities (the polarization identity and its consequence for
exchangeable pairs) are evaluated in rational arithmetic: float inputs
are rationals, so an identity that holds algebraically yields residual
exactly zero.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import rng
from ._exact import root_abs_leq, root_sign
from .errors import CapExceededError, NonExchangeableError
from .factor_engine import (
    BlockRule,
    EdgeRule,
    LinearRule,
    Levels,
    parse_domain,
    subtree_levels,
    symmetrize_rule,
    vertex_ball_levels,
)
from .tree_core import TreeBall, successors

#: largest number of configurations the exact route will enumerate
ENUMERATION_CAP = 4_194_304

#: largest per-site value table the exact route will build
TABLE_CAP = 262_144

_Z95 = 1.959963984540054

_SUM_CHUNK = 65536


def resolve_threads(threads: int | None = None) -> int:
    """Thread count: explicit argument, then NBTREE_THREADS, then cpu count."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("NBTREE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def compensated_sum(values: np.ndarray) -> float:
    """Fixed-chunk pairwise partial sums combined exactly with math.fsum.

    Chunk boundaries do not depend on thread count or array provenance,
    so the result is reproducible for any evaluation order upstream.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size <= _SUM_CHUNK:
        return math.fsum(values.tolist())
    partials = [float(np.sum(values[i:i + _SUM_CHUNK]))
                for i in range(0, values.size, _SUM_CHUNK)]
    return math.fsum(partials)


# ---------------------------------------------------------------------------
# Monte Carlo route
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrEstimate:
    """Pearson correlation estimate with Fisher-transform error bars."""

    estimate: float
    n_samples: int
    stderr: float
    ci_low: float
    ci_high: float
    seed: int
    degenerate: bool = False


def monte_carlo_corr(pair_sampler: Callable[[int, np.ndarray], tuple],
                     n_samples: int, seed: int,
                     chunk_size: int = 4096,
                     threads: int | None = None) -> CorrEstimate:
    """Pearson correlation of pairs drawn by a deterministic sampler.

    pair_sampler(seed, indices) must return two float arrays, one pair
    per index, as a pure function of (seed, index).  Sampling is chunked
    at a fixed size and chunk moments are reduced in index order, so the
    estimate depends only on (seed, n_samples, chunk_size).
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    starts = list(range(0, n_samples, chunk_size))

    def chunk_moments(lo: int) -> tuple[float, float, float, float, float]:
        idx = np.arange(lo, min(lo + chunk_size, n_samples), dtype=np.int64)
        a, b = pair_sampler(seed, idx)
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != idx.shape or b.shape != idx.shape:
            raise ValueError("pair_sampler must return one (a, b) pair per index")
        return (float(a.sum()), float(b.sum()), float((a * a).sum()),
                float((b * b).sum()), float((a * b).sum()))

    n_workers = resolve_threads(threads)
    if n_workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            per_chunk = list(pool.map(chunk_moments, starts))
    else:
        per_chunk = [chunk_moments(lo) for lo in starts]

    sa, sb, saa, sbb, sab = (math.fsum(col) for col in zip(*per_chunk))
    n = float(n_samples)
    var_a = saa / n - (sa / n) ** 2
    var_b = sbb / n - (sb / n) ** 2
    cov = sab / n - (sa / n) * (sb / n)

    if var_a <= 0.0 or var_b <= 0.0:
        return CorrEstimate(0.0, n_samples, 0.0, 0.0, 0.0, seed, degenerate=True)

    r = cov / math.sqrt(var_a * var_b)
    r = max(-1.0, min(1.0, r))
    se_z = 1.0 / math.sqrt(n - 3.0)
    r_clip = max(-1.0 + 1e-15, min(1.0 - 1e-15, r))
    z = math.atanh(r_clip)
    # widen to the estimate itself so |r| = 1 stays inside its interval
    ci_low = min(math.tanh(z - _Z95 * se_z), r)
    ci_high = max(math.tanh(z + _Z95 * se_z), r)
    stderr = (1.0 - r * r) * se_z
    return CorrEstimate(r, n_samples, stderr, ci_low, ci_high, seed)


# ---------------------------------------------------------------------------
# exact enumeration route
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Site:
    """One scalar observable: a function of the labels at fixed vertices."""

    local_ids: np.ndarray  # vertex ids the value depends on, in evaluation order
    func: Callable[[np.ndarray], float]  # maps labels (in local_ids order) to a real


def _split(flat: np.ndarray, sizes: Sequence[int]) -> Levels:
    out = []
    pos = 0
    for s in sizes:
        out.append(flat[pos:pos + s])
        pos += s
    return tuple(out)


def rule_site(ball: TreeBall, rule, at) -> Site:
    """Site for a block/linear rule at a vertex, or an edge rule at an edge."""
    if isinstance(rule, (BlockRule, LinearRule)):
        levels = vertex_ball_levels(ball, at, rule.radius)
    elif isinstance(rule, EdgeRule):
        levels = subtree_levels(ball, at, rule.depth)
    else:
        raise TypeError(f"no site for rule type {type(rule).__name__}")
    sizes = [len(lv) for lv in levels]
    flat_ids = np.concatenate(levels)

    if isinstance(rule, LinearRule):
        profile = rule.profile

        def func(flat: np.ndarray) -> float:
            lv = _split(flat, sizes)
            return math.fsum(a * float(x.sum()) for a, x in zip(profile, lv))
    else:
        inner = rule.func

        def func(flat: np.ndarray) -> float:
            return float(inner(_split(flat, sizes)))

    return Site(flat_ids, func)


def composite_edge_site(ball: TreeBall, e: int, view_rule: EdgeRule,
                        process_rule: BlockRule | None) -> Site:
    """Site for a subtree-view rule applied to a (possibly factored) process.

    With a process rule g, the observable is view_rule evaluated on the
    g-values of the subtree vertices, so the site's label support is the
    union of the g-supports.
    """
    view_levels = subtree_levels(ball, e, view_rule.depth)
    if process_rule is None:
        return rule_site(ball, view_rule, e)

    view_vertices = np.concatenate(view_levels)
    view_sizes = [len(lv) for lv in view_levels]
    per_vertex_levels = [vertex_ball_levels(ball, int(w), process_rule.radius)
                         for w in view_vertices]
    local_ids = np.unique(np.concatenate(
        [np.concatenate(lvls) for lvls in per_vertex_levels]))
    index_of = {int(v): i for i, v in enumerate(local_ids)}
    maps = []
    for lvls in per_vertex_levels:
        maps.append(([np.array([index_of[int(v)] for v in lv], dtype=np.int64)
                      for lv in lvls]))
    g = process_rule.func
    f = view_rule.func

    def func(flat: np.ndarray) -> float:
        xs = np.array([g(tuple(flat[pos] for pos in m)) for m in maps])
        return float(f(_split(xs, view_sizes)))

    return Site(local_ids, func)


def _site_values(ball: TreeBall, domain, sites: Sequence[Site]
                 ) -> tuple[np.ndarray, int]:
    """Values of every site under every labeling of the union support.

    Configurations are indexed in odometer order over the sorted support;
    support position p holds digit (cfg // A^p) % A.  Per-site tables keep
    the Python-level rule evaluations down to A^|local support| calls.
    """
    domain = parse_domain(domain)
    if not domain.is_discrete:
        raise ValueError(f"exact enumeration needs a discrete domain, got {domain.tag()}")
    values = domain.values()
    a_size = len(values)

    support = np.unique(np.concatenate([s.local_ids for s in sites]))
    n_cfg = a_size ** len(support)
    if n_cfg > ENUMERATION_CAP:
        raise CapExceededError(
            f"{a_size}^{len(support)} = {n_cfg} configurations exceed the "
            f"enumeration cap {ENUMERATION_CAP}"
        )
    pos_of = {int(v): p for p, v in enumerate(support)}
    cfg = np.arange(n_cfg, dtype=np.int64)

    out = np.empty((len(sites), n_cfg), dtype=np.float64)
    for row, site in enumerate(sites):
        loc = len(site.local_ids)
        n_local = a_size ** loc
        if n_local > TABLE_CAP:
            raise CapExceededError(
                f"site table {a_size}^{loc} = {n_local} exceeds cap {TABLE_CAP}"
            )
        # table over local configurations, local position j least significant
        local_cfg = np.arange(n_local, dtype=np.int64)
        digits = (local_cfg[:, None] // a_size ** np.arange(loc, dtype=np.int64)[None, :]) % a_size
        labels = values[digits]
        table = np.array([site.func(labels[i]) for i in range(n_local)])
        # index of each global configuration in the local table
        local_idx = np.zeros(n_cfg, dtype=np.int64)
        for j, v in enumerate(site.local_ids.tolist()):
            p = pos_of[int(v)]
            local_idx += ((cfg // a_size ** p) % a_size) * a_size ** j
        out[row] = table[local_idx]
    return out, n_cfg


@dataclass(frozen=True)
class ExactCorrResult:
    """Exact covariance/correlation from full enumeration."""

    cov: float
    var1: float
    var2: float
    corr: float
    n_configs: int


def _corr_from_values(h1v: np.ndarray, h2v: np.ndarray, n_cfg: int) -> ExactCorrResult:
    n = float(n_cfg)
    e1 = compensated_sum(h1v) / n
    e2 = compensated_sum(h2v) / n
    e11 = compensated_sum(h1v * h1v) / n
    e22 = compensated_sum(h2v * h2v) / n
    e12 = compensated_sum(h1v * h2v) / n
    cov = e12 - e1 * e2
    var1 = e11 - e1 * e1
    var2 = e22 - e2 * e2
    # zero variance means correlation 0 by convention
    corr = cov / math.sqrt(var1 * var2) if var1 > 0 and var2 > 0 else 0.0
    return ExactCorrResult(cov, var1, var2, corr, n_cfg)


def h_identity(values: np.ndarray) -> np.ndarray:
    if values.shape[0] != 1:
        raise ValueError("identity aggregator needs a single-site region")
    return values[0]


def h_sum(values: np.ndarray) -> np.ndarray:
    return values.sum(axis=0)


def h_product(values: np.ndarray) -> np.ndarray:
    return values.prod(axis=0)


def h_parity(values: np.ndarray) -> np.ndarray:
    return values.sum(axis=0) % 2


def exact_corr_discrete(ball: TreeBall, rule, domain, region1, region2,
                        h1: Callable[[np.ndarray], np.ndarray] = None,
                        h2: Callable[[np.ndarray], np.ndarray] = None) -> ExactCorrResult:
    """Exact correlation of h1 and h2 of the rule values on two vertex regions.

    h1/h2 receive the per-site value matrix of their region, one row per
    region vertex, and must return one value per configuration; they
    default to the identity on singletons and to the sum otherwise.
    """
    region1 = [int(v) for v in region1]
    region2 = [int(v) for v in region2]
    if not region1 or not region2:
        raise ValueError("regions must be non-empty")
    h1 = h1 or (h_identity if len(region1) == 1 else h_sum)
    h2 = h2 or (h_identity if len(region2) == 1 else h_sum)
    sites = [rule_site(ball, rule, v) for v in region1 + region2]
    vals, n_cfg = _site_values(ball, domain, sites)
    h1v = np.asarray(h1(vals[:len(region1)]), dtype=np.float64)
    h2v = np.asarray(h2(vals[len(region1):]), dtype=np.float64)
    return _corr_from_values(h1v, h2v, n_cfg)


def exact_edge_corr(ball: TreeBall, rule: EdgeRule, domain, e1: int, e2: int
                    ) -> ExactCorrResult:
    """Exact correlation of the edge-process values at two directed edges."""
    sites = [rule_site(ball, rule, e1), rule_site(ball, rule, e2)]
    vals, n_cfg = _site_values(ball, domain, sites)
    return _corr_from_values(vals[0], vals[1], n_cfg)


# ---------------------------------------------------------------------------
# symmetrization checks (orbit averaging preserves mean and cross-moments)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetrizationCheck:
    """Exact moment comparisons between a view rule and its orbit average."""

    mean_residual_1: float
    mean_residual_2: float
    second_moment_gap_1: float   # E f^2 - E fbar^2, must be >= 0
    second_moment_gap_2: float
    cross_moment_residual: float
    variance_gap_1: float        # var f - var fbar, must be >= 0


def symmetrization_moment_check(ball: TreeBall, e1: int, e2: int,
                                view_rule: EdgeRule, domain,
                                process_rule: BlockRule | None = None
                                ) -> SymmetrizationCheck:
    """Compare a subtree-view rule f with its orbit average on an edge pair.

    The pair (view at e1, view at e2) must be exchangeable and invariant
    under independent view automorphisms, which holds whenever the two
    subtrees are disjoint and the underlying process is equivariant (the
    raw i.i.d. labels or a block factor of them).
    """
    f_bar = symmetrize_rule(view_rule, ball.d)
    sites = [
        composite_edge_site(ball, e1, view_rule, process_rule),
        composite_edge_site(ball, e2, view_rule, process_rule),
        composite_edge_site(ball, e1, f_bar, process_rule),
        composite_edge_site(ball, e2, f_bar, process_rule),
    ]
    vals, n_cfg = _site_values(ball, domain, sites)
    n = float(n_cfg)
    f1, f2, b1, b2 = vals

    def mean(x):
        return compensated_sum(x) / n

    e_f1, e_f2, e_b1, e_b2 = mean(f1), mean(f2), mean(b1), mean(b2)
    e_ff = mean(f1 * f2)
    e_bb = mean(b1 * b2)
    e_f1sq, e_b1sq = mean(f1 * f1), mean(b1 * b1)
    e_f2sq, e_b2sq = mean(f2 * f2), mean(b2 * b2)
    return SymmetrizationCheck(
        mean_residual_1=abs(e_b1 - e_f1),
        mean_residual_2=abs(e_b2 - e_f2),
        second_moment_gap_1=e_f1sq - e_b1sq,
        second_moment_gap_2=e_f2sq - e_b2sq,
        cross_moment_residual=abs(e_bb - e_ff),
        variance_gap_1=(e_f1sq - e_f1 ** 2) - (e_b1sq - e_b1 ** 2),
    )


# ---------------------------------------------------------------------------
# polarization identity and its consequence for exchangeable pairs
# ---------------------------------------------------------------------------


def _as_fraction_matrix(joint) -> list[list[Fraction]]:
    arr = np.asarray(joint, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("joint must be a square matrix")
    if np.any(arr < 0):
        raise ValueError("joint probabilities must be non-negative")
    if abs(float(arr.sum()) - 1.0) > 1e-9:
        raise ValueError("joint probabilities must sum to 1")
    if not np.array_equal(arr, arr.T):
        raise NonExchangeableError("joint distribution is not swap-symmetric")
    return [[Fraction(float(x)) for x in row] for row in arr]


def _cov_tables(p: list[list[Fraction]], f: list[Fraction], g: list[Fraction]
                ) -> Fraction:
    """cov(f(X1), g(X2)) for the finite pair distribution p, exactly."""
    n = len(p)
    e_fg = sum(p[i][j] * f[i] * g[j] for i in range(n) for j in range(n))
    e_f = sum(f[i] * sum(p[i]) for i in range(n))
    e_g = sum(g[j] * sum(p[i][j] for i in range(n)) for j in range(n))
    return e_fg - e_f * e_g


@dataclass(frozen=True)
class PolarizationResult:
    residual: float
    swap_residual: float
    cross_covariance: float


def polarization_check(joint, f1, f2) -> PolarizationResult:
    """Residual of the polarization identity on an exchangeable pair.

    cov(f1(X1), f2(X2)) must equal one quarter of the difference between
    the sum-function and difference-function covariances.  Everything is
    evaluated in exact rational arithmetic, so a correct implementation
    returns residual 0.0 exactly; also reports the swap-symmetry residual
    cov(f1(X1), f2(X2)) - cov(f1(X2), f2(X1)).
    """
    p = _as_fraction_matrix(joint)
    f1 = [Fraction(float(x)) for x in np.asarray(f1, dtype=np.float64)]
    f2 = [Fraction(float(x)) for x in np.asarray(f2, dtype=np.float64)]
    if len(f1) != len(p) or len(f2) != len(p):
        raise ValueError("function tables must match the joint's size")
    s = [a + b for a, b in zip(f1, f2)]
    diff = [a - b for a, b in zip(f1, f2)]
    lhs = _cov_tables(p, f1, f2)
    rhs = (_cov_tables(p, s, s) - _cov_tables(p, diff, diff)) / 4
    swapped = _cov_tables(p, f2, f1)
    return PolarizationResult(
        residual=abs(float(lhs - rhs)),
        swap_residual=abs(float(lhs - swapped)),
        cross_covariance=float(lhs),
    )


def _var_table(p: list[list[Fraction]], f: list[Fraction], first: bool) -> Fraction:
    n = len(p)
    marg = [sum(p[i]) for i in range(n)] if first else \
           [sum(p[i][j] for i in range(n)) for j in range(n)]
    e_f = sum(m * x for m, x in zip(marg, f))
    e_ff = sum(m * x * x for m, x in zip(marg, f))
    return e_ff - e_f * e_f


def lemma_consequence_check(joint, f1, f2, alpha: float) -> bool:
    """Exchangeable-pair bound transfer, decided exactly.

    Hypothesis: the correlation of g(X1) and g(X2) is within alpha for
    g = n1 + n2 and g = n1 - n2, where n1, n2 are f1, f2 scaled to unit
    variance.  Conclusion: |corr(f1(X1), f2(X2))| <= alpha.  Returns the
    conclusion's truth when the hypothesis holds on this instance and
    True (vacuously) otherwise; a False return indicates a defect.

    Scaling by 1/sqrt(var) is irrational, so both hypothesis sides are
    carried as rational + rational*sqrt(m) with m = var1*var2 and
    compared exactly.
    """
    p = _as_fraction_matrix(joint)
    f1 = [Fraction(float(x)) for x in np.asarray(f1, dtype=np.float64)]
    f2 = [Fraction(float(x)) for x in np.asarray(f2, dtype=np.float64)]
    alpha_f = Fraction(float(alpha))

    var1 = _var_table(p, f1, True)
    var2 = _var_table(p, f2, False)
    if var1 == 0 or var2 == 0:
        return True  # correlation 0 by convention

    c11 = _cov_tables(p, f1, f1)
    c22 = _cov_tables(p, f2, f2)
    c12 = _cov_tables(p, f1, f2)
    c21 = _cov_tables(p, f2, f1)
    w12 = _cov_tables_same(p, f1, f2)
    m = var1 * var2

    # For s = f1/s1 + f2/s2 (unit-variance scalings), multiplying through by
    # m = var1*var2 gives  m*cov_s = var2*c11 + var1*c22 + (c12+c21)*sqrt(m)
    # and m*var_s = 2m + 2*w12*sqrt(m); the difference g flips the radical term.
    def piece_ok(sign: int) -> bool:
        cov_a = var2 * c11 + var1 * c22
        cov_b = sign * (c12 + c21)
        var_a = 2 * m
        var_b = sign * 2 * w12
        if root_sign(var_a, var_b, m) == 0:
            return True  # degenerate combination: correlation 0 by convention
        return root_abs_leq(cov_a, cov_b, alpha_f * var_a, alpha_f * var_b, m)

    hypothesis = piece_ok(+1) and piece_ok(-1)
    if not hypothesis:
        return True  # chain not applicable on this instance
    # conclusion: c12^2 <= alpha^2 * var1 * var2
    return c12 * c12 <= alpha_f * alpha_f * m


def _cov_tables_same(p: list[list[Fraction]], f: list[Fraction],
                     g: list[Fraction]) -> Fraction:
    """cov(f(X1), g(X1)): both functions of the first coordinate."""
    n = len(p)
    marg = [sum(p[i]) for i in range(n)]
    e_fg = sum(m * a * b for m, a, b in zip(marg, f, g))
    e_f = sum(m * a for m, a in zip(marg, f))
    e_g = sum(m * b for m, b in zip(marg, g))
    return e_fg - e_f * e_g


def random_exchangeable_joint(n_points: int, seed: int) -> np.ndarray:
    """Random swap-symmetric joint distribution with exactly representable entries.

    Entries are built from small integers over a power-of-two total, so
    symmetrization and normalization are exact in floating point.
    """
    w = rng.words(seed, np.arange(n_points * n_points))
    raw = (w >> np.uint64(40)).astype(np.float64).reshape(n_points, n_points) + 1.0
    sym = (raw + raw.T)  # integer-valued, symmetric
    return sym / float(sym.sum())


# ---------------------------------------------------------------------------
# edge-process homogeneity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomogeneityResult:
    """Spread of E[Y_e1 * Y_e2] over congruent interior edge pairs."""

    max_deviation: float
    common_value: float
    n_sources: int
    n_pairs: int
    pairs_per_source: int
    source_counts_ok: bool


def edge_homogeneity_check(ball: TreeBall, rule: EdgeRule, k: int, domain
                           ) -> HomogeneityResult:
    """Exact E[Y_e1 Y_e2] over all interior pairs e1 ->_k e2.

    A source edge is tested when its k-step cone is complete inside the
    ball and every subtree view involved is interior.  Invariance of the
    underlying process makes the expectation identical across pairs; the
    maximum pairwise deviation is returned.  Also verifies that each
    tested source reaches exactly (d-1)^k targets.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if not rule.symmetric:
        raise ValueError("homogeneity is only meaningful for symmetric edge rules")
    q = ball.d - 1
    full = q ** k

    def subtree_ok(e: int) -> bool:
        return int(ball.depth[ball.edge_tail(e)]) + rule.depth <= ball.radius

    moments: list[float] = []
    n_sources = 0
    counts_ok = True
    per_source_sums: list[tuple[int, float]] = []
    for e1 in range(ball.n_edges):
        if not subtree_ok(e1):
            continue
        frontier = np.array([e1], dtype=np.int64)
        for _ in range(k):
            if frontier.size == 0:
                break
            frontier = np.concatenate([successors(ball, int(x)) for x in frontier])
        if frontier.size != full:
            continue
        if not all(subtree_ok(int(e2)) for e2 in frontier):
            continue
        n_sources += 1
        vals = []
        for e2 in frontier.tolist():
            sites = [rule_site(ball, rule, e1), rule_site(ball, rule, int(e2))]
            sv, n_cfg = _site_values(ball, domain, sites)
            vals.append(compensated_sum(sv[0] * sv[1]) / float(n_cfg))
        moments.extend(vals)
        per_source_sums.append((len(vals), math.fsum(vals)))

    if not moments:
        raise ValueError("no interior pair at this k; enlarge the ball")
    common = moments[0]
    max_dev = max(moments) - min(moments)
    for cnt, total in per_source_sums:
        if cnt != full:
            counts_ok = False
        if abs(total - full * common) > 1e-9 * max(1.0, abs(common) * full):
            counts_ok = False
    return HomogeneityResult(
        max_deviation=max_dev,
        common_value=common,
        n_sources=n_sources,
        n_pairs=len(moments),
        pairs_per_source=full,
        source_counts_ok=counts_ok,
    )


# ---------------------------------------------------------------------------
# bound verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    """PASS/FAIL of |value| <= bound + 3*stderr, with the margin left over."""

    passed: bool
    value: float
    bound: float
    stderr: float
    margin: float

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"


def verify_bound(value: float, bound: float, stderr: float = 0.0) -> Verdict:
    """Check an exact value (stderr 0) or an estimate (3 sigma slack) against a bound."""
    if bound < 0:
        raise ValueError("bound must be non-negative")
    slack = bound + 3.0 * stderr
    margin = slack - abs(value)
    return Verdict(margin >= 0.0, float(value), float(bound), float(stderr), margin)
