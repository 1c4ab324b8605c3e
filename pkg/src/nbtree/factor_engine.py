"""Local rules over labeled tree balls: sampling, evaluation, symmetrization.

Labels are attached to vertices by a counter-based generator, so a config
is a pure function of (seed, vertex id).  Rules see their input as a
*rooted local view*: a tuple of per-level label arrays in canonical
(breadth-first id) order.  Two view shapes occur:

* vertex view: level 1 has d entries (all neighbors), deeper levels
  branch by d-1;
* subtree view behind a directed edge: level 1 already branches by d-1.

Symmetrization averages a rule over all recursive child permutations of
its view, which preserves means and cross-moments while contracting
variance.  The averaging is exact, so it is capped at depth 2 and d <= 4.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace
from itertools import permutations, product
from typing import Callable

import numpy as np

from . import rng
from .errors import CapExceededError, InteriorityError
from .tree_core import TreeBall, build_ball, distances_from, vertices_at_distance

#: cap on the number of terms in an exact orbit average
ORBIT_CAP = 1_000_000

Levels = tuple[np.ndarray, ...]


# ---------------------------------------------------------------------------
# label domains and configs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelDomain:
    """Distribution of one i.i.d. vertex label.

    kind is one of "uniform" ([0,1) continuous), "centered_uniform"
    ([-sqrt(3), sqrt(3)], mean 0 variance 1), "rademacher" (+-1), or
    "alphabet" (uniform on {0..alphabet_size-1}).
    """

    kind: str
    alphabet_size: int | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "centered_uniform", "rademacher", "alphabet"):
            raise ValueError(f"unknown label domain kind {self.kind!r}")
        if self.kind == "alphabet":
            if self.alphabet_size is None or self.alphabet_size < 2:
                raise ValueError("alphabet domain needs alphabet_size >= 2")
        elif self.alphabet_size is not None:
            raise ValueError(f"{self.kind} domain takes no alphabet size")

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("rademacher", "alphabet")

    @property
    def is_centered(self) -> bool:
        return self.kind in ("rademacher", "centered_uniform")

    def values(self) -> np.ndarray:
        """Enumerable value set for discrete domains."""
        if self.kind == "rademacher":
            return np.array([-1.0, 1.0])
        if self.kind == "alphabet":
            return np.arange(self.alphabet_size, dtype=np.float64)
        raise ValueError(f"{self.kind} domain is not enumerable")

    def tag(self) -> str:
        if self.kind == "alphabet":
            return f"alphabet:{self.alphabet_size}"
        return self.kind


def parse_domain(tag) -> LabelDomain:
    """Accept a LabelDomain or a string tag like "uniform" / "alphabet:2"."""
    if isinstance(tag, LabelDomain):
        return tag
    if not isinstance(tag, str):
        raise ValueError(f"cannot parse label domain from {tag!r}")
    if tag.startswith("alphabet:"):
        return LabelDomain("alphabet", int(tag.split(":", 1)[1]))
    return LabelDomain(tag)


@dataclass(frozen=True, eq=False)
class LabelConfig:
    """One labeling of a ball; labels[v] is the label of vertex v."""

    ball: TreeBall
    domain: LabelDomain
    labels: np.ndarray
    seed: int | None = None


def sample_iid(ball: TreeBall, domain, seed: int) -> LabelConfig:
    """Draw i.i.d. labels; vertex v's label depends only on (seed, v)."""
    domain = parse_domain(domain)
    w = rng.words(seed, np.arange(ball.n))
    if domain.kind == "uniform":
        labels = rng.to_unit(w)
    elif domain.kind == "centered_uniform":
        labels = rng.to_centered_uniform(w)
    elif domain.kind == "rademacher":
        labels = rng.to_rademacher(w)
    else:
        labels = rng.to_alphabet(w, domain.alphabet_size).astype(np.float64)
    labels.setflags(write=False)
    return LabelConfig(ball, domain, labels, seed)


# ---------------------------------------------------------------------------
# local views
# ---------------------------------------------------------------------------


def _grow_levels(ball: TreeBall, start: int, avoid: int, depth: int) -> list[np.ndarray]:
    """Level-grouped BFS vertex ids from `start`, never stepping onto `avoid`.

    Children of each level vertex are grouped consecutively in the next
    level, parents in level order, siblings in ascending id order.  Raises
    InteriorityError if the walk would need neighbors the ball cut off.
    """
    levels = [np.array([start], dtype=np.int64)]
    came_from = [avoid]
    for _ in range(depth):
        nxt: list[int] = []
        nxt_from: list[int] = []
        for w, frm in zip(levels[-1].tolist(), came_from):
            if ball.depth[w] == ball.radius:
                raise InteriorityError(
                    f"view around vertex {start} reaches the ball boundary"
                )
            for u in ball.neighbors(w).tolist():
                if u != frm:
                    nxt.append(u)
                    nxt_from.append(w)
        levels.append(np.array(nxt, dtype=np.int64))
        came_from = nxt_from
    return levels


def vertex_ball_levels(ball: TreeBall, v: int, r: int) -> Levels:
    """Vertex ids of the radius-r view around v, one array per distance level."""
    ball._check_vertex(v)
    if int(ball.depth[v]) + r > ball.radius:
        raise InteriorityError(
            f"radius-{r} view around vertex {v} (depth {int(ball.depth[v])}) "
            f"exits the radius-{ball.radius} ball"
        )
    return tuple(_grow_levels(ball, v, -1, r))


def subtree_levels(ball: TreeBall, e: int, depth: int) -> Levels:
    """Vertex ids of the depth-D view of the subtree behind directed edge e.

    The subtree behind e = (u, w) consists of the vertices closer to u
    than to w; its root u has d-1 outward neighbors.
    """
    ball._check_edge(e)
    u = ball.edge_tail(e)
    w = ball.edge_head(e)
    return tuple(_grow_levels(ball, u, w, depth))


def level_labels(config: LabelConfig, levels: Levels) -> Levels:
    return tuple(config.labels[ids] for ids in levels)


# ---------------------------------------------------------------------------
# rule descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockRule:
    """Local rule of a vertex process; func maps label levels to a real."""

    radius: int
    func: Callable[[Levels], float]
    symmetric: bool = False
    name: str = ""
    domain: str | None = None


@dataclass(frozen=True)
class LinearRule:
    """X_v = sum over the radius-r view of profile[dist] * label."""

    radius: int
    profile: tuple[float, ...]

    def __post_init__(self):
        if len(self.profile) != self.radius + 1:
            raise ValueError("profile needs one coefficient per distance 0..r")


@dataclass(frozen=True)
class EdgeRule:
    """Rule on the depth-D subtree view behind a directed edge."""

    depth: int
    func: Callable[[Levels], float]
    symmetric: bool = False
    name: str = ""


def evaluate_block_rule(rule: BlockRule, config: LabelConfig, v: int) -> float:
    """Evaluate a block rule at vertex v; requires the r-view to be interior."""
    if rule.domain is not None and parse_domain(rule.domain) != config.domain:
        raise ValueError(
            f"rule {rule.name!r} expects domain {rule.domain}, config has "
            f"{config.domain.tag()}"
        )
    levels = vertex_ball_levels(config.ball, v, rule.radius)
    return float(rule.func(level_labels(config, levels)))


def evaluate_linear_rule(rule: LinearRule, config: LabelConfig, v: int) -> float:
    """Evaluate a linear rule at v; the label domain must be centered."""
    if not config.domain.is_centered:
        raise ValueError(
            f"linear rules need a centered domain, got {config.domain.tag()}"
        )
    levels = vertex_ball_levels(config.ball, v, rule.radius)
    labs = level_labels(config, levels)
    return math.fsum(a * float(lv.sum()) for a, lv in zip(rule.profile, labs))


def edge_process_value(rule: EdgeRule, config: LabelConfig, e: int,
                       require_symmetric: bool = False) -> float:
    """Value of the edge process at e: the rule applied to the subtree view.

    With require_symmetric=True an asymmetric rule is rejected, since its
    value would depend on the canonical order rather than the subtree.
    """
    if require_symmetric and not rule.symmetric:
        raise ValueError(
            f"edge rule {rule.name!r} is not flagged symmetric; its value is "
            f"not well defined on the unordered subtree"
        )
    levels = subtree_levels(config.ball, e, rule.depth)
    return float(rule.func(level_labels(config, levels)))


# ---------------------------------------------------------------------------
# linear-rule covariance oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearCovariance:
    cov: float
    var: float
    corr: float


def sphere_size(d: int, i: int) -> int:
    """Number of vertices at distance i from a vertex of the infinite tree."""
    return 1 if i == 0 else d * (d - 1) ** (i - 1)


def linear_rule_covariance_exact(d: int, profile, k: int) -> LinearCovariance:
    """Exact covariance/correlation of a linear rule at two distance-k sites.

    Places the two sites in a ball just large enough that every vertex of
    the infinite tree within distance r of either site is present, then
    sums profile[dist(w,u)] * profile[dist(w,v)] over the shared view.
    Assumes centered, unit-variance labels.
    """
    profile = np.asarray(profile, dtype=np.float64)
    if profile.ndim != 1 or profile.size == 0:
        raise ValueError("profile must be a non-empty 1-d coefficient array")
    if k < 0:
        raise ValueError("distance k must be >= 0")
    r = profile.size - 1
    ball = build_ball(d, r + (k + 1) // 2)
    u, v = vertices_at_distance(ball, k)
    du = distances_from(ball, u)
    dv = distances_from(ball, v)
    mask = (du <= r) & (dv <= r)
    cov = math.fsum((profile[du[mask]] * profile[dv[mask]]).tolist())
    var = math.fsum(sphere_size(d, i) * float(a) ** 2 for i, a in enumerate(profile))
    corr = cov / var if var > 0 else 0.0
    return LinearCovariance(cov, var, corr)


# ---------------------------------------------------------------------------
# orbit averaging (symmetrization)
# ---------------------------------------------------------------------------


def _view_branching(rule, d: int) -> tuple[int, int]:
    """(depth, first-level branching) of a rule's view."""
    if isinstance(rule, BlockRule):
        return rule.radius, d
    if isinstance(rule, EdgeRule):
        return rule.depth, d - 1
    raise TypeError(f"cannot symmetrize {type(rule).__name__}")


def orbit_size(depth: int, b0: int, d: int) -> int:
    """Number of recursive child permutations of a depth-D view."""
    if depth == 0:
        return 1
    size = math.factorial(b0)
    if depth >= 2:
        size *= math.factorial(d - 1) ** b0
    return size


def _level_orbit(levels: Levels, b0: int, d: int):
    """Yield every recursive child permutation of a depth <= 2 view."""
    depth = len(levels) - 1
    if depth == 0:
        yield levels
        return
    l0, l1 = levels[0], levels[1]
    if depth == 1:
        for sigma in permutations(range(b0)):
            yield (l0, l1[list(sigma)])
        return
    l2 = levels[2]
    blocks = [l2[i * (d - 1):(i + 1) * (d - 1)] for i in range(b0)]
    child_perms = list(permutations(range(d - 1)))
    for sigma in permutations(range(b0)):
        for subs in product(child_perms, repeat=b0):
            new_l1 = l1[list(sigma)]
            new_l2 = np.concatenate(
                [blocks[sigma[i]][list(subs[i])] for i in range(b0)]
            )
            yield (l0, new_l1, new_l2)


def symmetrize_rule(rule, d: int):
    """Average a rule over all automorphisms of its rooted view.

    Works on BlockRule (vertex view) and EdgeRule (subtree view).  The
    average is exact, hence restricted to depth <= 2 and d <= 4; beyond
    that the orbit blows past ORBIT_CAP.
    """
    depth, b0 = _view_branching(rule, d)
    if depth > 2:
        raise CapExceededError(f"exact orbit average supports depth <= 2, got {depth}")
    size = orbit_size(depth, b0, d)
    if size > ORBIT_CAP:
        raise CapExceededError(f"orbit has {size} elements (cap {ORBIT_CAP})")
    inner = rule.func

    def averaged(levels: Levels) -> float:
        return math.fsum(inner(p) for p in _level_orbit(levels, b0, d)) / size

    return replace(rule, func=averaged, symmetric=True,
                   name=f"sym({rule.name})" if rule.name else "sym")


# ---------------------------------------------------------------------------
# built-in rule families
# ---------------------------------------------------------------------------


def _flat(levels: Levels) -> np.ndarray:
    return np.concatenate(levels)


def sum_rule(radius: int) -> BlockRule:
    return BlockRule(radius, lambda lv: float(_flat(lv).sum()),
                     symmetric=True, name=f"sum:r{radius}")


def parity_rule(radius: int) -> BlockRule:
    return BlockRule(radius, lambda lv: float(int(_flat(lv).sum()) % 2),
                     symmetric=True, name=f"parity:r{radius}", domain="alphabet:2")


def threshold_rule(radius: int, theta: float) -> BlockRule:
    return BlockRule(radius, lambda lv: float(_flat(lv).sum() >= theta),
                     symmetric=True, name=f"threshold:r{radius}:t{theta}")


def majority_rule(radius: int) -> BlockRule:
    def f(lv: Levels) -> float:
        s = _flat(lv).sum()
        return float(np.sign(s))
    return BlockRule(radius, f, symmetric=True, name=f"majority:r{radius}",
                     domain="rademacher")


def xor_pair_rule() -> BlockRule:
    """Parity of the center label and its first neighbor; order-sensitive."""
    return BlockRule(1, lambda lv: float(int(lv[0][0]) ^ int(lv[1][0])),
                     symmetric=False, name="xor-pair", domain="alphabet:2")


def geometric_profile(d: int, radius: int, rate: float | None = None) -> LinearRule:
    """Coefficients rate^i; rate defaults to 1/sqrt(d-1), the critical decay."""
    if rate is None:
        rate = 1.0 / math.sqrt(d - 1.0)
    return LinearRule(radius, tuple(rate ** i for i in range(radius + 1)))


def flat_profile(radius: int) -> LinearRule:
    return LinearRule(radius, (1.0,) * (radius + 1))


def delta_profile() -> LinearRule:
    return LinearRule(0, (1.0,))


def table_block_rule(radius: int, d: int, alphabet: int, seed: int) -> BlockRule:
    """Deterministic random-valued rule on an alphabet view, driven by a table."""
    def f(lv: Levels) -> float:
        key = np.concatenate(lv).astype(np.int64)
        idx = 0
        for x in key.tolist():
            idx = idx * alphabet + x
        return float(rng.to_unit(rng.words(seed, np.array([idx])))[0])
    return BlockRule(radius, f, symmetric=False,
                     name=f"table:r{radius}:s{seed}", domain=f"alphabet:{alphabet}")


def edge_tail_rule() -> EdgeRule:
    return EdgeRule(0, lambda lv: float(lv[0][0]), symmetric=True, name="edge-tail")


def edge_sum_rule(depth: int) -> EdgeRule:
    return EdgeRule(depth, lambda lv: float(_flat(lv).sum()),
                    symmetric=True, name=f"edge-sum:D{depth}")


def edge_first_child_rule() -> EdgeRule:
    """Label of the first outward neighbor; depends on the canonical order."""
    return EdgeRule(1, lambda lv: float(lv[1][0]), symmetric=False,
                    name="edge-first-child")


def edge_table_rule(depth: int, alphabet: int, seed: int) -> EdgeRule:
    def f(lv: Levels) -> float:
        key = np.concatenate(lv).astype(np.int64)
        idx = 0
        for x in key.tolist():
            idx = idx * alphabet + x
        return float(rng.to_unit(rng.words(seed, np.array([idx])))[0])
    return EdgeRule(depth, f, symmetric=False, name=f"edge-table:D{depth}:s{seed}")


def edge_geometric_rule(depth: int, rate: float) -> EdgeRule:
    """Sum of rate^level * label over the subtree view; symmetric by construction."""
    def f(lv: Levels) -> float:
        return math.fsum(rate ** j * float(lv[j].sum()) for j in range(len(lv)))
    return EdgeRule(depth, f, symmetric=True, name=f"edge-geom:D{depth}")


BLOCK_RULE_FAMILIES = {
    "sum": lambda radius=1, **kw: sum_rule(int(radius)),
    "parity": lambda radius=1, **kw: parity_rule(int(radius)),
    "threshold": lambda radius=1, theta=2.0, **kw: threshold_rule(int(radius), float(theta)),
    "majority": lambda radius=1, **kw: majority_rule(int(radius)),
    "xor-pair": lambda **kw: xor_pair_rule(),
}


# ---------------------------------------------------------------------------
# config file round-trip
# ---------------------------------------------------------------------------

_MAGIC = b"NBCF"
_KIND_CODES = {"uniform": 0, "centered_uniform": 1, "rademacher": 2, "alphabet": 3}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_HEADER = struct.Struct("<4sBBHHH4x")  # magic, version, kind, alphabet, d, R


def save_config(config: LabelConfig, path) -> None:
    """Write a config as a 16-byte header plus the raw float64 label vector."""
    header = _HEADER.pack(
        _MAGIC, 1, _KIND_CODES[config.domain.kind],
        config.domain.alphabet_size or 0, config.ball.d, config.ball.radius,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(config.labels, dtype=np.float64).tobytes())


def load_config(path, ball: TreeBall | None = None) -> LabelConfig:
    """Read a config written by save_config; rebuilds the ball if not given."""
    with open(path, "rb") as fh:
        magic, version, kind, alpha, d, radius = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC or version != 1:
            raise ValueError(f"not a config file: {path}")
        if ball is None:
            ball = build_ball(d, radius)
        elif (ball.d, ball.radius) != (d, radius):
            raise ValueError(
                f"file is for d={d}, R={radius}, got ball d={ball.d}, R={ball.radius}"
            )
        labels = np.frombuffer(fh.read(8 * ball.n), dtype=np.float64).copy()
    if len(labels) != ball.n:
        raise ValueError(f"truncated config file: {path}")
    labels.setflags(write=False)
    domain = LabelDomain(_KIND_NAMES[kind], alpha if kind == 3 else None)
    return LabelConfig(ball, domain, labels, None)
