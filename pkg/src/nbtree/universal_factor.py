"""Per-vertex encoding of a labeled ball, and path reconstruction from codes.

A vertex code stores, level by level, the sorted label blocks of the
rooted view around the vertex: own label, the sorted labels of all d
neighbors, then per neighbor (taken in sorted order) the sorted labels of
its d-1 outward neighbors, and so on to depth D.  Sorting erases the
internal child order, so the code depends only on the isomorphism type
of the labeled rooted ball.

When all labels are distinct, the codes of two vertices at distance
n <= D+1 determine the labels along the connecting path: the radius-j
sphere of one code and the radius-(n-j) sphere of the other intersect in
exactly one label, the j-th path vertex's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import LabelCollisionError, ReconstructionError
from .factor_engine import LabelConfig, sample_iid
from .tree_core import TreeBall, distances_from, path_vertices, vertex_distance


@dataclass(frozen=True)
class VertexCode:
    """Sorted-block encoding of the depth-D labeled view around one vertex.

    blocks[j] is a tuple of sorted label blocks at level j (one block per
    level-(j-1) parent, parents in code order); spheres[j] is the sorted
    multiset of all level-j labels.  The center id is carried for test
    convenience only and is not part of the comparable payload.
    """

    center: int
    depth: int
    blocks: tuple[tuple[tuple[float, ...], ...], ...]
    spheres: tuple[tuple[float, ...], ...]


def encode_vertex(config: LabelConfig, v: int, depth: int) -> VertexCode:
    """Encode the depth-D view around v; labels in the view must be distinct."""
    ball = config.ball
    ball._check_vertex(v)
    if not config.domain.kind in ("uniform", "centered_uniform"):
        raise ValueError(
            f"encoding needs continuous labels, got {config.domain.tag()}"
        )
    if int(ball.depth[v]) + depth > ball.radius:
        raise ValueError(
            f"depth-{depth} view around vertex {v} exits the radius-{ball.radius} ball"
        )
    labels = config.labels

    blocks: list[tuple[tuple[float, ...], ...]] = [((float(labels[v]),),)]
    spheres: list[tuple[float, ...]] = [(float(labels[v]),)]
    seen: set[float] = {float(labels[v])}
    order = [(v, -1)]  # (vertex, neighbor it was reached from)
    for _ in range(depth):
        level_blocks: list[tuple[float, ...]] = []
        nxt: list[tuple[int, int]] = []
        level_labels: list[float] = []
        for w, frm in order:
            outward = [int(u) for u in ball.neighbors(w) if int(u) != frm]
            outward.sort(key=lambda u: float(labels[u]))
            block = tuple(float(labels[u]) for u in outward)
            level_blocks.append(block)
            level_labels.extend(block)
            nxt.extend((u, w) for u in outward)
        for x in level_labels:
            if x in seen:
                raise LabelCollisionError(
                    f"duplicate label {x!r} in the depth-{depth} view around {v}"
                )
            seen.add(x)
        blocks.append(tuple(level_blocks))
        spheres.append(tuple(sorted(level_labels)))
        order = nxt
    return VertexCode(v, depth, tuple(blocks), tuple(spheres))


def _sorted_intersection(a: tuple[float, ...], b: tuple[float, ...]) -> list[float]:
    out: list[float] = []
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] < b[j]:
            i += 1
        elif a[i] > b[j]:
            j += 1
        else:
            out.append(a[i])
            i += 1
            j += 1
    return out


def reconstruct_path(code_u: VertexCode, code_v: VertexCode, n: int) -> list[float]:
    """Labels of the n-1 interior vertices of the u-v path, in order from u.

    Requires dist(u, v) = n with 1 <= n <= D+1 for both codes.  Position j
    is the unique label shared by the radius-j sphere of code_u and the
    radius-(n-j) sphere of code_v.
    """
    if n < 1:
        raise ValueError("path length must be >= 1")
    if n - 1 > code_u.depth or n - 1 > code_v.depth:
        raise ValueError(
            f"path length {n} needs code depth >= {n - 1} on both sides"
        )
    labels: list[float] = []
    for j in range(1, n):
        common = _sorted_intersection(code_u.spheres[j], code_v.spheres[n - j])
        if len(common) != 1:
            raise ReconstructionError(
                f"expected exactly one shared label at position {j}, found "
                f"{len(common)}; the codes do not belong to vertices at distance {n}"
            )
        labels.append(common[0])
    return labels


def sphere_overlap_count(ball: TreeBall, u: int, v: int, j: int) -> int:
    """|sphere_j(u) ∩ sphere_{n-j}(v)| as vertex sets, n = dist(u, v).

    Label-free structural counterpart of the unique-common-label step;
    equals 1 for every 0 < j < n.
    """
    n = vertex_distance(ball, u, v)
    du = distances_from(ball, u)
    dv = distances_from(ball, v)
    return int(np.count_nonzero((du == j) & (dv == n - j)))


@dataclass(frozen=True)
class RoundtripResult:
    trials: int
    successes: int
    collisions: int

    def to_json_dict(self) -> dict:
        return {"trials": self.trials, "successes": self.successes,
                "collisions": self.collisions}


def roundtrip_check(ball: TreeBall, depth: int, trials: int, seed: int
                    ) -> RoundtripResult:
    """Encode random interior vertex pairs, reconstruct, compare to ground truth.

    Pairs are drawn at distances 1..D+1 with both views interior.  Every
    trial either succeeds exactly, fails (counted, not raised), or hits a
    label collision (counted separately).  The contract for continuous
    labels is successes == trials with zero collisions.
    """
    min_radius = depth + (depth + 1 + 1) // 2 + 1
    if ball.radius < min_radius:
        raise ValueError(
            f"radius {ball.radius} too small for depth {depth}: need >= {min_radius} "
            f"so random interior pairs exist at every distance up to {depth + 1}"
        )
    config = sample_iid(ball, "uniform", seed)
    eligible = np.flatnonzero(ball.depth <= ball.radius - depth)
    successes = 0
    collisions = 0
    for t in range(trials):
        u, v, n = _draw_pair(ball, eligible, depth, seed, t)
        try:
            code_u = encode_vertex(config, u, depth)
            code_v = encode_vertex(config, v, depth)
            got = reconstruct_path(code_u, code_v, n)
        except LabelCollisionError:
            collisions += 1
            continue
        except ReconstructionError:
            continue
        truth = [float(config.labels[w]) for w in path_vertices(ball, u, v)[1:-1]]
        if got == truth:
            successes += 1
    return RoundtripResult(trials, successes, collisions)


def _draw_pair(ball: TreeBall, eligible: np.ndarray, depth: int,
               seed: int, trial: int) -> tuple[int, int, int]:
    """Deterministic interior pair at distance 1..D+1 for one trial."""
    base = np.uint64(rng.words(seed ^ 0x5EED, np.array([trial]))[0])
    for attempt in range(256):
        sub = int(base) + attempt * 1_000_003
        u = int(eligible[int(rng.randint(sub, 0, len(eligible))[0])])
        n = 1 + int(rng.randint(sub, 1, depth + 1)[0])
        v = u
        prev = -1
        ok = True
        for step in range(n):
            nbrs = [int(x) for x in ball.neighbors(v) if int(x) != prev]
            if not nbrs:
                ok = False
                break
            prev, v = v, nbrs[int(rng.randint(sub, 2 + step, len(nbrs))[0])]
        if ok and int(ball.depth[v]) + depth <= ball.radius:
            return u, v, n
    raise RuntimeError("could not draw an interior pair; ball too small")
