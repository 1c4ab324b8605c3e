"""Finite truncations of the d-regular tree, stored as flat numpy arrays.

A ball of radius R around a root vertex holds every vertex of the infinite
d-regular tree within distance R.  Vertex ids are breadth-first from the
root, so the children of any vertex occupy a contiguous id range and each
directed edge is addressed by the child vertex it touches:

    away edge   2*(v-1)      parent(v) -> v
    toward edge 2*(v-1) + 1  v -> parent(v)

reverse(e) is therefore e XOR 1, and the height of either orientation is
the depth of the child vertex.  Boundary vertices (depth R) keep degree 1;
operations that need full neighborhoods check interiority explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError

#: refuse to build balls with more directed edges than this
DIRECTED_EDGE_CAP = 50_000_000


@dataclass(frozen=True)
class DirectedEdge:
    """One directed edge of a ball: id, endpoints, and height."""

    id: int
    tail: int
    head: int
    height: int


@dataclass(frozen=True, eq=False)
class TreeBall:
    """Radius-R truncation of the d-regular tree.

    Attributes
    ----------
    d           : degree of every interior vertex (>= 3)
    radius      : truncation radius R (>= 0)
    n           : number of vertices
    parent      : int64[n], parent id; -1 for the root
    depth       : int64[n], distance to the root
    child_start : int64[n], first child id (meaningless when child_count is 0)
    child_count : int64[n], d for the root, d-1 for interior vertices, 0 at depth R
    level_start : int64[R+2], level_start[j] is the first id at depth j;
                  level_start[R+1] == n
    """

    d: int
    radius: int
    n: int
    parent: np.ndarray
    depth: np.ndarray
    child_start: np.ndarray
    child_count: np.ndarray
    level_start: np.ndarray

    root = 0

    @property
    def n_edges(self) -> int:
        """Number of directed edges, 2*(n-1)."""
        return 2 * (self.n - 1)

    # ---- edge addressing -------------------------------------------------

    def edge_child(self, e: int) -> int:
        """The deeper endpoint of edge e (the child vertex it touches)."""
        self._check_edge(e)
        return e // 2 + 1

    def edge_tail(self, e: int) -> int:
        v = self.edge_child(e)
        return int(self.parent[v]) if e % 2 == 0 else v

    def edge_head(self, e: int) -> int:
        v = self.edge_child(e)
        return v if e % 2 == 0 else int(self.parent[v])

    def edge_height(self, e: int) -> int:
        """Height max(depth(tail), depth(head)) = depth of the child vertex."""
        return int(self.depth[self.edge_child(e)])

    def is_away(self, e: int) -> bool:
        """True if e points away from the root (parent -> child)."""
        self._check_edge(e)
        return e % 2 == 0

    def directed_edge(self, e: int) -> DirectedEdge:
        return DirectedEdge(e, self.edge_tail(e), self.edge_head(e), self.edge_height(e))

    # ---- vertex structure --------------------------------------------------

    def children(self, v: int) -> np.ndarray:
        self._check_vertex(v)
        s = int(self.child_start[v])
        return np.arange(s, s + int(self.child_count[v]), dtype=np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        """Neighbors of v in ascending id order (parent first, then children)."""
        self._check_vertex(v)
        kids = self.children(v)
        if v == 0:
            return kids
        return np.concatenate(([int(self.parent[v])], kids))

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def vertices_at_depth(self, j: int) -> np.ndarray:
        if not 0 <= j <= self.radius:
            raise ValueError(f"depth {j} outside [0, {self.radius}]")
        return np.arange(int(self.level_start[j]), int(self.level_start[j + 1]), dtype=np.int64)

    # ---- validation ----------------------------------------------------------

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex id {v} outside [0, {self.n})")

    def _check_edge(self, e: int) -> None:
        if not 0 <= e < self.n_edges:
            raise ValueError(f"edge id {e} outside [0, {self.n_edges})")


def reverse_edge(e: int) -> int:
    """Id of the reversed edge; an involution by construction."""
    return e ^ 1


def ball_size(d: int, radius: int) -> int:
    """Vertex count of the radius-R ball: 1 + d*((d-1)^R - 1)/(d-2)."""
    if radius == 0:
        return 1
    return 1 + d * ((d - 1) ** radius - 1) // (d - 2)


def build_ball(d: int, radius: int) -> TreeBall:
    """Construct the radius-R truncation of the d-regular tree.

    Vertex ids are assigned breadth-first from the root.  Raises
    CapExceededError when the ball would hold more than
    DIRECTED_EDGE_CAP directed edges.
    """
    if int(d) != d or d < 3:
        raise ValueError(f"degree must be an integer >= 3, got {d}")
    if int(radius) != radius or radius < 0:
        raise ValueError(f"radius must be an integer >= 0, got {radius}")
    d, radius = int(d), int(radius)

    n = ball_size(d, radius)
    if 2 * (n - 1) > DIRECTED_EDGE_CAP:
        raise CapExceededError(
            f"ball d={d}, R={radius} has {2 * (n - 1)} directed edges "
            f"(cap {DIRECTED_EDGE_CAP})"
        )

    sizes = [1] + [d * (d - 1) ** (j - 1) for j in range(1, radius + 1)]
    level_start = np.zeros(radius + 2, dtype=np.int64)
    np.cumsum(sizes, out=level_start[1:])

    parent = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    child_start = np.zeros(n, dtype=np.int64)
    child_count = np.zeros(n, dtype=np.int64)

    for j in range(radius + 1):
        lo, hi = int(level_start[j]), int(level_start[j + 1])
        depth[lo:hi] = j
        if j < radius:
            branching = d if j == 0 else d - 1
            ids = np.arange(lo, hi, dtype=np.int64)
            child_start[lo:hi] = level_start[j + 1] + (ids - lo) * branching
            child_count[lo:hi] = branching
            parent[int(level_start[j + 1]):int(level_start[j + 2])] = np.repeat(ids, branching)

    for arr in (parent, depth, child_start, child_count, level_start):
        arr.setflags(write=False)

    return TreeBall(d, radius, n, parent, depth, child_start, child_count, level_start)


# ---------------------------------------------------------------------------
# distances and hulls
# ---------------------------------------------------------------------------


def vertex_distance(ball: TreeBall, u: int, v: int) -> int:
    """Length of the unique u-v path, via the lowest common ancestor."""
    ball._check_vertex(u)
    ball._check_vertex(v)
    du, dv = int(ball.depth[u]), int(ball.depth[v])
    dist = 0
    while du > dv:
        u = int(ball.parent[u])
        du -= 1
        dist += 1
    while dv > du:
        v = int(ball.parent[v])
        dv -= 1
        dist += 1
    while u != v:
        u = int(ball.parent[u])
        v = int(ball.parent[v])
        dist += 2
    return dist


def path_vertices(ball: TreeBall, u: int, v: int) -> list[int]:
    """Vertices of the unique u-v path, in order from u to v (inclusive)."""
    ball._check_vertex(u)
    ball._check_vertex(v)
    up, down = [], []
    du, dv = int(ball.depth[u]), int(ball.depth[v])
    while du > dv:
        up.append(u)
        u = int(ball.parent[u])
        du -= 1
    while dv > du:
        down.append(v)
        v = int(ball.parent[v])
        dv -= 1
    while u != v:
        up.append(u)
        down.append(v)
        u = int(ball.parent[u])
        v = int(ball.parent[v])
    return up + [u] + down[::-1]


def _children_of_many(ball: TreeBall, vs: np.ndarray) -> np.ndarray:
    counts = ball.child_count[vs]
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    starts = np.repeat(ball.child_start[vs], counts)
    ends = np.cumsum(counts)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)
    return starts + offsets


def distances_from(ball: TreeBall, source: int) -> np.ndarray:
    """BFS distances from `source` to every vertex, as an int64 array."""
    ball._check_vertex(source)
    dist = np.full(ball.n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    step = 0
    while frontier.size:
        step += 1
        kids = _children_of_many(ball, frontier)
        pars = ball.parent[frontier]
        pars = pars[pars >= 0]
        nxt = np.concatenate((pars, kids))
        nxt = nxt[dist[nxt] < 0]
        # distinct frontier vertices cannot share an unvisited neighbor in a tree
        dist[nxt] = step
        frontier = nxt
    return dist


def convex_hull(ball: TreeBall, vertices) -> np.ndarray:
    """Smallest connected vertex set containing `vertices`.

    Equals the union of all pairwise paths; computed as the union of paths
    from one anchor to every other member.  Returns a sorted id array.
    """
    vs = sorted({int(v) for v in vertices})
    if not vs:
        raise ValueError("convex_hull of an empty set")
    for v in vs:
        ball._check_vertex(v)
    anchor = vs[0]
    hull: set[int] = {anchor}
    for v in vs[1:]:
        hull.update(path_vertices(ball, anchor, v))
    return np.array(sorted(hull), dtype=np.int64)


def hull_distance(ball: TreeBall, set1, set2) -> tuple[int, int, int]:
    """Distance between the convex hulls of two vertex sets.

    Returns (k, v1, v2): the minimum distance k between the hulls and a
    closest pair with v1 in hull(set1), v2 in hull(set2).  When the hulls
    intersect, k is 0 and both witnesses are one shared vertex.
    """
    h1 = convex_hull(ball, set1)
    h2 = convex_hull(ball, set2)
    mask2 = np.zeros(ball.n, dtype=bool)
    mask2[h2] = True
    common = h1[mask2[h1]]
    if common.size:
        w = int(common[0])
        return 0, w, w

    # multi-source BFS from hull 1, tracking the nearest source
    origin = np.full(ball.n, -1, dtype=np.int64)
    origin[h1] = h1
    frontier = h1
    k = 0
    while frontier.size:
        k += 1
        kids = _children_of_many(ball, frontier)
        kid_origin = np.repeat(origin[frontier], ball.child_count[frontier])
        pars = ball.parent[frontier]
        has_par = pars >= 0
        cand = np.concatenate((pars[has_par], kids))
        cand_origin = np.concatenate((origin[frontier][has_par], kid_origin))
        new = origin[cand] < 0
        cand, cand_origin = cand[new], cand_origin[new]
        if cand.size:
            # deterministic tie-break: keep the smallest origin per vertex
            order = np.lexsort((cand_origin, cand))
            cand, cand_origin = cand[order], cand_origin[order]
            keep = np.ones(len(cand), dtype=bool)
            keep[1:] = cand[1:] != cand[:-1]
            cand, cand_origin = cand[keep], cand_origin[keep]
        origin[cand] = cand_origin
        hits = cand[mask2[cand]]
        if hits.size:
            v2 = int(hits.min())
            v1 = int(origin[v2])
            return k, v1, v2
        frontier = cand
    raise RuntimeError("hulls not connected within the ball")  # unreachable


# ---------------------------------------------------------------------------
# directed-edge relations
# ---------------------------------------------------------------------------


def edge_distance(ball: TreeBall, e1: int, e2: int) -> int:
    """Distance between two directed edges, ignoring orientation.

    0 when they share the underlying undirected edge; otherwise one more
    than the closest pair of endpoints.
    """
    ball._check_edge(e1)
    ball._check_edge(e2)
    if e1 // 2 == e2 // 2:
        return 0
    u1, u2 = ball.edge_tail(e1), ball.edge_head(e1)
    v1, v2 = ball.edge_tail(e2), ball.edge_head(e2)
    return 1 + min(
        vertex_distance(ball, a, b) for a in (u1, u2) for b in (v1, v2)
    )


def successors(ball: TreeBall, e: int) -> np.ndarray:
    """Edges e' with e -> e': head(e) = tail(e') and e' != reverse(e)."""
    ball._check_edge(e)
    v = e // 2 + 1
    if e % 2 == 0:  # away edge parent -> v: continue into v's children
        return 2 * (ball.children(v) - 1)
    p = int(ball.parent[v])  # toward edge v -> p: continue out of p, not back to v
    out = [2 * (c - 1) for c in ball.children(p) if c != v]
    if p != 0:
        out.append(2 * (p - 1) + 1)
    return np.array(sorted(out), dtype=np.int64)


def predecessors(ball: TreeBall, e: int) -> np.ndarray:
    """Edges e' with e' -> e: head(e') = tail(e) and e != reverse(e')."""
    ball._check_edge(e)
    v = e // 2 + 1
    if e % 2 == 1:  # toward edge v -> p: arrived from v's children
        return 2 * (ball.children(v) - 1) + 1
    p = int(ball.parent[v])  # away edge p -> v: arrived into p, not from v
    inc = [2 * (c - 1) + 1 for c in ball.children(p) if c != v]
    if p != 0:
        inc.append(2 * (p - 1))
    return np.array(sorted(inc), dtype=np.int64)


def edge_between(ball: TreeBall, a: int, b: int) -> int:
    """Id of the directed edge a -> b; a and b must be adjacent."""
    ball._check_vertex(a)
    ball._check_vertex(b)
    if int(ball.parent[b]) == a:
        return 2 * (b - 1)
    if int(ball.parent[a]) == b:
        return 2 * (a - 1) + 1
    raise ValueError(f"vertices {a} and {b} are not adjacent")


def vertices_at_distance(ball: TreeBall, k: int) -> tuple[int, int]:
    """A deterministic pair of vertices at distance k, both as shallow as possible.

    The pair descends into two distinct root subtrees (depths ceil(k/2)
    and floor(k/2)), so each endpoint has the largest possible interior
    margin for local rules.  k = 0 returns (root, root).
    """
    if k < 0:
        raise ValueError("distance must be >= 0")
    if k == 0:
        return 0, 0
    need = (k + 1) // 2
    if need > ball.radius:
        raise ValueError(f"ball radius {ball.radius} too small for distance {k}")

    def descend(start: int, steps: int) -> int:
        v = start
        for _ in range(steps):
            v = int(ball.child_start[v])
        return v

    u = descend(1, (k + 1) // 2 - 1)
    v = descend(2, k // 2 - 1) if k >= 2 else 0
    return u, v
