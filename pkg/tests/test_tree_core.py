"""Ball construction, distances, hulls, and the directed-edge relation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbtree.errors import CapExceededError
from nbtree.tree_core import (
    build_ball,
    ball_size,
    convex_hull,
    edge_between,
    edge_distance,
    hull_distance,
    path_vertices,
    predecessors,
    reverse_edge,
    successors,
    vertex_distance,
    vertices_at_distance,
)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def test_single_root_ball():
    ball = build_ball(3, 0)
    assert ball.n == 1
    assert ball.n_edges == 0


def test_hand_counted_d3_r2():
    # 1 + 3 + 6 vertices, 9 undirected edges
    ball = build_ball(3, 2)
    assert ball.n == 10
    assert ball.n_edges == 18


def test_counting_formula_d4_r3():
    # 1 + 4*(3^3 - 1)/2 = 53, and breadth-first construction agrees
    ball = build_ball(4, 3)
    assert ball.n == 53
    assert ball.n == 1 + 4 * (3 ** 3 - 1) // 2
    assert len(ball.vertices_at_depth(3)) == 4 * 3 ** 2


@pytest.mark.parametrize("d,radius", [(3, 4), (4, 3), (5, 2), (6, 2)])
def test_sphere_sizes(d, radius):
    ball = build_ball(d, radius)
    assert len(ball.vertices_at_depth(0)) == 1
    for j in range(1, radius + 1):
        assert len(ball.vertices_at_depth(j)) == d * (d - 1) ** (j - 1)
    assert ball.n == ball_size(d, radius)


def test_parent_child_depth_consistency():
    ball = build_ball(3, 4)
    for v in range(1, ball.n):
        p = int(ball.parent[v])
        assert ball.depth[v] == ball.depth[p] + 1
        assert v in ball.children(p).tolist()


def test_degrees():
    d, radius = 4, 3
    ball = build_ball(d, radius)
    for v in range(ball.n):
        expected = 1 if ball.depth[v] == radius else d
        if v == 0 and radius == 0:
            expected = 0
        assert ball.degree(v) == expected


def test_invalid_arguments():
    with pytest.raises(ValueError):
        build_ball(2, 3)
    with pytest.raises(ValueError):
        build_ball(3, -1)
    with pytest.raises(CapExceededError):
        build_ball(3, 40)


def test_arrays_are_frozen():
    ball = build_ball(3, 2)
    with pytest.raises(ValueError):
        ball.parent[0] = 5


# ---------------------------------------------------------------------------
# edge addressing
# ---------------------------------------------------------------------------


def test_reverse_is_involution_and_swaps_endpoints():
    ball = build_ball(3, 3)
    for e in range(ball.n_edges):
        r = reverse_edge(e)
        assert reverse_edge(r) == e
        assert ball.edge_head(r) == ball.edge_tail(e)
        assert ball.edge_tail(r) == ball.edge_head(e)
        assert ball.edge_height(r) == ball.edge_height(e)


def test_edge_height_is_max_endpoint_depth():
    ball = build_ball(4, 3)
    for e in range(ball.n_edges):
        t, h = ball.edge_tail(e), ball.edge_head(e)
        assert ball.edge_height(e) == max(ball.depth[t], ball.depth[h])


def test_directed_edge_record():
    ball = build_ball(3, 2)
    c = int(ball.children(0)[0])
    rec = ball.directed_edge(2 * (c - 1))
    assert (rec.id, rec.tail, rec.head, rec.height) == (2 * (c - 1), 0, c, 1)
    rev = ball.directed_edge(reverse_edge(rec.id))
    assert (rev.tail, rev.head, rev.height) == (c, 0, 1)


def test_edge_between():
    ball = build_ball(3, 2)
    c = int(ball.children(0)[0])
    assert ball.edge_tail(edge_between(ball, 0, c)) == 0
    assert ball.edge_head(edge_between(ball, c, 0)) == 0
    with pytest.raises(ValueError):
        edge_between(ball, 0, int(ball.vertices_at_depth(2)[0]))


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def test_vertex_distance_basics():
    ball = build_ball(3, 4)
    assert vertex_distance(ball, 5, 5) == 0
    for v in ball.vertices_at_depth(4)[:5]:
        assert vertex_distance(ball, 0, int(v)) == 4
    c1, c2 = ball.children(0)[:2]
    assert vertex_distance(ball, int(c1), int(c2)) == 2


def test_vertex_distance_symmetry_and_triangle_through_ancestor():
    ball = build_ball(3, 4)
    rs = np.random.RandomState(4)
    for _ in range(50):
        u, v = rs.randint(0, ball.n, size=2)
        assert vertex_distance(ball, int(u), int(v)) == vertex_distance(ball, int(v), int(u))
        path = path_vertices(ball, int(u), int(v))
        assert len(path) == vertex_distance(ball, int(u), int(v)) + 1
        assert path[0] == u and path[-1] == v
        for a, b in zip(path, path[1:]):
            assert vertex_distance(ball, a, b) == 1


def test_vertices_at_distance_helper():
    ball = build_ball(3, 5)
    for k in range(0, 9):
        u, v = vertices_at_distance(ball, k)
        assert vertex_distance(ball, u, v) == k


def test_edge_distance_same_and_adjacent():
    ball = build_ball(3, 3)
    e = edge_between(ball, 0, int(ball.children(0)[0]))
    assert edge_distance(ball, e, reverse_edge(e)) == 0
    c1, c2 = (int(c) for c in ball.children(0)[:2])
    e1 = edge_between(ball, c1, 0)
    e2 = edge_between(ball, 0, c2)
    assert edge_distance(ball, e1, e2) == 1


def test_edge_distance_two_edges_apart_is_three():
    # a path p0-p1-p2-p3-p4: the outer edges are separated by two edges
    ball = build_ball(3, 4)
    u, v = vertices_at_distance(ball, 4)
    p = path_vertices(ball, u, v)
    e1 = edge_between(ball, p[0], p[1])
    e2 = edge_between(ball, p[3], p[4])
    assert edge_distance(ball, e1, e2) == 3


def test_edge_distance_direction_insensitive():
    ball = build_ball(3, 3)
    rs = np.random.RandomState(7)
    for _ in range(100):
        e1, e2 = rs.randint(0, ball.n_edges, size=2)
        d0 = edge_distance(ball, int(e1), int(e2))
        assert edge_distance(ball, reverse_edge(int(e1)), int(e2)) == d0
        assert edge_distance(ball, int(e1), reverse_edge(int(e2))) == d0
        assert edge_distance(ball, int(e2), int(e1)) == d0


# ---------------------------------------------------------------------------
# hulls
# ---------------------------------------------------------------------------


def _hull_brute_force(ball, vertices):
    """Fixed point of deleting degree-1 vertices outside `vertices`."""
    keep = set(range(ball.n))
    vset = set(vertices)
    changed = True
    while changed:
        changed = False
        for v in sorted(keep):
            if v in vset:
                continue
            deg = sum(1 for u in ball.neighbors(v).tolist() if u in keep)
            if deg <= 1:
                keep.discard(v)
                changed = True
    return keep


def test_hull_singleton_and_path():
    ball = build_ball(3, 4)
    assert convex_hull(ball, [7]).tolist() == [7]
    u, v = vertices_at_distance(ball, 3)
    hull = convex_hull(ball, [u, v])
    assert sorted(hull.tolist()) == sorted(path_vertices(ball, u, v))
    assert len(hull) == 4


def test_hull_of_path_endpoints_contains_midpoint():
    ball = build_ball(3, 4)
    for k in (1, 2):
        u, v = vertices_at_distance(ball, 2 * k)
        mid = path_vertices(ball, u, v)[k]
        hull = convex_hull(ball, [u, v])
        assert mid in hull.tolist()
        kk, _, _ = hull_distance(ball, [u, v], [mid])
        assert kk == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 49), st.sets(st.integers(0, 48), min_size=1, max_size=6))
def test_hull_matches_leaf_pruning(unused, vertices):
    ball = build_ball(3, 3)  # n = 22 <= 50
    vs = [v % ball.n for v in vertices]
    hull = set(convex_hull(ball, vs).tolist())
    assert hull == _hull_brute_force(ball, vs)


def test_hull_distance_trivial_cases():
    ball = build_ball(3, 4)
    k, w1, w2 = hull_distance(ball, [5], [5])
    assert k == 0 and w1 == w2 == 5
    u, v = vertices_at_distance(ball, 5)
    k, w1, w2 = hull_distance(ball, [u], [v])
    assert (k, w1, w2) == (5, u, v)


def test_hull_distance_siblings_case():
    # V1 = the two children of w; hull(V1) contains w, so the hull distance
    # to a vertex 4 away from w is 4 even though V1 itself is 5 away.
    ball = build_ball(3, 5)
    w = 1
    siblings = [int(c) for c in ball.children(w)]
    x = 2
    for _ in range(2):
        x = int(ball.child_start[x])
    assert vertex_distance(ball, w, x) == 4
    assert min(vertex_distance(ball, s, x) for s in siblings) == 5
    k, w1, w2 = hull_distance(ball, siblings, [x])
    assert (k, w1, w2) == (4, w, x)
    # brute force over all hull-vertex pairs
    h1 = convex_hull(ball, siblings).tolist()
    h2 = convex_hull(ball, [x]).tolist()
    assert k == min(vertex_distance(ball, a, b) for a in h1 for b in h2)


def test_hull_distance_monotone_in_region_growth():
    ball = build_ball(3, 5)
    u, v = vertices_at_distance(ball, 6)
    base, _, _ = hull_distance(ball, [u], [v])
    grown, _, _ = hull_distance(ball, [u, int(ball.children(u)[0])], [v])
    assert grown <= base


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(0, 93), min_size=1, max_size=4),
       st.sets(st.integers(0, 93), min_size=1, max_size=4),
       st.sets(st.integers(0, 93), min_size=0, max_size=3))
def test_hull_distance_monotone_property(set1, set2, extra):
    ball = build_ball(3, 5)  # n = 94
    k_base, _, _ = hull_distance(ball, set1, set2)
    k_grown, _, _ = hull_distance(ball, set1 | extra, set2)
    assert k_grown <= k_base or not extra


def test_hull_empty_input_rejected():
    ball = build_ball(3, 2)
    with pytest.raises(ValueError):
        convex_hull(ball, [])
    with pytest.raises(ValueError):
        hull_distance(ball, [], [0])


# ---------------------------------------------------------------------------
# successor relation
# ---------------------------------------------------------------------------


def test_successor_counts_and_boundary():
    d, radius = 3, 3
    ball = build_ball(d, radius)
    for e in range(ball.n_edges):
        succ = successors(ball, e)
        head = ball.edge_head(e)
        if ball.depth[head] == radius:
            assert len(succ) == 0
        else:
            assert len(succ) == d - 1
        assert reverse_edge(e) not in succ.tolist()
        for s in succ.tolist():
            assert ball.edge_tail(s) == head


def test_away_successors_increase_height():
    ball = build_ball(4, 4)
    for e in range(0, ball.n_edges, 2):  # away edges
        h = ball.edge_height(e)
        for s in successors(ball, e).tolist():
            assert ball.is_away(s)
            assert ball.edge_height(s) == h + 1


def test_predecessors_are_transpose_of_successors():
    ball = build_ball(3, 3)
    succ_pairs = {(e, int(s)) for e in range(ball.n_edges)
                  for s in successors(ball, e)}
    pred_pairs = {(int(p), e) for e in range(ball.n_edges)
                  for p in predecessors(ball, e)}
    assert succ_pairs == pred_pairs


def test_bfs_distances_match_parent_walk():
    # two independent routes: vectorized level BFS vs the ancestor walk
    from nbtree.tree_core import distances_from

    for d, radius in ((3, 4), (4, 3)):
        ball = build_ball(d, radius)
        for u in (0, 1, int(ball.vertices_at_depth(radius)[0])):
            dist = distances_from(ball, u)
            for v in range(0, ball.n, 3):
                assert int(dist[v]) == vertex_distance(ball, u, v)
