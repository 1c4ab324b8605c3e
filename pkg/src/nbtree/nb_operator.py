"""The non-backtracking operator on the directed edges of a tree ball.

The operator maps a function f on directed edges to
(Bf)(e) = sum of f over the predecessors e' -> e.  It is stored as a
sparse 0/1 matrix in CSR form (predecessor lists per edge) and applied
matrix-free.  Two independent certificates are computed for its k-th
power:

* a power-iteration estimate of ||B^k|| on the finite ball, which the
  infinite-tree bound (k+1)*(d-1)^((k+1)/2) must dominate, and
* exact height-weighted walk sums over k-step cones, whose maxima over
  interior edges must stay strictly below the same bound.

Inside a tree a non-backtracking walk can never revisit an undirected
edge, so the k-step cone of any edge is duplicate-free and cone sums are
plain sums over frontier sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from . import bounds
from ._exact import root_lt, root_value
from .errors import NbtreeError
from .tree_core import TreeBall, predecessors, successors

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000

#: relative guard band for strict-inequality certificate checks
CERT_GUARD = 1e-9


@dataclass(frozen=True, eq=False)
class NbOperator:
    """Sparse realization of the non-backtracking operator on a ball.

    pred_indptr/pred_indices form a CSR layout of the predecessor lists:
    predecessors of edge e are pred_indices[pred_indptr[e]:pred_indptr[e+1]].
    """

    ball: TreeBall
    m: int
    pred_indptr: np.ndarray
    pred_indices: np.ndarray
    _mat: sp.csr_matrix        # rows = target edge, cols = predecessor
    _mat_t: sp.csr_matrix      # transpose, rows = source edge, cols = successor

    def predecessors(self, e: int) -> np.ndarray:
        lo, hi = int(self.pred_indptr[e]), int(self.pred_indptr[e + 1])
        return self.pred_indices[lo:hi]

    def successors(self, e: int) -> np.ndarray:
        lo, hi = int(self._mat_t.indptr[e]), int(self._mat_t.indptr[e + 1])
        return self._mat_t.indices[lo:hi]


@dataclass(frozen=True)
class NormReport:
    """Result of estimating ||B^k|| on one ball."""

    d: int
    radius: int
    k: int
    estimate: float
    bound: float
    iterations: int
    residual: float
    converged: bool

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "radius": self.radius,
            "k": self.k,
            "estimate": self.estimate,
            "bound": self.bound,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class WeightSums:
    """Exact height-weighted sums over the k-step cones at one edge.

    s_inv sums (d-1)^((h(e)-h(target))/2) over the successor cone of e;
    s_fwd sums (d-1)^((h(e)-h(source))/2) over the predecessor cone.
    Each value is represented exactly as rational + rational*sqrt(d-1).
    """

    s_inv: float
    s_fwd: float
    s_inv_exact: tuple[Fraction, Fraction]
    s_fwd_exact: tuple[Fraction, Fraction]
    source_interior: bool
    target_interior: bool


@dataclass(frozen=True)
class CertificateReport:
    """Exact cone-sum maxima over interior edges versus the norm bound."""

    d: int
    radius: int
    k: int
    max_s_inv: float
    max_s_fwd: float
    bound: float
    interior_edge_count: int
    breakdown: dict
    strict: bool

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "radius": self.radius,
            "k": self.k,
            "max_s_inv": self.max_s_inv,
            "max_s_fwd": self.max_s_fwd,
            "bound": self.bound,
            "interior_edge_count": self.interior_edge_count,
            "breakdown": self.breakdown,
            "strict": self.strict,
        }


def build_operator(ball: TreeBall) -> NbOperator:
    """Assemble predecessor lists for every directed edge of the ball."""
    n, d = ball.n, ball.d
    m = ball.n_edges
    if m == 0:
        empty = sp.csr_matrix((0, 0))
        return NbOperator(ball, 0, np.zeros(1, dtype=np.int64),
                          np.empty(0, dtype=np.int64), empty, empty.copy())

    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []

    # away(w) -> away(c) for every child c of a non-root vertex w
    c = np.arange(1, n, dtype=np.int64)
    w = ball.parent[c]
    mask = w >= 1
    src_parts.append(2 * (w[mask] - 1))
    dst_parts.append(2 * (c[mask] - 1))

    # toward(v) -> toward(p) for every vertex v with a non-root parent p
    src_parts.append(2 * (c[mask] - 1) + 1)
    dst_parts.append(2 * (w[mask] - 1) + 1)

    # toward(v) -> away(c) for ordered sibling pairs v != c
    def sibling_pairs(child_mat: np.ndarray) -> None:
        width = child_mat.shape[1]
        for i in range(width):
            for j in range(width):
                if i != j:
                    src_parts.append(2 * (child_mat[:, i] - 1) + 1)
                    dst_parts.append(2 * (child_mat[:, j] - 1))

    if ball.radius >= 1:
        sibling_pairs(np.arange(1, d + 1, dtype=np.int64)[None, :])
    if ball.radius >= 2:
        parents = np.arange(int(ball.level_start[1]), int(ball.level_start[ball.radius]),
                            dtype=np.int64)
        if parents.size:
            starts = ball.child_start[parents]
            sibling_pairs(starts[:, None] + np.arange(d - 1, dtype=np.int64)[None, :])

    src = np.concatenate(src_parts)
    dst = np.concatenate(dst_parts)
    data = np.ones(len(src), dtype=np.float64)
    mat = sp.coo_matrix((data, (dst, src)), shape=(m, m)).tocsr()
    mat.sort_indices()
    mat_t = mat.T.tocsr()
    mat_t.sort_indices()

    indptr = mat.indptr.astype(np.int64)
    indices = mat.indices.astype(np.int64)
    return NbOperator(ball, m, indptr, indices, mat, mat_t)


def apply(op: NbOperator, f: np.ndarray) -> np.ndarray:
    """(Bf)(e) = sum of f over predecessors of e."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (op.m,):
        raise ValueError(f"vector length {f.shape} != edge count {op.m}")
    return op._mat @ f


def apply_transpose(op: NbOperator, f: np.ndarray) -> np.ndarray:
    """(B^T f)(e) = sum of f over successors of e; the adjoint of apply."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (op.m,):
        raise ValueError(f"vector length {f.shape} != edge count {op.m}")
    return op._mat_t @ f


def _cone_frontier(ball: TreeBall, e: int, k: int, backward: bool) -> list[np.ndarray]:
    """Frontiers of the k-step cone at e, following successor or predecessor lists."""
    step = predecessors if backward else successors
    frontiers = [np.array([e], dtype=np.int64)]
    for _ in range(k):
        cur = frontiers[-1]
        if cur.size == 0:
            frontiers.append(cur)
            continue
        frontiers.append(np.concatenate([step(ball, int(x)) for x in cur]))
    return frontiers


def walk_count(op: NbOperator, e0: int, k: int) -> int:
    """Number of edges reachable from e0 by a k-step non-backtracking walk."""
    if k < 0:
        raise ValueError("k must be >= 0")
    op.ball._check_edge(e0)
    frontier = np.array([e0], dtype=np.int64)
    for _ in range(k):
        if frontier.size == 0:
            return 0
        frontier = np.concatenate([op.successors(int(e)) for e in frontier])
    return int(frontier.size)


def operator_norm_pow(op: NbOperator, k: int, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> NormReport:
    """Estimate ||B^k|| by power iteration on v -> (B^T)^k B^k v.

    Starts from the deterministic all-ones vector (B^k preserves
    non-negativity, so the leading direction has non-negative overlap).
    The Rayleigh quotient increases toward ||B^k||^2 on the ball, which
    the infinite-tree bound dominates; an estimate above the bound is a
    defect and raises.
    """
    if k < 1:
        raise ValueError("power k must be >= 1")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    bound = bounds.bnorm_bound(op.ball.d, k)
    if op.m == 0:
        return NormReport(op.ball.d, op.ball.radius, k, 0.0, bound, 0, 0.0, True)

    v = np.full(op.m, 1.0 / math.sqrt(op.m))
    rho_prev = None
    residual = math.inf
    converged = False
    iterations = 0
    rho = 0.0
    for iterations in range(1, max_iter + 1):
        w = v
        for _ in range(k):
            w = op._mat @ w
        for _ in range(k):
            w = op._mat_t @ w
        rho = float(v @ w)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0 or rho <= 0.0:
            rho = max(rho, 0.0)
            residual = 0.0
            converged = True
            break
        if rho_prev is not None:
            residual = abs(rho - rho_prev) / rho
            if residual <= tol:
                converged = True
                break
        rho_prev = rho
        v = w / norm_w

    estimate = math.sqrt(max(rho, 0.0))
    if estimate > bound:
        raise NbtreeError(
            f"norm estimate {estimate} exceeds bound {bound} at d={op.ball.d}, "
            f"k={k}: finite-ball walks are dominated by the infinite tree, "
            f"so this indicates a defect"
        )
    return NormReport(op.ball.d, op.ball.radius, k, estimate, bound,
                      iterations, residual, converged)


# ---------------------------------------------------------------------------
# exact cone-sum certificates
# ---------------------------------------------------------------------------


def _weight_sum_exact(heights_from: int, heights: np.ndarray, q: int
                      ) -> tuple[Fraction, Fraction]:
    """Sum of q^(j/2) over j = heights_from - heights, split by parity of j.

    Returns (a, b) with the sum equal to a + b*sqrt(q), both exact.
    """
    a = Fraction(0)
    b = Fraction(0)
    diffs, counts = np.unique(heights_from - heights, return_counts=True)
    for j, cnt in zip(diffs.tolist(), counts.tolist()):
        if j % 2 == 0:
            a += cnt * Fraction(q) ** (j // 2)
        else:
            b += cnt * Fraction(q) ** ((j - 1) // 2)
    return a, b


def cone_weight_sums(ball: TreeBall, e: int, k: int) -> WeightSums:
    """Exact forward/backward height-weighted cone sums at edge e.

    A cone is interior exactly when it has the full (d-1)^k walks; cones
    clipped by the ball boundary are flagged so callers can exclude them.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    q = ball.d - 1
    full = q ** k
    h0 = ball.edge_height(e)

    fwd = _cone_frontier(ball, e, k, backward=False)[-1]
    heights_fwd = ball.depth[(fwd // 2) + 1] if fwd.size else np.empty(0, dtype=np.int64)
    a_inv, b_inv = _weight_sum_exact(h0, heights_fwd, q)

    bwd = _cone_frontier(ball, e, k, backward=True)[-1]
    heights_bwd = ball.depth[(bwd // 2) + 1] if bwd.size else np.empty(0, dtype=np.int64)
    a_fwd, b_fwd = _weight_sum_exact(h0, heights_bwd, q)

    return WeightSums(
        s_inv=root_value(a_inv, b_inv, q),
        s_fwd=root_value(a_fwd, b_fwd, q),
        s_inv_exact=(a_inv, b_inv),
        s_fwd_exact=(a_fwd, b_fwd),
        source_interior=(fwd.size == full),
        target_interior=(bwd.size == full),
    )


def _bound_exact(d: int, k: int) -> tuple[Fraction, Fraction]:
    """(k+1)*(d-1)^((k+1)/2) as rational + rational*sqrt(d-1)."""
    q = d - 1
    if (k + 1) % 2 == 0:
        return Fraction((k + 1) * q ** ((k + 1) // 2)), Fraction(0)
    return Fraction(0), Fraction((k + 1) * q ** (k // 2))


def certify_claims(ball: TreeBall, k: int) -> CertificateReport:
    """Certify that both cone-sum maxima stay strictly below the norm bound.

    The sums depend only on an edge's orientation and height (any two
    same-height, same-orientation edges are related by a root-fixing
    automorphism), so one cone per (orientation, height) class is
    enumerated and the maxima are taken over classes containing at least
    one interior edge.  Comparisons against the bound are exact in
    rational arithmetic over sqrt(d-1); the float values additionally
    respect a relative guard band of CERT_GUARD.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if ball.radius < k + 2:
        raise ValueError(
            f"radius {ball.radius} too small: need R >= k+2 = {k + 2} so that "
            f"some cones are interior"
        )
    d, q = ball.d, ball.d - 1
    bound_a, bound_b = _bound_exact(d, k)
    bound = root_value(bound_a, bound_b, q)

    best = {
        ("away", "s_inv"): None, ("away", "s_fwd"): None,
        ("toward", "s_inv"): None, ("toward", "s_fwd"): None,
    }

    def consider(key, exact):
        cur = best[key]
        if cur is None or root_lt(cur[0], cur[1], exact[0], exact[1], q):
            best[key] = exact

    interior_edges = 0
    for h in range(1, ball.radius + 1):
        v = int(ball.level_start[h])  # class representative at depth h
        n_class = len(ball.vertices_at_depth(h))
        for orient, e in (("away", 2 * (v - 1)), ("toward", 2 * (v - 1) + 1)):
            sums = cone_weight_sums(ball, e, k)
            if sums.source_interior:
                consider((orient, "s_inv"), sums.s_inv_exact)
                interior_edges += n_class
            if sums.target_interior:
                consider((orient, "s_fwd"), sums.s_fwd_exact)

    for key, exact in best.items():
        if exact is None:
            raise NbtreeError(f"no interior cone found for class {key}")

    strict = True
    for exact in best.values():
        if not root_lt(exact[0], exact[1], bound_a, bound_b, q):
            strict = False

    def val(key) -> float:
        return root_value(best[key][0], best[key][1], q)

    max_s_inv = max(val(("away", "s_inv")), val(("toward", "s_inv")))
    max_s_fwd = max(val(("away", "s_fwd")), val(("toward", "s_fwd")))
    guard_ok = (max_s_inv <= bound * (1.0 - CERT_GUARD)
                and max_s_fwd <= bound * (1.0 - CERT_GUARD))

    if not (strict and guard_ok):
        raise NbtreeError(
            f"cone-sum certificate failed at d={d}, k={k}: "
            f"max_s_inv={max_s_inv}, max_s_fwd={max_s_fwd}, bound={bound}"
        )

    breakdown = {
        orient: {
            "max_s_inv": val((orient, "s_inv")),
            "max_s_fwd": val((orient, "s_fwd")),
        }
        for orient in ("away", "toward")
    }
    return CertificateReport(
        d=d, radius=ball.radius, k=k,
        max_s_inv=max_s_inv, max_s_fwd=max_s_fwd, bound=bound,
        interior_edge_count=interior_edges, breakdown=breakdown, strict=strict,
    )
