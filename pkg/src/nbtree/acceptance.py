"""End-to-end verification suite combining every check the package makes.

Each criterion function returns a JSON-ready dict with a boolean
``passed`` and enough detail to diagnose a failure.  ``run_report``
executes all of them with one master seed and fixed derived seeds, so
the emitted document is byte-identical across runs and thread counts.
"""

from __future__ import annotations

import math

import numpy as np

from . import bounds, rng
from .correlation import (
    exact_corr_discrete,
    exact_edge_corr,
    edge_homogeneity_check,
    h_parity,
    h_sum,
    lemma_consequence_check,
    monte_carlo_corr,
    polarization_check,
    random_exchangeable_joint,
    symmetrization_moment_check,
    verify_bound,
)
from .factor_engine import (
    LinearRule,
    edge_first_child_rule,
    edge_sum_rule,
    edge_table_rule,
    edge_tail_rule,
    flat_profile,
    geometric_profile,
    linear_rule_covariance_exact,
    parity_rule,
    subtree_levels,
    sum_rule,
    symmetrize_rule,
    vertex_ball_levels,
    xor_pair_rule,
)
from .nb_operator import build_operator, certify_claims, cone_weight_sums, operator_norm_pow, walk_count
from .tree_core import (
    TreeBall,
    build_ball,
    edge_between,
    hull_distance,
    path_vertices,
    vertex_distance,
    vertices_at_distance,
)
from .universal_factor import roundtrip_check, sphere_overlap_count

_BALLS: dict[tuple[int, int], TreeBall] = {}
_OPS: dict[tuple[int, int], object] = {}


def _ball(d: int, radius: int) -> TreeBall:
    key = (d, radius)
    if key not in _BALLS:
        _BALLS[key] = build_ball(d, radius)
    return _BALLS[key]


def _operator(d: int, radius: int):
    key = (d, radius)
    if key not in _OPS:
        _OPS[key] = build_operator(_ball(d, radius))
    return _OPS[key]


def _rel_close(a: float, b: float, rel: float = 1e-12) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


# ---------------------------------------------------------------------------
# Monte Carlo samplers over linear observables
# ---------------------------------------------------------------------------


def linear_site_coefficients(ball: TreeBall, levels, weights) -> tuple[np.ndarray, np.ndarray]:
    """(vertex ids, coefficient per id) for sum_j weights[j] * labels(level j)."""
    ids = np.concatenate(levels)
    coeff = np.concatenate([np.full(len(lv), float(w)) for lv, w in zip(levels, weights)])
    return ids, coeff


def linear_pair_sampler(ball: TreeBall, ids_a, coeff_a, ids_b, coeff_b, domain_kind: str):
    """Sampler of (sum coeff_a * Z, sum coeff_b * Z) over i.i.d. labels.

    One fresh labeling per sample index; label (index, vertex) is a pure
    function of (seed, index, vertex), so chunking cannot change values.
    """
    support = np.unique(np.concatenate([ids_a, ids_b]))
    vec_a = np.zeros(len(support))
    vec_b = np.zeros(len(support))
    pos = {int(v): i for i, v in enumerate(support)}
    for v, c in zip(ids_a.tolist(), coeff_a.tolist()):
        vec_a[pos[v]] += c
    for v, c in zip(ids_b.tolist(), coeff_b.tolist()):
        vec_b[pos[v]] += c

    def sampler(seed: int, idx: np.ndarray):
        w = rng.words2(seed, idx, support)
        if domain_kind == "rademacher":
            labels = rng.to_rademacher(w)
        elif domain_kind == "centered_uniform":
            labels = rng.to_centered_uniform(w)
        else:
            raise ValueError(f"sampler needs a centered domain, got {domain_kind}")
        return labels @ vec_a, labels @ vec_b

    return sampler


def vertex_linear_sampler(ball: TreeBall, rule: LinearRule, u: int, v: int):
    lu = vertex_ball_levels(ball, u, rule.radius)
    lv = vertex_ball_levels(ball, v, rule.radius)
    ids_a, ca = linear_site_coefficients(ball, lu, rule.profile)
    ids_b, cb = linear_site_coefficients(ball, lv, rule.profile)
    return linear_pair_sampler(ball, ids_a, ca, ids_b, cb, "rademacher")


def edge_linear_sampler(ball: TreeBall, depth: int, rate: float, e1: int, e2: int):
    l1 = subtree_levels(ball, e1, depth)
    l2 = subtree_levels(ball, e2, depth)
    weights = [rate ** j for j in range(depth + 1)]
    ids_a, ca = linear_site_coefficients(ball, l1, weights)
    ids_b, cb = linear_site_coefficients(ball, l2, weights)
    return linear_pair_sampler(ball, ids_a, ca, ids_b, cb, "rademacher")


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_bound_formulas(seed: int = 0, threads: int | None = None) -> dict:
    """Spot values of all four closed forms, to 1e-12 relative."""
    checks = [
        ("vertex(3,2)", bounds.vertex_corr_bound(3, 2), 5.0 / 6.0),
        ("hull(4,6)", bounds.hull_corr_bound(4, 6), 2.0 / 3.0),
        ("edge(4,7)", bounds.edge_corr_bound(4, 7), 8.0 / 27.0),
        ("bnorm(3,3)", bounds.bnorm_bound(3, 3), 16.0),
    ]
    rows = [{"name": n, "value": v, "expected": e, "ok": _rel_close(v, e)}
            for n, v, e in checks]
    return {"passed": all(r["ok"] for r in rows), "checks": rows}


def criterion_norm_bound(seed: int = 0, threads: int | None = None) -> dict:
    """Norm estimates below the closed-form bound, with the expected growth rate."""
    rows = []
    passed = True
    for d in (3, 4):
        op = _operator(d, 8)
        estimates = {}
        for k in range(1, 7):
            rep = operator_norm_pow(op, k)
            estimates[k] = rep.estimate
            ok = rep.converged and rep.estimate <= rep.bound
            passed &= ok
            rows.append(rep.to_json_dict() | {"ok": ok})
        target = 0.5 * math.log(d - 1)
        for k in range(3, 6):
            inc = math.log(estimates[k + 1] / estimates[k])
            ok = abs(inc - target) <= 0.15
            passed &= ok
            rows.append({"d": d, "increment_from_k": k, "value": inc,
                         "target": target, "ok": ok})
    return {"passed": passed, "rows": rows}


def criterion_certificates(seed: int = 0, threads: int | None = None) -> dict:
    """Exact cone-sum maxima strictly below the bound, plus both closed forms."""
    rows = []
    passed = True
    for d in (3, 4, 5):
        for k in range(1, 6):
            radius = max(k + 2, 2 * k)
            ball = _ball(d, radius)
            rep = certify_claims(ball, k)
            q = d - 1
            away_expect = bounds.half_power(d, k)
            deep_expect = bounds.half_power(d, k) + k * (d - 2) * bounds.half_power(d, k - 1)
            ws_away = cone_weight_sums(ball, 2 * (int(ball.level_start[1]) - 1), k)
            ws_deep = cone_weight_sums(ball, 2 * (int(ball.level_start[k + 1]) - 1) + 1, k)
            ok = (rep.strict
                  and rep.max_s_inv <= rep.bound * (1 - 1e-9)
                  and rep.max_s_fwd <= rep.bound * (1 - 1e-9)
                  and ws_away.source_interior and ws_deep.source_interior
                  and _rel_close(ws_away.s_inv, away_expect)
                  and _rel_close(ws_deep.s_inv, deep_expect))
            passed &= ok
            rows.append(rep.to_json_dict() | {
                "away_case": ws_away.s_inv, "away_expected": away_expect,
                "deep_case": ws_deep.s_inv, "deep_expected": deep_expect,
                "ok": ok,
            })
    return {"passed": passed, "rows": rows}


def criterion_walk_counts(seed: int = 0, threads: int | None = None) -> dict:
    """walk_count equals (d-1)^k on 100 random interior edges per (d, k)."""
    rows = []
    passed = True
    for d in (3, 4):
        op = _operator(d, 8)
        ball = op.ball
        for k in range(1, 6):
            expected = (d - 1) ** k
            hits = 0
            checked = 0
            draw = 0
            while checked < 100:
                e = int(rng.randint(seed + 17 * d + k, draw, ball.n_edges)[0])
                draw += 1
                h = ball.edge_height(e)
                interior = (h <= ball.radius - k if ball.is_away(e)
                            else h <= ball.radius - k + 1)
                if not interior:
                    continue
                checked += 1
                if walk_count(op, e, k) == expected:
                    hits += 1
            ok = hits == 100
            passed &= ok
            rows.append({"d": d, "k": k, "expected": expected,
                         "matches": hits, "ok": ok})
    return {"passed": passed, "rows": rows}


def _oracle_cases(seed: int):
    """50 deterministic (profile, k) instances with radius <= 2, k <= 4."""
    cases = []
    counter = 0
    for r, reps in ((0, 3), (1, 4), (2, 3)):
        for k in range(0, 5):
            for _ in range(reps):
                w = rng.to_unit(rng.words(seed + 811, np.arange(counter * 8, counter * 8 + r + 2)))
                signs = 1.0 - 2.0 * np.round(rng.to_unit(
                    rng.words(seed + 977, np.arange(counter * 8, counter * 8 + r + 2))))
                coeffs = tuple((0.2 + 0.8 * w[i]) * signs[i] for i in range(r + 1))
                cases.append((coeffs, k))
                counter += 1
    return cases[:50]


def criterion_oracle_agreement(seed: int = 0, threads: int | None = None) -> dict:
    """Full-enumeration correlations match the geometry oracle; MC covers exact."""
    rows = []
    passed = True
    for coeffs, k in _oracle_cases(seed):
        r = len(coeffs) - 1
        oracle = linear_rule_covariance_exact(3, coeffs, k)
        ball = _ball(3, r + (k + 1) // 2) if k > 0 or r > 0 else _ball(3, 1)
        u, v = vertices_at_distance(ball, k)
        rule = LinearRule(r, coeffs)
        enum = exact_corr_discrete(ball, rule, "rademacher", [u], [v])
        ok = (_rel_close(enum.corr, oracle.corr)
              and _rel_close(enum.cov, oracle.cov)
              and _rel_close(enum.var1, oracle.var))
        passed &= ok
        rows.append({"radius": r, "k": k, "enum_corr": enum.corr,
                     "oracle_corr": oracle.corr, "ok": ok})

    profile = (1.0, 0.6, 0.3)
    k = 2
    oracle = linear_rule_covariance_exact(3, profile, k)
    ball = _ball(3, 2 + 1)
    u, v = vertices_at_distance(ball, k)
    sampler = vertex_linear_sampler(ball, LinearRule(2, profile), u, v)
    covered = 0
    for s in range(20):
        est = monte_carlo_corr(sampler, 100_000, seed * 7919 + 31 + s, threads=threads)
        if est.ci_low <= oracle.corr <= est.ci_high:
            covered += 1
    mc_ok = covered >= 17
    passed &= mc_ok
    return {"passed": passed, "instances": len(rows),
            "agree": sum(r["ok"] for r in rows),
            "mc_covered": covered, "mc_needed": 17, "rows": rows[:5]}


def _sweep_regions(ball: TreeBall, d: int, k: int):
    """Two small connected regions at hull distance exactly k."""
    u, v = vertices_at_distance(ball, k)
    path = set(path_vertices(ball, u, v))
    if d == 3:
        reg1 = [u] + [int(c) for c in ball.children(u) if int(c) not in path]
        reg2 = [v] + [int(c) for c in ball.neighbors(v) if int(c) not in path][:2]
    else:
        reg1 = [u] + [int(c) for c in ball.children(u) if int(c) not in path][:1]
        reg2 = [v] + [int(c) for c in ball.neighbors(v) if int(c) not in path][:1]
    return reg1, reg2


def criterion_bound_sweep(seed: int = 0, threads: int | None = None) -> dict:
    """Every built-in rule family obeys its bound: vertex, hull, and edge pairs."""
    rows = []
    n_mc = 50_000

    def add(d, k, rule_name, mode, value, stderr, bound, n_samples, row_seed):
        verdict = verify_bound(value, bound, stderr)
        rows.append({
            "d": d, "k": k, "rule": rule_name, "mode": mode,
            "value": value, "stderr": stderr, "bound": bound,
            "verdict": verdict.label, "n_samples": n_samples, "seed": row_seed,
        })

    for d in (3, 4):
        for k in range(1, 9):
            vb = bounds.vertex_corr_bound(d, k)
            hb = bounds.hull_corr_bound(d, k)
            eb = bounds.edge_corr_bound(d, k)

            # vertex pairs, exact enumeration (alphabet 2); the order-sensitive
            # pair rule enters only through its orbit average, since the raw
            # rule does not define an equivariant process
            ball = _ball(d, (k + 1) // 2 + 1)
            u, v = vertices_at_distance(ball, k)
            for rule in (sum_rule(1), parity_rule(1),
                         symmetrize_rule(xor_pair_rule(), d)):
                res = exact_corr_discrete(ball, rule, "alphabet:2", [u], [v])
                add(d, k, rule.name, "exact", res.corr, 0.0, vb, res.n_configs, 0)

            # vertex pairs, exact linear oracle
            geo6 = geometric_profile(d, 6)
            res = linear_rule_covariance_exact(d, geo6.profile, k)
            add(d, k, "linear-geom:r6", "exact", res.corr, 0.0, vb, 0, 0)

            # vertex pairs, Monte Carlo (rademacher)
            ball4 = _ball(d, (k + 1) // 2 + 4)
            u4, v4 = vertices_at_distance(ball4, k)
            for rule_name, rule in (("linear-geom:r4", geometric_profile(d, 4)),
                                    ("linear-flat:r2", flat_profile(2))):
                row_seed = seed * 65537 + 101 * d + 13 * k + (7 if "flat" in rule_name else 0)
                sampler = vertex_linear_sampler(ball4, rule, u4, v4)
                est = monte_carlo_corr(sampler, n_mc, row_seed, threads=threads)
                add(d, k, rule_name, "mc", est.estimate, est.stderr, vb, n_mc, row_seed)

            # region pairs at hull distance k, exact
            ball_r = _ball(d, (k + 1) // 2 + 2)
            reg1, reg2 = _sweep_regions(ball_r, d, k)
            kk, _, _ = hull_distance(ball_r, reg1, reg2)
            if kk != k:
                add(d, k, "region-setup", "exact", math.inf, 0.0, hb, 0, 0)
                continue
            for rule, h1, h2, name in (
                (sum_rule(1), h_sum, h_parity, "region-sum:r1"),
                (parity_rule(1), h_sum, h_sum, "region-parity:r1"),
            ):
                res = exact_corr_discrete(ball_r, rule, "alphabet:2", reg1, reg2, h1, h2)
                add(d, k, name, "exact", res.corr, 0.0, hb, res.n_configs, 0)

            # edge pairs at edge distance k, exact and Monte Carlo
            ball_e = _ball(d, (k + 2) // 2 + 4)
            a, b = vertices_at_distance(ball_e, k + 1)
            path = path_vertices(ball_e, a, b)
            e1 = edge_between(ball_e, path[0], path[1])
            e2_same = edge_between(ball_e, path[k], path[k + 1])
            e2_facing = edge_between(ball_e, path[k + 1], path[k])
            for rule in (edge_sum_rule(1), edge_tail_rule()):
                for pair_name, e2 in (("same", e2_same), ("facing", e2_facing)):
                    res = exact_edge_corr(ball_e, rule, "alphabet:2", e1, e2)
                    add(d, k, f"{rule.name}:{pair_name}", "exact", res.corr, 0.0,
                        eb, res.n_configs, 0)
            row_seed = seed * 65537 + 9001 * d + 17 * k
            sampler = edge_linear_sampler(ball_e, 3, 1.0 / math.sqrt(d - 1), e1, e2_same)
            est = monte_carlo_corr(sampler, n_mc, row_seed, threads=threads)
            add(d, k, "edge-geom:D3", "mc", est.estimate, est.stderr, eb, n_mc, row_seed)

    failures = [r for r in rows if r["verdict"] != "PASS"]
    return {"passed": not failures, "n_rows": len(rows),
            "n_fail": len(failures), "failures": failures[:10], "rows": rows}


def criterion_sharpness(seed: int = 0, threads: int | None = None) -> dict:
    """Near-critical linear rule decays at the predicted geometric rate.

    The decay rate is the least-squares slope of log corr(k) over
    k = 2..8; the polynomial prefactor makes individual steps wobble, and
    the fitted rate must sit within 5% of -log(d-1)/2.
    """
    d = 3
    rule = geometric_profile(d, 8)
    corrs = []
    for k in range(2, 9):
        corrs.append(linear_rule_covariance_exact(d, rule.profile, k).corr)
    ks = np.arange(2, 9, dtype=np.float64)
    slope = float(np.polyfit(ks, np.log(corrs), 1)[0])
    target = -0.5 * math.log(d - 1)
    ok = abs(slope - target) <= 0.05 * abs(target)
    return {"passed": ok, "slope": slope, "target": target,
            "rel_dev": abs(slope - target) / abs(target),
            "corr": dict(zip(range(2, 9), corrs))}


def criterion_symmetrization(seed: int = 0, threads: int | None = None) -> dict:
    """Orbit averaging preserves mean and cross-moment, contracts variance.

    The pair consists of the depth-1 subtree views behind two opposing
    edges whose subtrees sit at hull distance k, over a parity block
    factor of alphabet-2 labels; five order-sensitive view rules are
    averaged over child permutations.
    """
    ball = _ball(3, 4)
    process = parity_rule(1)
    view_rules = [edge_first_child_rule()] + [
        edge_table_rule(1, 2, seed + 211 + i) for i in range(4)
    ]
    pairs = {1: (0, 1), 2: (1, 3)}  # k -> (edge ids): root->1 vs 1->root; 1->root vs 2->root
    rows = []
    passed = True
    for k, (e1, e2) in pairs.items():
        for rule in view_rules:
            chk = symmetrization_moment_check(ball, e1, e2, rule, "alphabet:2", process)
            ok = (chk.mean_residual_1 <= 1e-12 and chk.mean_residual_2 <= 1e-12
                  and chk.second_moment_gap_1 >= -1e-12
                  and chk.second_moment_gap_2 >= -1e-12
                  and chk.cross_moment_residual <= 1e-12
                  and chk.variance_gap_1 >= -1e-12)
            passed &= ok
            rows.append({"k": k, "rule": rule.name,
                         "mean_residual": max(chk.mean_residual_1, chk.mean_residual_2),
                         "cross_residual": chk.cross_moment_residual,
                         "second_moment_gap": chk.second_moment_gap_1,
                         "ok": ok})
    return {"passed": passed, "rows": rows}


def criterion_polarization(seed: int = 0, threads: int | None = None) -> dict:
    """Polarization identity on 1000 random pairs; bound transfer on a full scan."""
    worst = 0.0
    for i in range(1000):
        n = 2 + i % 4
        joint = random_exchangeable_joint(n, seed + 3000 + i)
        f1 = rng.to_unit(rng.words(seed + 4000 + i, np.arange(n))) * 2.0 - 1.0
        f2 = rng.to_unit(rng.words(seed + 5000 + i, np.arange(n))) * 2.0 - 1.0
        res = polarization_check(joint, f1, f2)
        worst = max(worst, res.residual, res.swap_residual)
    identity_ok = worst <= 1e-12

    joint3 = random_exchangeable_joint(3, seed + 6007)
    tables = [np.array([a, b, c], dtype=np.float64)
              for a in (-1.0, 0.0, 1.0) for b in (-1.0, 0.0, 1.0)
              for c in (-1.0, 0.0, 1.0)]
    alpha = 0.0
    for f in tables:
        res = polarization_check(joint3, f, f)
        p = np.asarray(joint3)
        marg = p.sum(axis=1)
        var = float(marg @ (f * f) - (marg @ f) ** 2)
        if var > 0:
            alpha = max(alpha, abs(res.cross_covariance) / var)
    alpha = alpha * (1.0 + 1e-12)
    scan_ok = True
    checked = 0
    for f1 in tables:
        for f2 in tables:
            scan_ok &= lemma_consequence_check(joint3, f1, f2, alpha)
            checked += 1
    return {"passed": identity_ok and scan_ok, "worst_residual": worst,
            "scan_pairs": checked, "scan_alpha": alpha, "scan_ok": scan_ok}


def criterion_homogeneity(seed: int = 0, threads: int | None = None) -> dict:
    """E[Y_e1 Y_e2] identical over interior congruent pairs; counts match."""
    ball = _ball(3, 5)
    res = edge_homogeneity_check(ball, edge_sum_rule(1), 2, "alphabet:2")
    ok = (res.max_deviation <= 1e-12 and res.source_counts_ok
          and res.pairs_per_source == 4)
    return {"passed": ok, "max_deviation": res.max_deviation,
            "common_value": res.common_value, "n_sources": res.n_sources,
            "n_pairs": res.n_pairs, "pairs_per_source": res.pairs_per_source}


def criterion_universal(seed: int = 0, threads: int | None = None) -> dict:
    """Encode/reconstruct roundtrip is exact; path spheres overlap in one vertex."""
    r1 = roundtrip_check(_ball(3, 6), 3, 500, seed + 71)
    r2 = roundtrip_check(_ball(4, 5), 2, 200, seed + 72)
    ball = _ball(3, 6)
    sphere_ok = True
    pairs_checked = 0
    for t in range(50):
        u = int(rng.randint(seed + 90, 2 * t, ball.n)[0])
        v = int(rng.randint(seed + 90, 2 * t + 1, ball.n)[0])
        n = vertex_distance(ball, u, v)
        for j in range(1, n):
            if sphere_overlap_count(ball, u, v, j) != 1:
                sphere_ok = False
        pairs_checked += 1
    ok = (r1.successes == 500 and r1.collisions == 0
          and r2.successes == 200 and r2.collisions == 0 and sphere_ok)
    return {"passed": ok,
            "roundtrip_d3": r1.to_json_dict(), "roundtrip_d4": r2.to_json_dict(),
            "sphere_pairs_checked": pairs_checked, "sphere_ok": sphere_ok}


CRITERIA = [
    (1, "bound-formulas", criterion_bound_formulas),
    (2, "norm-vs-bound", criterion_norm_bound),
    (3, "cone-sum-certificates", criterion_certificates),
    (4, "walk-counts", criterion_walk_counts),
    (5, "oracle-agreement", criterion_oracle_agreement),
    (6, "bound-compliance-sweep", criterion_bound_sweep),
    (7, "sharpness-decay-rate", criterion_sharpness),
    (8, "orbit-average-moments", criterion_symmetrization),
    (9, "polarization-and-transfer", criterion_polarization),
    (10, "edge-homogeneity", criterion_homogeneity),
    (11, "universal-roundtrip", criterion_universal),
]


def run_report(seed: int = 0, threads: int | None = None) -> dict:
    """Run criteria 1..11 and assemble the verdict document.

    Criterion 12 (byte-identical reports across thread counts) is a
    statement about this very command, so it is exercised externally by
    the test suite; it appears here as a documented external entry.
    """
    criteria = []
    all_passed = True
    for cid, name, fn in CRITERIA:
        result = fn(seed=seed, threads=threads)
        all_passed &= bool(result["passed"])
        entry = {"id": cid, "name": name, "passed": bool(result["passed"])}
        entry.update({k: v for k, v in result.items() if k != "passed"})
        criteria.append(entry)
    criteria.append({
        "id": 12, "name": "report-determinism", "passed": None,
        "status": "external",
        "note": "run this command twice with NBTREE_THREADS=1 and 8; "
                "the emitted JSON must be byte-identical",
    })
    return {"suite": "nbtree-acceptance", "seed": seed,
            "all_passed": all_passed, "criteria": criteria}
