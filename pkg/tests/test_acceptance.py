"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible under
``pytest -v``) before asserting, so a red criterion still reports its numbers.
"""

import math
import time

import numpy as np
import pytest

from cyclic_entropy import shannon
from cyclic_entropy.grid import Grid2D
from cyclic_entropy.spectrum import (
    asymptotic_constants,
    divergence_fit,
    ensemble_entropy,
    gamma_constants,
    lambda_from_cartan,
    limit_convergence_scan,
    sandwich_check,
)
from cyclic_entropy.toda import exact_extremal_solution, solve_dirichlet
from cyclic_entropy.toda.analysis import check_adjacent_bounds, entropy_field, metric_fields, sup_chain_check
from cyclic_entropy.weights import MINUS_INFINITY_WEIGHT, RDifferential, mollify, sample_weight

H = 1 / 64
BETAS_9 = (-0.5, 1.0)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, info=False):
        status = "INFO" if info else ("PASS" if ok else "FAIL")
        with capsys.disabled():
            print(f"\ncriterion {n}: {status}  {detail}")

    return emit


def q_z(r):
    return RDifferential(r, ((0.0, 1),))


@pytest.fixture(scope="module")
def disc():
    return Grid2D.disc(0.9, H)


@pytest.fixture(scope="module")
def property_instances(disc):
    """q = z on the disc of radius 0.9 with hyperbolic-like Dirichlet data, r = 3 and 5."""
    return {r: solve_dirichlet(r, q_z(r), disc, boundary="hyperbolic-like") for r in (3, 5)}


@pytest.fixture(scope="module")
def flat_like_instances(disc):
    return {r: solve_dirichlet(r, q_z(r), disc, boundary="flat-like") for r in (3, 5)}


def test_criterion_01_cartan_lambda(report):
    t = time.perf_counter()
    bad = []
    for r in range(2, 201):
        try:
            lambda_from_cartan(r)
        except ArithmeticError as exc:
            bad.append((r, str(exc)))
    dt = time.perf_counter() - t
    ok = not bad and dt < 5.0
    report(1, ok, f"r=2..200 exact, mismatches={len(bad)}, {dt:.2f}s (<5s)")
    assert ok


def test_criterion_02_baseline_entropies(report):
    betas = (-3.0, -1.0, -0.5, 0.5, 1.0, 3.0)
    e2 = max(abs(ensemble_entropy(2, b)) for b in betas)
    e3 = max(abs(ensemble_entropy(3, b) - math.log(2)) for b in betas)
    s41 = ensemble_entropy(4, 1.0)
    ok = e2 <= 1e-12 and e3 <= 1e-12 and abs(s41 - 1.088900) <= 1e-6
    report(2, ok, f"max|S_2|={e2:.1e}, max|S_3-log2|={e3:.1e}, S_4,1={s41:.7f}")
    assert ok


def test_criterion_03_golden_limits(report):
    t = time.perf_counter()
    rows = []
    for beta, golden in ((1.0, 5 / 3 - math.log(6)), (-0.5, -2 * math.log(2) + math.log(math.pi))):
        quad = asymptotic_constants(beta)
        c, d = gamma_constants(beta)
        closed = -2 * beta * d / c + math.log(c)
        rel = abs(quad.limit - closed) / abs(closed)
        rows.append((beta, quad.limit, golden, rel, abs(quad.c_beta - c) / c, abs(quad.d_beta - d) / abs(d)))
    dt = time.perf_counter() - t
    ok = all(abs(v - g) <= 1e-6 and max(r1, r2, r3) <= 1e-9 for _, v, g, r1, r2, r3 in rows) and dt < 1.0
    detail = ", ".join(f"beta={b:g}: {v:.7f} (rel two-way {max(r1, r2, r3):.1e})" for b, v, _, r1, r2, r3 in rows)
    report(3, ok, f"{detail}, {dt:.2f}s (<1s)")
    assert ok


def test_criterion_04_convergence_to_limit(report):
    t = time.perf_counter()
    r_values = range(100, 5001, 100)
    tables = {b: limit_convergence_scan(b, r_values) for b in (0.5, 1.0, 2.0)}
    dt = time.perf_counter() - t
    final = {b: abs(tab.gaps[-1]) for b, tab in tables.items()}
    ok = all(g <= 0.01 for g in final.values()) and all(tab.monotone for tab in tables.values()) and dt < 2.0
    detail = ", ".join(f"beta={b:g}: gap={final[b]:.2e} monotone={tables[b].monotone}" for b in tables)
    report(4, ok, f"{detail}, {dt:.2f}s (<2s)")
    assert ok


def test_criterion_05_divergence_and_sandwich(report):
    r_values = [256, 512, 1024, 2048, 4096]
    fit = divergence_fit(-1.0, r_values)
    # total drop threshold 0.5 frozen after the first scan measured 0.935
    sandwich = {(r, b): sandwich_check(r, b).ok for b in (-0.5, -1.0, -2.0, -3.0) for r in r_values}
    failed = [k for k, v in sandwich.items() if not v]
    ok = fit.decreasing and fit.total_drop >= 0.5 and not failed
    report(5, ok, f"beta=-1 decreasing={fit.decreasing} drop={fit.total_drop:.3f} (>=0.5), "
                  f"sandwich {len(sandwich) - len(failed)}/{len(sandwich)} ok")
    assert ok


def test_criterion_06_ratio_domination_fuzz(report):
    rng = np.random.Generator(np.random.Philox(42))
    violations, worst_margin, worst_equal = 0, math.inf, 0.0
    for r in range(3, 9):
        for _ in range(10_000):
            p, q = shannon.sample_dominating_pair(r, rng)
            v = shannon.ratio_domination_verdict(p, q)
            worst_margin = min(worst_margin, v.margin)
            violations += not (v.entropy_q <= v.entropy_p and v.consistent)
        for _ in range(100):
            p, q = shannon.sample_equal_ratio_pair(r, rng)
            worst_equal = max(worst_equal, abs(shannon.entropy(p) - shannon.entropy(q)))
    ok = violations == 0 and worst_equal <= 1e-12
    report(6, ok, f"6x10^4 pairs: violations={violations}, min S(P)-S(Q)={worst_margin:.1e}, "
                  f"equal pairs max gap={worst_equal:.1e}")
    assert ok


def test_criterion_07_pde_convention(report):
    t = time.perf_counter()
    flat = exact_extremal_solution("flat", Grid2D.disc(0.9, H), 3, RDifferential(3)).residual
    ratios = {}
    for r in (2, 3, 4, 5):
        g = Grid2D.disc(0.9, 1 / 32, (1 / 48, 1 / 48))
        res = []
        for _ in range(3):
            res.append(exact_extremal_solution("hyperbolic", g, r, MINUS_INFINITY_WEIGHT).residual)
            g = g.refine()
        ratios[r] = [res[0] / res[1], res[1] / res[2]]
    dt = time.perf_counter() - t
    ok = flat <= 1e-12 and all(3.5 <= x <= 4.5 for v in ratios.values() for x in v) and dt < 30
    report(7, ok, f"flat residual={flat:.1e}, hyperbolic ratios h=1/32..1/128: "
                  f"{ {r: [round(x, 3) for x in v] for r, v in ratios.items()} }, {dt:.1f}s (<30s)")
    assert ok


def test_criterion_08_solver_gate(report, disc):
    t = time.perf_counter()
    sol = solve_dirichlet(3, q_z(3), disc, boundary="flat-like")
    dt = time.perf_counter() - t
    a = disc.active
    sym = float(np.max(np.abs(sol.u[0][a] - sol.u[1][a])))
    ok = sol.converged and sol.residual <= 1e-10 and sol.iterations <= 25 and sym <= 1e-10 and dt < 60
    report(8, ok, f"iterations={sol.iterations}, residual={sol.residual:.1e}, max|u1-u2|={sym:.1e}, {dt:.1f}s (<60s)")
    assert ok


def _entropy_subchecks(r, sol, m):
    out = []
    for beta in BETAS_9:
        ef = entropy_field(m, beta)
        s = ef.summary
        out.append((f"r={r} beta={beta:g} S_min-S_rb", s["S_min"] - s["S_lower"], s["S_min"] >= s["S_lower"] - 1e-8))
        out.append((f"r={r} beta={beta:g} log r-S_max", s["upper_margin"], s["S_max"] < s["log_r"]))
        if r == 3:
            patch = sol.grid.patch(0j)
            gap = abs(float(np.nanmin(ef.S[patch])) - math.log(2))
            out.append((f"r=3 beta={beta:g} |patch min S-log2|", gap, gap <= 0.05))
    return out


def test_criterion_09_entropy_property_suite(report, property_instances, flat_like_instances):
    sub = []
    for r, sol in property_instances.items():
        m = metric_fields(sol)
        adj = check_adjacent_bounds(m)
        sub.extend((f"r={r} {c.name}", c.slack, c.passed) for c in adj.checks)
        sub.extend(_entropy_subchecks(r, sol, m))
    ok = all(p for *_, p in sub)
    failed = [f"{name} ({val:+.3g})" for name, val, p in sub if not p]
    report(9, ok, f"{len(sub) - len(failed)}/{len(sub)} subchecks hold; failing: {failed or 'none'}")
    # same suite on the flat-like data, for information only
    diag = []
    for r, sol in flat_like_instances.items():
        m = metric_fields(sol)
        diag.extend(check_adjacent_bounds(m).failures())
        diag.extend(n for n, _, p in _entropy_subchecks(r, sol, m) if not p)
    report("9 (flat-like data)", not diag, f"violations: {[getattr(d, 'name', d) for d in diag] or 'none'}", info=True)
    assert ok


def test_criterion_10_sup_chain_suite(report, property_instances, flat_like_instances):
    sub = []
    for r, sol in property_instances.items():
        rep = sup_chain_check(metric_fields(sol))
        sub.extend((f"r={r} {c.name}", c.slack, c.passed) for c in rep.checks)
    ok = all(p for *_, p in sub) and all(s >= 0 for _, s, _ in sub)
    min_slack = min(s for _, s, _ in sub)
    failed = [f"{n} ({s:+.3g})" for n, s, p in sub if not p]
    report(10, ok, f"{len(sub)} inequalities, min slack={min_slack:.2e}, failing: {failed or 'none'}")
    diag = []
    for r, sol in flat_like_instances.items():
        diag.extend(f"r={r} {c.name} ({c.slack:+.3g})" for c in sup_chain_check(metric_fields(sol)).failures())
    report("10 (flat-like data)", not diag, f"violations: {diag or 'none'}", info=True)
    assert ok


def test_criterion_11_mollification_monotonicity(report, disc):
    w = sample_weight(q_z(3), disc)
    a = disc.active
    moll = [mollify(w, k * H) for k in (8, 4, 2)]
    w_step = max(float(np.max(moll[i + 1].values[a] - moll[i].values[a])) for i in range(2))
    sols = [solve_dirichlet(3, m.as_weight(), disc, boundary="flat-like") for m in moll]
    steps = [sols[i + 1].u[:, a] - sols[i].u[:, a] for i in range(2)]
    u_step = max(float(s.max()) for s in steps)
    cauchy = [float(np.abs(s).max()) for s in steps]
    ok = w_step <= 0.0 and u_step <= 1e-12 and cauchy[1] < cauchy[0]
    report(11, ok, f"max weight increase={w_step:.1e}, max u increase={u_step:.1e}, "
                   f"Cauchy sup-differences {cauchy[0]:.2e} -> {cauchy[1]:.2e}")
    assert ok
