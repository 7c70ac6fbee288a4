"""Metric fields, adjacent-ratio inequalities, sup-chain bounds and the entropy field.

Notation on a solution with log-densities u_0..u_{r-1} (u_0 degenerate):

    sigma_j  = u_{j-1} - u_j   (j = 1..n),      n = floor(r/2), delta = r - 2n
    sigma'_j = u_{j+1} - u_j   (j = 1..n-1)
    M_j  = sup exp(sigma_j),   M'_j = sup exp(sigma'_j)   over the test region
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ..grid import Grid2D
from ..spectrum import ensemble, lambda_values
from ..weights import FLAT, MINUS_INFINITY
from . import system
from .solver import GridSolution

PRODUCT_RTOL = 1e-10


@dataclass(eq=False)
class MetricFields:
    rank: int
    grid: Grid2D
    log_vol: np.ndarray  # (r, nx, ny): index 0 is the degenerate metric, -inf at zeros
    kind: str  # flat / identically-minus-infinity / generic

    @property
    def n(self) -> int:
        return self.rank // 2

    @property
    def delta(self) -> int:
        return self.rank - 2 * self.n

    @property
    def vol(self) -> np.ndarray:
        return np.exp(self.log_vol)

    def sigma(self, j: int) -> np.ndarray:
        return self.log_vol[j - 1] - self.log_vol[j]

    def sigma_prime(self, j: int) -> np.ndarray:
        return self.log_vol[j + 1] - self.log_vol[j]

    def product_defect(self, abs2: np.ndarray) -> float:
        """Max relative deviation of e^{u_0} prod e^{u_k} from |q|^2 on active nodes."""
        a = self.grid.active
        prod = np.prod(self.vol[:, a], axis=0)
        target = abs2[a]
        scale = np.where(target > 0, target, 1.0)
        return float(np.max(np.abs(prod - target) / scale))


def metric_fields(sol: GridSolution) -> MetricFields:
    abs2 = sol.abs2
    with np.errstate(divide="ignore"):
        log_abs2 = np.log(abs2)
    log_u0 = log_abs2 - np.nansum(sol.u, axis=0)
    log_vol = np.concatenate([log_u0[None], sol.u], axis=0)
    log_vol[:, ~sol.grid.active] = np.nan
    m = MetricFields(sol.rank, sol.grid, log_vol, system.weight_kind(sol.weight, sol.grid))
    defect = m.product_defect(abs2)
    if defect > PRODUCT_RTOL:
        raise ArithmeticError(f"product identity violated: relative defect {defect:.2e}")
    return m


@dataclass(frozen=True)
class Check:
    """One inequality lhs <= rhs (or lhs < rhs when ``strict``) with its slack rhs - lhs."""

    name: str
    lhs: float
    rhs: float
    strict: bool = False
    tol: float = 1e-12
    node: tuple | None = None
    point: tuple | None = None

    @property
    def slack(self) -> float:
        if np.isinf(self.rhs) and np.isinf(self.lhs) and self.rhs == self.lhs:
            return 0.0
        return float(self.rhs - self.lhs)

    @property
    def passed(self) -> bool:
        return self.slack > 0 if self.strict else self.slack >= -self.tol

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "strict": self.strict,
            "passed": self.passed,
            "node": list(self.node) if self.node else None,
            "point": list(self.point) if self.point else None,
        }


@dataclass
class InequalityReport:
    rank: int
    kind: str
    margin: float
    checks: list = field(default_factory=list)
    sups: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "rank": self.rank,
            "kind": self.kind,
            "margin": self.margin,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "sups": self.sups,
            "notes": self.notes,
        }


def _extreme(field_: np.ndarray, mask: np.ndarray, grid: Grid2D, which: str):
    vals = np.where(mask, field_, np.nan)
    flat_idx = np.nanargmax(vals) if which == "max" else np.nanargmin(vals)
    node = np.unravel_index(flat_idx, vals.shape)
    z = grid.z[node]
    return float(vals[node]), (int(node[0]), int(node[1])), (float(z.real), float(z.imag))


def check_adjacent_bounds(m: MetricFields, margin: float | None = None, tol: float = 1e-12) -> InequalityReport:
    """Pointwise bounds lambda_{j-1}/lambda_j < e^{sigma_j} < 1 (2 <= j <= n) and e^{u_0 - u_1} <= 1.

    Extremal inputs are reported with their equality pattern: the flat
    solution saturates the upper bounds, the hyperbolic one the lower bounds.
    Strict inequalities are then recorded as non-strict.
    """
    grid = m.grid
    margin = 8 * grid.h if margin is None else margin
    region = grid.region(margin)
    lam = np.concatenate([[0.0], lambda_values(m.rank)])
    rep = InequalityReport(m.rank, m.kind, margin)
    flat = m.kind == FLAT
    hyper = m.kind == MINUS_INFINITY
    if flat:
        rep.notes.append("flat case: upper bounds hold with equality; strictness excluded by the non-flat hypothesis")
    if hyper:
        rep.notes.append("extremal case (identically -inf weight): lower bounds hold with equality")
    for j in range(2, m.n + 1):
        e_sig = np.exp(m.sigma(j))
        lo_val, lo_node, lo_pt = _extreme(e_sig, region, grid, "min")
        hi_val, hi_node, hi_pt = _extreme(e_sig, region, grid, "max")
        rep.checks.append(
            Check(f"lambda_{j-1}/lambda_{j} < exp(sigma_{j})", lam[j - 1] / lam[j], lo_val,
                  strict=not hyper, tol=tol, node=lo_node, point=lo_pt)
        )
        rep.checks.append(
            Check(f"exp(sigma_{j}) < 1", hi_val, 1.0, strict=not flat, tol=tol, node=hi_node, point=hi_pt)
        )
    e_sig1 = np.exp(m.sigma(1))
    val, node, pt = _extreme(e_sig1, region, grid, "max")
    rep.checks.append(Check("exp(u_0 - u_1) <= 1", val, 1.0, strict=False, tol=tol, node=node, point=pt))
    rep.sups["strict_u0_u1"] = bool(val < 1.0)
    return rep


@dataclass
class SupChainReport(InequalityReport):
    M: dict = field(default_factory=dict)
    Mp: dict = field(default_factory=dict)
    B: dict = field(default_factory=dict)
    Bp: dict = field(default_factory=dict)
    dp: dict = field(default_factory=dict)
    Dp: dict = field(default_factory=dict)
    identity_residual: float = 0.0

    def as_dict(self) -> dict:
        d = super().as_dict()
        keyed = lambda dd: {str(k): v for k, v in dd.items()}  # noqa: E731
        d.update(M=keyed(self.M), Mp=keyed(self.Mp), B=keyed(self.B), Bp=keyed(self.Bp),
                 dp=keyed(self.dp), Dp=keyed(self.Dp), identity_residual=self.identity_residual)
        return d


def _sup_entry(val, node, pt, grid: Grid2D, margin: float) -> dict:
    # a sup on the inner edge of the test region is boundary-driven, not an interior maximum
    edge = bool(grid.distance_to_edge()[node] <= margin + 1.5 * grid.h)
    return {"value": val, "node": list(node), "point": list(pt), "on_region_edge": edge}


def sup_chain_check(m: MetricFields, margin: float | None = None, tol: float = 1e-12) -> SupChainReport:
    """Sup-quantities over the test region and the chain of bounds relating them.

    Checked: (M), (MB), (Mp), (MpBp), (mj1), (mjp1), M_j <= 1 and
    M'_j <= lambda_{j+1}/lambda_j, plus the exact identity satisfied by the
    reference ratios d'_j = lambda_{j+1}/lambda_j.
    """
    grid = m.grid
    margin = 8 * grid.h if margin is None else margin
    region = grid.region(margin)
    n, dl, r = m.n, m.delta, m.rank
    lam = np.concatenate([[0.0], lambda_values(r)])
    rep = SupChainReport(r, m.kind, margin)

    M, Mp = {}, {}
    for j in range(1, n + 1):
        val, node, pt = _extreme(np.exp(m.sigma(j)), region, grid, "max")
        M[j] = val
        rep.sups[f"M_{j}"] = _sup_entry(val, node, pt, grid, margin)
    for j in range(1, n):
        val, node, pt = _extreme(np.exp(m.sigma_prime(j)), region, grid, "max")
        Mp[j] = val
        rep.sups[f"M'_{j}"] = _sup_entry(val, node, pt, grid, margin)
    rep.M, rep.Mp = M, Mp

    inv = lambda x: np.inf if x == 0 else 1.0 / x  # noqa: E731
    B = {1: 2.0 * (1.0 - inv(M[1]))}
    for j in range(2, n + 1):
        B[j] = 2.0 - inv(M[j]) - M[j - 1]
    B[n + 1] = (2.0 - dl) * (1.0 - M[n])
    rep.B = B
    # products M_j B_j in a form that stays finite when M_1 = 0
    MB = {1: 2.0 * (M[1] - 1.0)}
    for j in range(2, n + 1):
        MB[j] = 2.0 * M[j] - 1.0 - M[j] * M[j - 1]

    add = rep.checks.append
    for j in range(1, n):
        rhs = 4 * j / (2 * j + 1) - (2 * j - 1) / (2 * j + 1) * inv(M[j + 1])
        add(Check(f"(M) j={j}", M[j], rhs, tol=tol))
    for j in range(1, n + 1):
        add(Check(f"(MB) j={j}", MB[j], B[j + 1], tol=tol))
    for j in range(1, n + 1):
        add(Check(f"(mj1) j={j}", M[j] - 1.0, (2 * j - 1) / 2 * B[j + 1], tol=tol))
    for j in range(1, n + 1):
        add(Check(f"(MJ1) j={j}", M[j], 1.0, tol=tol))

    if n >= 2:
        Bp = {0: 2.0 - Mp[1]}
        for j in range(1, n - 1):
            Bp[j] = 2.0 - 1.0 / Mp[j] - Mp[j + 1]
        Bp[n - 1] = (2.0 - dl) * (1.0 - 1.0 / Mp[n - 1])
        rep.Bp = Bp
        for j in range(1, n - 1):
            den = 2 * j + 1 - j * dl
            rhs = (4 * j - (2 * j - 1) * dl) / den - (2 * j - 1 - (j - 1) * dl) / den / Mp[n - j - 1]
            add(Check(f"(Mp) j={j}", Mp[n - j], rhs, tol=tol))
        for j in range(1, n):
            add(Check(f"(MpBp) j={j}", Mp[n - j] * Bp[n - j], Bp[n - j - 1], tol=tol))
        for j in range(1, n):
            coef = (2 * j - 1 - (j - 1) * dl) / (2 - dl)
            add(Check(f"(mjp1) j={j}", Mp[n - j] - 1.0, coef * Bp[n - j - 1], tol=tol))
        dp = {j: lam[j + 1] / lam[j] for j in range(1, n)}
        Dp = {0: 2.0 - dp[1]}
        for j in range(1, n - 1):
            Dp[j] = 2.0 - 1.0 / dp[j] - dp[j + 1]
        Dp[n - 1] = (2.0 - dl) * (1.0 - 1.0 / dp[n - 1])
        rep.dp, rep.Dp = dp, Dp
        for j in range(1, n):
            add(Check(f"(lambdajj) j={j}", Mp[j], dp[j], tol=tol))
        ident = [
            abs(dp[n - j] - 1.0 - (2 * j - 1 - (j - 1) * dl) / (2 - dl) * Dp[n - j - 1]) for j in range(1, n)
        ]
        rep.identity_residual = float(max(ident))
    return rep


@dataclass(eq=False)
class EntropyField:
    beta: float
    rank: int
    grid: Grid2D
    p: np.ndarray  # (r, nx, ny)
    S: np.ndarray  # (nx, ny), NaN off the active set
    summary: dict = field(default_factory=dict)


def entropy_field(m: MetricFields, beta: float, margin: float | None = None) -> EntropyField:
    """p_j proportional to vol(H_j)^beta over j = 0..r-1 and S = -sum p_j log p_j.

    Wherever vol(H_0) = 0 the j = 0 term is dropped, for every sign of beta.
    """
    if beta == 0:
        raise ValueError("entropy needs a non-zero real number beta")
    grid = m.grid
    lw = beta * m.log_vol
    # drop the degenerate term exactly where vol(H_0) = 0
    lw[0] = np.where(np.isneginf(m.log_vol[0]), -np.inf, lw[0])
    active = grid.active
    with np.errstate(invalid="ignore"):
        log_z = logsumexp(np.where(active[None], lw, 0.0), axis=0)
        log_p = lw - log_z[None]
        p = np.exp(log_p)
        terms = np.where(p > 0, p * log_p, 0.0)
    S = -terms.sum(axis=0)
    S[~active] = np.nan
    p[:, ~active] = np.nan
    margin = 8 * grid.h if margin is None else margin
    region = grid.region(margin)
    s_rb = ensemble(m.rank, beta).entropy
    log_r = float(np.log(m.rank))
    s_min, min_node, min_pt = _extreme(S, region, grid, "min")
    s_max, max_node, max_pt = _extreme(S, region, grid, "max")
    summary = {
        "beta": beta,
        "S_min": s_min,
        "S_min_node": list(min_node),
        "S_min_point": list(min_pt),
        "S_max": s_max,
        "S_max_node": list(max_node),
        "S_max_point": list(max_pt),
        "S_lower": s_rb,
        "log_r": log_r,
        "lower_margin": s_min - s_rb,
        "upper_margin": log_r - s_max,
        "sum_defect": float(np.nanmax(np.abs(p[:, active].sum(axis=0) - 1.0))),
    }
    return EntropyField(beta, m.rank, grid, p, S, summary)


@dataclass
class RefinementStudy:
    """Per-level convergence data on nested grids h, h/2, h/4, ..."""

    hs: list
    residuals: list  # sup residual of the exact solution, or of the converged solve
    differences: list  # sup |u_h - u_{h/2}| on common coarse nodes away from zeros (generic solves)
    exact: str | None

    @property
    def residual_ratios(self) -> list:
        return [a / b for a, b in zip(self.residuals, self.residuals[1:])]

    @property
    def difference_ratios(self) -> list:
        return [a / b for a, b in zip(self.differences, self.differences[1:])]

    def as_dict(self) -> dict:
        return {
            "h": self.hs,
            "residuals": self.residuals,
            "residual_ratios": self.residual_ratios,
            "differences": self.differences,
            "difference_ratios": self.difference_ratios,
            "exact": self.exact,
        }


def _restrict(fine: np.ndarray, fine_grid: Grid2D, coarse_grid: Grid2D) -> np.ndarray:
    """Values of a fine-grid field at the nodes of a nested coarse grid."""
    i = np.rint((coarse_grid.xs - fine_grid.xs[0]) / fine_grid.h).astype(int)
    j = np.rint((coarse_grid.ys - fine_grid.ys[0]) / fine_grid.h).astype(int)
    ok_i = (i >= 0) & (i < fine_grid.shape[0])
    ok_j = (j >= 0) & (j < fine_grid.shape[1])
    out = np.full((fine.shape[0],) + coarse_grid.shape, np.nan)
    out[:, np.ix_(ok_i, ok_j)[0], np.ix_(ok_i, ok_j)[1]] = fine[:, i[ok_i]][:, :, j[ok_j]]
    return out


def refinement_study(grids, rank: int, weight, exact: str | None = None, boundary: str = "flat-like",
                     exclusion: float = 0.25, **solve_kw) -> RefinementStudy:
    """Residual study of an exact solution, or Cauchy differences of solves, on nested grids.

    ``grids`` is a list of nested grids with halving spacing.  Differences
    are taken on interior coarse nodes farther than ``exclusion`` from the
    zeros of q.
    """
    from .solver import exact_extremal_solution, solve_dirichlet

    grids = list(grids)
    if len(grids) < 2:
        raise ValueError("refinement study needs at least two levels")
    for coarse, fine in zip(grids, grids[1:]):
        if abs(coarse.h / fine.h - 2.0) > 1e-12 or not fine.contains_nodes_of(coarse):
            raise ValueError("grids are not nested with halving spacing")
    sols = []
    for g in grids:
        if exact is not None:
            sols.append(exact_extremal_solution(exact, g, rank, weight))
        else:
            sols.append(solve_dirichlet(rank, weight, g, boundary=boundary, **solve_kw))
    residuals = [s.sup_residual() for s in sols]
    diffs = []
    if exact is None:
        zeros = [a for a, _ in getattr(weight, "zeros", ())]
        for (gc, sc), (gf, sf) in zip(zip(grids, sols), zip(grids[1:], sols[1:])):
            mask = gc.interior.copy()
            for a in zeros:
                mask &= np.abs(gc.z - a) > exclusion
            d = np.abs(_restrict(sf.u, gf, gc) - sc.u)[:, mask]
            diffs.append(float(np.nanmax(d)))
    return RefinementStudy([g.h for g in grids], residuals, diffs, exact)
