"""Damped Newton solver for the Dirichlet problem of the discrete Toda system."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import spsolve

from ..grid import Grid2D
from ..weights import RDifferential, WeightField
from . import system

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


class NewtonStagnation(RuntimeError):
    """Newton failed to reach the residual tolerance; ``best`` holds the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(eq=False)
class GridSolution:
    rank: int
    grid: Grid2D
    weight: object  # RDifferential, WeightField or MINUS_INFINITY_WEIGHT
    u: np.ndarray  # (r-1, nx, ny), NaN off the active set
    boundary_kind: str
    iterations: int = 0
    residual: float = float("nan")
    converged: bool = False
    history: list = field(default_factory=list)
    exact: str | None = None  # "flat" / "hyperbolic" for closed-form solutions

    @property
    def abs2(self) -> np.ndarray:
        return system.weight_abs2(self.weight, self.grid, self.rank)

    def residual_fields(self) -> np.ndarray:
        return system.residual_fields(self.u, self.abs2, self.grid)

    def sup_residual(self) -> float:
        return system.sup_residual(self.u, self.abs2, self.grid)

    def reality_defect(self) -> float:
        """max |u_j - u_{r-j}| over active nodes."""
        a = self.grid.active
        return float(np.max(np.abs(self.u[:, a] - self.u[::-1, a])))


def residual(sol: GridSolution) -> np.ndarray:
    """Residual fields (r-1, nx, ny) of a solution container, NaN off the interior."""
    return sol.residual_fields()


def exact_extremal_solution(kind: str, grid: Grid2D, rank: int, weight) -> GridSolution:
    """Closed-form flat (H_j = e^{phi}) or hyperbolic (H_j = lambda_j H) fields."""
    system.extremal_kind_ok(kind, weight, grid)
    if kind == "flat":
        u = system.flat_fields(weight, grid, rank)
        boundary = "flat-like"
    else:
        u = system.hyperbolic_fields(grid, rank)
        boundary = "hyperbolic-like"
    u = np.where(grid.active[None], u, np.nan)
    sol = GridSolution(rank, grid, weight, u, boundary, exact=kind)
    sol.residual = sol.sup_residual()
    return sol


def _newton(u, abs2, lap, grid, tol, max_iter, history):
    interior = grid.interior
    m = u.shape[0]

    def stacked_residual(v):
        return system.residual_fields(v, abs2, grid)[:, interior]

    res = stacked_residual(u)
    norm = float(np.max(np.abs(res)))
    history.append(norm)
    it = 0
    while norm > tol and it < max_iter:
        it += 1
        J = system.jacobian(u[:, interior], abs2[interior], lap)
        step = spsolve(J, -res.ravel()).reshape(m, -1)
        alpha = 1.0
        while True:
            trial = u.copy()
            trial[:, interior] += alpha * step
            with np.errstate(over="ignore", invalid="ignore"):
                tres = stacked_residual(trial)
            tnorm = float(np.max(np.abs(tres))) if np.all(np.isfinite(tres)) else np.inf
            # Armijo condition on the sup-norm
            if tnorm <= (1.0 - 1e-4 * alpha) * norm:
                break
            alpha *= 0.5
            if alpha < 1e-10:
                return u, it, norm, False
        u, res, norm = trial, tres, tnorm
        history.append(norm)
        log.debug("newton it=%d alpha=%g residual=%.3e", it, alpha, norm)
    return u, it, norm, norm <= tol


def solve_dirichlet(
    rank: int,
    weight,
    grid: Grid2D,
    boundary: str = "flat-like",
    custom=None,
    tol: float = RESIDUAL_TOL,
    max_iter: int = 50,
    continuation=None,
    raise_on_failure: bool = True,
) -> GridSolution:
    """Solve the discrete Toda system with Dirichlet data on the boundary ring.

    The initial guess is the boundary-data extension itself.  If plain damped
    Newton stalls, the solve is repeated along ``continuation`` (a increasing
    list of scale factors t ending at 1, q -> t q), warm-starting each stage.
    """
    if isinstance(weight, RDifferential) and weight.rank != rank:
        raise ValueError(f"r-differential has rank {weight.rank}, solver rank is {rank}")
    if isinstance(weight, WeightField) and weight.grid is not grid:
        if weight.grid.shape != grid.shape or not np.allclose(weight.grid.z, grid.z):
            raise ValueError("weight field lives on a different grid")
    u_b = system.boundary_fields(boundary, weight, grid, rank, custom)
    abs2 = system.weight_abs2(weight, grid, rank)
    lap = system.InteriorLaplacian(grid)
    u0 = np.where(grid.active[None], u_b, np.nan)
    if not np.all(np.isfinite(u0[:, grid.interior])):
        u0 = _harmonic_extension(u0, lap, grid)

    history: list = []
    u, it, norm, ok = _newton(u0, abs2, lap, grid, tol, max_iter, history)
    total = it
    if not ok and continuation:
        if not isinstance(weight, RDifferential):
            raise ValueError("continuation in t q needs an r-differential weight")
        log.info("newton stalled at %.3e; continuing in t over %s", norm, list(continuation))
        u = u0
        for t in continuation:
            qt = weight.scaled(t ** (1.0 / rank))  # leading * t
            ub_t = system.boundary_fields(boundary, qt, grid, rank, custom)
            u = np.where(grid.boundary[None], ub_t, u)
            u, it, norm, ok = _newton(u, system.weight_abs2(qt, grid, rank), lap, grid, tol, max_iter, history)
            total += it
            if not ok:
                break
    sol = GridSolution(rank, grid, weight, u, boundary, total, norm, ok, history)
    if not ok and raise_on_failure:
        raise NewtonStagnation(
            f"Newton stalled after {total} iterations with sup-residual {norm:.3e} (tol {tol:.1e})", sol
        )
    return sol


def _harmonic_extension(u, lap, grid):
    out = u.copy()
    for j in range(u.shape[0]):
        b = np.nan_to_num(u[j], nan=0.0).ravel()
        rhs = -(lap.boundary_matrix @ b)
        out[j][grid.interior] = spsolve(lap.matrix.tocsc(), rhs)
    return out
