"""The discrete Toda system and its closed-form extremal solutions.

Chart conventions: i d dbar u = (Delta u / 2) dx dy and vol(H) = 2 e^u dx dy.
With H_j = e^{u_j} (j = 1..r-1) and the degenerate metric

    e^{u_0} = e^{u_r} = e^{r phi} * exp(-(u_1 + ... + u_{r-1}))   (= |q|^2 e^{-sum u})

the system reads

    Delta u_j = 8 e^{u_j} - 4 e^{u_{j-1}} - 4 e^{u_{j+1}},   j = 1..r-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..grid import Grid2D, laplacian
from ..spectrum import lambda_values
from ..weights import (
    FLAT,
    MINUS_INFINITY,
    MINUS_INFINITY_WEIGHT,
    RDifferential,
    WeightField,
    classify_weight,
    phi_q,
)

BOUNDARY_KINDS = ("flat-like", "hyperbolic-like", "custom")


class BoundaryError(ValueError):
    pass


def weight_abs2(weight, grid: Grid2D, rank: int) -> np.ndarray:
    """e^{r phi} on the lattice: |q|^2 for an r-differential, 0 for the -inf weight."""
    if weight is MINUS_INFINITY_WEIGHT:
        return np.zeros(grid.shape)
    if isinstance(weight, RDifferential):
        return weight.abs2(grid.z)
    if isinstance(weight, WeightField):
        return weight.abs2() if weight.source is not None else np.exp(rank * weight.values)
    raise TypeError(f"unsupported weight {weight!r}")


def weight_values(weight, grid: Grid2D) -> np.ndarray:
    if weight is MINUS_INFINITY_WEIGHT:
        return np.full(grid.shape, -np.inf)
    if isinstance(weight, RDifferential):
        return phi_q(weight, grid.z)
    return weight.values


def weight_kind(weight, grid: Grid2D) -> str:
    if isinstance(weight, WeightField):
        return classify_weight(weight.source, grid) if weight.source is not None else "generic"
    return classify_weight(weight, grid)


def degenerate_density(u: np.ndarray, abs2: np.ndarray) -> np.ndarray:
    """e^{u_0} = |q|^2 exp(-sum_k u_k); exactly zero where |q| = 0."""
    with np.errstate(over="ignore"):
        return abs2 * np.exp(-u.sum(axis=0))


def residual_fields(u: np.ndarray, abs2: np.ndarray, grid: Grid2D) -> np.ndarray:
    """R_j = Delta_h u_j - 8 e^{u_j} + 4 e^{u_{j-1}} + 4 e^{u_{j+1}} on interior nodes (NaN elsewhere).

    ``u`` has shape (r-1, nx, ny); u_0 = u_r enter through ``degenerate_density``.
    """
    m = u.shape[0]
    e = np.exp(u)
    e0 = degenerate_density(u, abs2)
    out = np.full(u.shape, np.nan)
    for j in range(m):
        lo = e0 if j == 0 else e[j - 1]
        hi = e0 if j == m - 1 else e[j + 1]
        rj = laplacian(u[j], grid.h) - 8.0 * e[j] + 4.0 * lo + 4.0 * hi
        out[j][grid.interior] = rj[grid.interior]
    return out


def sup_residual(u: np.ndarray, abs2: np.ndarray, grid: Grid2D) -> float:
    res = residual_fields(u, abs2, grid)
    return float(np.max(np.abs(res[:, grid.interior])))


@dataclass
class InteriorLaplacian:
    """Five-point Laplacian restricted to interior unknowns, with boundary coupling split off."""

    grid: Grid2D
    index: np.ndarray = field(init=False)  # lattice -> unknown number, -1 elsewhere
    matrix: sparse.csr_matrix = field(init=False)
    boundary_matrix: sparse.csr_matrix = field(init=False)  # interior rows x lattice columns

    def __post_init__(self):
        g = self.grid
        n_i = int(g.interior.sum())
        self.index = np.full(g.shape, -1, dtype=np.int64)
        self.index[g.interior] = np.arange(n_i)
        ii, jj = np.nonzero(g.interior)
        rows, cols, vals = [np.arange(n_i)], [np.arange(n_i)], [np.full(n_i, -4.0 / g.h**2)]
        b_rows, b_cols = [], []
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = ii + di, jj + dj
            nb = self.index[ni, nj]
            inner = nb >= 0
            rows.append(np.arange(n_i)[inner])
            cols.append(nb[inner])
            vals.append(np.full(inner.sum(), 1.0 / g.h**2))
            b_rows.append(np.arange(n_i)[~inner])
            b_cols.append(np.ravel_multi_index((ni[~inner], nj[~inner]), g.shape))
        self.matrix = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_i, n_i)
        )
        br, bc = np.concatenate(b_rows), np.concatenate(b_cols)
        self.boundary_matrix = sparse.csr_matrix(
            (np.full(br.size, 1.0 / g.h**2), (br, bc)), shape=(n_i, g.shape[0] * g.shape[1])
        )

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def jacobian(u_int: np.ndarray, abs2_int: np.ndarray, lap: InteriorLaplacian) -> sparse.csr_matrix:
    """Jacobian of the stacked interior residual in the stacked interior unknowns.

    Per node the exponential part is a dense (r-1)x(r-1) block, because
    d e^{u_0} / d u_k = -e^{u_0} for every k.
    """
    m, n = u_int.shape
    e = np.exp(u_int)
    e0 = abs2_int * np.exp(-u_int.sum(axis=0))
    blocks = [[None] * m for _ in range(m)]
    for j in range(m):
        for k in range(m):
            d = np.zeros(n)
            if j == k:
                d -= 8.0 * e[j]
            if k == j - 1 or k == j + 1:
                d += 4.0 * e[k]
            # u_0 enters the first and last equation (twice when r = 2)
            d -= 4.0 * e0 * ((j == 0) + (j == m - 1))
            blocks[j][k] = sparse.diags(d)
            if j == k:
                blocks[j][k] = blocks[j][k] + lap.matrix
    return sparse.bmat(blocks, format="csc")


def flat_fields(weight, grid: Grid2D, rank: int) -> np.ndarray:
    phi = weight_values(weight, grid)
    return np.repeat(phi[None, :, :], rank - 1, axis=0)


def hyperbolic_fields(grid: Grid2D, rank: int) -> np.ndarray:
    """u_j = log lambda_j - 2 log(1 - |z|^2) on nodes with |z| < 1 (NaN elsewhere)."""
    rho = np.abs(grid.z) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        base = np.where(rho < 1.0, -2.0 * np.log1p(-np.minimum(rho, 1.0)), np.nan)
    lam = lambda_values(rank)
    return np.log(lam)[:, None, None] + base[None, :, :]


def boundary_fields(kind: str, weight, grid: Grid2D, rank: int, custom=None) -> np.ndarray:
    """Dirichlet data (and initial-guess extension) for a boundary kind."""
    if kind == "flat-like":
        if weight is MINUS_INFINITY_WEIGHT:
            raise BoundaryError("flat-like boundary data needs a weight that is finite on the boundary")
        u = flat_fields(weight, grid, rank)
        if not np.all(np.isfinite(u[:, grid.boundary])):
            raise BoundaryError("q vanishes on the boundary ring; flat-like data is not finite")
        return u
    if kind == "hyperbolic-like":
        if grid.shape_kind != "disc" or grid.bounds[0] >= 1.0:
            raise BoundaryError("hyperbolic-like boundary data needs a disc grid of radius < 1")
        u = hyperbolic_fields(grid, rank)
        if not np.all(np.isfinite(u[:, grid.active])):
            raise BoundaryError("hyperbolic data not finite on the active nodes")
        return u
    if kind == "custom":
        if custom is None:
            raise BoundaryError("custom boundary kind needs explicit fields")
        u = np.array(custom, dtype=float)
        if u.shape != (rank - 1,) + grid.shape:
            raise BoundaryError(f"custom fields have shape {u.shape}, expected {(rank - 1,) + grid.shape}")
        if not np.all(np.isfinite(u[:, grid.boundary])):
            raise BoundaryError("custom boundary data is not finite on the boundary ring")
        return u
    raise BoundaryError(f"unknown boundary kind {kind!r}; expected one of {BOUNDARY_KINDS}")


def extremal_kind_ok(kind: str, weight, grid: Grid2D) -> None:
    wk = weight_kind(weight, grid)
    if kind == "flat" and wk != FLAT:
        raise ValueError(f"flat solution needs a weight with no zeros on the domain (got {wk})")
    if kind == "hyperbolic":
        if wk != MINUS_INFINITY:
            raise ValueError("hyperbolic solution needs the identically -infinity weight")
        if grid.shape_kind != "disc" or grid.bounds[0] >= 1.0:
            raise ValueError("hyperbolic solution needs a disc of radius < 1")
    if kind not in ("flat", "hyperbolic"):
        raise ValueError(f"unknown extremal kind {kind!r}")
