"""Holomorphic r-differentials, their subharmonic weights, and mollification.

Everything lives in one global coordinate with the flat reference metric
h_ref = 1, so a polynomial r-differential q = c * prod (z - a_i)^{m_i}
has weight

    phi_q(z) = (1/r) log |q(z)|^2 = (2/r) (log|c| + sum_i m_i log|z - a_i|).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import Grid2D, laplacian

FLAT = "flat"
MINUS_INFINITY = "identically-minus-infinity"
GENERIC = "generic"


class _MinusInfinity:
    """The weight that is identically -infinity (q = 0)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MINUS_INFINITY_WEIGHT"

    def __reduce__(self):
        return (_MinusInfinity, ())


MINUS_INFINITY_WEIGHT = _MinusInfinity()


@dataclass(frozen=True)
class RDifferential:
    rank: int
    zeros: tuple = ()  # ((position, multiplicity), ...)
    leading: complex = 1.0

    def __post_init__(self):
        if self.rank < 2:
            raise ValueError(f"rank must be at least 2, got {self.rank}")
        if self.leading == 0:
            raise ValueError("leading coefficient must be non-zero (use MINUS_INFINITY_WEIGHT for q = 0)")
        zs = []
        for a, m in self.zeros:
            if int(m) != m or m < 1:
                raise ValueError(f"multiplicity must be a positive integer, got {m}")
            zs.append((complex(a), int(m)))
        object.__setattr__(self, "zeros", tuple(zs))
        object.__setattr__(self, "leading", complex(self.leading))

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.zeros)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.leading, dtype=complex)
        for a, m in self.zeros:
            out = out * (z - a) ** m
        return out

    def abs2(self, z) -> np.ndarray:
        """|q(z)|^2 computed as a product (exactly zero at the zeros)."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, abs(self.leading) ** 2)
        for a, m in self.zeros:
            out = out * np.abs(z - a) ** (2 * m)
        return out

    def scaled(self, t: complex) -> "RDifferential":
        """The r-differential t^r q."""
        return RDifferential(self.rank, self.zeros, self.leading * complex(t) ** self.rank)

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "leading": [self.leading.real, self.leading.imag],
            "zeros": [[a.real, a.imag, m] for a, m in self.zeros],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RDifferential":
        lead = d.get("leading", [1.0, 0.0])
        zeros = tuple((complex(re, im), int(m)) for re, im, m in d.get("zeros", []))
        return cls(int(d["rank"]), zeros, complex(lead[0], lead[1]))


def phi_q(q: RDifferential, z):
    """(1/r) log|q(z)|^2; exactly -inf at the zeros of q."""
    z = np.asarray(z, dtype=complex)
    r = q.rank
    out = np.full(z.shape, (2.0 / r) * np.log(abs(q.leading)))
    with np.errstate(divide="ignore"):
        for a, m in q.zeros:
            out = out + (2.0 * m / r) * np.log(np.abs(z - a))
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class WeightField:
    grid: Grid2D
    values: np.ndarray
    source: RDifferential | None = None
    rank: int | None = None

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def neg_infinite(self) -> np.ndarray:
        return np.isneginf(self.values)

    def abs2(self) -> np.ndarray:
        """e^{r phi}; equals |q|^2 when the weight comes from q."""
        if self.source is not None:
            return self.source.abs2(self.grid.z)
        return np.exp(self.rank * self.values)


def sample_weight(q: RDifferential, grid: Grid2D) -> WeightField:
    z = grid.z
    for a, _ in q.zeros:
        d = np.abs(z - a).min()
        if d < 1e-9 * grid.h:
            raise ValueError(
                f"zero {a} coincides with a grid node; perturb the grid offset (currently {grid.offset})"
            )
    return WeightField(grid, phi_q(q, z), q, q.rank)


def subharmonicity_defect(w: WeightField, exclusion: float = 0.0) -> float:
    """min of the discrete Laplacian over finite interior nodes at distance > exclusion from zeros."""
    lap = laplacian(w.values, w.grid.h)
    mask = w.grid.interior & np.isfinite(lap)
    if w.source is not None:
        for a, _ in w.source.zeros:
            mask &= np.abs(w.grid.z - a) > exclusion
    return float(lap[mask].min())


# bump kernel rho(y) = 3/(pi eps^2) (1 - |y|^2/eps^2)^2 on |y| < eps; unit mass


def _bump_mass_within(tau):
    """Kernel mass inside radius tau*eps."""
    tau = np.clip(tau, 0.0, 1.0)
    return 1.0 - (1.0 - tau**2) ** 3


def _bump_log_tail(tau):
    """int_tau^1 6 t (1 - t^2)^2 log t dt."""
    u = np.clip(tau, 0.0, 1.0) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        p = u - u**2 + u**3 / 3.0
        g = np.where(u > 0, p * np.log(u), 0.0) - u + u**2 / 2.0 - u**3 / 9.0
    g_one = -11.0 / 18.0
    return 1.5 * (g_one - g)


def radial_log_average(d, eps: float):
    """Convolution of log|z - a| with the bump kernel, at distance d from a.

    Uses the circle-mean identity mean_{|y|=s} log|x - y| = max(log|x|, log s).
    Equals log d for d >= eps.
    """
    d = np.asarray(d, dtype=float)
    tau = d / eps
    inside = tau < 1.0
    with np.errstate(divide="ignore"):
        log_d = np.log(d)
    mass = _bump_mass_within(tau)
    # mass ~ 3 tau^2 kills the log singularity at d = 0
    safe_log = np.where(d > 0, log_d, 0.0)
    inner = safe_log * mass + np.log(eps) * (1.0 - mass) + _bump_log_tail(tau)
    return np.where(inside, inner, log_d)


def bump_kernel(eps: float, h: float) -> np.ndarray:
    """Discrete bump kernel on the lattice, normalized to unit discrete mass."""
    n = int(np.floor(eps / h))
    k = np.arange(-n, n + 1) * h
    rr = (k[:, None] ** 2 + k[None, :] ** 2) / eps**2
    ker = np.where(rr < 1.0, (1.0 - rr) ** 2, 0.0)
    return ker / ker.sum()


@dataclass(frozen=True, eq=False)
class MollifiedWeight:
    base: WeightField
    epsilon: float
    values: np.ndarray
    exact: bool

    def as_weight(self) -> WeightField:
        """A generic weight field (no q attached) carrying the mollified values."""
        return WeightField(self.base.grid, self.values, None, self.base.rank)


def mollify(w: WeightField, epsilon: float) -> MollifiedWeight:
    """Smooth a weight field with the radial bump kernel of radius epsilon.

    Weights induced by an r-differential are convolved exactly through the
    circle-mean identity (no lattice error, so the family is monotone in
    epsilon to rounding).  Other fields use a discrete convolution with the
    discretely normalized kernel.
    """
    h = w.grid.h
    if epsilon < 2 * h:
        raise ValueError(f"epsilon = {epsilon} < 2h = {2 * h}; kernel not resolvable on the grid")
    if w.source is not None:
        q = w.source
        z = w.grid.z
        vals = np.full(z.shape, (2.0 / q.rank) * np.log(abs(q.leading)))
        for a, m in q.zeros:
            vals = vals + (2.0 * m / q.rank) * radial_log_average(np.abs(z - a), epsilon)
        return MollifiedWeight(w, float(epsilon), vals, True)
    if np.any(~np.isfinite(w.values)):
        raise ValueError("discrete mollification needs a finite field")
    vals = ndimage.convolve(w.values, bump_kernel(epsilon, h), mode="nearest")
    return MollifiedWeight(w, float(epsilon), vals, False)


def flux_mass(q: RDifferential, index: int, radius: float, n_angles: int = 512) -> float:
    """Outward flux of grad phi_q through the circle of given radius around zero ``index``.

    Equals 4 pi m_i / r.  The normal derivative is taken by centered
    differences of phi_q in the radial direction; the angular integral is
    the periodic trapezoid rule.
    """
    if not q.zeros:
        raise ValueError("q has no zeros; flux mass is not defined")
    a, _ = q.zeros[index]
    for k, (b, _) in enumerate(q.zeros):
        if k != index and abs(b - a) <= radius:
            raise ValueError(f"circle of radius {radius} around zero {index} encloses or meets zero {k}")
    theta = 2.0 * np.pi * np.arange(n_angles) / n_angles
    e = np.exp(1j * theta)
    delta = 1e-5 * radius
    dphi = (phi_q(q, a + (radius + delta) * e) - phi_q(q, a + (radius - delta) * e)) / (2 * delta)
    return float(np.sum(dphi) * radius * 2.0 * np.pi / n_angles)


def classify_weight(q, grid: Grid2D | None = None) -> str:
    """flat, identically-minus-infinity, or generic.

    With a grid, zeros outside the domain do not count: the weight is then
    harmonic on the domain and the flat solution applies.
    """
    if q is MINUS_INFINITY_WEIGHT:
        return MINUS_INFINITY
    if not q.zeros:
        return FLAT
    if grid is not None:
        z = grid.z[grid.active]
        reach = grid.h  # zeros within a cell of the active set are inside
        inside = [a for a, _ in q.zeros if np.abs(z - a).min() <= reach]
        if not inside:
            return FLAT
    return GENERIC
