"""Shannon entropy of finite distributions and the ratio-domination comparison.

All logarithms are natural.  Distributions are validated on construction and
stored as read-only float arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUM_TOL = 1e-12


class InvalidDistribution(ValueError):
    pass


class DominationError(ValueError):
    """Raised when a pair of distributions does not satisfy the ratio ordering."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class MonotonicityViolation(ArithmeticError):
    pass


@dataclass(frozen=True)
class Distribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise InvalidDistribution(f"need a 1-d list of at least 2 entries, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvalidDistribution("non-finite entry")
        if np.any(p < 0):
            i = int(np.argmax(p < 0))
            raise InvalidDistribution(f"negative entry {p[i]!r} at index {i}")
        total = float(p.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidDistribution(f"entries sum to {total!r}, expected 1 within {SUM_TOL}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def r(self) -> int:
        return self.probs.size

    def __len__(self):
        return self.probs.size


@dataclass(frozen=True)
class RatioChain:
    """Consecutive ratios s_k = t_k / t_{k+1}, k = 0..r-2; the terminal ratio is 1."""

    ratios: np.ndarray

    def __post_init__(self):
        s = np.array(self.ratios, dtype=float)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("a ratio chain needs at least one ratio")
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise ValueError("ratios must be strictly positive and finite")
        s.setflags(write=False)
        object.__setattr__(self, "ratios", s)

    @property
    def r(self) -> int:
        return self.ratios.size + 1


def _as_distribution(d) -> Distribution:
    return d if isinstance(d, Distribution) else Distribution(d)


def entropy(d) -> float:
    """Return -sum p log p with 0 log 0 = 0."""
    p = _as_distribution(d).probs
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


@dataclass(frozen=True)
class BoundsReport:
    entropy: float
    r: int
    within_bounds: bool
    min_attained: bool
    max_attained: bool
    point_mass: bool
    uniform: bool
    pattern_consistent: bool


def entropy_bounds_check(d, atol: float = 1e-12) -> BoundsReport:
    """Check 0 <= S <= log r and that the extremes occur only at point mass / uniform."""
    dist = _as_distribution(d)
    p, r = dist.probs, dist.r
    s = entropy(dist)
    log_r = np.log(r)
    min_attained = abs(s) <= atol
    max_attained = abs(s - log_r) <= atol
    point_mass = bool(np.isclose(p.max(), 1.0, rtol=0, atol=atol))
    uniform = bool(np.allclose(p, 1.0 / r, rtol=0, atol=atol))
    return BoundsReport(
        entropy=s,
        r=r,
        within_bounds=(-atol <= s <= log_r + atol),
        min_attained=min_attained,
        max_attained=max_attained,
        point_mass=point_mass,
        uniform=uniform,
        pattern_consistent=(min_attained == point_mass) and (max_attained == uniform),
    )


def _check_sorted_tail(p: np.ndarray, name: str):
    if np.any(np.diff(p) < 0):
        i = int(np.argmax(np.diff(p) < 0))
        raise DominationError(f"{name} is not sorted ascending at index {i}", i)
    if np.any(p[1:] <= 0):
        i = 1 + int(np.argmax(p[1:] <= 0))
        raise DominationError(f"{name} has a zero in positive-tail position {i}", i)


def first_domination_violation(p, q, rtol: float = 1e-12) -> int | None:
    """Index j of the first failure of Q_j/Q_{j+1} <= P_j/P_{j+1}, or None."""
    P = _as_distribution(p).probs
    Q = _as_distribution(q).probs
    if P.size != Q.size:
        raise DominationError("distributions have different lengths")
    _check_sorted_tail(P, "P")
    _check_sorted_tail(Q, "Q")
    # cross-multiplied, so P_0 = Q_0 = 0 compares 0 <= 0
    lhs = Q[:-1] * P[1:]
    rhs = P[:-1] * Q[1:]
    bad = lhs > rhs + rtol * np.maximum(np.abs(lhs), np.abs(rhs))
    return int(np.argmax(bad)) if bad.any() else None


def dominates(p, q, rtol: float = 1e-12) -> bool:
    """True iff Q_j/Q_{j+1} <= P_j/P_{j+1} for every j (both sorted ascending)."""
    return first_domination_violation(p, q, rtol) is None


@dataclass(frozen=True)
class DominationVerdict:
    entropy_p: float
    entropy_q: float
    margin: float
    ratios_equal: bool
    equality: bool
    consistent: bool


def ratio_domination_verdict(p, q, rtol: float = 1e-12, atol: float = 1e-12) -> DominationVerdict:
    """Compare entropies of a dominating pair.

    For a dominating pair the entropy of Q never exceeds that of P, with
    equality exactly when every consecutive ratio agrees.  ``consistent``
    records whether the computed numbers agree with that statement.
    """
    j = first_domination_violation(p, q, rtol)
    if j is not None:
        raise DominationError(f"domination fails at index {j}: Q_{j}/Q_{j+1} > P_{j}/P_{j+1}", j)
    P = _as_distribution(p).probs
    Q = _as_distribution(q).probs
    sp, sq = entropy(P), entropy(Q)
    margin = sp - sq
    ratios_equal = bool(np.allclose(Q[:-1] * P[1:], P[:-1] * Q[1:], rtol=1e-9, atol=atol))
    equality = abs(margin) <= atol
    # strict inequality may be below resolution when ratios differ only slightly
    consistent = margin >= -atol and (equality or not ratios_equal)
    return DominationVerdict(sp, sq, margin, ratios_equal, equality, bool(consistent))


def distribution_from_ratios(c) -> Distribution:
    """t_j = s^(j) / sum_l s^(l) with s^(l) the suffix product s_l ... s_{r-1}."""
    chain = c if isinstance(c, RatioChain) else RatioChain(c)
    log_s = np.append(np.log(chain.ratios), 0.0)
    log_suffix = np.cumsum(log_s[::-1])[::-1]
    log_t = log_suffix - np.logaddexp.reduce(log_suffix)
    t = np.exp(log_t)
    # absorb rounding so the result validates
    return Distribution(t / t.sum())


def ratios_from_distribution(d) -> RatioChain:
    p = _as_distribution(d).probs
    if np.any(p <= 0):
        raise ValueError("ratio chain requires strictly positive entries")
    return RatioChain(p[:-1] / p[1:])


def _entropy_of_chain(log_s: np.ndarray) -> float:
    log_suffix = np.cumsum(np.append(log_s, 0.0)[::-1])[::-1]
    log_t = log_suffix - np.logaddexp.reduce(log_suffix)
    return float(-np.sum(np.exp(log_t) * log_t))


def ratio_monotonicity_probe(c, k: int, h: float) -> float:
    """Centered finite-difference slope of the entropy in the ratio s_k.

    Raises ``MonotonicityViolation`` if the slope is not positive while every
    ratio lies strictly inside (0, 1).
    """
    chain = c if isinstance(c, RatioChain) else RatioChain(c)
    s = np.array(chain.ratios)
    if not 0 <= k < s.size:
        raise IndexError(f"ratio index {k} out of range 0..{s.size - 1}")
    if h <= 0 or s[k] - h <= 0 or s[k] + h > 1:
        raise ValueError(f"step {h} leaves the domain (0, 1] around s_{k} = {s[k]}")
    up, down = s.copy(), s.copy()
    up[k] += h
    down[k] -= h
    slope = (_entropy_of_chain(np.log(up)) - _entropy_of_chain(np.log(down))) / (2 * h)
    if np.all((s > 0) & (s < 1)) and not slope > 0:
        raise MonotonicityViolation(f"entropy slope {slope} in s_{k} is not positive")
    return slope


def sample_dominating_pair(r: int, rng: np.random.Generator) -> tuple[Distribution, Distribution]:
    """Draw a ratio chain for P in (0,1]^{r-1}, then shrink each ratio by a factor in (0,1] for Q."""
    s_p = rng.uniform(0.0, 1.0, size=r - 1)
    s_p = np.where(s_p == 0.0, 1.0, s_p)
    shrink = 1.0 - rng.uniform(0.0, 1.0, size=r - 1)
    return distribution_from_ratios(s_p), distribution_from_ratios(s_p * shrink)


def sample_equal_ratio_pair(r: int, rng: np.random.Generator) -> tuple[Distribution, Distribution]:
    """P from a random chain, Q rebuilt from the ratios of P."""
    s = 1.0 - rng.uniform(0.0, 1.0, size=r - 1)
    p = distribution_from_ratios(s)
    return p, distribution_from_ratios(ratios_from_distribution(p))
