"""Cartan spectra, the beta ensemble over lambda_j = j(r-j), and its large-r asymptotics.

Partition sums are evaluated with log-sum-exp, so ranks up to 1e5 and |beta|
up to 50 stay finite.  The beta integrals

    c_beta = int_0^1 s^b (1-s)^b ds,   d_beta = int_0^1 s^b (1-s)^b log s ds

are integrated after the substitution s = (1 + tanh t)/2, which turns the
endpoint singularities for -1 < beta < 0 into exponentially decaying tails.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.special import digamma, gammaln, logsumexp

from .shannon import Distribution


class DivergentIntegral(ValueError):
    pass


@dataclass(frozen=True)
class CartanMatrix:
    """Type A Cartan matrix of order m: 2 on the diagonal, -1 on the off-diagonals."""

    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("Cartan matrix order must be positive")

    @property
    def entries(self) -> np.ndarray:
        m = self.order
        return 2 * np.eye(m, dtype=int) - np.eye(m, k=1, dtype=int) - np.eye(m, k=-1, dtype=int)

    def determinant(self) -> int:
        # continuant recurrence D_k = 2 D_{k-1} - D_{k-2}
        prev, cur = 1, 2
        for _ in range(self.order - 1):
            prev, cur = cur, 2 * cur - prev
        return cur

    def solve(self, rhs) -> list[Fraction]:
        """Exact solve over the rationals (Thomas algorithm on the tridiagonal system)."""
        m = self.order
        b = [Fraction(v) for v in rhs]
        if len(b) != m:
            raise ValueError(f"right-hand side has length {len(b)}, expected {m}")
        diag = [Fraction(2)] * m
        for i in range(1, m):
            w = Fraction(-1) / diag[i - 1]
            diag[i] = diag[i] + w
            b[i] = b[i] - w * b[i - 1]
        x = [Fraction(0)] * m
        x[-1] = b[-1] / diag[-1]
        for i in range(m - 2, -1, -1):
            x[i] = (b[i] + x[i + 1]) / diag[i]
        return x


@dataclass(frozen=True)
class LambdaSpectrum:
    r: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.r - 1:
            raise ValueError("spectrum needs r - 1 values")

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])


def lambda_values(r: int) -> np.ndarray:
    """Closed form j(r-j), j = 1..r-1, as floats."""
    j = np.arange(1, r, dtype=float)
    return j * (r - j)


def lambda_from_cartan(r: int) -> LambdaSpectrum:
    """Twice the row sums of the inverse Cartan matrix of order r-1, computed exactly."""
    if r < 2:
        raise ValueError(f"rank must be at least 2, got {r}")
    x = CartanMatrix(r - 1).solve([2] * (r - 1))
    for j, v in enumerate(x, start=1):
        if v != j * (r - j):
            raise ArithmeticError(f"exact solve gave {v} at j={j}, expected {j * (r - j)}")
    return LambdaSpectrum(r, tuple(int(v) for v in x))


@dataclass(frozen=True)
class BetaEnsemble:
    r: int
    beta: float
    logweights: np.ndarray
    log_partition: float
    probs: Distribution | None
    entropy: float
    beta_zero_flag: bool = False

    @property
    def partition(self) -> float:
        return float(np.exp(self.log_partition))


def ensemble(r: int, beta: float) -> BetaEnsemble:
    """Distribution p_j proportional to lambda_j^beta over j = 1..r-1.

    beta = 0 is accepted (uniform ensemble) and flagged, since the entropy
    bounds are stated for non-zero beta only.
    """
    if r < 2:
        raise ValueError(f"rank must be at least 2, got {r}")
    beta = float(beta)
    lw = beta * np.log(lambda_values(r))
    log_z = float(logsumexp(lw))
    log_p = lw - log_z
    p = np.exp(log_p)
    s = float(-np.sum(p * log_p))
    # a single outcome (r = 2) is not a Distribution in the >= 2 outcome sense
    probs = Distribution(p / p.sum()) if r > 2 else None
    return BetaEnsemble(r, beta, lw, log_z, probs, max(s, 0.0) + 0.0, beta == 0.0)


def ensemble_entropy(r: int, beta: float) -> float:
    return ensemble(r, beta).entropy


def scaled_sums(r: int, beta: float) -> tuple[float, float]:
    """(Z_{r,b} / r^{2b+1}, h_{r,b}) as Riemann sums over the nodes j/r."""
    s = np.arange(1, r, dtype=float) / r
    log_f = beta * (np.log(s) + np.log1p(-s))
    f = np.exp(log_f)
    return float(f.sum() / r), float(np.sum(f * log_f) / r)


def entropy_decomposition_residual(r: int, beta: float) -> float:
    """|S_{r,b} - (-h/(Z/r^{2b+1}) + log r + log(Z/r^{2b+1}))|."""
    z_scaled, h = scaled_sums(r, beta)
    rhs = -h / z_scaled + np.log(r) + np.log(z_scaled)
    return abs(ensemble(r, beta).entropy - rhs)


def _log_sech(t):
    a = np.abs(t)
    return np.log(2.0) - a - np.log1p(np.exp(-2.0 * a))


def _log_s(t):
    # log((1 + tanh t)/2) = -log(1 + e^{-2t})
    return -np.logaddexp(0.0, -2.0 * t)


def _beta_integrand(t, beta, with_log):
    # s(1-s) = sech^2(t)/4, ds = sech^2(t)/2 dt
    val = np.exp((2.0 * beta + 2.0) * _log_sech(t) - beta * np.log(4.0)) / 2.0
    return val * _log_s(t) if with_log else val


def _tanh_quad(beta, with_log, lo=-np.inf, hi=np.inf):
    val, err = integrate.quad(
        _beta_integrand, lo, hi, args=(beta, with_log), epsabs=0.0, epsrel=1e-13, limit=400
    )
    return val, err


def _check_beta(beta):
    if not np.isfinite(beta) or beta <= -1:
        raise DivergentIntegral(f"divergent integral: beta = {beta} <= -1")


def c_beta(beta: float) -> float:
    """int_0^1 s^beta (1-s)^beta ds, finite iff beta > -1."""
    _check_beta(beta)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        return _tanh_quad(float(beta), False)[0]


def d_beta(beta: float) -> float:
    """int_0^1 s^beta (1-s)^beta log s ds, finite iff beta > -1."""
    _check_beta(beta)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        return _tanh_quad(float(beta), True)[0]


def gamma_constants(beta: float) -> tuple[float, float]:
    """Closed forms c = Gamma(b+1)^2/Gamma(2b+2), d = c (psi(b+1) - psi(2b+2)); cross-check only."""
    _check_beta(beta)
    c = float(np.exp(2.0 * gammaln(beta + 1.0) - gammaln(2.0 * beta + 2.0)))
    return c, float(c * (digamma(beta + 1.0) - digamma(2.0 * beta + 2.0)))


@dataclass(frozen=True)
class AsymptoticConstants:
    beta: float
    c_beta: float
    d_beta: float
    limit: float


def asymptotic_constants(beta: float) -> AsymptoticConstants:
    c, d = c_beta(beta), d_beta(beta)
    return AsymptoticConstants(beta, c, d, -2.0 * beta * d / c + np.log(c))


def gap_limit(beta: float) -> float:
    """lim_{r->oo} (S_{r,beta} - log r) for beta > -1.

    For beta <= -1 the limit is -infinity and a ``DivergentIntegral`` is raised.
    """
    return asymptotic_constants(beta).limit


@dataclass
class ConvergenceTable:
    beta: float
    limit: float
    rows: list = field(default_factory=list)  # (r, S - log r, gap)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([row[2] for row in self.rows])

    @property
    def monotone(self) -> bool:
        g = np.abs(self.gaps)
        return bool(np.all(np.diff(g) < 0))

    @property
    def scaled_gap_bound(self) -> float:
        """max r |gap|; bounded along the scan when the gap is O(1/r)."""
        return float(max(r * abs(gap) for r, _, gap in self.rows))


def limit_convergence_scan(beta: float, r_values) -> ConvergenceTable:
    limit = gap_limit(beta)
    table = ConvergenceTable(float(beta), limit)
    for r in r_values:
        y = ensemble(int(r), beta).entropy - np.log(r)
        table.rows.append((int(r), y, y - limit))
    return table


@dataclass(frozen=True)
class SandwichVerdict:
    r: int
    beta: float
    lower: float
    value: float
    upper: float
    lower_ok: bool
    upper_ok: bool

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok


def truncated_beta_integral(r: int, beta: float) -> float:
    """int_{1/r}^{1-1/r} s^beta (1-s)^beta ds by quadrature in the tanh variable."""
    t_edge = 0.5 * np.log(r - 1.0)  # atanh(1 - 2/r)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = _tanh_quad(float(beta), False, -t_edge, t_edge)
        except integrate.IntegrationWarning as exc:
            raise ArithmeticError(f"quadrature failed for r={r}, beta={beta}: {exc}") from exc
    return val


def sandwich_check(r: int, beta: float) -> SandwichVerdict:
    """Integral bounds on Z_{r,beta} / r^{2 beta + 1} for negative beta."""
    if beta >= 0:
        raise ValueError("sandwich bounds are stated for beta < 0")
    if r < 4:
        raise ValueError("sandwich bounds need r >= 4")
    z_scaled, _ = scaled_sums(r, beta)
    lower = truncated_beta_integral(r, beta)
    upper = lower + 2.0 * np.exp(beta * np.log(r - 1.0) - (2.0 * beta + 1.0) * np.log(r))
    # quadrature is accurate to ~1e-13 relative; allow that much
    tol = 1e-11 * abs(lower)
    return SandwichVerdict(
        r, beta, lower, z_scaled, float(upper), bool(lower <= z_scaled + tol), bool(z_scaled <= upper + tol)
    )


@dataclass(frozen=True)
class DivergenceFit:
    """Least-squares fit of S_{r,beta} - log r against its leading divergent form.

    beta = -1:  y = -C log r + log log r + K
    beta < -1:  y = -C log r + K
    """

    beta: float
    samples: tuple
    coefficient: float
    intercept: float
    model: str
    decreasing: bool
    total_drop: float


def divergence_fit(beta: float, r_values) -> DivergenceFit:
    if beta > -1:
        raise ValueError("divergence fit applies to beta <= -1")
    r_arr = np.array(sorted(int(r) for r in r_values), dtype=float)
    if r_arr.size < 4:
        raise ValueError("need at least 4 ranks for a divergence fit")
    y = np.array([ensemble(int(r), beta).entropy - np.log(r) for r in r_arr])
    log_r = np.log(r_arr)
    if beta == -1:
        target, model = y - np.log(log_r), "-C log r + log log r + K"
    else:
        target, model = y, "-C log r + K"
    design = np.column_stack([-log_r, np.ones_like(log_r)])
    (coef, intercept), *_ = np.linalg.lstsq(design, target, rcond=None)
    return DivergenceFit(
        float(beta),
        tuple(zip(r_arr.astype(int).tolist(), y.tolist())),
        float(coef),
        float(intercept),
        model,
        bool(np.all(np.diff(y) < 0)),
        float(y[0] - y[-1]),
    )
