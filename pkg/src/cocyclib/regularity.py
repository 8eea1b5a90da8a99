"""Lyapunov exponents, distortion-regularity blocks and flag transport.

The regularity block with parameters (N, theta) consists of points whose
N-step quasiconformal distortion products stay below exp(s N theta) in both
time directions for every number of blocks s.  Over a periodic orbit the
all-s quantification is decidable through prefix averages of the periodic
per-block costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cocycle import (
    LocallyConstantCocycle,
    backward_product,
    distortion_of,
    inverse_cocycle,
    iterate,
)
from .holonomy import composed_holonomy
from .linalg import Flag, Subspace, largest_principal_angle
from .measure import MarkovMeasure, cylinder_measure, sample_point
from .sft import (
    BudgetExceededError,
    PeriodicPoint,
    SymbolicPoint,
    admissible_words,
)

#: Absolute slack applied to the log-comparison S_s <= s N theta, so that
#: boundary cases (costs exactly equal to the budget) decide deterministically.
MEMBERSHIP_LOG_TOL = 1e-9

DEFAULT_WORD_BUDGET = 2_000_000


@dataclass(frozen=True)
class BlockParams:
    """Block length N and distortion budget exponent theta."""

    n_steps: int
    theta: float

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("N must be a positive integer")
        if self.theta <= 0:
            raise ValueError("theta must be positive")


@dataclass(frozen=True)
class ExponentReport:
    lambda_plus: float
    lambda_minus: float
    method: str
    n_used: int
    error_estimate: float

    def __post_init__(self):
        # stochastic estimators may cross within their own noise
        slack = max(1e-12, 4.0 * self.error_estimate)
        if self.lambda_plus < self.lambda_minus - slack:
            raise ValueError("lambda_plus must be >= lambda_minus")


def periodic_exponents(a: LocallyConstantCocycle, p: PeriodicPoint) -> ExponentReport:
    """Extremal exponents of the uniform measure on the orbit of p.

    lambda_+ is log(spectral radius of the return map) / period; lambda_-
    mirrors it through the inverse return map.
    """
    q = p.period
    m = iterate(a, p.as_point(), q)
    rho_plus = max(abs(np.linalg.eigvals(m)))
    rho_minus = max(abs(np.linalg.eigvals(np.linalg.inv(m))))
    lam_plus = math.log(rho_plus) / q
    lam_minus = -math.log(rho_minus) / q
    eps = float(np.finfo(float).eps) * 100
    return ExponentReport(lam_plus, lam_minus, "exact-periodic", q, eps)


def finite_scale_exponent(a: LocallyConstantCocycle, mu: MarkovMeasure, n: int,
                          budget: int = DEFAULT_WORD_BUDGET) -> float:
    """Exact value of a_n = (1/n) * sum over admissible words of
    mu(cylinder) * log||A^n||.

    The orbit product A^n depends on n + 2k coordinates, so the sum runs
    over admissible words of that length.  Raises BudgetExceededError with a
    Monte Carlo fallback instruction when the enumeration is too large.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k = a.window_radius
    length = n + 2 * k
    if mu.n_symbols ** length > budget:
        raise BudgetExceededError(
            f"exact sum needs {mu.n_symbols}^{length} words; "
            f"fall back to monte_carlo_exponent"
        )
    total = 0.0
    for w in admissible_words(a.q, length, budget):
        weight = cylinder_measure(mu, -k, w)
        if weight == 0.0:
            continue
        prod = np.eye(a.dimension)
        for t in range(n):
            prod = a.table[w[t: t + 2 * k + 1]] @ prod
        total += weight * math.log(np.linalg.norm(prod, 2))
    return total / n


def monte_carlo_exponent(a: LocallyConstantCocycle, mu: MarkovMeasure, n: int,
                         trials: int, rng: np.random.Generator) -> ExponentReport:
    """Sample-mean estimate of both extremal exponents with standard errors.

    The lambda_- leg assembles the backward product A^{-n} from the
    table-inverted generator, so both estimators are unbiased for the
    n-scale integrals by shift invariance of the measure.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    k = a.window_radius
    inv = inverse_cocycle(a)
    plus = np.empty(trials)
    minus = np.empty(trials)
    for t in range(trials):
        x = sample_point(mu, rng, 2 * (n + k), start=-(n + k))
        plus[t] = math.log(np.linalg.norm(iterate(a, x, n), 2)) / n
        minus[t] = math.log(np.linalg.norm(backward_product(inv, x, n), 2)) / n
    lam_plus = float(plus.mean())
    lam_minus = float(-minus.mean())
    if trials > 1:
        se_plus = float(plus.std(ddof=1) / math.sqrt(trials))
        se_minus = float(minus.std(ddof=1) / math.sqrt(trials))
    else:
        se_plus = se_minus = 0.0
    err = max(se_plus, se_minus)
    return ExponentReport(lam_plus, lam_minus, "monte-carlo", n, err)


def _block_costs(a: LocallyConstantCocycle, x: SymbolicPoint, n_steps: int,
                 count: int, direction: int) -> list[float]:
    """log distortion of the length-N block products along the orbit."""
    costs = []
    for j in range(count):
        base = x.shifted(direction * j * n_steps)
        costs.append(math.log(distortion_of(iterate(a, base, direction * n_steps))))
    return costs


def _prefix_condition(costs: Sequence[float], budget_per_block: float) -> bool:
    s = 0.0
    for j, c in enumerate(costs, start=1):
        s += c
        if s > j * budget_per_block + MEMBERSHIP_LOG_TOL:
            return False
    return True


def block_membership_periodic(a: LocallyConstantCocycle, p: PeriodicPoint,
                              params: BlockParams) -> bool:
    """Exact all-s regularity decision for a periodic point.

    The per-block costs repeat with period q' = lcm(period, N)/N, so the
    condition for every s >= 1 reduces to the prefix sums S_s <= s N theta
    for 1 <= s <= q': once the full-cycle average passes, longer products
    are controlled by the worst prefix.
    """
    q_prime = math.lcm(p.period, params.n_steps) // params.n_steps
    x = p.as_point()
    budget = params.n_steps * params.theta
    forward = _block_costs(a, x, params.n_steps, q_prime, +1)
    if not _prefix_condition(forward, budget):
        return False
    backward = _block_costs(a, x, params.n_steps, q_prime, -1)
    return _prefix_condition(backward, budget)


def block_membership_finite(a: LocallyConstantCocycle, x: SymbolicPoint,
                            params: BlockParams, s_max: int) -> bool:
    """Necessary-condition check of the block products for 1 <= s <= s_max.

    A finite-horizon surrogate for non-periodic points; agreement with the
    exact periodic decision holds once s_max covers two cost cycles.
    """
    if s_max < 1:
        raise ValueError("s_max must be >= 1")
    budget = params.n_steps * params.theta
    forward = _block_costs(a, x, params.n_steps, s_max, +1)
    if not _prefix_condition(forward, budget):
        return False
    backward = _block_costs(a, x, params.n_steps, s_max, -1)
    return _prefix_condition(backward, budget)


def smallest_passing_params(a: LocallyConstantCocycle, x: SymbolicPoint,
                            n_grid: Sequence[int], theta_grid: Sequence[float],
                            s_max: int = 10) -> tuple[int, float] | None:
    """Empirical probe: smallest (N, theta) in the grid at which the finite
    block check passes (ordered by theta, then N)."""
    for theta in sorted(theta_grid):
        for n in sorted(n_grid):
            if block_membership_finite(a, x, BlockParams(n, theta), s_max):
                return n, theta
    return None


def distortion_growth_slope(a: LocallyConstantCocycle, points: Sequence[SymbolicPoint],
                            n_max: int) -> tuple[float, np.ndarray]:
    """Least-squares slope of mean log distortion against |n|, |n| <= n_max.

    Both time directions are folded into |n|; returns the fitted slope and
    the per-|n| mean values.
    """
    sums = np.zeros(n_max)
    counts = np.zeros(n_max)
    for x in points:
        fwd = np.eye(a.dimension)
        bwd = np.eye(a.dimension)
        for n in range(1, n_max + 1):
            fwd = iterate(a, x.shifted(n - 1), 1) @ fwd
            bwd = np.linalg.inv(iterate(a, x.shifted(-n), 1)) @ bwd
            sums[n - 1] += math.log(distortion_of(fwd)) + math.log(distortion_of(bwd))
            counts[n - 1] += 2
    means = sums / counts
    ns = np.arange(1, n_max + 1, dtype=float)
    slope = float(np.polyfit(ns, means, 1)[0])
    return slope, means


# ---------------------------------------------------------------------------
# flag and metric transport over regularity blocks


@dataclass
class FlagTransportReport:
    """Transported flags plus the residuals of the invariance contracts."""

    flags: list[Flag]
    max_equivariance_residual: float
    max_path_residual: float
    max_metric_residual: float
    membership_checked: bool

    def to_jsonable(self) -> dict:
        return {
            "max_equivariance_residual": self.max_equivariance_residual,
            "max_path_residual": self.max_path_residual,
            "max_metric_residual": self.max_metric_residual,
            "membership_checked": self.membership_checked,
            "n_points": len(self.flags),
        }


def _quotient_basis(flag: Flag, i: int) -> np.ndarray:
    """Orthonormal basis of the complement of E_i inside E_{i+1}."""
    small = flag.subspaces[i - 1] if i > 0 else None
    big = flag.subspaces[i]
    if small is None or small.dim == 0:
        return big.basis
    proj = np.eye(big.ambient_dim) - small.projector()
    return Subspace.from_spanning(proj @ big.basis).basis


def _induced_quotient_matrix(m: np.ndarray, basis_from: np.ndarray,
                             basis_to: np.ndarray, small_to: Subspace) -> np.ndarray:
    """Matrix of the induced quotient map in the two transported bases."""
    image = m @ basis_from
    if small_to.dim == 0:
        coeffs, *_ = np.linalg.lstsq(basis_to, image, rcond=None)
        return coeffs
    stacked = np.hstack([basis_to, small_to.basis])
    coeffs, *_ = np.linalg.lstsq(stacked, image, rcond=None)
    return coeffs[: basis_to.shape[1], :]


def flag_transport(a: LocallyConstantCocycle, flag_at_base: Flag,
                   basepoint: SymbolicPoint, points: Sequence[SymbolicPoint],
                   params: BlockParams, s_max: int = 8,
                   quotient_metrics: Sequence[np.ndarray] | None = None,
                   check_membership: bool = True) -> FlagTransportReport:
    """Transport a flag (and quotient metrics) by composed holonomies.

    Every target point receives the flag through the us-composed holonomy
    from the basepoint; the report carries the worst cocycle-equivariance
    residual (largest principal angle between A(x) E_i(x) and E_i(shift x)),
    the worst su/us path-dependence residual, and the worst quotient-metric
    equivariance residual.
    """
    if check_membership:
        for pt in (basepoint, *points):
            if not block_membership_finite(a, pt, params, s_max):
                raise ValueError("a point fails the regularity block check")
    k_terms = len(flag_at_base.subspaces)
    if quotient_metrics is None:
        quotient_metrics = [np.eye(_quotient_basis(flag_at_base, i).shape[1])
                            for i in range(k_terms)]

    def orbit_alignment(symbol: int) -> int:
        # Brackets need matching zero symbols; ride the basepoint orbit to
        # the nearest visit of the target symbol before applying holonomies.
        fwd = max(0, basepoint.right_tail_start) + len(basepoint.right_period) + 1
        bwd = max(0, -basepoint.left_tail_end) + len(basepoint.left_period) + 1
        for j in range(max(fwd, bwd)):
            if j < fwd and basepoint[j] == symbol:
                return j
            if 0 < j < bwd and basepoint[-j] == symbol:
                return -j
        raise ValueError(
            f"basepoint orbit never reaches symbol {symbol}; pick a basepoint "
            f"whose orbit visits every symbol"
        )

    def transport(target: SymbolicPoint, order: str):
        j = orbit_alignment(target[0])
        forward = iterate(a, basepoint, j)
        hol = composed_holonomy(a, basepoint.shifted(j), target, order=order)
        move = hol.matrix @ forward
        flag = flag_at_base.map_by(move)
        bases = [move @ _quotient_basis(flag_at_base, i)
                 for i in range(k_terms)]
        return flag, bases

    flags = []
    max_path = 0.0
    max_equi = 0.0
    max_metric = 0.0
    for pt in points:
        flag_us, bases_us = transport(pt, "us")
        flag_su, _ = transport(pt, "su")
        for s_us, s_su in zip(flag_us.subspaces, flag_su.subspaces):
            if 0 < s_us.dim < s_us.ambient_dim:
                max_path = max(max_path, largest_principal_angle(s_us, s_su))
        flag_next, bases_next = transport(pt.shifted(1), "us")
        a_val = a.table[a.window_of(pt)]
        for i, (s_here, s_next) in enumerate(zip(flag_us.subspaces,
                                                 flag_next.subspaces)):
            if 0 < s_here.dim < s_here.ambient_dim:
                mapped = s_here.map_by(a_val)
                max_equi = max(max_equi, largest_principal_angle(mapped, s_next))
            small_next = (flag_next.subspaces[i - 1] if i > 0
                          else Subspace.zero(flag_next.ambient_dim))
            qmat = _induced_quotient_matrix(a_val, bases_us[i], bases_next[i],
                                            small_next)
            g = quotient_metrics[i]
            max_metric = max(max_metric,
                             float(np.max(np.abs(qmat.T @ g @ qmat - g))))
        flags.append(flag_us)
    return FlagTransportReport(flags, max_equi, max_path, max_metric,
                               check_membership)
