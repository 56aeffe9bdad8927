"""
Finite-dimensional rate functions: the short-memory sum
Σ (t_i − t_{i−1}) Γ*((w_i)/(t_i − t_{i−1})) and the long-memory conjugate
Λ^{rl*}_t(w) = sup_λ {Σ_i λ_i·w_i − Λ^rl_t(λ)}.
"""

import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np

from models.data_types import PartitionLevels, RateResult
from processes.noise import NoiseModel
from processes.scaling import Scenario
from rates.cumulants import CumulantLimit, GaussianCumulant, as_limit, scenario_limit
from rates.gaussian import quadratic_conjugate, riesz_gram
from rates.kernel import KernelQuadrature, check_alpha, gaussian_sigma2
from shared.config import LDP_PROBE_RADIUS, legendre_tolerance
from shared.errors import InvalidArgumentError, PartitionError
from shared.optimize import maximize_concave, shrink_to_feasible

logger = logging.getLogger(__name__)


def _partition(times: Sequence[float], increments: np.ndarray, dim: int):
    times = np.asarray(times, dtype=float).reshape(-1)
    edges = np.concatenate(([0.0], times))
    lengths = np.diff(edges)
    if np.any(lengths <= 0.0):
        raise PartitionError("Partition times must be strictly increasing and positive")
    increments = np.asarray(increments, dtype=float).reshape(times.size, dim)
    return edges, lengths, increments


def finite_dim_rate(
    limit: Union[CumulantLimit, NoiseModel], times: Sequence[float], increments: np.ndarray
) -> float:
    """Σ_i (t_i − t_{i−1}) Γ*(w_i / (t_i − t_{i−1}))."""
    limit = as_limit(limit)
    _, lengths, increments = _partition(times, increments, limit.dim)
    total = 0.0
    for length, w in zip(lengths, increments):
        total += length * limit.conjugate(w / length)
        if math.isinf(total):
            return math.inf
    return total


def _gaussian_start(
    limit: CumulantLimit, alpha: float, p: float, q: float, edges: np.ndarray, targets: np.ndarray
) -> Optional[np.ndarray]:
    """Maximizer for the quadratic approximation Γ(u) ≈ ½u·Cu, C = ∇²Γ(0)."""
    gram = riesz_gram(2.0 * alpha - 1.0, edges)
    solution = quadratic_conjugate(gram, limit.covariance, gaussian_sigma2(alpha, p, q), targets)
    return solution.argmax


def conjugate_rl(
    limit: Union[CumulantLimit, NoiseModel],
    alpha: float,
    p: float,
    q: float,
    times: Sequence[float],
    increments: np.ndarray,
    tol: Optional[float] = None,
) -> RateResult:
    """
    Λ^{rl*}_t(w). α = 1 reduces to the short-memory sum. G_Σ is solved as a
    quadratic program; every other cumulant runs coordinate ascent on a fixed
    kernel rule, restarted from the origin and from the Gaussian-approximation
    maximizer, keeping the better of the two.
    """
    check_alpha(alpha)
    limit = as_limit(limit)
    if alpha == 1.0:
        return RateResult(value=finite_dim_rate(limit, times, increments))
    edges, _, targets = _partition(times, increments, limit.dim)
    if isinstance(limit, GaussianCumulant):
        gram = riesz_gram(2.0 * alpha - 1.0, edges)
        solution = quadratic_conjugate(gram, limit.sigma, gaussian_sigma2(alpha, p, q), targets)
        return RateResult(value=solution.value, flags=solution.flags, argmax=solution.argmax)
    if not np.any(targets):
        return RateResult(value=0.0, argmax=np.zeros_like(targets))

    tol = tol if tol is not None else legendre_tolerance(targets.size)
    rule = KernelQuadrature.build(alpha, p, q, edges, origin_exponent=limit.origin_exponent)
    flat_targets = targets.reshape(-1)

    def objective(lam: np.ndarray) -> float:
        return float(lam @ flat_targets) - rule.value(limit, lam)

    starts: List[np.ndarray] = [np.zeros(flat_targets.size)]
    gaussian = _gaussian_start(limit, alpha, p, q, edges, targets)
    if gaussian is not None:
        feasible = shrink_to_feasible(objective, gaussian.reshape(-1))
        if feasible is not None:
            starts.append(feasible)

    best = None
    for start in starts:
        result = maximize_concave(objective, start, tol=tol, probe_radius=LDP_PROBE_RADIUS)
        if result.unbounded:
            logger.info("Long-memory conjugate is unbounded at the probe radius")
            return RateResult(value=math.inf, flags=["unbounded"])
        if best is None or result.value > best.value:
            best = result
    flags = list(best.flags)
    return RateResult(
        value=max(best.value, 0.0), flags=flags, argmax=best.x.reshape(targets.shape)
    )


def marginal_rate(s: Scenario, x: Union[float, Sequence[float]]) -> RateResult:
    """Rate of the time-one marginal S_n/a_n at the point x."""
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    if x.shape[1] != s.noise.dim:
        raise InvalidArgumentError(f"Expected a {s.noise.dim}-vector, got {x.shape[1]} entries")
    limit = scenario_limit(s)
    if not s.tag.is_long:
        return RateResult(value=limit.conjugate(x[0]))
    coeffs = s.coeffs
    return conjugate_rl(limit, s.alpha, coeffs.p, coeffs.q, [1.0], x)


def lambda_rl_conjugate(
    limit: Union[CumulantLimit, NoiseModel], alpha: float, p: float, q: float, pl: PartitionLevels
) -> RateResult:
    """Λ^{rl*} evaluated at the increments carried as the levels of `pl`."""
    return conjugate_rl(limit, alpha, p, q, pl.times, pl.levels)
