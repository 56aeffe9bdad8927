"""
Sample-path rate functions for the polygonal processes Ỹ_n.

Short memory and α = 1 give the integral ∫_0^1 Γ*(f'(t)) dt. For α < 1 the
rate is Γ*_α(f') = sup_ψ {∫ψ·f' − Λ^rl(ψ)}, approximated over step
functions ψ on nested uniform grids.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from models.data_types import PiecewisePath, RateResult
from processes.noise import NoiseModel
from processes.scaling import Scenario
from rates.conjugates import conjugate_rl, finite_dim_rate
from rates.cumulants import CumulantLimit, GaussianCumulant, as_limit, scenario_limit
from rates.gaussian import quadratic_conjugate, riesz_gram
from rates.kernel import KernelQuadrature, check_alpha, gaussian_sigma2
from shared.config import LDP_PROBE_RADIUS
from shared.errors import InvalidArgumentError, PartitionError
from shared.optimize import shrink_to_feasible

logger = logging.getLogger(__name__)

DEFAULT_CELLS = 64
COARSEST_CELLS = 8


def _cell_targets(phi: np.ndarray, dim: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 1:
        phi = phi.reshape(-1, dim)
    if phi.shape[1] != dim:
        raise InvalidArgumentError(f"Cell averages have dimension {phi.shape[1]}, expected {dim}")
    return phi


def gamma_alpha_star(
    limit: Union[CumulantLimit, NoiseModel],
    alpha: float,
    p: float,
    q: float,
    phi: np.ndarray,
    warm_start: Optional[np.ndarray] = None,
) -> RateResult:
    """
    Γ*_α for a grid function φ given by its averages on m uniform cells.
    The objective Σ_c ψ_c·φ_c/m − Λ^rl(ψ) is concave; it is maximized by
    L-BFGS with the gradient of the kernel rule, from the warm start (when
    given), the Gaussian-approximation maximizer and the origin.
    """
    check_alpha(alpha)
    limit = as_limit(limit)
    phi = _cell_targets(phi, limit.dim)
    m = phi.shape[0]
    if alpha == 1.0:
        value = 0.0
        for row in phi:
            value += limit.conjugate(row) / m
            if math.isinf(value):
                break
        return RateResult(value=value)

    edges = np.linspace(0.0, 1.0, m + 1)
    targets = phi / m
    if isinstance(limit, GaussianCumulant):
        solution = quadratic_conjugate(
            riesz_gram(2.0 * alpha - 1.0, m), limit.sigma, gaussian_sigma2(alpha, p, q), targets
        )
        return RateResult(value=solution.value, flags=solution.flags, argmax=solution.argmax)
    if not np.any(targets):
        return RateResult(value=0.0, argmax=np.zeros_like(targets))

    rule = KernelQuadrature.build(alpha, p, q, edges, origin_exponent=limit.origin_exponent)
    flat = targets.reshape(-1)

    def objective(psi: np.ndarray) -> float:
        return float(psi @ flat) - rule.value(limit, psi)

    def negated(psi: np.ndarray) -> Tuple[float, np.ndarray]:
        value = rule.value(limit, psi)
        if not math.isfinite(value):
            return math.inf, np.zeros_like(psi)
        grad = rule.gradient(limit, psi).reshape(-1)
        return value - float(psi @ flat), grad - flat

    starts: List[np.ndarray] = []
    if warm_start is not None:
        starts.append(np.asarray(warm_start, dtype=float).reshape(-1))
    gaussian = quadratic_conjugate(
        riesz_gram(2.0 * alpha - 1.0, m), limit.covariance, gaussian_sigma2(alpha, p, q), targets
    ).argmax
    if gaussian is not None:
        starts.append(gaussian.reshape(-1))
    starts.append(np.zeros(flat.size))

    best_x, best_value, flags = None, -math.inf, []
    for start in starts:
        start = shrink_to_feasible(objective, start)
        if start is None:
            continue
        result = minimize(
            negated, start, jac=True, method="L-BFGS-B",
            options={"maxiter": 5000, "ftol": 1e-15, "gtol": 1e-11},
        )
        value = -float(result.fun)
        if np.max(np.abs(result.x)) >= LDP_PROBE_RADIUS:
            logger.info("Γ*_α maximizer left the probe radius; the rate is infinite")
            return RateResult(value=math.inf, flags=["unbounded"])
        if value > best_value:
            best_x, best_value = result.x, value
            flags = [] if result.success else ["not_converged"]
    if best_x is None:
        raise InvalidArgumentError("No feasible starting point for the Γ*_α maximization")
    return RateResult(value=max(best_value, 0.0), flags=flags, argmax=best_x.reshape(targets.shape))


def _ladder(m: int) -> List[int]:
    ladder = [m]
    while ladder[-1] % 2 == 0 and ladder[-1] // 2 >= COARSEST_CELLS:
        ladder.append(ladder[-1] // 2)
    return ladder[::-1]


def refine_gamma_alpha_star(
    limit: Union[CumulantLimit, NoiseModel],
    alpha: float,
    p: float,
    q: float,
    cell_averages: Callable[[int], np.ndarray],
    grid_sizes: Sequence[int],
) -> RateResult:
    """
    Γ*_α on nested grids; each grid is warm-started from the previous
    maximizer, so the approximations increase towards the rate.
    """
    trace: List[Tuple[int, float]] = []
    previous: Optional[RateResult] = None
    previous_m = None
    for m in grid_sizes:
        warm = None
        if previous is not None and previous.argmax is not None:
            if m % previous_m:
                raise PartitionError(f"Grid of {m} cells does not refine {previous_m} cells")
            warm = np.repeat(previous.argmax, m // previous_m, axis=0)
        result = gamma_alpha_star(limit, alpha, p, q, cell_averages(m), warm_start=warm)
        trace.append((m, result.value))
        logger.debug(f"Γ*_α on {m} cells: {result.value:.10g}")
        previous, previous_m = result, m
        if math.isinf(result.value):
            break
    previous.refinement_trace = trace
    return previous


def path_rate(s: Scenario, f: PiecewisePath, m: int = DEFAULT_CELLS) -> RateResult:
    """I(f) for a piecewise-linear path in the scenario's sample-path LDP."""
    if f.dim != s.noise.dim:
        raise InvalidArgumentError(f"Path has dimension {f.dim}, noise has {s.noise.dim}")
    if not f.starts_at_origin:
        return RateResult(value=math.inf, flags=["not_at_origin"])
    limit = scenario_limit(s)
    if not s.tag.is_long or s.alpha == 1.0:
        increments = np.diff(f.values, axis=0)
        return RateResult(value=finite_dim_rate(limit, f.knots[1:], increments))
    coeffs = s.coeffs
    return refine_gamma_alpha_star(
        limit, s.alpha, coeffs.p, coeffs.q, f.cell_averages, _ladder(m)
    )


def partition_rate(s: Scenario, f: PiecewisePath, times: Sequence[float]) -> RateResult:
    """Rate of (Y(t_1), ..., Y(t_k)) at (f(t_1), ..., f(t_k))."""
    if not f.starts_at_origin:
        return RateResult(value=math.inf, flags=["not_at_origin"])
    times = np.asarray(times, dtype=float).reshape(-1)
    points = f(np.concatenate(([0.0], times)))
    increments = np.diff(points, axis=0)
    limit = scenario_limit(s)
    if not s.tag.is_long:
        return RateResult(value=finite_dim_rate(limit, times, increments))
    coeffs = s.coeffs
    return conjugate_rl(limit, s.alpha, coeffs.p, coeffs.q, times, increments)
