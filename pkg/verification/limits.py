"""
Numerical checks of the cumulant limits behind every sample-path LDP:

    (1/b_n) Σ_l Λ((b_n/a_n) Σ_i λ_i φ_{l+[nt_{i−1}], [nt_i]−[nt_{i−1}]})

against Σ (t_i − t_{i−1}) Γ(λ_i) (short memory, α = 1) or Λ^rl(λ) (long memory).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from models.data_types import PartitionLevels, PrelimitReport, QuadratureSpec, RateResult
from processes.coefficients import CoefficientModel, tail_bound
from processes.noise import NoiseModel, covariance, logmgf
from processes.scaling import Scenario, normalizer, speed
from rates.cumulants import GaussianCumulant, scenario_limit
from rates.gaussian import gaussian_rl_value
from rates.kernel import lambda_rl
from shared.config import get_thread_count
from shared.errors import ConfigurationError, InvalidArgumentError, OutOfRangeError

logger = logging.getLogger(__name__)

MIN_WINDOW = 2**16
FIT_POINTS = 4
CHUNK = 2**20


@dataclass
class PrelimitTerm:
    value: float
    half_width: int
    first_infinite_l: Optional[int] = None


def default_half_width(coeffs: CoefficientModel, n: int) -> int:
    """A_n = max(4n, 2^16), capped so every window stays inside [−A, A]."""
    return min(max(4 * n, MIN_WINDOW), coeffs.radius - n)


def prelimit_detail(
    noise: NoiseModel,
    coeffs: CoefficientModel,
    s: Scenario,
    pl: PartitionLevels,
    n: int,
    half_width: Optional[int] = None,
) -> PrelimitTerm:
    if n < 1:
        raise InvalidArgumentError("n must be at least 1")
    if pl.dim != noise.dim:
        raise InvalidArgumentError(f"Levels have dimension {pl.dim}, noise has {noise.dim}")
    if half_width is None:
        half_width = default_half_width(coeffs, n)
        if half_width < 2 * n:
            raise OutOfRangeError(
                f"A = {coeffs.radius} leaves no window of half-width 2n = {2 * n}; raise A"
            )
    if half_width < 2 * n:
        raise ConfigurationError(f"The window half-width A_n = {half_width} must be at least 2n")

    b_n = speed(s, n)
    scale = b_n / normalizer(s, n)
    floors = np.floor(n * pl.edges).astype(np.int64)
    table = coeffs.table
    total = 0.0
    for start in range(-half_width, half_width + 1, CHUNK):
        ls = np.arange(start, min(start + CHUNK, half_width + 1))
        args = np.zeros((ls.size, noise.dim))
        for i in range(pl.k):
            length = int(floors[i + 1] - floors[i])
            if length == 0:
                continue
            args += np.outer(table.window_sums(ls + floors[i], length), pl.levels[i])
        values = np.asarray(logmgf(noise, scale * args)).reshape(-1)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            l_bad = int(ls[bad[0]])
            logger.warning(f"Prelimit term is infinite at l={l_bad} (n={n})")
            return PrelimitTerm(value=math.inf, half_width=half_width, first_infinite_l=l_bad)
        total += float(np.sum(values))
    return PrelimitTerm(value=total / b_n, half_width=half_width)


def prelimit_sum(
    noise: NoiseModel,
    coeffs: CoefficientModel,
    s: Scenario,
    pl: PartitionLevels,
    n: int,
    half_width: Optional[int] = None,
) -> float:
    return prelimit_detail(noise, coeffs, s, pl, n, half_width).value


def truncation_bound(
    noise: NoiseModel, coeffs: CoefficientModel, s: Scenario, pl: PartitionLevels, n: int, half_width: int
) -> float:
    """
    Quadratic-approximation bound on the terms |l| > A_n left out of the
    prelimit: by Cauchy-Schwarz their squared arguments sum to at most
    max|λ_i|² n² Σ_{|i|>A_n−n} φ_i².
    """
    b_n = speed(s, n)
    scale = b_n / normalizer(s, n)
    top = float(np.max(np.linalg.eigvalsh(covariance(noise))))
    level = float(np.max(np.linalg.norm(pl.levels, axis=1)))
    return 0.5 * top * scale**2 * level**2 * n**2 * tail_bound(coeffs, half_width - n) / b_n


def limit_value(
    s: Scenario, pl: PartitionLevels, quad_spec: Optional[QuadratureSpec] = None
) -> RateResult:
    """The cumulant limit the prelimit sums converge to."""
    limit = scenario_limit(s)
    if not s.tag.is_long or s.alpha == 1.0:
        values = limit.value(pl.levels)
        return RateResult(value=float(np.dot(pl.lengths, values)))
    coeffs = s.coeffs
    if isinstance(limit, GaussianCumulant):
        return RateResult(value=gaussian_rl_value(limit.sigma, s.alpha, coeffs.p, coeffs.q, pl))
    return lambda_rl(limit, s.alpha, coeffs.p, coeffs.q, pl, quad_spec)


def _fit_exponent(n_grid: Sequence[int], errors: Sequence[float]) -> Optional[float]:
    points = [(n, e) for n, e in zip(n_grid, errors) if math.isfinite(e) and e > 0.0]
    points = points[-FIT_POINTS:]
    if len(points) < 2:
        return None
    log_n = np.log([p[0] for p in points])
    log_e = np.log([p[1] for p in points])
    return float(-np.polyfit(log_n, log_e, 1)[0])


def convergence_report(
    noise: NoiseModel,
    coeffs: CoefficientModel,
    s: Scenario,
    pl: PartitionLevels,
    n_grid: Sequence[int],
    half_width: Optional[int] = None,
    threads: Optional[int] = None,
    quad_spec: Optional[QuadratureSpec] = None,
) -> PrelimitReport:
    """Prelimit sums over a grid of n against the limit, with a fitted rate |error| ~ n^{−c}."""
    n_grid = sorted(int(n) for n in n_grid)
    limit = limit_value(s, pl, quad_spec)
    coeffs.table  # built once, shared by the workers
    workers = get_thread_count(threads)
    logger.info(f"Evaluating {len(n_grid)} prelimit sums on {workers} threads")

    def run(n: int) -> PrelimitTerm:
        return prelimit_detail(noise, coeffs, s, pl, n, half_width)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        terms: List[PrelimitTerm] = list(executor.map(run, n_grid))

    flags = list(limit.flags)
    errors = []
    for term in terms:
        if math.isinf(term.value) or math.isinf(limit.value):
            errors.append(math.inf)
            continue
        gap = abs(term.value - limit.value)
        errors.append(gap / abs(limit.value) if limit.value != 0.0 else gap)
    if any(t.first_infinite_l is not None for t in terms):
        flags.append("infinite_prelimit")
    bounds = [truncation_bound(noise, coeffs, s, pl, n, t.half_width) for n, t in zip(n_grid, terms)]
    return PrelimitReport(
        n_grid=n_grid,
        prelimit=[t.value for t in terms],
        limit=limit.value,
        rel_errors=errors,
        convergence_exponent=_fit_exponent(n_grid, errors),
        tail_bounds=bounds,
        flags=flags,
    )
