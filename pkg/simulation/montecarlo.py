"""
Simulation of the moving average and of its partial sums, and estimation of
the marginal tail probabilities P(S_n/a_n > x) whose logarithmic decay the
LDPs describe: directly, by exponential tilting of the innovations, or
exactly for Gaussian innovations.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import log_ndtr, logsumexp

from models.data_types import (
    EstimateMethod,
    SimConfig,
    SpeedScanReport,
    TailEstimate,
)
from processes.coefficients import CoefficientModel, tail_bound
from processes.noise import (
    DomainStatus,
    NoiseModel,
    covariance,
    domain_query,
    logmgf,
    sample,
    sample_tilted,
)
from processes.scaling import Scenario, normalizer, speed
from rates.conjugates import marginal_rate
from shared.config import LDP_MC_BATCH, get_thread_count
from shared.errors import (
    InvalidArgumentError,
    LdpError,
    OracleUnavailableError,
    TiltInfeasibleError,
)
from shared.streams import batch_slices, make_stream

logger = logging.getLogger(__name__)

PATH_STREAM = 0
TAIL_STREAM = 1
# innovations drawn per batch are capped so a batch stays well under a gigabyte
BATCH_ELEMENTS = 2**24
Z_95 = 1.959963984540054
MAX_TILT = 1e6


@dataclass
class SimulatedPath:
    times: np.ndarray
    step: np.ndarray
    polygonal: np.ndarray
    increments: np.ndarray
    normalizer: float


def filter_window(coeffs: CoefficientModel, truncation: int) -> np.ndarray:
    """φ_i for |i| ≤ M."""
    centre = coeffs.radius
    return coeffs.values[centre - truncation:centre + truncation + 1]


def simulate_path(
    cfg: SimConfig,
    replicate: int,
    grid: Optional[Sequence[float]] = None,
    innovations: Optional[np.ndarray] = None,
) -> SimulatedPath:
    """
    Draws Z_{1−M}, ..., Z_{n+M} for the replicate, filters them into
    X_k = Σ_{|i|≤M} φ_i Z_{k−i}, and evaluates the step path
    Y_n(t) = S_[nt]/a_n and the polygonal path Ỹ_n on the grid (default:
    every half step).
    """
    n, M, d = cfg.n, cfg.truncation, cfg.noise.dim
    count = n + 2 * M
    if innovations is None:
        stream = make_stream(cfg.seed, PATH_STREAM, replicate)
        z = sample(cfg.noise, stream, count)
    else:
        z = np.asarray(innovations, dtype=float).reshape(count, d)
    window = filter_window(cfg.coeffs, M)
    x = np.stack([np.convolve(z[:, j], window, mode="valid") for j in range(d)], axis=-1)

    a_n = normalizer(cfg.scenario, n)
    sums = np.vstack([np.zeros((1, d)), np.cumsum(x, axis=0)])
    times = np.linspace(0.0, 1.0, 2 * n + 1) if grid is None else np.asarray(grid, dtype=float)
    scaled = n * times
    index = np.minimum(np.floor(scaled).astype(np.int64), n)
    step = sums[index] / a_n
    frac = (scaled - index)[:, None]
    following = np.vstack([x, np.zeros((1, d))])[index]
    polygonal = step + frac * following / a_n
    return SimulatedPath(times=times, step=step, polygonal=polygonal, increments=x, normalizer=a_n)


def partial_sum_weights(coeffs: CoefficientModel, n: int, truncation: int) -> np.ndarray:
    """
    c_j with S_n = Σ_j c_j Z_j for j = 1−M..n+M under the truncated filter,
    c_j = Σ {φ_i : 1−j ≤ i ≤ n−j, |i| ≤ M}.
    """
    j = np.arange(1 - truncation, n + truncation + 1)
    lo = np.maximum(1 - j, -truncation)
    hi = np.minimum(n - j, truncation)
    prefix = coeffs.table.prefix
    offset = coeffs.radius
    sums = (prefix[hi + offset + 1] - prefix[lo + offset]).astype(float)
    return np.where(hi >= lo, sums, 0.0)


def exact_gaussian_tail(coeffs: CoefficientModel, s: Scenario, n: int, x: float) -> TailEstimate:
    """
    P(S_n/a_n > x) for Gaussian innovations, evaluated in log space. The
    variance is Σ_j c_j² for the filter on [−A, A] plus n² Σ_{|i|>A} φ_i²
    for the coefficients beyond A.
    """
    noise = s.noise
    if not noise.is_gaussian or noise.dim != 1:
        raise OracleUnavailableError("The exact tail needs one-dimensional Gaussian innovations")
    weights = partial_sum_weights(coeffs, n, coeffs.radius)
    unit = math.fsum(weights * weights) + n * n * tail_bound(coeffs)
    variance = float(covariance(noise)[0, 0]) * unit
    a_n = normalizer(s, n)
    z = x * a_n / math.sqrt(variance)
    log_p = float(log_ndtr(-z))
    p = math.exp(log_p)
    return TailEstimate(
        event=f"S_n/a_n > {x}",
        estimate=p,
        log_estimate=log_p,
        ci_low=p,
        ci_high=p,
        effective_sample_size=math.inf,
        method=EstimateMethod.EXACT_GAUSSIAN,
        metadata={"n": n, "a_n": a_n, "variance": variance, "z": z},
    )


def _mean_shift(noise: NoiseModel, weights: np.ndarray, theta: float) -> float:
    """E_θ S_n = Σ_j c_j Λ'(θ c_j), by central differences."""
    u = theta * weights
    h = 1e-6 * (1.0 + np.abs(u))
    up = np.asarray(logmgf(noise, (u + h)[:, None])).reshape(-1)
    down = np.asarray(logmgf(noise, (u - h)[:, None])).reshape(-1)
    return float(np.dot(weights, (up - down) / (2.0 * h)))


def solve_tilt(noise: NoiseModel, weights: np.ndarray, target: float) -> float:
    """θ ≥ 0 with E_θ S_n = target, by bracketing and Brent's method."""
    if target <= 0.0:
        return 0.0
    peak = float(np.max(np.abs(weights)))
    if peak == 0.0:
        raise TiltInfeasibleError("All partial-sum weights vanish")
    ceiling = MAX_TILT
    if math.isfinite(noise.domain_radius):
        ceiling = (1.0 - 1e-4) * noise.domain_radius / peak
    hi = min(1.0 / peak, ceiling)
    while _mean_shift(noise, weights, hi) < target:
        if hi >= ceiling:
            raise TiltInfeasibleError(
                f"No tilt inside F_Λ moves the mean of S_n to {target:.6g}"
            )
        hi = min(2.0 * hi, ceiling)
    return float(brentq(lambda t: _mean_shift(noise, weights, t) - target, 0.0, hi, xtol=1e-12))


def _wilson(p: float, count: int) -> Tuple[float, float]:
    z2 = Z_95 * Z_95
    denom = 1.0 + z2 / count
    centre = (p + z2 / (2.0 * count)) / denom
    half = Z_95 * math.sqrt(p * (1.0 - p) / count + z2 / (4.0 * count * count)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def estimate_tail(
    cfg: SimConfig,
    x: float,
    method: Union[EstimateMethod, str] = EstimateMethod.DIRECT,
    threads: Optional[int] = None,
) -> TailEstimate:
    """
    Estimates P(S_n/a_n > x) from cfg.replications draws. Tilted sampling
    changes the law of each innovation Z_j to the exponential tilt by θc_j,
    so the sample is weighted by exp(Σ_j Λ(θc_j) − θS_n). θ is cfg.tilt, or
    solved so the tilted mean of S_n/a_n equals x.
    """
    method = EstimateMethod(method)
    if method == EstimateMethod.EXACT_GAUSSIAN:
        return exact_gaussian_tail(cfg.coeffs, cfg.scenario, cfg.n, x)
    noise = cfg.noise
    weights = partial_sum_weights(cfg.coeffs, cfg.n, cfg.truncation)
    a_n = normalizer(cfg.scenario, cfg.n)

    theta = 0.0
    if method == EstimateMethod.TILTED:
        if noise.dim != 1:
            raise InvalidArgumentError("Tilted estimation needs one-dimensional innovations")
        theta = float(cfg.tilt) if cfg.tilt is not None else solve_tilt(noise, weights, x * a_n)
        peak = theta * float(np.max(np.abs(weights)))
        if domain_query(noise, [peak]).result != DomainStatus.INTERIOR:
            raise TiltInfeasibleError(f"Tilt θ={theta:.6g} pushes θc_j out of F_Λ")
    log_norm = float(np.sum(logmgf(noise, (theta * weights)[:, None]))) if theta else 0.0

    rows = max(1, min(LDP_MC_BATCH, BATCH_ELEMENTS // max(weights.size * noise.dim, 1)))
    batches = batch_slices(cfg.replications, rows)
    thetas = (theta * weights)[:, None]

    def run(index: int) -> Tuple[np.ndarray, np.ndarray]:
        start, stop = batches[index]
        size = stop - start
        stream = make_stream(cfg.seed, TAIL_STREAM, index)
        if theta:
            z = sample_tilted(noise, stream, np.tile(thetas, (size, 1)))
        else:
            z = sample(noise, stream, size * weights.size)
        z = z.reshape(size, weights.size, noise.dim)
        sums = np.einsum("rjd,j->rd", z, weights)[:, 0]
        return sums / a_n > x, log_norm - theta * sums

    workers = get_thread_count(threads)
    logger.info(
        f"Estimating tail with {cfg.replications} replications in {len(batches)} batches "
        f"on {workers} threads (θ={theta:.6g})"
    )
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(executor.map(run, range(len(batches))))
    hits = np.concatenate([r[0] for r in results])
    log_w = np.concatenate([r[1] for r in results])
    count = hits.size
    metadata = {"n": cfg.n, "a_n": a_n, "x": x, "theta": theta, "replications": count,
                "batches": len(batches), "seed": cfg.seed}

    if method == EstimateMethod.DIRECT:
        p = float(np.mean(hits))
        low, high = _wilson(p, count)
        return TailEstimate(
            event=f"S_n/a_n > {x}",
            estimate=p,
            log_estimate=math.log(p) if p > 0.0 else -math.inf,
            ci_low=low,
            ci_high=high,
            effective_sample_size=float(count),
            method=method,
            std_error=math.sqrt(p * (1.0 - p) / count),
            metadata=metadata,
        )

    shifted = np.exp(log_w - np.max(log_w))
    ess = float(np.sum(shifted) ** 2 / np.sum(shifted**2))
    if not np.any(hits):
        return TailEstimate(
            event=f"S_n/a_n > {x}", estimate=0.0, log_estimate=-math.inf, ci_low=0.0,
            ci_high=0.0, effective_sample_size=ess, method=method, metadata=metadata,
        )
    top = float(np.max(log_w[hits]))
    scaled = np.where(hits, np.exp(log_w - top), 0.0)
    log_p = float(logsumexp(log_w[hits])) - math.log(count)
    estimate = math.exp(log_p)
    std_error = float(np.std(scaled, ddof=1)) * math.exp(top) / math.sqrt(count) if count > 1 else 0.0
    return TailEstimate(
        event=f"S_n/a_n > {x}",
        estimate=estimate,
        log_estimate=log_p,
        ci_low=max(0.0, estimate - Z_95 * std_error),
        ci_high=min(1.0, estimate + Z_95 * std_error),
        effective_sample_size=ess,
        method=method,
        std_error=std_error,
        metadata=metadata,
    )


def speed_scan(
    cfg: SimConfig, n_grid: Sequence[int], x: float, threads: Optional[int] = None
) -> SpeedScanReport:
    """
    −log P(S_n/a_n > x) over a grid of n against the speed b_n: exact for
    one-dimensional Gaussian innovations, tilted sampling otherwise.
    """
    s = cfg.scenario
    exact = cfg.noise.is_gaussian and cfg.noise.dim == 1
    method = EstimateMethod.EXACT_GAUSSIAN if exact else EstimateMethod.TILTED
    n_grid = sorted(int(n) for n in n_grid)
    neg_log_p: List[float] = []
    speeds: List[float] = []
    for n in n_grid:
        if exact:
            estimate = exact_gaussian_tail(cfg.coeffs, s, n, x)
        else:
            estimate = estimate_tail(dataclasses.replace(cfg, n=n), x, method, threads)
        neg_log_p.append(-estimate.log_estimate)
        speeds.append(speed(s, n))
        logger.debug(f"n={n}: -log P = {neg_log_p[-1]:.6g}, b_n = {speeds[-1]:.6g}")

    slope = None
    usable = [(n, v) for n, v in zip(n_grid, neg_log_p) if math.isfinite(v) and v > 0.0]
    if len(usable) >= 2:
        slope = float(np.polyfit(np.log([u[0] for u in usable]), np.log([u[1] for u in usable]), 1)[0])
    try:
        rate = marginal_rate(s, x).value
    except LdpError as e:
        logger.warning(f"Marginal rate unavailable for the scan: {e}")
        rate = None
    return SpeedScanReport(
        x=x, n_grid=n_grid, neg_log_p=neg_log_p, speeds=speeds, method=method, rate=rate, slope=slope
    )
