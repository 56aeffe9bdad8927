"""
Truncated membership test for the sets of admissible level vectors: every
λ_i must sit in the interior of F_Λ ((p∧q)λ_i for long memory, α < 1), and
Λ((1/Ψ_n) Σ_i λ_i φ_{j+[nt_{i−1}], [nt_i]−[nt_{i−1}]}) must stay finite over
the probed (n, j). A FeasibleUpTo verdict covers only the probed range.
"""

import logging
import math

import numpy as np

from models.data_types import PartitionLevels, PiStatus, PiVerdict
from processes.coefficients import CoefficientModel, psi_partial
from processes.noise import DomainStatus, NoiseModel, domain_is_full, domain_query, logmgf
from shared.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


def _domain_violation(noise: NoiseModel, coeffs: CoefficientModel, pl: PartitionLevels) -> str:
    scaled = coeffs.is_long and coeffs.alpha < 1.0
    factor = min(coeffs.p, coeffs.q) if scaled else 1.0
    for i, level in enumerate(pl.levels):
        status = domain_query(noise, factor * level).result
        if status != DomainStatus.INTERIOR:
            label = "(p∧q)λ" if scaled else "λ"
            return f"{label}_{i + 1} = {(factor * level).tolist()} is {status.value.lower()} to F_Λ"
    return ""


def pi_membership(
    noise: NoiseModel,
    coeffs: CoefficientModel,
    pl: PartitionLevels,
    n_max: int,
    j_max: int,
    n_start: int = 1,
) -> PiVerdict:
    if n_start < 1 or n_max < n_start or j_max < 0:
        raise InvalidArgumentError("Need 1 <= n_start <= n_max and j_max >= 0")
    if pl.dim != noise.dim:
        raise InvalidArgumentError(f"Levels have dimension {pl.dim}, noise has {noise.dim}")

    reason = _domain_violation(noise, coeffs, pl)
    if reason:
        return PiVerdict(status=PiStatus.DOMAIN_VIOLATION, reason=reason)
    if domain_is_full(noise):
        return PiVerdict(
            status=PiStatus.FEASIBLE, n_max=n_max, j_max=j_max, reason="F_Λ = R^d"
        )

    radius = noise.domain_radius
    table = coeffs.table
    level_norms = np.max(np.abs(pl.levels), axis=1)
    smallest_norm = psi_partial(coeffs, n_start) if coeffs.is_long else 1.0
    if float(level_norms.sum()) * table.abs_prefix[-1] / smallest_norm < radius:
        return PiVerdict(
            status=PiStatus.FEASIBLE, n_max=n_max, j_max=j_max,
            reason="every window stays inside F_Λ by the total |φ| mass",
        )

    sup_value = 0.0
    clamped = False
    for n in range(n_start, n_max + 1):
        floors = np.floor(n * pl.edges).astype(np.int64)
        lengths = np.diff(floors)
        j_lo = max(-j_max, -table.radius - 1)
        j_hi = min(j_max, table.radius - int(floors[-1]))
        if j_lo > j_hi:
            break
        clamped = clamped or j_lo > -j_max or j_hi < j_max
        js = np.arange(j_lo, j_hi + 1)
        norm = psi_partial(coeffs, n) if coeffs.is_long else 1.0

        active = [i for i in range(pl.k) if lengths[i] > 0]
        args = np.zeros((js.size, noise.dim))
        for i in active:
            windows = table.window_sums(js + floors[i], int(lengths[i]))
            args += np.outer(windows, pl.levels[i])
        values = np.asarray(logmgf(noise, args / norm)).reshape(-1)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            j = int(js[bad[0]])
            logger.info(f"Λ is infinite at n={n}, j={j}")
            return PiVerdict(
                status=PiStatus.INFEASIBLE, n=n, j=j, n_max=n_max, j_max=j_max,
                sup_value=math.inf, reason=f"window argument leaves F_Λ at n={n}, j={j}",
            )
        sup_value = max(sup_value, float(values.max()))

    reason = "probed range"
    if clamped:
        reason += " (j clamped to the materialized coefficient range)"
        logger.warning("Π scan clamped j to the coefficient table; raise A to probe further")
    return PiVerdict(
        status=PiStatus.FEASIBLE, n_max=n_max, j_max=j_max, sup_value=sup_value, reason=reason
    )
