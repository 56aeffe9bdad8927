"""
Derivative-free maximizers for concave objectives.

The conjugates computed by this library (Legendre transforms of log-MGFs and
of their long-memory integrals) are suprema of concave functions, so cyclic
coordinate ascent with a bounded Brent line search converges without
gradients. Objectives may return -inf outside their domain.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from shared.config import LDP_PROBE_RADIUS

logger = logging.getLogger(__name__)


@dataclass
class LineSearchResult:
    x: float
    value: float
    unbounded: bool = False
    at_probe_radius: bool = False


@dataclass
class MaximizeResult:
    x: np.ndarray
    value: float
    sweeps: int
    converged: bool
    unbounded: bool = False
    flags: List[str] = field(default_factory=list)


def _safe(obj: Callable[[float], float]) -> Callable[[float], float]:
    def wrapped(t: float) -> float:
        value = obj(t)
        if value is None or math.isnan(value):
            return -math.inf
        return float(value)

    return wrapped


def bounded_max(
    obj: Callable[[float], float], a: float, b: float, tol: float = 1e-10
) -> Tuple[float, float]:
    """
    Maximum of a unimodal function on [a, b] by bounded Brent search.
    Returns (argmax, max).
    """
    obj = _safe(obj)
    if b - a <= tol:
        mid = 0.5 * (a + b)
        return mid, obj(mid)

    result = minimize_scalar(
        lambda t: -obj(t), bounds=(a, b), method="bounded", options={"xatol": tol, "maxiter": 500}
    )
    x = float(result.x)
    # endpoints may carry the supremum when it is attained at a bound
    candidates = [(x, obj(x)), (a, obj(a)), (b, obj(b))]
    return max(candidates, key=lambda item: item[1])


def maximize_line(
    obj: Callable[[float], float],
    start: float = 0.0,
    lower: float = -math.inf,
    upper: float = math.inf,
    tol: float = 1e-10,
    probe_radius: float = LDP_PROBE_RADIUS,
    initial_step: float = 1.0,
) -> LineSearchResult:
    """
    Maximizes a concave function of one variable over (lower, upper).

    The bracket is grown geometrically from `start`. When the objective is
    still rising at the probe radius the supremum is either a limit (the
    increment over the last doubling is below `tol`, and that limit value is
    returned) or infinite (`unbounded=True`).
    """
    obj = _safe(obj)
    lower = max(lower, start - probe_radius)
    upper = min(upper, start + probe_radius)
    f0 = obj(start)

    step = initial_step
    right = min(start + step, upper)
    left = max(start - step, lower)
    f_right = obj(right)
    f_left = obj(left)

    if f_right <= f0 and f_left <= f0:
        x, value = bounded_max(obj, left, right, tol)
        if value < f0:
            x, value = start, f0
        return LineSearchResult(x=x, value=value)

    direction = 1.0 if f_right > f0 else -1.0
    bound = upper if direction > 0 else lower
    prev_x, prev_f = start, f0
    cur_x, cur_f = (right, f_right) if direction > 0 else (left, f_left)
    while True:
        step *= 2.0
        next_x = start + direction * step
        hit_bound = (direction > 0 and next_x >= bound) or (direction < 0 and next_x <= bound)
        if hit_bound:
            next_x = bound
        next_f = obj(next_x)
        if next_f <= cur_f:
            a, b = sorted((prev_x, next_x))
            x, value = bounded_max(obj, a, b, tol)
            if value < cur_f:
                x, value = cur_x, cur_f
            return LineSearchResult(x=x, value=value)
        if hit_bound:
            at_radius = abs(next_x - start) >= probe_radius * (1.0 - 1e-12)
            if at_radius:
                increment = next_f - cur_f
                if increment > max(tol, 1e-9):
                    logger.debug(f"Objective still rising at probe radius {probe_radius:g}")
                    return LineSearchResult(x=next_x, value=math.inf, unbounded=True, at_probe_radius=True)
                return LineSearchResult(x=next_x, value=next_f, at_probe_radius=True)
            a, b = sorted((cur_x, next_x))
            x, value = bounded_max(obj, a, b, tol)
            if value < next_f:
                x, value = next_x, next_f
            return LineSearchResult(x=x, value=value)
        prev_x, prev_f = cur_x, cur_f
        cur_x, cur_f = next_x, next_f


def maximize_concave(
    obj: Callable[[np.ndarray], float],
    x0: Sequence[float],
    bounds: Optional[Sequence[Tuple[float, float]]] = None,
    tol: float = 1e-10,
    max_sweeps: int = 200,
    probe_radius: float = LDP_PROBE_RADIUS,
) -> MaximizeResult:
    """
    Cyclic coordinate ascent: one bounded line search per coordinate
    per sweep, until a sweep improves the objective by less than
    tol * (1 + |value|).
    """
    x = np.array(x0, dtype=float).reshape(-1)
    dim = x.size
    if bounds is None:
        bounds = [(-math.inf, math.inf)] * dim
    value = float(obj(x))
    if math.isnan(value):
        value = -math.inf

    step_scale = np.ones(dim)
    for sweep in range(1, max_sweeps + 1):
        previous = value
        for j in range(dim):
            def along(t: float, j: int = j) -> float:
                trial = x.copy()
                trial[j] = t
                return obj(trial)

            lo, hi = bounds[j]
            result = maximize_line(
                along,
                start=float(x[j]),
                lower=lo,
                upper=hi,
                tol=tol,
                probe_radius=probe_radius,
                initial_step=float(step_scale[j]),
            )
            if result.unbounded:
                x[j] = result.x
                return MaximizeResult(
                    x=x, value=math.inf, sweeps=sweep, converged=False,
                    unbounded=True, flags=["unbounded"],
                )
            if result.value >= value:
                step_scale[j] = max(abs(result.x - x[j]), 1e-6)
                x[j] = result.x
                value = result.value
        if value - previous <= tol * (1.0 + abs(value)):
            return MaximizeResult(x=x, value=value, sweeps=sweep, converged=True)

    logger.warning(f"Coordinate ascent stopped after {max_sweeps} sweeps without converging")
    return MaximizeResult(x=x, value=value, sweeps=max_sweeps, converged=False, flags=["max_sweeps"])


def shrink_to_feasible(
    obj: Callable[[np.ndarray], float], start: np.ndarray, steps: int = 40
) -> Optional[np.ndarray]:
    """Halves `start` towards the origin until the objective is finite."""
    point = np.array(start, dtype=float)
    for _ in range(steps):
        if math.isfinite(obj(point)):
            return point
        point *= 0.5
    return None
