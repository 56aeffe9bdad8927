"""
Long-memory kernel h(x) = (1−α) Σ_i λ_i ∫_{x+t_{i−1}}^{x+t_i} |y|^{−α}(p·1{y≥0} + q·1{y<0}) dy
and the integrated cumulant Λ^rl_{t}(λ) = ∫_R Γ(h(x)) dx, where Γ is one of
the cumulant limits (Λ, G_Σ or Λ^h).
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import beta as beta_fn

from models.data_types import PartitionLevels, QuadratureSpec, RateResult
from rates.cumulants import CumulantLimit
from shared.errors import DomainError, InvalidArgumentError

logger = logging.getLogger(__name__)

# the mapped tails stop at |x| = X_CAP and add the power-law remainder beyond
X_CAP = 1e100
DOMAIN_PROBES = 2001


def check_alpha(alpha: float, allow_one: bool = True) -> None:
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.5 and upper_ok):
        bound = "(1/2, 1]" if allow_one else "(1/2, 1)"
        raise DomainError(f"α must lie in {bound}, got {alpha}")


def block_profiles(
    alpha: float, p: float, q: float, edges: Sequence[float], x: np.ndarray
) -> np.ndarray:
    """
    g_i(x) = (1−α) ∫_{x+t_{i−1}}^{x+t_i} |y|^{−α} w(y) dy for every block i,
    shape (len(x), k). Same-sign blocks are evaluated through expm1/log1p so
    the far tails keep full relative precision.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    edges = np.asarray(edges, dtype=float)
    lo = x + edges[None, :-1]
    hi = x + edges[None, 1:]
    width = np.broadcast_to(np.diff(edges)[None, :], lo.shape)
    e = 1.0 - alpha
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        right = p * np.where(
            lo > 0.0, lo**e * np.expm1(e * np.log1p(width / np.where(lo > 0.0, lo, 1.0))), width**e
        )
        near = -hi
        left = q * np.where(
            near > 0.0,
            near**e * np.expm1(e * np.log1p(width / np.where(near > 0.0, near, 1.0))),
            width**e,
        )
        straddle = p * np.maximum(hi, 0.0) ** e + q * np.maximum(-lo, 0.0) ** e
    return np.where(lo >= 0.0, right, np.where(hi <= 0.0, left, straddle))


def h_kernel(alpha: float, p: float, q: float, pl: PartitionLevels, x: np.ndarray) -> np.ndarray:
    """h(x) for a grid of points, shape (len(x), d)."""
    check_alpha(alpha, allow_one=False)
    return block_profiles(alpha, p, q, pl.edges, x) @ pl.levels


def gaussian_sigma2(alpha: float, p: float, q: float) -> float:
    """
    σ² = (1−α)² ∫ |x+1|^{−α}|x|^{−α} w(x+1) w(x) dx. The three sign regions
    are algebraic-weight integrals; [0, ∞) is mapped onto [0, 1) by x = u/(1−u).
    """
    check_alpha(alpha, allow_one=False)
    right, _ = quad(lambda u: 1.0, 0.0, 1.0, weight="alg", wvar=(-alpha, 2.0 * alpha - 2.0))
    middle, _ = quad(lambda u: 1.0, -1.0, 0.0, weight="alg", wvar=(-alpha, -alpha))
    # x < −1 mirrors x ≥ 0 under x ↦ −1 − x
    left = right
    return (1.0 - alpha) ** 2 * (p * p * right + p * q * middle + q * q * left)


def sigma2_closed_form(alpha: float, p: float, q: float) -> float:
    check_alpha(alpha, allow_one=False)
    return (1.0 - alpha) ** 2 * (
        (p * p + q * q) * beta_fn(1.0 - alpha, 2.0 * alpha - 1.0)
        + p * q * beta_fn(1.0 - alpha, 1.0 - alpha)
    )


def riesz_constant(theta: float) -> float:
    """∫_0^1∫_0^1 |t−s|^{−θ} ds dt."""
    return 2.0 / ((1.0 - theta) * (2.0 - theta))


def marginal_variance_constant(alpha: float, p: float, q: float) -> float:
    """κ with Λ^rl_1(λ) = (κ/2)λ·Σλ for G_Σ; equals σ²·∫∫|t−s|^{1−2α}."""
    check_alpha(alpha)
    if alpha == 1.0:
        return 1.0
    return gaussian_sigma2(alpha, p, q) * riesz_constant(2.0 * alpha - 1.0)


def tail_decay(alpha: float, origin_exponent: float, balanced: bool = False) -> float:
    """
    Power κ with Γ(h(x)) ≍ |x|^{−κ} as |x| → ∞. When Σ (t_i − t_{i−1})λ_i = 0
    the leading x^{−α} term of h cancels and h decays like x^{−α−1}.
    """
    return (alpha + (1.0 if balanced else 0.0)) * origin_exponent


def _evaluate(limit: CumulantLimit, values: np.ndarray) -> np.ndarray:
    return limit.value(values.reshape(-1, limit.dim))


def _outside_domain(limit: CumulantLimit, alpha, p, q, pl: PartitionLevels) -> bool:
    if math.isinf(limit.domain_radius):
        return False
    grid = np.concatenate(
        (np.linspace(-pl.times[-1] - 0.5, 0.5, DOMAIN_PROBES), -pl.edges)
    )
    values = _evaluate(limit, block_profiles(alpha, p, q, pl.edges, grid) @ pl.levels)
    return bool(np.any(~np.isfinite(values)))


def lambda_rl(
    limit: CumulantLimit,
    alpha: float,
    p: float,
    q: float,
    pl: PartitionLevels,
    quad_spec: Optional[QuadratureSpec] = None,
) -> RateResult:
    """
    Λ^rl by adaptive quadrature: the core [−X, X] is split at every kink
    {−t_i}; each tail either is mapped onto (0, 1] through x = ±X·u^{−1/(κ−1)},
    κ the decay exponent of the integrand, or is dropped and bounded by
    |f(±X)|·X/(κ−1). α = 1 reduces to Σ (t_i − t_{i−1}) Γ(λ_i).
    """
    check_alpha(alpha)
    if pl.dim != limit.dim:
        raise InvalidArgumentError(f"Levels have dimension {pl.dim}, the cumulant has {limit.dim}")
    spec = quad_spec or QuadratureSpec()
    if alpha == 1.0:
        values = _evaluate(limit, pl.levels)
        return RateResult(value=float(np.dot(pl.lengths, values)))
    if _outside_domain(limit, alpha, p, q, pl):
        return RateResult(value=math.inf, flags=["outside_domain"])

    edges = pl.edges
    levels = pl.levels

    def integrand(x: float) -> float:
        h = block_profiles(alpha, p, q, edges, np.array([x])) @ levels
        return float(_evaluate(limit, h)[0])

    x_max = spec.x_max
    cuts = sorted({-x_max, x_max, *(-edges).tolist(), *[b for b in spec.breakpoints if abs(b) < x_max]})
    flags: List[str] = []
    total = 0.0
    error = 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        for a, b in zip(cuts[:-1], cuts[1:]):
            value, err = quad(integrand, a, b, epsabs=spec.tol * 1e-3, epsrel=spec.tol, limit=spec.limit)
            total += value
            error += err
        tail_value, tail_bound, tail_flags = _tails(limit, alpha, pl, integrand, spec)
    if caught:
        flags.append("quadrature_warning")
        logger.warning(f"Λ^rl quadrature reported: {caught[0].message}")
    flags.extend(tail_flags)
    if math.isinf(tail_value):
        return RateResult(value=math.inf, flags=flags)
    total += tail_value
    bound = error + tail_bound
    if spec.tail == "truncate" and tail_bound > spec.tol * max(abs(total), 1e-300):
        flags.append("tail_bound_exceeds_tolerance")
    return RateResult(value=total, tail_bound=bound, flags=flags)


def _tails(
    limit: CumulantLimit, alpha: float, pl: PartitionLevels, integrand, spec: QuadratureSpec
) -> Tuple[float, float, List[str]]:
    balanced = bool(np.allclose(pl.lengths @ pl.levels, 0.0))
    kappa = tail_decay(alpha, limit.origin_exponent, balanced)
    if kappa <= 1.0:
        return math.inf, math.inf, ["divergent_tail"]
    x_max = spec.x_max
    if spec.tail == "truncate":
        edge_values = abs(integrand(x_max)) + abs(integrand(-x_max))
        return 0.0, edge_values * x_max / (kappa - 1.0), []

    gamma = 1.0 / (kappa - 1.0)
    u_min = (x_max / X_CAP) ** (1.0 / gamma)
    total = 0.0
    error = 0.0
    for sign in (1.0, -1.0):
        def mapped(u: float, sign=sign) -> float:
            x = sign * x_max * u ** (-gamma)
            return integrand(x) * x_max * gamma * u ** (-gamma - 1.0)

        value, err = quad(mapped, u_min, 1.0, epsabs=spec.tol * 1e-3, epsrel=spec.tol, limit=spec.limit)
        remainder = abs(integrand(sign * X_CAP)) * X_CAP / (kappa - 1.0)
        total += value + remainder
        error += err + remainder
    return total, error, []


@dataclass
class KernelQuadrature:
    """
    Fixed Gauss-Legendre rule for x ↦ Γ(Σ_i λ_i g_i(x)) with the block
    profiles g_i precomputed at the nodes, for optimizers that evaluate
    Λ^rl many times on one partition. Panels between kinks are graded
    geometrically towards both ends; tails use the same algebraic map as
    `lambda_rl`.
    """

    alpha: float
    edges: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    profiles: np.ndarray
    divergent: bool = False

    @classmethod
    def build(
        cls,
        alpha: float,
        p: float,
        q: float,
        edges: Sequence[float],
        origin_exponent: float = 2.0,
        x_max: float = 64.0,
        grading: int = 20,
        order: int = 8,
    ) -> "KernelQuadrature":
        check_alpha(alpha, allow_one=False)
        edges = np.asarray(edges, dtype=float)
        base_x, base_w = np.polynomial.legendre.leggauss(order)
        cuts = np.unique(np.concatenate(([-x_max, x_max], -edges)))
        nodes: List[np.ndarray] = []
        weights: List[np.ndarray] = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            width = b - a
            scales = 0.5 ** np.arange(1, grading + 1)
            points = np.unique(np.concatenate(([a, b, 0.5 * (a + b)], a + width * scales, b - width * scales)))
            for lo, hi in zip(points[:-1], points[1:]):
                half = 0.5 * (hi - lo)
                nodes.append(lo + half * (base_x + 1.0))
                weights.append(half * base_w)

        kappa = tail_decay(alpha, origin_exponent)
        divergent = kappa <= 1.0
        if divergent:
            kappa = tail_decay(alpha, origin_exponent, balanced=True)
        gamma = 1.0 / (kappa - 1.0)
        u_min = (x_max / X_CAP) ** (1.0 / gamma)
        u_cuts = np.unique(np.concatenate((np.geomspace(u_min, 1.0, 64), [1.0])))
        for lo, hi in zip(u_cuts[:-1], u_cuts[1:]):
            half = 0.5 * (hi - lo)
            u = lo + half * (base_x + 1.0)
            jac = x_max * gamma * u ** (-gamma - 1.0) * half * base_w
            for sign in (1.0, -1.0):
                nodes.append(sign * x_max * u ** (-gamma))
                weights.append(jac)

        x = np.concatenate(nodes)
        w = np.concatenate(weights)
        profiles = block_profiles(alpha, p, q, edges, x)
        logger.debug(f"Kernel rule with {x.size} nodes for {edges.size - 1} blocks")
        return cls(
            alpha=alpha, edges=edges, nodes=x, weights=w, profiles=profiles, divergent=divergent
        )

    def value(self, limit: CumulantLimit, levels: np.ndarray) -> float:
        levels = np.asarray(levels, dtype=float).reshape(-1, limit.dim)
        if self.divergent and not np.allclose(np.diff(self.edges) @ levels, 0.0):
            return math.inf
        h = self.profiles @ levels
        values = _evaluate(limit, h)
        if not np.all(np.isfinite(values)):
            return math.inf
        return float(self.weights @ values)

    def gradient(self, limit: CumulantLimit, levels: np.ndarray) -> np.ndarray:
        levels = np.asarray(levels, dtype=float).reshape(-1, limit.dim)
        h = self.profiles @ levels
        grad = limit.gradient(h)
        return self.profiles.T @ (self.weights[:, None] * grad)
