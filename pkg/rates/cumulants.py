"""
The three limiting cumulant functions that appear in the rate functions:
Λ itself (large deviations), G_Σ(λ) = ½λ·Σλ (moderate deviations) and
Λ^h(λ) = ζ(λ/|λ|)|λ|^β (huge deviations). Each knows how to evaluate
itself on arrays of points, its gradient, and its convex conjugate.
"""

import math
from enum import Enum
from typing import Optional, Union

import numpy as np

from processes import noise as noise_ops
from processes.noise import NoiseModel
from processes.scaling import LambdaRV, Scenario, lambda_h
from shared.config import LDP_PROBE_RADIUS, legendre_tolerance
from shared.errors import ScenarioError
from shared.optimize import maximize_concave, maximize_line


class LimitKind(str, Enum):
    LAMBDA = "lambda"
    GAUSSIAN = "gaussian"
    HUGE = "huge"


class CumulantLimit:
    kind: LimitKind
    dim: int

    def value(self, lam: np.ndarray) -> np.ndarray:
        """Vectorized over the leading axes; trailing axis has length d."""
        raise NotImplementedError

    def conjugate(self, x: np.ndarray) -> float:
        raise NotImplementedError

    @property
    def covariance(self) -> np.ndarray:
        """Hessian at the origin, used for Gaussian starting points."""
        raise NotImplementedError

    @property
    def origin_exponent(self) -> float:
        """κ0 with Γ(u) ≍ |u|^κ0 as u → 0."""
        return 2.0

    @property
    def domain_radius(self) -> float:
        return math.inf

    def gradient(self, lam: np.ndarray) -> np.ndarray:
        """Central differences, step 1e-6 * (1 + |λ_j|), vectorized."""
        lam = np.asarray(lam, dtype=float)
        grad = np.empty_like(lam)
        for j in range(lam.shape[-1]):
            h = 1e-6 * (1.0 + np.abs(lam[..., j]))
            up = lam.copy()
            down = lam.copy()
            up[..., j] += h
            down[..., j] -= h
            grad[..., j] = (self.value(up) - self.value(down)) / (2.0 * h)
        return grad

    def scalar(self, lam: np.ndarray) -> float:
        return float(self.value(np.asarray(lam, dtype=float).reshape(1, self.dim))[0])


class NoiseCumulant(CumulantLimit):
    kind = LimitKind.LAMBDA

    def __init__(self, model: NoiseModel):
        self.model = model
        self.dim = model.dim

    def value(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float).reshape(-1, self.dim)
        return np.asarray(noise_ops.logmgf(self.model, lam)).reshape(-1)

    def conjugate(self, x: np.ndarray) -> float:
        return noise_ops.legendre(self.model, x)

    @property
    def covariance(self) -> np.ndarray:
        return noise_ops.covariance(self.model)

    @property
    def domain_radius(self) -> float:
        return self.model.domain_radius


class GaussianCumulant(CumulantLimit):
    kind = LimitKind.GAUSSIAN

    def __init__(self, sigma: np.ndarray):
        self.sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        self.dim = self.sigma.shape[0]

    def value(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float).reshape(-1, self.dim)
        return 0.5 * np.einsum("ni,ij,nj->n", lam, self.sigma, lam)

    def gradient(self, lam: np.ndarray) -> np.ndarray:
        return np.asarray(lam, dtype=float) @ self.sigma.T

    def conjugate(self, x: np.ndarray) -> float:
        return noise_ops.gaussian_conjugate(self.sigma, x)

    @property
    def covariance(self) -> np.ndarray:
        return self.sigma


class HugeCumulant(CumulantLimit):
    kind = LimitKind.HUGE

    def __init__(self, rv: LambdaRV, dim: int):
        self.rv = rv
        self.dim = dim

    def value(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float).reshape(-1, self.dim)
        return np.asarray(lambda_h(self.rv, lam)).reshape(-1)

    @property
    def origin_exponent(self) -> float:
        return self.rv.beta

    @property
    def covariance(self) -> np.ndarray:
        # curvature of ζ(u)|λ|^β at |λ| = 1 along the axes, a scale for starting points
        units = np.eye(self.dim)
        zeta = np.asarray(self.rv.zeta(units)).reshape(-1)
        return np.diag(np.maximum(self.rv.beta * (self.rv.beta - 1.0) * zeta, 1e-12))

    def conjugate(self, x: np.ndarray) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
        if not np.any(x):
            return 0.0
        tol = legendre_tolerance(self.dim)
        if self.dim == 1:
            result = maximize_line(
                lambda t: t * x[0] - self.scalar(np.array([t])), start=0.0, tol=tol,
                probe_radius=LDP_PROBE_RADIUS,
            )
            return max(result.value, 0.0)
        result = maximize_concave(
            lambda lam: float(lam @ x) - self.scalar(lam), np.zeros(self.dim), tol=tol
        )
        return max(result.value, 0.0)


def limit_for(
    kind: Union[LimitKind, str],
    noise: NoiseModel,
    lambda_rv: Optional[LambdaRV] = None,
) -> CumulantLimit:
    kind = LimitKind(kind)
    if kind == LimitKind.LAMBDA:
        return NoiseCumulant(noise)
    if kind == LimitKind.GAUSSIAN:
        return GaussianCumulant(noise_ops.covariance(noise))
    if lambda_rv is None:
        raise ScenarioError("The huge-deviation limit needs a regular variation of Λ")
    return HugeCumulant(lambda_rv, noise.dim)


def scenario_limit(s: Scenario) -> CumulantLimit:
    """The cumulant limit driving the rate function of a scenario."""
    level = s.tag.level
    if level in (1, 2):
        return NoiseCumulant(s.noise)
    if level == 3:
        return GaussianCumulant(noise_ops.covariance(s.noise))
    return HugeCumulant(s.lambda_rv, s.noise.dim)


def as_limit(source: Union[CumulantLimit, NoiseModel]) -> CumulantLimit:
    if isinstance(source, CumulantLimit):
        return source
    return NoiseCumulant(source)


__all__ = [
    "CumulantLimit",
    "GaussianCumulant",
    "HugeCumulant",
    "LimitKind",
    "NoiseCumulant",
    "as_limit",
    "limit_for",
    "scenario_limit",
]
