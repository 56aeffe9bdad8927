"""
Innovation laws of the moving average: log-moment generating function Λ,
its Fenchel-Legendre transform Λ*, covariance, sampling and exponential
tilting.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from shared.config import LDP_PROBE_RADIUS, legendre_tolerance
from shared.errors import ConfigurationError, DomainError, InvalidArgumentError
from shared.optimize import maximize_line

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray, list, tuple]

MAX_DIM = 3


class NoiseKind(str, Enum):
    GAUSSIAN_ISO = "gaussian_iso"
    GAUSSIAN_FULL = "gaussian_full"
    RADEMACHER = "rademacher"
    LAPLACE = "laplace"
    UNIFORM_SYMMETRIC = "uniform_symmetric"


_KIND_ALIASES = {
    "gaussianiso": NoiseKind.GAUSSIAN_ISO,
    "gaussian": NoiseKind.GAUSSIAN_ISO,
    "gaussianfull": NoiseKind.GAUSSIAN_FULL,
    "rademacher": NoiseKind.RADEMACHER,
    "laplace": NoiseKind.LAPLACE,
    "uniformsymmetric": NoiseKind.UNIFORM_SYMMETRIC,
    "uniform": NoiseKind.UNIFORM_SYMMETRIC,
}


class DomainStatus(str, Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    EXTERIOR = "Exterior"


@dataclass
class DomainQuery:
    point: np.ndarray
    result: DomainStatus


@dataclass
class NoiseModel:
    """
    A mean-zero i.i.d. innovation law on R^d. Laplace and uniform laws are
    coordinatewise independent with the given scale / half-width.
    """

    kind: NoiseKind
    dim: int = 1
    variance: float = 1.0
    sigma: Optional[np.ndarray] = None
    scale: float = 1.0
    halfwidth: float = 1.0
    _sqrt_sigma: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.kind = NoiseKind(self.kind)
        if not 1 <= self.dim <= MAX_DIM:
            raise ConfigurationError(f"Noise dimension must be in 1..{MAX_DIM}, got {self.dim}")
        if self.kind == NoiseKind.GAUSSIAN_FULL:
            if self.sigma is None:
                raise ConfigurationError("gaussian_full noise needs a covariance matrix")
            self.sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
            if self.sigma.shape != (self.dim, self.dim):
                raise ConfigurationError(
                    f"Covariance shape {self.sigma.shape} does not match dim {self.dim}"
                )
            if not np.allclose(self.sigma, self.sigma.T):
                raise ConfigurationError("Covariance matrix must be symmetric")
            eigval, eigvec = np.linalg.eigh(self.sigma)
            if eigval.min() < -1e-12 * max(1.0, eigval.max()):
                raise ConfigurationError("Covariance matrix must be nonnegative definite")
            self._sqrt_sigma = eigvec * np.sqrt(np.clip(eigval, 0.0, None))
        if self.variance <= 0 or self.scale <= 0 or self.halfwidth <= 0:
            raise ConfigurationError("Noise parameters must be positive")

    @property
    def covariance(self) -> np.ndarray:
        return covariance(self)

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "NoiseModel":
        if "kind" not in config:
            raise ConfigurationError("noise config is missing 'kind'")
        raw_kind = str(config["kind"])
        kind = _KIND_ALIASES.get(raw_kind.replace("_", "").replace("-", "").lower())
        if kind is None:
            raise ConfigurationError(f"Unknown noise kind: {raw_kind}")
        dim = int(config.get("dim", 1))
        params = config.get("params", {}) or {}
        return cls(
            kind=kind,
            dim=dim,
            variance=float(params.get("variance", 1.0)),
            sigma=params.get("sigma"),
            scale=float(params.get("scale", 1.0)),
            halfwidth=float(params.get("halfwidth", 1.0)),
        )

    def to_config(self) -> Dict[str, Any]:
        params: Dict[str, Any] = {}
        if self.kind == NoiseKind.GAUSSIAN_ISO:
            params["variance"] = self.variance
        elif self.kind == NoiseKind.GAUSSIAN_FULL:
            params["sigma"] = self.sigma.tolist()
        elif self.kind == NoiseKind.LAPLACE:
            params["scale"] = self.scale
        elif self.kind == NoiseKind.UNIFORM_SYMMETRIC:
            params["halfwidth"] = self.halfwidth
        return {"kind": self.kind.value, "dim": self.dim, "params": params}

    @property
    def is_gaussian(self) -> bool:
        return self.kind in (NoiseKind.GAUSSIAN_ISO, NoiseKind.GAUSSIAN_FULL)

    @property
    def domain_radius(self) -> float:
        """Sup-norm radius of F_Λ (infinite when F_Λ = R^d)."""
        if self.kind == NoiseKind.LAPLACE:
            return 1.0 / self.scale
        return math.inf


def _coerce(model: NoiseModel, lam: ArrayLike) -> Tuple[np.ndarray, bool]:
    array = np.asarray(lam, dtype=float)
    if model.dim == 1:
        single = array.ndim == 0 or array.shape == (1,)
        if array.ndim == 0 or array.shape[-1] != 1:
            array = array[..., None]
    else:
        single = array.ndim == 1
    if array.shape[-1] != model.dim:
        raise InvalidArgumentError(
            f"Argument has trailing dimension {array.shape[-1]}, expected {model.dim}"
        )
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError("Log-MGF arguments must be finite")
    return array, single


def _log_cosh(x: np.ndarray) -> np.ndarray:
    """log cosh x; cosh x = 1 + 2 sinh²(x/2) keeps relative precision near 0."""
    ax = np.abs(x)
    near = np.log1p(2.0 * np.sinh(0.5 * np.minimum(ax, 1.0)) ** 2)
    far = ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)
    return np.where(ax < 1.0, near, far)


def _log_sinhc(x: np.ndarray) -> np.ndarray:
    """log(sinh(x)/x), with a series branch near 0."""
    ax = np.abs(x)
    small = ax < 1e-3
    out = np.empty_like(ax)
    xs = ax[small] ** 2
    out[small] = xs / 6.0 - xs**2 / 180.0 + xs**3 / 2835.0
    xl = ax[~small]
    out[~small] = xl + np.log1p(-np.exp(-2.0 * xl)) - np.log(2.0 * xl)
    return out


def _logmgf_array(model: NoiseModel, lam: np.ndarray) -> np.ndarray:
    kind = model.kind
    if kind == NoiseKind.GAUSSIAN_ISO:
        return 0.5 * model.variance * np.sum(lam**2, axis=-1)
    if kind == NoiseKind.GAUSSIAN_FULL:
        return 0.5 * np.einsum("...i,ij,...j->...", lam, model.sigma, lam)
    if kind == NoiseKind.RADEMACHER:
        return np.sum(_log_cosh(lam), axis=-1)
    if kind == NoiseKind.LAPLACE:
        u = model.scale * lam
        outside = np.any(np.abs(u) >= 1.0, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = -np.sum(np.log1p(-np.minimum(u**2, 1.0)), axis=-1)
        return np.where(outside, np.inf, values)
    if kind == NoiseKind.UNIFORM_SYMMETRIC:
        return np.sum(_log_sinhc(model.halfwidth * lam), axis=-1)
    raise ConfigurationError(f"Unsupported noise kind {kind}")


def logmgf(model: NoiseModel, lam: ArrayLike) -> Union[float, np.ndarray]:
    """
    Λ(λ) = log E exp(λ·Z_0). Accepts a single point (scalar for d = 1, or a
    d-vector) or an array of points with trailing dimension d. Returns +inf
    exactly outside F_Λ.
    """
    array, single = _coerce(model, lam)
    values = _logmgf_array(model, array)
    if single:
        return float(np.reshape(values, -1)[0])
    return values


def covariance(model: NoiseModel) -> np.ndarray:
    d = model.dim
    if model.kind == NoiseKind.GAUSSIAN_ISO:
        return model.variance * np.eye(d)
    if model.kind == NoiseKind.GAUSSIAN_FULL:
        return model.sigma.copy()
    if model.kind == NoiseKind.RADEMACHER:
        return np.eye(d)
    if model.kind == NoiseKind.LAPLACE:
        return 2.0 * model.scale**2 * np.eye(d)
    return (model.halfwidth**2 / 3.0) * np.eye(d)


def domain_query(model: NoiseModel, lam: ArrayLike) -> DomainQuery:
    point = np.atleast_1d(np.asarray(lam, dtype=float)).reshape(-1)
    if model.kind != NoiseKind.LAPLACE:
        return DomainQuery(point=point, result=DomainStatus.INTERIOR)
    sup = float(np.max(np.abs(point))) if point.size else 0.0
    radius = model.domain_radius
    if sup < radius:
        status = DomainStatus.INTERIOR
    elif sup == radius:
        status = DomainStatus.BOUNDARY
    else:
        status = DomainStatus.EXTERIOR
    return DomainQuery(point=point, result=status)


def domain_is_full(model: NoiseModel) -> bool:
    """True when F_Λ = R^d."""
    return math.isinf(model.domain_radius)


def gradient(model: NoiseModel, lam: ArrayLike) -> np.ndarray:
    """∇Λ by central differences with step 1e-6 * (1 + |λ_j|)."""
    point = np.atleast_1d(np.asarray(lam, dtype=float)).reshape(-1)
    grad = np.empty_like(point)
    for j in range(point.size):
        h = 1e-6 * (1.0 + abs(point[j]))
        up = point.copy()
        down = point.copy()
        up[j] += h
        down[j] -= h
        grad[j] = (logmgf(model, up) - logmgf(model, down)) / (2.0 * h)
    return grad


def _coordinate_model(model: NoiseModel) -> NoiseModel:
    return NoiseModel(
        kind=model.kind, dim=1, variance=model.variance, scale=model.scale,
        halfwidth=model.halfwidth,
    )


def _legendre_1d(model: NoiseModel, x: float, tol: float) -> float:
    if x == 0.0:
        return 0.0
    radius = model.domain_radius

    def objective(lam: float) -> float:
        if abs(lam) >= radius:
            return -math.inf
        return lam * x - logmgf(model, lam)

    initial_step = min(1.0, 0.5 * radius)
    result = maximize_line(
        objective,
        start=0.0,
        lower=-radius,
        upper=radius,
        tol=tol,
        probe_radius=LDP_PROBE_RADIUS,
        initial_step=initial_step,
    )
    if result.at_probe_radius and not result.unbounded:
        logger.debug(f"Legendre transform at x={x} is a boundary limit value")
    return max(result.value, 0.0)


def legendre(model: NoiseModel, x: ArrayLike, tol: Optional[float] = None) -> float:
    """
    Λ*(x) = sup_λ {λ·x − Λ(λ)}. Gaussian laws use the pseudo-inverse closed
    form (+inf off the range of Σ); the coordinatewise-independent laws are
    separable, and each coordinate is a bounded line search inside
    F_Λ. When the supremum is only a limit at the edge of the probe range,
    that limit value is returned.
    """
    point = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
    if point.size != model.dim:
        raise InvalidArgumentError(f"Expected a {model.dim}-vector, got {point.size} entries")
    if not np.all(np.isfinite(point)):
        raise InvalidArgumentError("Legendre transform needs a finite point")
    if tol is None:
        tol = legendre_tolerance(model.dim)
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")

    if model.kind == NoiseKind.GAUSSIAN_ISO:
        return 0.5 * float(point @ point) / model.variance
    if model.kind == NoiseKind.GAUSSIAN_FULL:
        return gaussian_conjugate(model.sigma, point)

    coordinate = _coordinate_model(model)
    total = 0.0
    for value in point:
        total += _legendre_1d(coordinate, float(value), tol)
        if math.isinf(total):
            return math.inf
    return total


def gaussian_conjugate(sigma: np.ndarray, x: np.ndarray, rtol: float = 1e-10) -> float:
    """½ x·Σ⁺x when x lies in range(Σ), +inf otherwise."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
    if not np.any(x):
        return 0.0
    pinv = np.linalg.pinv(sigma, rcond=rtol, hermitian=True)
    projection = sigma @ (pinv @ x)
    if np.linalg.norm(projection - x) > 1e-9 * max(1.0, np.linalg.norm(x)):
        return math.inf
    return 0.5 * float(x @ pinv @ x)


def sample(model: NoiseModel, stream: np.random.Generator, count: int) -> np.ndarray:
    """count i.i.d. draws, shape (count, d)."""
    if count < 0:
        raise InvalidArgumentError("count must be nonnegative")
    d = model.dim
    if model.kind == NoiseKind.GAUSSIAN_ISO:
        return math.sqrt(model.variance) * stream.standard_normal((count, d))
    if model.kind == NoiseKind.GAUSSIAN_FULL:
        return stream.standard_normal((count, d)) @ model._sqrt_sigma.T
    if model.kind == NoiseKind.RADEMACHER:
        return 2.0 * stream.integers(0, 2, size=(count, d)).astype(float) - 1.0
    if model.kind == NoiseKind.LAPLACE:
        return stream.laplace(0.0, model.scale, size=(count, d))
    return stream.uniform(-model.halfwidth, model.halfwidth, size=(count, d))


def sample_tilted(
    model: NoiseModel, stream: np.random.Generator, thetas: np.ndarray
) -> np.ndarray:
    """
    One draw per row of `thetas` (shape (count, d)) from the exponentially
    tilted laws dP_θ ∝ exp(θ·z) dP.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas.reshape(-1, model.dim)
    count, d = thetas.shape
    if model.kind == NoiseKind.GAUSSIAN_ISO:
        return model.variance * thetas + math.sqrt(model.variance) * stream.standard_normal((count, d))
    if model.kind == NoiseKind.GAUSSIAN_FULL:
        return thetas @ model.sigma.T + stream.standard_normal((count, d)) @ model._sqrt_sigma.T
    if model.kind == NoiseKind.RADEMACHER:
        positive = stream.random((count, d)) < expit(2.0 * thetas)
        return np.where(positive, 1.0, -1.0)
    if model.kind == NoiseKind.LAPLACE:
        if np.any(np.abs(thetas) * model.scale >= 1.0):
            raise DomainError("Laplace tilt must satisfy |θ_j| < 1/scale")
        rate_pos = 1.0 / model.scale - thetas
        rate_neg = 1.0 / model.scale + thetas
        positive = stream.random((count, d)) < rate_neg / (rate_pos + rate_neg)
        magnitude = stream.standard_exponential((count, d))
        return np.where(positive, magnitude / rate_pos, -magnitude / rate_neg)

    a = model.halfwidth
    u = stream.random((count, d))
    ta = thetas * a
    tiny = np.abs(ta) < 1e-12
    safe = np.where(tiny, 1.0, thetas)
    tilted = -a + np.log1p(u * np.expm1(2.0 * ta)) / safe
    return np.where(tiny, a * (2.0 * u - 1.0), tilted)


@dataclass
class TiltedNoise:
    """Sampler for dP_θ ∝ exp(θ·z) dP with its mean and likelihood ratio."""

    model: NoiseModel
    theta: np.ndarray
    mean: np.ndarray
    log_mgf_at_theta: float

    def sample(self, stream: np.random.Generator, count: int) -> np.ndarray:
        if not np.any(self.theta):
            return sample(self.model, stream, count)
        return sample_tilted(self.model, stream, np.broadcast_to(self.theta, (count, self.model.dim)))

    def log_weight(self, z: np.ndarray) -> np.ndarray:
        """log dP/dP_θ (z) = Λ(θ) − θ·z."""
        z = np.asarray(z, dtype=float).reshape(-1, self.model.dim)
        return self.log_mgf_at_theta - z @ self.theta


def tilt(model: NoiseModel, theta: ArrayLike) -> TiltedNoise:
    point = np.atleast_1d(np.asarray(theta, dtype=float)).reshape(-1)
    if point.size != model.dim:
        raise InvalidArgumentError(f"Tilt needs a {model.dim}-vector")
    if domain_query(model, point).result != DomainStatus.INTERIOR:
        raise DomainError(f"Tilt parameter {point.tolist()} is not interior to the domain")
    if not np.any(point):
        return TiltedNoise(model=model, theta=point, mean=np.zeros(model.dim), log_mgf_at_theta=0.0)
    return TiltedNoise(
        model=model,
        theta=point,
        mean=gradient(model, point),
        log_mgf_at_theta=float(logmgf(model, point)),
    )
