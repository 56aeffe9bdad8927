"""
The eight scenarios of the short-memory (S1-S4) and long-memory (R1-R4)
assumptions: normalizers a_n, speeds b_n, the implicit sequence γ_n, and the
balanced regular variation data (τ, ζ, β) of Λ used in the huge-deviation
scenarios.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from processes.coefficients import CoefficientModel, psi_partial
from processes.noise import NoiseModel, domain_is_full, logmgf
from shared.errors import ConfigurationError, ScenarioError

logger = logging.getLogger(__name__)

BRACKET_GROWTH = 4.0
RV_FIT_RANGE = (1e2, 1e6)
RV_AGREEMENT = 0.01


class ScenarioTag(str, Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"

    @property
    def is_long(self) -> bool:
        return self.value.startswith("R")

    @property
    def level(self) -> int:
        """1/2: large deviations, 3: moderate, 4: huge."""
        return int(self.value[1])


@dataclass
class LambdaRV:
    """
    Balanced regular variation of Λ: Λ(tλ_t)/τ(t) → ζ(λ) for unit λ_t → λ,
    with τ regularly varying of index β. τ defaults to t^β.
    """

    beta: float
    zeta: Callable[[np.ndarray], Union[float, np.ndarray]]
    tau: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigurationError("β must be positive")
        if self.tau is None:
            beta = self.beta
            self.tau = lambda t: t**beta

    def __call__(self, lam: np.ndarray) -> Union[float, np.ndarray]:
        return lambda_h(self, lam)

    @classmethod
    def gaussian(cls, sigma: np.ndarray) -> "LambdaRV":
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))

        def zeta(u: np.ndarray) -> np.ndarray:
            return 0.5 * np.einsum("...i,ij,...j->...", u, sigma, u)

        return cls(beta=2.0, zeta=zeta)

    @classmethod
    def isotropic(cls, beta: float, zeta: float) -> "LambdaRV":
        def constant(u: np.ndarray) -> np.ndarray:
            return np.full(np.shape(u)[:-1], float(zeta))

        return cls(beta=beta, zeta=constant)

    @classmethod
    def from_config(cls, config: Dict[str, Any], noise: Optional[NoiseModel] = None) -> "LambdaRV":
        if config.get("from_noise"):
            if noise is None:
                raise ConfigurationError("lambda_rv.from_noise needs a noise model")
            fitted = rv_of_lambda(noise)
            if isinstance(fitted, RvRejection):
                raise ScenarioError(f"Λ is not balanced regularly varying: {fitted.reason}")
            return fitted
        if "beta" not in config:
            raise ConfigurationError("lambda_rv config needs 'beta' (or from_noise)")
        return cls.isotropic(beta=float(config["beta"]), zeta=float(config.get("zeta", 1.0)))


def lambda_h(rv: LambdaRV, lam: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Λ^h(λ) = ζ(λ/|λ|)|λ|^β, zero at λ = 0. Trailing axis is the dimension."""
    array = np.asarray(lam, dtype=float)
    single = array.ndim <= 1
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(1, -1)
    norms = np.linalg.norm(array, axis=-1)
    safe = np.where(norms > 0.0, norms, 1.0)
    units = array / safe[..., None]
    values = np.where(norms > 0.0, np.asarray(rv.zeta(units)) * safe**rv.beta, 0.0)
    if single:
        return float(values.reshape(-1)[0])
    return values


@dataclass
class RvRejection:
    reason: str
    betas: List[float] = field(default_factory=list)


def _probe_directions(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        angles = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
        return np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    diagonals = np.array([[1, 1, 1], [1, -1, 1], [-1, 1, -1], [-1, -1, -1]], dtype=float)
    diagonals /= np.linalg.norm(diagonals, axis=-1, keepdims=True)
    return np.vstack([axes, diagonals])


def rv_of_lambda(
    model: NoiseModel, t_range: Sequence[float] = RV_FIT_RANGE, num: int = 9
) -> Union[LambdaRV, RvRejection]:
    """
    Fits β per direction from the slope of log Λ(tu) against log t over
    t_range, and estimates ζ(u) = Λ(t u)/t^β at the top of the range.
    """
    if not domain_is_full(model):
        return RvRejection(reason="F_Λ is bounded; Λ cannot be regularly varying at infinity")
    ts = np.geomspace(t_range[0], t_range[1], num)
    log_t = np.log(ts)
    betas = []
    for u in _probe_directions(model.dim):
        values = logmgf(model, ts[:, None] * u[None, :])
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            return RvRejection(reason=f"Λ is not positive and finite along direction {u.tolist()}")
        betas.append(float(np.polyfit(log_t, np.log(values), 1)[0]))
    betas_arr = np.asarray(betas)
    beta = float(betas_arr.mean())
    if np.max(np.abs(betas_arr - beta)) > RV_AGREEMENT * beta:
        return RvRejection(reason="directional exponents disagree by more than 1%", betas=betas)
    if beta <= 1.0 + RV_AGREEMENT:
        return RvRejection(reason=f"fitted β = {beta:.4f} does not exceed 1", betas=betas)
    if abs(beta - round(beta)) < 1e-6:
        beta = float(round(beta))
    t_ref = float(t_range[1])

    def zeta(u: np.ndarray) -> np.ndarray:
        return np.asarray(logmgf(model, t_ref * np.asarray(u))) / t_ref**beta

    logger.info(f"Fitted balanced regular variation with β={beta:.6g}")
    return LambdaRV(beta=beta, zeta=zeta)


@dataclass
class Scenario:
    """
    A scenario tag bundled with the models it applies to. The normalizer is
    the power family a_n = n^ρ · Ψ_n^k (k = 0 in the short-memory scenarios).
    """

    tag: ScenarioTag
    noise: NoiseModel
    coeffs: CoefficientModel
    a_exponent: Optional[float] = None
    a_psi_power: Optional[float] = None
    lambda_rv: Optional[LambdaRV] = None

    def __post_init__(self):
        self.tag = ScenarioTag(self.tag)
        if self.a_exponent is None:
            self.a_exponent = 1.0
        if self.a_psi_power is None:
            self.a_psi_power = 1.0 if self.tag in (ScenarioTag.R1, ScenarioTag.R2) else 0.0
        validate_scenario(self)

    @property
    def alpha(self) -> float:
        return self.coeffs.alpha if self.coeffs.is_long else 1.0

    @classmethod
    def from_config(
        cls, config: Dict[str, Any], noise: NoiseModel, coeffs: CoefficientModel
    ) -> "Scenario":
        if "tag" not in config:
            raise ConfigurationError("scenario config needs 'tag'")
        rv_config = config.get("lambda_rv")
        lambda_rv = LambdaRV.from_config(rv_config, noise) if rv_config else None
        return cls(
            tag=ScenarioTag(str(config["tag"]).upper()),
            noise=noise,
            coeffs=coeffs,
            a_exponent=config.get("a_exponent"),
            a_psi_power=config.get("a_psi_power"),
            lambda_rv=lambda_rv,
        )

    def to_config(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "tag": self.tag.value,
            "a_exponent": self.a_exponent,
            "a_psi_power": self.a_psi_power,
        }
        if self.lambda_rv is not None:
            record["lambda_rv"] = {"beta": self.lambda_rv.beta}
        return record


def _psi(s: Scenario, n: int) -> float:
    return psi_partial(s.coeffs, n)


def validate_scenario(s: Scenario) -> None:
    tag = s.tag
    if tag.is_long != s.coeffs.is_long:
        regime = "long" if tag.is_long else "short"
        raise ScenarioError(f"Scenario {tag.value} needs {regime}-memory coefficients")
    if tag in (ScenarioTag.S2, ScenarioTag.R2) and not domain_is_full(s.noise):
        raise ScenarioError(f"Scenario {tag.value} needs F_Λ = R^d")
    if tag.level in (1, 2):
        expected_k = 1.0 if tag.is_long else 0.0
        if s.a_exponent != 1.0 or s.a_psi_power != expected_k:
            raise ScenarioError(
                f"Scenario {tag.value} fixes a_n = n{'Ψ_n' if tag.is_long else ''}"
            )
        return
    if tag.level == 4 and s.lambda_rv is None:
        raise ScenarioError(f"Scenario {tag.value} needs a balanced regular variation of Λ")
    if tag.level == 4 and s.lambda_rv.beta <= 1.0:
        raise ScenarioError("Huge deviations need β > 1")
    rho, k = s.a_exponent, s.a_psi_power
    if not tag.is_long:
        if k != 0.0:
            raise ScenarioError("Short-memory normalizers cannot carry Ψ_n factors")
        if tag == ScenarioTag.S3 and not 0.5 < rho < 1.0:
            raise ScenarioError(f"S3 needs a_n = n^ρ with 1/2 < ρ < 1, got ρ = {rho}")
        if tag == ScenarioTag.S4 and rho <= 1.0:
            raise ScenarioError(f"S4 needs a_n/n → ∞, got ρ = {rho}")
        return

    # long memory: check the window numerically along a geometric probe
    probes = [2**6, 2**10, 2**14, 2**18]
    lower = [normalizer(s, n) / (math.sqrt(n) * _psi(s, n)) for n in probes]
    upper = [normalizer(s, n) / (n * _psi(s, n)) for n in probes]
    if tag == ScenarioTag.R3:
        if not (np.all(np.diff(lower) > 0) and np.all(np.diff(upper) < 0)):
            raise ScenarioError(
                f"R3 needs √nΨ_n ≪ a_n ≪ nΨ_n; a_n = n^{rho}·Ψ_n^{k} leaves the window"
            )
    elif not np.all(np.diff(upper) > 0):
        raise ScenarioError(f"R4 needs a_n/(nΨ_n) → ∞; a_n = n^{rho}·Ψ_n^{k} does not grow fast enough")


def normalizer(s: Scenario, n: int) -> float:
    """a_n."""
    if n < 1:
        raise ScenarioError("n must be at least 1")
    value = float(n) ** s.a_exponent
    if s.a_psi_power:
        value *= _psi(s, n) ** s.a_psi_power
    return value


def speed(s: Scenario, n: int) -> float:
    """b_n."""
    tag = s.tag
    if tag.level in (1, 2):
        return float(n)
    a = normalizer(s, n)
    if tag == ScenarioTag.S3:
        return a * a / n
    if tag == ScenarioTag.R3:
        psi_n = _psi(s, n)
        return a * a / (n * psi_n * psi_n)
    g = gamma(s, n)
    if tag == ScenarioTag.S4:
        return n * s.lambda_rv.tau(g)
    return n * s.lambda_rv.tau(_psi(s, n) * g)


def gamma(s: Scenario, n: int) -> float:
    """
    γ_n = sup{x : τ(x)/x ≤ a_n/n} (S4) or sup{x : τ(Ψ_n x)/x ≤ a_n/n} (R4),
    by geometric bracketing from [1, 4] and Brent's method.
    """
    if s.tag not in (ScenarioTag.S4, ScenarioTag.R4) or s.lambda_rv is None:
        raise ScenarioError("γ_n is only defined for S4/R4 with a regular variation of Λ")
    scale = _psi(s, n) if s.tag == ScenarioTag.R4 else 1.0
    return solve_gamma(s.lambda_rv.tau, normalizer(s, n) / n, scale)


def solve_gamma(tau: Callable[[float], float], target: float, scale: float = 1.0) -> float:
    """sup{x : τ(scale·x)/x ≤ target}."""

    def ratio(x: float) -> float:
        return tau(scale * x) / x

    lo, hi = 1.0, BRACKET_GROWTH
    if ratio(lo) > target:
        while ratio(lo) > target:
            hi = lo
            lo /= BRACKET_GROWTH
            if lo < 1e-300:
                raise ScenarioError("Could not bracket γ_n from below")
    previous = ratio(lo)
    while ratio(hi) <= target:
        current = ratio(hi)
        if current < previous:
            raise ScenarioError(
                "τ(x)/x is not eventually increasing on the probe range (β > 1 is violated)"
            )
        previous = current
        lo, hi = hi, hi * BRACKET_GROWTH
        if hi > 1e300:
            raise ScenarioError("Could not bracket γ_n from above")
    root = brentq(lambda x: ratio(x) - target, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    if ratio(root * BRACKET_GROWTH) <= target:
        raise ScenarioError("τ(x)/x is not eventually increasing beyond the computed root")
    return float(root)
