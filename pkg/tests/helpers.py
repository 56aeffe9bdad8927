import mpmath

from processes.coefficients import CoefficientModel, MemoryRegime, ShortGenerator
from processes.noise import NoiseModel
from processes.scaling import Scenario


def geometric(radius: int = 2**10, rho: float = 0.5) -> CoefficientModel:
    return CoefficientModel(
        regime=MemoryRegime.SHORT, radius=radius, generator=ShortGenerator.GEOMETRIC, rho=rho
    )


def long_memory(radius: int = 2**12, alpha: float = 0.75, p: float = 1.0) -> CoefficientModel:
    return CoefficientModel(regime=MemoryRegime.LONG, radius=radius, alpha=alpha, p=p)


def scenario(tag: str, noise: NoiseModel, coeffs: CoefficientModel, **kwargs) -> Scenario:
    return Scenario(tag=tag, noise=noise, coeffs=coeffs, **kwargs)


def sigma2_oracle(alpha: float) -> float:
    """(1−α)² B(1−α, 2α−1) at high precision (p = 1)."""
    with mpmath.workdps(30):
        a = mpmath.mpf(alpha)
        return float((1 - a) ** 2 * mpmath.beta(1 - a, 2 * a - 1))


def kappa_oracle(alpha: float) -> float:
    """σ² ∫∫|t−s|^{1−2α} ds dt, the variance constant of S_n/(nΨ_n) under unit noise."""
    theta = 2.0 * alpha - 1.0
    return sigma2_oracle(alpha) * 2.0 / ((1.0 - theta) * (2.0 - theta))
