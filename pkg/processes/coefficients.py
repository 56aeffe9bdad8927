"""
Coefficient sequences φ_i of the moving average X_n = Σ_i φ_i Z_{n−i},
windowed sums φ_{i,n} = φ_{i+1} + ... + φ_{i+n}, and the long-memory
normalizers ψ(n) = n^{−α} L(n), Ψ_n = Σ_{i≤n} ψ(i).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from shared.errors import ConfigurationError, OutOfRangeError, RegimeError

logger = logging.getLogger(__name__)


class MemoryRegime(str, Enum):
    SHORT = "short"
    LONG = "long"


class ShortGenerator(str, Enum):
    GEOMETRIC = "geometric"
    FINITE_SUPPORT = "finite_support"


@dataclass
class SlowlyVarying:
    """L(x) = log(max(x, e))^c; c = 0 gives L ≡ 1."""

    power: float = 0.0

    def __call__(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        if self.power == 0.0:
            return np.ones_like(x, dtype=float) if isinstance(x, np.ndarray) else 1.0
        return np.log(np.maximum(x, math.e)) ** self.power


@dataclass
class CoefficientModel:
    regime: MemoryRegime
    radius: int
    generator: Optional[ShortGenerator] = None
    rho: float = 0.5
    weights: List[float] = field(default_factory=list)
    offset: int = 0
    alpha: float = 0.75
    p: float = 1.0
    slowly_varying: SlowlyVarying = field(default_factory=SlowlyVarying)

    def __post_init__(self):
        self.regime = MemoryRegime(self.regime)
        self.radius = int(self.radius)
        if self.radius < 1:
            raise ConfigurationError("Truncation radius A must be a positive integer")
        if self.regime == MemoryRegime.SHORT:
            self.generator = ShortGenerator(self.generator or ShortGenerator.GEOMETRIC)
            if self.generator == ShortGenerator.GEOMETRIC and not 0.0 < self.rho < 1.0:
                raise ConfigurationError("Geometric coefficients need 0 < rho < 1")
            if self.generator == ShortGenerator.FINITE_SUPPORT:
                if not self.weights:
                    raise ConfigurationError("finite_support coefficients need weights")
                total = math.fsum(self.weights)
                if total == 0.0:
                    raise ConfigurationError("finite_support weights sum to zero")
                self.weights = [w / total for w in self.weights]
                lo, hi = self.offset, self.offset + len(self.weights) - 1
                if lo < -self.radius or hi > self.radius:
                    raise ConfigurationError("finite support exceeds the truncation radius")
        else:
            if not 0.5 < self.alpha <= 1.0:
                raise ConfigurationError(f"alpha must lie in (1/2, 1], got {self.alpha}")
            if not 0.0 <= self.p <= 1.0:
                raise ConfigurationError(f"p must lie in [0, 1], got {self.p}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def is_long(self) -> bool:
        return self.regime == MemoryRegime.LONG

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "CoefficientModel":
        if "regime" not in config or "A" not in config:
            raise ConfigurationError("coefficient config needs 'regime' and 'A'")
        regime = MemoryRegime(str(config["regime"]).lower().replace("memory", "").strip("_- "))
        radius = int(config["A"])
        if regime == MemoryRegime.SHORT:
            return cls(
                regime=regime,
                radius=radius,
                generator=ShortGenerator(config.get("generator", "geometric")),
                rho=float(config.get("rho", 0.5)),
                weights=[float(w) for w in config.get("weights", [])],
                offset=int(config.get("offset", 0)),
            )
        sv = config.get("slowly_varying") or {}
        return cls(
            regime=regime,
            radius=radius,
            alpha=float(config.get("alpha", 0.75)),
            p=float(config.get("p", 1.0)),
            slowly_varying=SlowlyVarying(power=float(sv.get("c", 0.0))),
        )

    def to_config(self) -> Dict[str, Any]:
        if self.regime == MemoryRegime.SHORT:
            return {
                "regime": "short", "A": self.radius, "generator": self.generator.value,
                "rho": self.rho, "weights": self.weights, "offset": self.offset,
            }
        return {
            "regime": "long", "A": self.radius, "alpha": self.alpha, "p": self.p,
            "slowly_varying": {"c": self.slowly_varying.power},
        }

    def psi(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """ψ(x) = x^{−α} L(x)."""
        if not self.is_long:
            raise RegimeError("ψ is only defined for long-memory coefficients")
        return np.power(x, -self.alpha) * self.slowly_varying(x)

    @cached_property
    def values(self) -> np.ndarray:
        """φ_i for i = −A..A (index i + A)."""
        i = np.arange(-self.radius, self.radius + 1)
        if self.regime == MemoryRegime.SHORT:
            if self.generator == ShortGenerator.GEOMETRIC:
                c = (1.0 - self.rho) / (1.0 + self.rho)
                return c * self.rho ** np.abs(i).astype(float)
            out = np.zeros(i.size)
            start = self.offset + self.radius
            out[start:start + len(self.weights)] = self.weights
            return out
        out = np.empty(i.size)
        k = np.arange(1, self.radius + 1, dtype=float)
        psi = self.psi(k)
        out[self.radius] = self.p
        out[self.radius + 1:] = self.p * psi
        out[:self.radius] = (self.q * psi)[::-1]
        return out

    @cached_property
    def table(self) -> "WindowSumTable":
        return WindowSumTable.build(self)


def phi(model: CoefficientModel, i: int) -> float:
    if abs(i) > model.radius:
        raise OutOfRangeError(f"Index {i} is outside the materialized range |i| <= {model.radius}")
    return float(model.values[i + model.radius])


@dataclass
class WindowSumTable:
    """
    Prefix sums of φ and |φ| over [−A, A]. The φ prefix is accumulated in
    extended precision since windowed sums are differences of nearly equal
    prefixes when A is large.
    """

    radius: int
    prefix: np.ndarray
    abs_prefix: np.ndarray

    @classmethod
    def build(cls, model: CoefficientModel) -> "WindowSumTable":
        values = model.values
        prefix = np.zeros(values.size + 1, dtype=np.longdouble)
        np.cumsum(values.astype(np.longdouble), out=prefix[1:])
        abs_prefix = np.zeros(values.size + 1)
        np.cumsum(np.abs(values), out=abs_prefix[1:])
        logger.debug(f"Built window-sum table with radius {model.radius}")
        return cls(radius=model.radius, prefix=prefix, abs_prefix=abs_prefix)

    def _check(self, start: Union[int, np.ndarray], n: int) -> None:
        lo = np.min(start) + 1
        hi = np.max(start) + n
        if lo < -self.radius or hi > self.radius:
            raise OutOfRangeError(
                f"Window [{int(lo)}, {int(hi)}] exits the materialized range [-{self.radius}, "
                f"{self.radius}]; raise the truncation radius A"
            )

    def window_sums(self, start: np.ndarray, n: int) -> np.ndarray:
        """φ_{i,n} for every i in `start` (vectorized)."""
        start = np.asarray(start, dtype=np.int64)
        self._check(start, n)
        idx = start + self.radius + 1
        return (self.prefix[idx + n] - self.prefix[idx]).astype(float)


def window_sum(table: WindowSumTable, i: int, n: int) -> float:
    return float(table.window_sums(np.array([i]), n)[0])


def square_window_sum(table: WindowSumTable, n: int, half_width: Optional[int] = None) -> float:
    """Σ_{|l| ≤ L} φ_{l,n}², the variance of S_n for unit-variance innovations."""
    if half_width is None:
        half_width = table.radius - n
    ls = np.arange(-half_width, half_width + 1)
    windows = table.window_sums(ls, n)
    return float(np.dot(windows, windows))


def psi_partial(model: CoefficientModel, n: int) -> float:
    """Ψ_n = Σ_{1≤i≤n} ψ(i) by compensated summation."""
    if not model.is_long:
        raise RegimeError("Ψ_n is only defined for long-memory coefficients")
    if n < 1:
        raise ConfigurationError("Ψ_n needs n >= 1")
    return _psi_partial_sum(model.alpha, model.slowly_varying.power, int(n))


@lru_cache(maxsize=1024)
def _psi_partial_sum(alpha: float, power: float, n: int) -> float:
    k = np.arange(1, n + 1, dtype=float)
    return math.fsum((np.power(k, -alpha) * SlowlyVarying(power)(k)).tolist())


@dataclass
class RegularVariationReport:
    ratio: float
    expected: float
    rel_error: float


def rv_diagnostic(model: CoefficientModel, x: float, n: int) -> RegularVariationReport:
    """Compares ψ(nx)/ψ(n) with its regular-variation limit x^{−α}."""
    if n * x > model.radius:
        raise OutOfRangeError(f"n·x = {n * x} exceeds the truncation radius {model.radius}")
    ratio = float(model.psi(n * x) / model.psi(float(n)))
    expected = x ** (-model.alpha)
    return RegularVariationReport(ratio=ratio, expected=expected, rel_error=abs(ratio / expected - 1.0))


def tail_bound(model: CoefficientModel, cutoff: Optional[int] = None) -> float:
    """Analytic bound on Σ_{|i|>cutoff} φ_i² (cutoff defaults to A)."""
    a = model.radius if cutoff is None else int(cutoff)
    if model.regime == MemoryRegime.SHORT:
        if model.generator == ShortGenerator.FINITE_SUPPORT:
            lo, hi = model.offset, model.offset + len(model.weights) - 1
            return 0.0 if max(abs(lo), abs(hi)) <= a else math.inf
        c = (1.0 - model.rho) / (1.0 + model.rho)
        return c**2 * 2.0 * model.rho ** (2 * (a + 1)) / (1.0 - model.rho**2)
    weight = model.p**2 + model.q**2
    return weight * _long_tail_squares(model.alpha, model.slowly_varying.power, max(a, 0))


def _long_tail_squares(alpha: float, power: float, cutoff: int) -> float:
    """
    Upper bound on Σ_{i>cutoff} i^{−2α} L(i)².

    f(x) = x^{−2α} log(x)^{2c} decreases once log x ≥ c/α, so the terms up to
    that point are summed directly and the rest is bounded by
    ∫_m^∞ f = Γ(2c+1, (2α−1) log m) / (2α−1)^{2c+1}.
    """
    decay = 2.0 * alpha - 1.0
    shape = 2.0 * power + 1.0
    m = max(cutoff, 3, int(math.ceil(math.exp(power / alpha))))
    head = 0.0
    if m > cutoff:
        k = np.arange(cutoff + 1, m + 1, dtype=float)
        head = math.fsum((np.power(k, -2.0 * alpha) * SlowlyVarying(power)(k) ** 2).tolist())
    s = decay * math.log(m)
    tail = float(gammaincc(shape, s) * gamma_fn(shape)) / decay**shape
    return head + tail


def dump_csv(model: CoefficientModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame = pd.DataFrame(
        {"i": np.arange(-model.radius, model.radius + 1), "phi": model.values}
    )
    frame.to_csv(path, index=False)
    return path
