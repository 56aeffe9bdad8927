from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from shared.errors import ConfigurationError, PartitionError

if TYPE_CHECKING:
    from processes.coefficients import CoefficientModel
    from processes.noise import NoiseModel
    from processes.scaling import Scenario


def _as_levels(levels: Sequence[Any], k: int) -> np.ndarray:
    array = np.asarray(levels, dtype=float)
    if array.ndim == 1:
        array = array.reshape(k, -1) if array.size != k else array.reshape(k, 1)
    return array


@dataclass
class PartitionLevels:
    """Partition 0 < t_1 < ... < t_k <= 1 with a level vector per block."""

    times: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        k = self.times.size
        if k < 1:
            raise PartitionError("A partition needs at least one time point")
        self.levels = _as_levels(self.levels, k)
        if self.levels.shape[0] != k:
            raise PartitionError(
                f"Got {self.levels.shape[0]} level vectors for {k} partition times"
            )
        if self.times[0] <= 0.0 or self.times[-1] > 1.0:
            raise PartitionError("Partition times must lie in (0, 1]")
        if np.any(np.diff(self.times) <= 0.0):
            raise PartitionError("Partition times must be strictly increasing")

    @property
    def k(self) -> int:
        return self.times.size

    @property
    def dim(self) -> int:
        return self.levels.shape[1]

    @property
    def edges(self) -> np.ndarray:
        """t_0 = 0, t_1, ..., t_k."""
        return np.concatenate(([0.0], self.times))

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.edges)

    def with_levels(self, levels: np.ndarray) -> "PartitionLevels":
        return PartitionLevels(times=self.times.copy(), levels=np.asarray(levels, dtype=float))

    @classmethod
    def uniform(cls, m: int, levels: np.ndarray) -> "PartitionLevels":
        return cls(times=np.arange(1, m + 1) / m, levels=levels)

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "PartitionLevels":
        try:
            return cls(times=config["times"], levels=config["levels"])
        except KeyError as e:
            raise ConfigurationError(f"partition config is missing {e}") from e


@dataclass
class PiecewisePath:
    """Piecewise-linear path on [0, 1] given by its knots and knot values."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        self.values = values
        if self.knots.size < 2 or self.knots[0] != 0.0 or self.knots[-1] != 1.0:
            raise PartitionError("Path knots must start at 0 and end at 1")
        if np.any(np.diff(self.knots) <= 0.0):
            raise PartitionError("Path knots must be strictly increasing")
        if self.values.shape[0] != self.knots.size:
            raise PartitionError("One value per knot is required")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def starts_at_origin(self) -> bool:
        return bool(np.all(self.values[0] == 0.0))

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.knots)

    @property
    def slopes(self) -> np.ndarray:
        """The piecewise-constant derivative f' on each knot interval, shape (m, d)."""
        return np.diff(self.values, axis=0) / self.durations[:, None]

    def __call__(self, t: Any) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack(
            [np.interp(t, self.knots, self.values[:, j]) for j in range(self.dim)], axis=-1
        )

    def cell_averages(self, m: int) -> np.ndarray:
        """Exact averages of f' over the m uniform cells of [0, 1]."""
        grid = np.linspace(0.0, 1.0, m + 1)
        return np.diff(self(grid), axis=0) * m

    @classmethod
    def linear(cls, endpoint: Sequence[float]) -> "PiecewisePath":
        endpoint = np.atleast_1d(np.asarray(endpoint, dtype=float))
        return cls(knots=[0.0, 1.0], values=np.stack([np.zeros_like(endpoint), endpoint]))

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "PiecewisePath":
        try:
            return cls(knots=config["knots"], values=config["values"])
        except KeyError as e:
            raise ConfigurationError(f"path config is missing {e}") from e


@dataclass
class QuadratureSpec:
    """
    Numerics for integrals over the real line: the core [-x_max, x_max] is
    split at the kinks of the integrand; the tails are either integrated
    after an algebraic change of variables ("mapped") or dropped and bounded
    analytically ("truncate").
    """

    x_max: float = 64.0
    tol: float = 1e-10
    tail: str = "mapped"
    limit: int = 200
    breakpoints: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.tail not in ("mapped", "truncate"):
            raise ConfigurationError(f"Unknown tail mode: {self.tail}")
        if self.x_max <= 1.0:
            raise ConfigurationError("x_max must exceed 1 so every kink lies in the core")

    @classmethod
    def from_config(cls, config: Optional[Dict[str, Any]]) -> "QuadratureSpec":
        config = config or {}
        return cls(
            x_max=float(config.get("x_max", 64.0)),
            tol=float(config.get("tol", 1e-10)),
            tail=config.get("tail", "mapped"),
            limit=int(config.get("limit", 200)),
        )


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, Enum):
        return value.value
    return value


@dataclass
class RateResult:
    value: float
    tail_bound: float = 0.0
    flags: List[str] = field(default_factory=list)
    refinement_trace: List[Tuple[int, float]] = field(default_factory=list)
    argmax: Optional[np.ndarray] = None

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    def to_record(self) -> Dict[str, Any]:
        return _jsonable(
            {
                "value": self.value,
                "tail_bound": self.tail_bound,
                "flags": list(self.flags),
                "refinement_trace": [list(item) for item in self.refinement_trace],
            }
        )


@dataclass
class PrelimitReport:
    n_grid: List[int]
    prelimit: List[float]
    limit: float
    rel_errors: List[float]
    convergence_exponent: Optional[float]
    tail_bounds: List[float] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    def rows(self) -> List[Dict[str, float]]:
        return [
            {"n": n, "prelimit": v, "limit": self.limit, "rel_error": e}
            for n, v, e in zip(self.n_grid, self.prelimit, self.rel_errors)
        ]

    def to_record(self) -> Dict[str, Any]:
        return _jsonable(asdict(self))


@dataclass
class SimConfig:
    noise: "NoiseModel"
    coeffs: "CoefficientModel"
    scenario: "Scenario"
    n: int
    truncation: int
    replications: int = 1
    tilt: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("replications must be at least 1")
        if self.n < 1:
            raise ConfigurationError("n must be at least 1")
        if self.truncation > self.coeffs.radius:
            raise ConfigurationError(
                f"Innovation truncation M={self.truncation} exceeds the coefficient radius "
                f"A={self.coeffs.radius}"
            )


class EstimateMethod(str, Enum):
    DIRECT = "direct"
    TILTED = "tilted"
    EXACT_GAUSSIAN = "exact-gaussian"


@dataclass
class TailEstimate:
    event: str
    estimate: float
    log_estimate: float
    ci_low: float
    ci_high: float
    effective_sample_size: float
    method: EstimateMethod
    std_error: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_record(self) -> Dict[str, Any]:
        return _jsonable(asdict(self))


@dataclass
class SpeedScanReport:
    x: float
    n_grid: List[int]
    neg_log_p: List[float]
    speeds: List[float]
    method: EstimateMethod
    rate: Optional[float] = None
    slope: Optional[float] = None

    @property
    def ratios(self) -> List[float]:
        return [v / b for v, b in zip(self.neg_log_p, self.speeds)]

    def rows(self) -> List[Dict[str, float]]:
        return [
            {"n": n, "neg_log_p": v, "b_n": b, "ratio": r}
            for n, v, b, r in zip(self.n_grid, self.neg_log_p, self.speeds, self.ratios)
        ]

    def to_record(self) -> Dict[str, Any]:
        record = asdict(self)
        record["ratios"] = self.ratios
        return _jsonable(record)


class PiStatus(str, Enum):
    FEASIBLE = "FeasibleUpTo"
    INFEASIBLE = "InfeasibleAt"
    DOMAIN_VIOLATION = "DomainViolation"


@dataclass
class PiVerdict:
    status: PiStatus
    n: Optional[int] = None
    j: Optional[int] = None
    n_max: Optional[int] = None
    j_max: Optional[int] = None
    sup_value: float = 0.0
    reason: str = ""

    def to_record(self) -> Dict[str, Any]:
        return _jsonable(asdict(self))


@dataclass
class ValidationResult:
    valid: bool
    failed_reason: dict = None

    def __post_init__(self):
        # Initialize empty dict if None
        if self.failed_reason is None:
            self.failed_reason = {}


def to_jsonable(value: Any) -> Any:
    return _jsonable(value)
