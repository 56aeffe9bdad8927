import logging
from typing import List

import numpy as np

from jobs.builders import build_models, build_noise
from models.job_definitions import JobResult
from processes.noise import legendre
from rates.conjugates import marginal_rate
from shared.errors import ConfigurationError

logger = logging.getLogger(__name__)


def _points(args: dict, dim: int) -> np.ndarray:
    if "points" not in args:
        raise ConfigurationError("conjugate config needs 'points'")
    points = np.asarray(args["points"], dtype=float)
    return points.reshape(-1, dim)


def conjugate(args: dict) -> JobResult:
    """
    Λ*(x) of the innovation law at each point, or with a scenario the
    marginal rate of S_n/a_n.
    """
    if "scenario" in args:
        noise, _, scenario = build_models(args)
    else:
        noise, scenario = build_noise(args), None

    rows: List[dict] = []
    flags: List[str] = []
    for point in _points(args, noise.dim):
        if scenario is None:
            value = legendre(noise, point, args.get("tol"))
        else:
            result = marginal_rate(scenario, point)
            value = result.value
            flags.extend(f for f in result.flags if f not in flags)
        row = {f"x{k + 1}": float(v) for k, v in enumerate(point)}
        row["value"] = value
        rows.append(row)
    logger.info(f"Evaluated the conjugate at {len(rows)} points")
    quantity = "legendre" if scenario is None else "marginal_rate"
    return JobResult(summary={"quantity": quantity, "values": rows}, series=rows, flags=flags)
