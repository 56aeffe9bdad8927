import logging

import numpy as np

from jobs.builders import build_path
from models.job_definitions import JobResult
from rates.gaussian import GaussianRateMode, gaussian_rate_alpha, unit_cell_averages
from shared.errors import ConfigurationError

logger = logging.getLogger(__name__)


def gauss_rate(args: dict) -> JobResult:
    """
    Γ*_α for the Gaussian limit G_Σ on a ladder of uniform grids. The target
    is either a path (its derivative's cell averages) or "unit": the pair
    h ≡ 1, φ = T_θ 1, which the closed form can check exactly.
    """
    if "sigma" not in args or "alpha" not in args:
        raise ConfigurationError("gauss-rate config needs 'sigma' and 'alpha'")
    sigma = np.atleast_2d(np.asarray(args["sigma"], dtype=float))
    alpha = float(args["alpha"])
    p = float(args.get("p", 1.0))
    mode = GaussianRateMode(args.get("mode", GaussianRateMode.VARIATIONAL.value))
    cells = [int(m) for m in args.get("cells", [64])]
    target = args.get("target", "unit")

    rows = []
    flags = []
    for m in cells:
        h = None
        if target == "unit":
            h, phi = unit_cell_averages(2.0 * alpha - 1.0, m, sigma.shape[0])
            phi = phi @ sigma.T
        else:
            phi = build_path(args).cell_averages(m)
        result = gaussian_rate_alpha(sigma, alpha, phi, mode, p=p, h=h)
        logger.debug(f"Γ*_α on {m} cells: {result.value:.10g}")
        rows.append({"cells": m, "value": result.value})
        flags.extend(f for f in result.flags if f not in flags)

    summary = {"quantity": "gaussian_rate", "mode": mode.value, "alpha": alpha, "p": p,
               "value": rows[-1]["value"], "refinement": rows}
    return JobResult(summary=summary, series=rows, flags=flags)
