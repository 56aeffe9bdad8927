import dataclasses
import logging

from jobs.builders import build_sim_config
from models.data_types import EstimateMethod
from models.job_definitions import JobResult
from shared.errors import ConfigurationError
from simulation.montecarlo import estimate_tail, exact_gaussian_tail

logger = logging.getLogger(__name__)


def tail(args: dict) -> JobResult:
    """
    P(S_n/a_n > x) at one n, or one row per n of 'n_grid'. Gaussian
    innovations also get the exact value alongside a sampled estimate.
    """
    if "x" not in args:
        raise ConfigurationError("tail config needs the level 'x'")
    x = float(args["x"])
    method = EstimateMethod(args.get("method", EstimateMethod.DIRECT.value))
    cfg = build_sim_config(args)
    n_grid = [int(n) for n in args.get("n_grid", [cfg.n])]
    with_oracle = (
        method != EstimateMethod.EXACT_GAUSSIAN and cfg.noise.is_gaussian and cfg.noise.dim == 1
    )

    rows = []
    estimates = []
    for n in n_grid:
        run_cfg = dataclasses.replace(cfg, n=n)
        estimate = estimate_tail(run_cfg, x, method, args.get("threads"))
        row = {
            "n": n,
            "estimate": estimate.estimate,
            "log_estimate": estimate.log_estimate,
            "ci_low": estimate.ci_low,
            "ci_high": estimate.ci_high,
            "ess": estimate.effective_sample_size,
        }
        record = estimate.to_record()
        if with_oracle:
            exact = exact_gaussian_tail(cfg.coeffs, cfg.scenario, n, x)
            row["exact"] = exact.estimate
            record["exact"] = exact.estimate
            record["exact_in_ci"] = estimate.ci_low <= exact.estimate <= estimate.ci_high
        logger.info(f"n={n}: P ≈ {estimate.estimate:.6g} [{estimate.ci_low:.6g}, {estimate.ci_high:.6g}]")
        rows.append(row)
        estimates.append(record)

    summary = {"quantity": "tail_probability", "x": x, "method": method.value, "estimates": estimates}
    return JobResult(summary=summary, series=rows)
