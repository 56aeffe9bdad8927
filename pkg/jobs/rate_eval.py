import logging

from jobs.builders import build_models, build_partition, build_path, build_quadrature
from models.job_definitions import JobResult
from rates.paths import DEFAULT_CELLS, partition_rate, path_rate
from verification.limits import limit_value

logger = logging.getLogger(__name__)


def rate_eval(args: dict) -> JobResult:
    """
    Evaluates the cumulant limit at a partition with levels, or the
    sample-path rate I(f) at a piecewise-linear path.
    """
    _, _, scenario = build_models(args)

    if "path" not in args:
        pl = build_partition(args)
        result = limit_value(scenario, pl, build_quadrature(args))
        logger.info(f"Cumulant limit for {scenario.tag.value}: {result.value:.10g}")
        summary = {"quantity": "cumulant_limit", "scenario": scenario.tag.value, **result.to_record()}
        return JobResult(summary=summary, flags=list(result.flags))

    f = build_path(args)
    result = path_rate(scenario, f, int(args.get("cells", DEFAULT_CELLS)))
    summary = {"quantity": "path_rate", "scenario": scenario.tag.value, **result.to_record()}
    flags = list(result.flags)
    if "partition_times" in args:
        lower = partition_rate(scenario, f, args["partition_times"])
        summary["partition_lower_bound"] = lower.value
        flags.extend(lower.flags)
    series = [{"cells": m, "value": v} for m, v in result.refinement_trace] or None
    return JobResult(summary=summary, series=series, flags=flags)
