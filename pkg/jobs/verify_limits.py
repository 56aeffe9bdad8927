import logging

from jobs.builders import build_models, build_partition, build_quadrature
from models.job_definitions import JobResult
from shared.errors import ConfigurationError
from verification.limits import convergence_report

logger = logging.getLogger(__name__)


def verify_limits(args: dict) -> JobResult:
    noise, coeffs, scenario = build_models(args)
    pl = build_partition(args)
    if not args.get("n_grid"):
        raise ConfigurationError("verify-limits config needs a non-empty 'n_grid'")
    half_width = args.get("half_width")
    report = convergence_report(
        noise,
        coeffs,
        scenario,
        pl,
        args["n_grid"],
        half_width=None if half_width is None else int(half_width),
        threads=args.get("threads"),
        quad_spec=build_quadrature(args),
    )
    logger.info(
        f"Limit {report.limit:.10g}; last relative error {report.rel_errors[-1]:.3g}"
    )
    return JobResult(summary=report.to_record(), series=report.rows(), flags=list(report.flags))
