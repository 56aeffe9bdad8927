import logging

from jobs.builders import build_noise, build_partition, section
from models.job_definitions import JobResult
from processes.coefficients import CoefficientModel
from rates.pi_sets import pi_membership

logger = logging.getLogger(__name__)


def pi_check(args: dict) -> JobResult:
    """Probes membership of a partition's levels in the admissible set. Verdicts are data."""
    noise = build_noise(args)
    coeffs = CoefficientModel.from_config(section(args, "coefficients"))
    pl = build_partition(args)
    verdict = pi_membership(
        noise,
        coeffs,
        pl,
        n_max=int(args.get("n_max", 64)),
        j_max=int(args.get("j_max", 1024)),
        n_start=int(args.get("n_start", 1)),
    )
    logger.info(f"Π verdict: {verdict.status.value} ({verdict.reason})")
    return JobResult(summary=verdict.to_record())
