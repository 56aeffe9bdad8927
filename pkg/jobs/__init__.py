from .conjugate import conjugate
from .gauss_rate import gauss_rate
from .pi_check import pi_check
from .rate_eval import rate_eval
from .simulate import simulate
from .speed_scan import speed_scan
from .tail import tail
from .verify_limits import verify_limits


def get_handler(job_name: str):
    if job_name == "rate-eval":
        return rate_eval
    if job_name == "conjugate":
        return conjugate
    if job_name == "gauss-rate":
        return gauss_rate
    if job_name == "verify-limits":
        return verify_limits
    if job_name == "simulate":
        return simulate
    if job_name == "tail":
        return tail
    if job_name == "speed-scan":
        return speed_scan
    if job_name == "pi-check":
        return pi_check

    raise ValueError(f"Unknown job: {job_name}")
