import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv(override=True)

# Parallelism and output settings
LDP_THREADS = os.getenv("LDP_THREADS", "")
LDP_OUTPUT_DIR = os.getenv("LDP_OUTPUT_DIR", "out")
LDP_MC_BATCH = int(os.getenv("LDP_MC_BATCH", "4096"))

# Numerical tolerances
LDP_LEGENDRE_TOL_1D = float(os.getenv("LDP_LEGENDRE_TOL_1D", "1e-8"))
LDP_LEGENDRE_TOL_ND = float(os.getenv("LDP_LEGENDRE_TOL_ND", "1e-6"))
LDP_PROBE_RADIUS = float(os.getenv("LDP_PROBE_RADIUS", "1e6"))

# Stamped into every JSON summary written by the CLI
LDP_SCHEMA_VERSION = os.getenv("LDP_SCHEMA_VERSION", "1.0")


def get_thread_count(cli_value: Optional[int] = None) -> int:
    """
    Resolves the worker cap: the --threads flag wins, then LDP_THREADS,
    then the CPU count.
    """
    if cli_value is not None and cli_value > 0:
        return cli_value
    if LDP_THREADS:
        try:
            value = int(LDP_THREADS)
        except ValueError:
            value = 0
        if value > 0:
            return value
    return os.cpu_count() or 1


def legendre_tolerance(dim: int) -> float:
    return LDP_LEGENDRE_TOL_1D if dim == 1 else LDP_LEGENDRE_TOL_ND
