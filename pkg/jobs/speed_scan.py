from jobs.builders import build_sim_config
from models.job_definitions import JobResult
from shared.errors import ConfigurationError
from simulation.montecarlo import speed_scan as run_speed_scan


def speed_scan(args: dict) -> JobResult:
    if "x" not in args or not args.get("n_grid"):
        raise ConfigurationError("speed-scan config needs 'x' and a non-empty 'n_grid'")
    cfg = build_sim_config(args)
    report = run_speed_scan(cfg, args["n_grid"], float(args["x"]), args.get("threads"))
    return JobResult(summary=report.to_record(), series=report.rows())
