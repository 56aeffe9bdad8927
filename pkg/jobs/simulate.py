import logging
from concurrent.futures import ThreadPoolExecutor

from jobs.builders import build_sim_config
from models.job_definitions import JobResult
from shared.config import get_thread_count
from simulation.montecarlo import SimulatedPath, simulate_path

logger = logging.getLogger(__name__)


def _rows(replicate: int, path: SimulatedPath) -> list:
    rows = []
    dim = path.step.shape[1]
    for t, step, poly in zip(path.times, path.step, path.polygonal):
        row = {"replicate": replicate, "t": float(t)}
        for k in range(dim):
            row[f"step{k + 1}"] = float(step[k])
            row[f"polygonal{k + 1}"] = float(poly[k])
        rows.append(row)
    return rows


def simulate(args: dict) -> JobResult:
    """Step and polygonal sample paths Y_n, Ỹ_n for every replicate."""
    cfg = build_sim_config(args)
    grid = args.get("simulation", {}).get("grid")

    def run(replicate: int) -> SimulatedPath:
        return simulate_path(cfg, replicate, grid)

    with ThreadPoolExecutor(max_workers=get_thread_count(args.get("threads"))) as executor:
        paths = list(executor.map(run, range(cfg.replications)))
    logger.info(f"Simulated {len(paths)} paths with n={cfg.n}, M={cfg.truncation}")

    rows = [row for r, path in enumerate(paths) for row in _rows(r, path)]
    summary = {
        "quantity": "sample_paths",
        "n": cfg.n,
        "M": cfg.truncation,
        "replications": cfg.replications,
        "seed": cfg.seed,
        "a_n": paths[0].normalizer,
        "endpoints": [path.step[-1].tolist() for path in paths],
    }
    return JobResult(summary=summary, series=rows)
