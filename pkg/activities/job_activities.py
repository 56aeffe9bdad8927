import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import yaml

from jobs import get_handler
from jobs.job_registry import JOBS
from models.data_types import ValidationResult, to_jsonable
from models.job_definitions import JobConfig, JobResult
from shared.config import LDP_SCHEMA_VERSION
from shared.errors import ConfigurationError

logger = logging.getLogger(__name__)

# Flags that make a --strict run exit with the numerical-failure status
STRICT_FLAGS = frozenset(
    {"tail_bound_exceeds_tolerance", "quadrature_warning", "not_converged", "max_sweeps"}
)


class JobActivities:
    def load_config(self, path: Path) -> Dict[str, Any]:
        """
        Reads a job config: YAML for .yaml/.yml files, JSON otherwise.
        Parse errors surface as ConfigurationError with the position.
        """
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() in (".yaml", ".yml"):
            try:
                data = yaml.safe_load(text)
            except yaml.YAMLError as e:
                raise ConfigurationError(f"Invalid YAML in {path}: {e}") from e
        else:
            data = self.parse_json_config(text, path)
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path} must hold a mapping at the top level")
        return data

    def parse_json_config(self, text: str, path: Optional[Path] = None) -> Dict[str, Any]:
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            source = path or "config"
            raise ConfigurationError(
                f"Malformed JSON in {source} at line {e.lineno}, column {e.colno}: {e.msg}"
            ) from e

    def validate_config(self, command: str, config: Dict[str, Any]) -> ValidationResult:
        """Checks the command, the schema version and the required arguments."""
        job = JOBS.get(command)
        if job is None:
            return ValidationResult(
                valid=False,
                failed_reason={
                    "command": command,
                    "reason": f"Unknown command; expected one of {sorted(JOBS)}",
                },
            )
        version = str(config.get("schema_version", LDP_SCHEMA_VERSION))
        if version != LDP_SCHEMA_VERSION:
            return ValidationResult(
                valid=False,
                failed_reason={
                    "schema_version": version,
                    "reason": f"Expected schema version {LDP_SCHEMA_VERSION}",
                },
            )
        missing = [arg.name for arg in job.arguments if arg.required and arg.name not in config]
        if missing:
            return ValidationResult(
                valid=False,
                failed_reason={"missing": missing, "reason": f"{command} needs {', '.join(missing)}"},
            )
        return ValidationResult(valid=True)

    def run(self, job: JobConfig) -> JobResult:
        config = self.load_config(job.config_path)
        validation = self.validate_config(job.command, config)
        if not validation.valid:
            raise ConfigurationError(validation.failed_reason["reason"])
        args = dict(config)
        if job.seed is not None:
            args["seed"] = job.seed
        args["threads"] = job.threads
        handler = get_handler(job.command)
        logger.info(f"Running {job.command} from {job.config_path}")
        result = handler(args)
        result.summary = {
            "schema_version": LDP_SCHEMA_VERSION,
            "command": job.command,
            "config": {**config, "schema_version": LDP_SCHEMA_VERSION, **self._seed(job)},
            "flags": sorted(set(result.flags)),
            "result": result.summary,
        }
        return result

    def _seed(self, job: JobConfig) -> Dict[str, Any]:
        return {} if job.seed is None else {"seed": job.seed}

    def strict_failures(self, result: JobResult) -> List[str]:
        return sorted(STRICT_FLAGS.intersection(result.flags))

    def write_artifacts(self, job: JobConfig, result: JobResult) -> List[Path]:
        """
        Writes <command>.json and, for series-producing jobs, <command>.csv.
        The CSV starts with one '#' timestamp line; the body below it only
        depends on the config and seed.
        """
        out = Path(job.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = job.command.replace("-", "_")
        written = []

        summary_path = out / f"{stem}.json"
        with summary_path.open("w", encoding="utf-8") as handle:
            json.dump(to_jsonable(result.summary), handle, indent=2)
            handle.write("\n")
        written.append(summary_path)

        if result.series:
            csv_path = out / f"{stem}.csv"
            frame = pd.DataFrame(result.series)
            stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
            with csv_path.open("w", encoding="utf-8", newline="") as handle:
                handle.write(f"# generated {stamp} schema {LDP_SCHEMA_VERSION}\n")
                frame.to_csv(handle, index=False)
            written.append(csv_path)

        for path in written:
            logger.info(f"Wrote {path}")
        return written
