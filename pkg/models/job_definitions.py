from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional


@dataclass
class JobArgument:
    name: str
    type: str
    description: str
    required: bool = True


@dataclass
class JobDefinition:
    name: str
    description: str
    arguments: List[JobArgument]
    # False for jobs that only write a JSON summary
    produces_series: bool = True


@dataclass
class JobConfig:
    command: str
    config_path: Path
    output_dir: Path
    seed: Optional[int] = None
    threads: Optional[int] = None
    strict: bool = False
    verbosity: int = 0


@dataclass
class JobResult:
    """What a handler hands back: a JSON summary, an optional CSV series, flags."""

    summary: Dict[str, Any]
    series: Optional[List[Dict[str, Any]]] = None
    flags: List[str] = field(default_factory=list)
