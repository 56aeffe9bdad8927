"""Builds the domain objects a job config refers to."""

from typing import Any, Dict, Optional, Tuple

from models.data_types import PartitionLevels, PiecewisePath, QuadratureSpec, SimConfig
from processes.coefficients import CoefficientModel
from processes.noise import NoiseModel
from processes.scaling import Scenario
from shared.errors import ConfigurationError


def section(args: dict, name: str) -> Dict[str, Any]:
    value = args.get(name)
    if not isinstance(value, dict):
        raise ConfigurationError(f"config needs a '{name}' object")
    return value


def build_noise(args: dict) -> NoiseModel:
    return NoiseModel.from_config(section(args, "noise"))


def build_models(args: dict) -> Tuple[NoiseModel, CoefficientModel, Scenario]:
    noise = build_noise(args)
    coeffs = CoefficientModel.from_config(section(args, "coefficients"))
    scenario = Scenario.from_config(section(args, "scenario"), noise, coeffs)
    return noise, coeffs, scenario


def build_partition(args: dict) -> PartitionLevels:
    return PartitionLevels.from_config(section(args, "partition"))


def build_path(args: dict) -> PiecewisePath:
    return PiecewisePath.from_config(section(args, "path"))


def build_quadrature(args: dict) -> Optional[QuadratureSpec]:
    return QuadratureSpec.from_config(args.get("quadrature"))


def build_sim_config(args: dict) -> SimConfig:
    noise, coeffs, scenario = build_models(args)
    sim = section(args, "simulation")
    if "n" not in sim:
        raise ConfigurationError("simulation config needs 'n'")
    n = int(sim["n"])
    truncation = int(sim.get("M", coeffs.radius))
    tilt = sim.get("tilt")
    return SimConfig(
        noise=noise,
        coeffs=coeffs,
        scenario=scenario,
        n=n,
        truncation=truncation,
        replications=int(sim.get("replications", 1)),
        tilt=None if tilt is None else float(tilt),
        seed=int(args.get("seed", sim.get("seed", 0))),
    )
