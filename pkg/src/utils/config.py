"""
Configuration: YAML defaults for the solver, the simulator and traffic
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from ..models.schedule import SolverConfig
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).resolve().parents[2] / 'config' / 'defaults.yaml'


@dataclass(frozen=True)
class SimulationSettings:
    horizon: int = 100
    be_queue_capacity: int = 256
    interference_packet_size: int = 1500
    interference_flow_share: float = 0.05


@dataclass
class Settings:
    solver: SolverConfig = field(default_factory=SolverConfig)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    mtu_bytes: int = 1500


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    """Read defaults.yaml (or path); missing sections keep the built-in defaults"""
    path = Path(path) if path else DEFAULTS_PATH
    if not path.exists():
        logger.debug("no settings file at %s, using built-in defaults", path)
        return Settings()
    try:
        with path.open() as stream:
            data: Dict[str, Any] = yaml.safe_load(stream) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse {path}: {e}") from None

    unknown = set(data) - {'solver', 'simulation', 'traffic'}
    if unknown:
        raise ConfigurationError(f"{path}: unknown sections {', '.join(sorted(unknown))}")
    solver = SolverConfig().with_overrides(**(data.get('solver') or {}))
    try:
        simulation = SimulationSettings(**(data.get('simulation') or {}))
    except TypeError as e:
        raise ConfigurationError(f"{path}: {e}") from None
    mtu = (data.get('traffic') or {}).get('mtu_bytes', 1500)
    if isinstance(mtu, bool) or not isinstance(mtu, int) or mtu <= 0:
        raise ConfigurationError(f"{path}: traffic.mtu_bytes must be a positive integer, got {mtu!r}")
    return Settings(solver, simulation, mtu)
