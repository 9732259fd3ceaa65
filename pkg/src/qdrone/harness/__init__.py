from .config import ConfigError
from .scenario import BUILTIN_SCENARIOS, Scenario, load_scenario, loads_scenario
from .session import RunReport, run_chsh_session

__all__ = [
    "BUILTIN_SCENARIOS",
    "ConfigError",
    "RunReport",
    "Scenario",
    "load_scenario",
    "loads_scenario",
    "run_chsh_session",
]
