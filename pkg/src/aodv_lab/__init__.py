"""Executable model of the AODV routing protocol with invariant checking and exploration."""

from .config import DEFAULT, InterpretationConfig, parse_config
from .explorer import explore
from .library import builtin_names, load_builtin, run_builtin
from .scenario import parse_scenario, run_scenario

__all__ = [
    "DEFAULT", "InterpretationConfig", "parse_config", "explore", "builtin_names", "load_builtin",
    "run_builtin", "parse_scenario", "run_scenario",
]
__version__ = "0.1.0"
