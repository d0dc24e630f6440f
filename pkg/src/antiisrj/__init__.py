"""GLWD-based suppression of interrupted-sampling repeater jamming.

Modules: ``scenario`` (configuration), ``siggen`` (signals), ``lct`` (linear
canonical transforms), ``tfr`` (STFT, WD, GLWD), ``linedet`` (ridge detection),
``suppress`` (masking, pulse compression, CFAR, metrics), ``harness`` (runs and
sweeps) and ``cli``.
"""

from ._backend import BACKEND
from .scenario import ConfigError, ScenarioConfig, load_config, parse_config
from .siggen import ComplexSignal, simulate

__all__ = ["BACKEND", "ComplexSignal", "ConfigError", "ScenarioConfig", "load_config",
           "parse_config", "simulate"]
__version__ = "0.1.0"
