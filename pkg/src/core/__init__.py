"""Core module for lipidmc.

Provides the ``run_simulation``, ``run_benchmark`` and ``run_analyze`` entry-points for lattice
Monte Carlo of binary lipid mixtures.
"""

from core.entrypoint import run_analyze, run_benchmark, run_simulation
from core.parser import parse_config

__all__ = ["parse_config", "run_analyze", "run_benchmark", "run_simulation"]
