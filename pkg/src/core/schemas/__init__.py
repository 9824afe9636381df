"""Module containing the schemas for the lipidmc package."""

from core.schemas.run import BenchEntry, BenchReport, Engine, ImageFormat, InitMode, RenderConfig, RunConfig
from core.schemas.stats import IterationOutcome, RunResult, StepStats

__all__ = [
    "BenchEntry",
    "BenchReport",
    "Engine",
    "ImageFormat",
    "InitMode",
    "IterationOutcome",
    "RenderConfig",
    "RunConfig",
    "RunResult",
    "StepStats",
]
