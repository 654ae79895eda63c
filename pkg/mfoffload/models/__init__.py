from mfoffload.models.configuration import Configuration, SupportDistribution, Policy
from mfoffload.models.scenario import GameMode, OneShotScenario, StationaryScenario, Scenario
from mfoffload.models.results import (
    HistoryEntry, FictitiousPlayReport, QuadraticProgram, OptimizationResult,
    FiniteEvalResult, TrajectoryEnsemble, ComparisonReport,
)
from mfoffload.models.population import SampledPopulation
from mfoffload.models.job import Job, JobPhase, EventRecord

__all__ = [
    "Configuration", "SupportDistribution", "Policy",
    "GameMode", "OneShotScenario", "StationaryScenario", "Scenario",
    "HistoryEntry", "FictitiousPlayReport", "QuadraticProgram", "OptimizationResult",
    "FiniteEvalResult", "TrajectoryEnsemble", "ComparisonReport",
    "SampledPopulation", "Job", "JobPhase", "EventRecord",
]
