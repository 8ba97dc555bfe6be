"""Experiment configuration, orchestration, reporting and the command line."""
from .config import ExperimentConfig, bundled_config, bundled_configs, canonical_hash, load_config
from .report import merge_reports, report, summary_table
from .run import RunManifest, SolverFailure, evaluate, run, run_many, solve_config

__all__ = ["ExperimentConfig", "bundled_config", "bundled_configs", "canonical_hash", "load_config",
           "merge_reports", "report", "summary_table",
           "RunManifest", "SolverFailure", "evaluate", "run", "run_many", "solve_config"]
