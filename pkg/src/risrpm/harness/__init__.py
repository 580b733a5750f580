"""Configuration, figure experiments, result persistence and the CLI."""
from .config import ExperimentSpec, default_spec, load_config, spec_from_dict, spec_to_dict
from .experiments import ResultTable, run_experiment
from .output import write_outputs

__all__ = [
    "ExperimentSpec", "ResultTable", "default_spec", "load_config", "run_experiment",
    "spec_from_dict", "spec_to_dict", "write_outputs",
]
