"""Simulator for faithful qubit transmission over a collective-noise channel
using a frequency-tagged reference photon."""
from .elements import ConfigError, NoiseUnitary
from .harness import ExperimentSpec, Report, run_experiment, sweep
from .noise import NoiseFamily, sample
from .protocol import DecoderConfig, InputQubit, correct_and_score, post_select, run_pipeline
from .state import StageError, TwoPhotonState

__all__ = [
    "ConfigError",
    "DecoderConfig",
    "ExperimentSpec",
    "InputQubit",
    "NoiseFamily",
    "NoiseUnitary",
    "Report",
    "StageError",
    "TwoPhotonState",
    "correct_and_score",
    "post_select",
    "run_experiment",
    "run_pipeline",
    "sample",
    "sweep",
]
