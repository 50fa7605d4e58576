"""Synthesis and ML discrimination of dispersive qubit-readout trajectories."""

from . import errors
from .features import FeatureMatrix, FilterKernel, PcaModel, fit_pca, vectorize
from .io import load_dataset, save_dataset
from .metrics import FidelityReport, assignment_fidelity, time_sweep
from .pipeline import (
    EvalContext,
    EvaluationOutcome,
    diagnose_dataset,
    evaluate_dataset,
    method_recipe,
)
from .sim import (
    AmplifierModel,
    CavityParams,
    Dataset,
    DatasetSpec,
    DecoherenceRates,
    NoiseModel,
    PointerPaths,
    TimeGrid,
    Trajectory,
    evolve_pointer_states,
    generate_dataset,
    default_dataset_spec,
    sample_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "AmplifierModel",
    "CavityParams",
    "Dataset",
    "DatasetSpec",
    "DecoherenceRates",
    "NoiseModel",
    "PointerPaths",
    "TimeGrid",
    "Trajectory",
    "FeatureMatrix",
    "FilterKernel",
    "PcaModel",
    "FidelityReport",
    "EvalContext",
    "EvaluationOutcome",
    "assignment_fidelity",
    "diagnose_dataset",
    "evaluate_dataset",
    "evolve_pointer_states",
    "fit_pca",
    "generate_dataset",
    "default_dataset_spec",
    "load_dataset",
    "method_recipe",
    "sample_trajectory",
    "save_dataset",
    "time_sweep",
    "vectorize",
    "__version__",
]
