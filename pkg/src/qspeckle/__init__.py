"""Simulation and analysis of one- and two-photon speckle through random interferometers."""

from qspeckle.analytics import AnalyticPdf, FeatureVector, estimate_features
from qspeckle.classifier import ClassifierModel, StateClass, classify, fit_model
from qspeckle.interferometer import InterferometerConfig, TransmissionMatrix
from qspeckle.measurement import DetectorConfig, RecordSet, run_ensemble
from qspeckle.sources import SourceModel, make_source

__version__ = "0.1.0"

__all__ = [
    "AnalyticPdf",
    "ClassifierModel",
    "DetectorConfig",
    "FeatureVector",
    "InterferometerConfig",
    "RecordSet",
    "SourceModel",
    "StateClass",
    "TransmissionMatrix",
    "classify",
    "estimate_features",
    "fit_model",
    "make_source",
    "run_ensemble",
]
