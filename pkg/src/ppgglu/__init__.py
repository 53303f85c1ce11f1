"""Glucose estimation from PPG windows with a hybrid CNN/GRU regressor."""
from .dataset import Dataset, kfold, load_dataset, split, synth_generate
from .evaluation import ceg_summary, ceg_zone, compute_metrics, render_report
from .model import HybridModel, ModelConfig, build, load, save
from .preprocess import FilterSpec, PpgRecord, PreprocessConfig, Window, augment_gaussian, preprocess
from .training import TrainConfig, cross_validate, train

__version__ = "0.1.0"

__all__ = [
    "Dataset", "FilterSpec", "HybridModel", "ModelConfig", "PpgRecord", "PreprocessConfig", "TrainConfig",
    "Window", "augment_gaussian", "build", "ceg_summary", "ceg_zone", "compute_metrics", "cross_validate",
    "kfold", "load", "load_dataset", "preprocess", "render_report", "save", "split", "synth_generate", "train",
]
