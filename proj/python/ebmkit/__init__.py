"""Python bindings for ebmkit: explainable boosting machines and baselines."""

import json

from ._ebmkit import (
    Cohort,
    ConfigError,
    DataError,
    EbmkitError,
    EbmModel,
    LrModel,
    MetricError,
    ModelFormatError,
    SchemaError,
    auroc,
    calibration_curve,
    log_loss,
    preset_names,
    run_cli,
)
from . import _ebmkit

__all__ = [
    "Cohort",
    "ConfigError",
    "DataError",
    "EbmkitError",
    "EbmModel",
    "LrModel",
    "MetricError",
    "ModelFormatError",
    "SchemaError",
    "auroc",
    "calibration_curve",
    "generate",
    "load_model",
    "log_loss",
    "preset",
    "preset_names",
    "run_cli",
    "shape",
    "train_ebm",
    "train_lr",
]


def preset(name):
    """Built-in synthetic spec as a dict."""
    return json.loads(_ebmkit.preset_json(name))


def generate(spec, n, seed=0):
    """Draw a synthetic cohort. `spec` is a preset name or a spec dict.

    Returns (cohort, true_logits).
    """
    if isinstance(spec, str):
        spec = preset(spec)
    return _ebmkit.generate_synthetic(json.dumps(spec), n, seed)


def train_ebm(cohort, outcome, config=None, exclusions=True):
    """Fit an EBM. `config` holds training settings overriding the defaults."""
    return _ebmkit.train_ebm(cohort, outcome, json.dumps(config or {}), exclusions)


def train_lr(cohort, outcome, l2=1e-4):
    return _ebmkit.train_lr(cohort, outcome, l2)


def load_model(path):
    with open(path, encoding="utf-8") as f:
        return EbmModel.deserialize(f.read())


def shape(model, feature):
    """One feature's learned shape as a dict of bins (or categories)."""
    return json.loads(model.shape_json(feature))
