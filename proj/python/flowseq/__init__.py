"""Python access to the flowseq core: parsing, interval detection, metrics, synthesis."""
import json as _json

from ._core import (
    ConfigError,
    DataError,
    FlowseqError,
    NumericError,
    __version__,
    beacon_period,
    classify_direction,
    confusion,
    detect_intervals,
    ensemble_or,
    f1,
)
from . import _core


def parse_flows(text, schema=None):
    """Parse delimited flow text; returns (records, rejection messages)."""
    return _core.parse_flows(text, _json.dumps(schema) if schema else "")


def generate(config=None):
    """Generate a synthetic labelled dataset from a dict of generator settings."""
    return _core.synth_generate(_json.dumps(config or {}))


def gradcheck(model, seed=1, hidden=(8, 8), steps=5, fault="none"):
    """Max relative error of the hand-derived gradient against central differences."""
    return _core.gradcheck(model, seed, list(hidden), steps, fault)


def separation_experiment(config=None, seed=1):
    """(F1 of the FNN, F1 of the LSTM) on a synthetic dataset, as fractions."""
    return _core.separation_experiment(_json.dumps(config or {}), seed)


__all__ = [
    "ConfigError", "DataError", "FlowseqError", "NumericError", "__version__",
    "beacon_period", "classify_direction", "confusion", "detect_intervals", "ensemble_or", "f1",
    "generate", "gradcheck", "parse_flows", "separation_experiment",
]
