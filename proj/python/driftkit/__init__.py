"""Drift-aware stream classification: generators, extractors, online learners,
drift detectors and a prequential evaluation harness."""

import json

from ._core import (
    Adwin,
    ConfigError,
    DataError,
    Ddm,
    Eddm,
    StateError,
    Vectorizer,
    average_path_length,
    aut,
    fnv1a64,
    hoeffding_bound,
    metrics,
)
from . import _core

__all__ = [
    "Adwin",
    "ConfigError",
    "DataError",
    "Ddm",
    "Eddm",
    "StateError",
    "Vectorizer",
    "average_path_length",
    "aut",
    "fnv1a64",
    "generate",
    "hoeffding_bound",
    "metrics",
    "normalize_config",
    "run",
]


def run(config, delay=None):
    """Run one experiment in memory and return its summary dict."""
    return json.loads(_core._run(json.dumps(config), delay))


def generate(**generator):
    """Generate a vocabulary-drift stream; returns a list of record dicts."""
    text = _core._generate(json.dumps(generator))
    return [json.loads(line) for line in text.splitlines()]


def normalize_config(config):
    """Validate a config and return it with every default filled in."""
    return json.loads(_core._config_defaults(json.dumps(config)))
