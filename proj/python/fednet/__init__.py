"""Federated traffic forecasting and link-risk ranking."""

import json

from ._fednet import (
    ClientPredictions,
    ConfigError,
    DataError,
    DivergenceError,
    Error,
    NodeSeries,
    RoundRecord,
    Scaler,
    Topology,
    TrainingResult,
    default_config,
    evaluate,
    fedavg_aggregate,
    generate_corpus,
    load_corpus,
    load_topology,
    make_windows,
    r2_score,
    rank_links,
    write_series,
)
from . import _fednet


def _config_text(config):
    if config is None:
        return "{}"
    if isinstance(config, str):
        return config
    return json.dumps(config)


def preprocess(series, config=None):
    return _fednet.preprocess(series, _config_text(config))


def train(corpus, config=None, h=1, p=1, seed=42, mode="fed"):
    """Federated (mode="fed") or centralized ("central") training run."""
    return _fednet.train(corpus, _config_text(config), h, p, seed, mode)


__all__ = [
    "ClientPredictions",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "Error",
    "NodeSeries",
    "RoundRecord",
    "Scaler",
    "Topology",
    "TrainingResult",
    "default_config",
    "evaluate",
    "fedavg_aggregate",
    "generate_corpus",
    "load_corpus",
    "load_topology",
    "make_windows",
    "preprocess",
    "r2_score",
    "rank_links",
    "train",
    "write_series",
]
