"""Recurring concept-drift detection with a growing GAN discriminator."""

import json

from ._core import (
    HoeffdingTree,
    ParseError,
    Stream,
    UsageError,
    hoeffding_bound,
    load_stream,
    reference_accuracy,
    standardize,
    synth_recurring,
)
from ._core import run_strategy_json as _run_strategy_json

__all__ = [
    "HoeffdingTree",
    "ParseError",
    "Stream",
    "UsageError",
    "hoeffding_bound",
    "load_stream",
    "reference_accuracy",
    "run_strategy",
    "standardize",
    "synth_recurring",
]


def run_strategy(stream, strategy="driftgan", *, rho=100, batch_size=100, seq_len=4, lambda_=1.0, seed=0,
                 retrain_interval=0):
    """Prequential run of one strategy; returns the report as a dict."""
    return json.loads(
        _run_strategy_json(stream, strategy, rho=rho, batch_size=batch_size, seq_len=seq_len, lambda_=lambda_,
                           seed=seed, retrain_interval=retrain_interval))
