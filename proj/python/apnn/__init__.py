"""Parity-decomposed neural surrogates for the multiscale radiative transfer equation.

The heavy lifting lives in the compiled ``_apnn`` module; this package adds
config handling on top.
"""

import json
import os

from ._apnn import (
    ConfigError,
    IoError,
    NonFiniteError,
    Surrogate1D,
    Surrogate2D,
    fourier_embed,
    gauss_legendre,
    lr_at,
    quarter_circle_rule,
    reference_1d,
    reference_2d,
    relative_l2,
    residuals_1d,
    sample_batch,
)
from . import _apnn

__all__ = [
    "ConfigError",
    "IoError",
    "NonFiniteError",
    "Surrogate1D",
    "Surrogate2D",
    "fourier_embed",
    "gauss_legendre",
    "load_config",
    "lr_at",
    "quarter_circle_rule",
    "reference_1d",
    "reference_2d",
    "relative_l2",
    "residuals_1d",
    "run",
    "sample_batch",
    "sweep",
]


def load_config(source):
    """Resolved run config (all defaults filled in) from a dict or a JSON file path."""
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source) as f:
                text = f.read()
        except OSError as e:
            raise IoError(f"cannot read {source}") from e
    else:
        text = json.dumps(source)
    return json.loads(_apnn.normalize_config(text))


def _merge(config, overrides):
    cfg = load_config(config)
    cfg.update(overrides)
    return json.dumps(cfg)


def run(config, out_dir=None, **overrides):
    """Train one surrogate set. Top-level config keys can be overridden by keyword.

    Returns a dict with the loss/error/rho tables (column name -> numpy array),
    ``final_rel_l2`` and ``final_loss``.
    """
    return _apnn.run_experiment(_merge(config, overrides), "" if out_dir is None else str(out_dir))


def sweep(config, out_dir=None, **overrides):
    """One run per value in ``epsilons``; returns the summary table."""
    return _apnn.run_sweep(_merge(config, overrides), "" if out_dir is None else str(out_dir))
