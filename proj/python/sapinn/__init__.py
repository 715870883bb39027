"""Python access to the sensitivity-regularized PINN core."""

import json

from ._core import (
    SchemaError,
    SolverError,
    adv_diff_exact,
    forward,
    level_crossing,
    poisson9_fd_solve,
    poisson9_sensitivity,
    twophase1d_front,
)
from . import _core

__all__ = [
    "SchemaError",
    "SolverError",
    "adv_diff_exact",
    "canonical_config",
    "config_hash",
    "forward",
    "level_crossing",
    "poisson9_fd_solve",
    "poisson9_sensitivity",
    "run",
    "sweep_loss",
    "twophase1d_front",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def canonical_config(config):
    """Validated config (dict or JSON text) with all defaults filled in."""
    return json.loads(_core.canonical_config(_text(config)))


def run(config, write_outputs=True):
    """Train one experiment. Returns (metrics dict, bundle directory, checkpoint text)."""
    metrics, directory, checkpoint = _core.run(_text(config), write_outputs)
    return json.loads(metrics), directory, checkpoint


def config_hash(config):
    """Provenance hash of a config (dict or JSON text), output directory excluded."""
    return _core.config_hash(_text(config))


def sweep_loss(checkpoint, config):
    """loss_f sweeps of a saved network for every sweep in the config."""
    return _core.sweep_loss(checkpoint, _text(config))
