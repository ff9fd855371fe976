"""Hop-masked feature propagation for graphs.

Low-level operations work on :class:`Graph` objects and numpy arrays. The
config-level helpers (``preprocess``, ``evaluate``, ``run_pipeline``) accept
either a path to a JSON config or a dict with the same schema; relative paths
in a dict resolve against ``base_dir`` (default: the current directory).
"""
import json
import os
from pathlib import Path

from ._core import (  # noqa: F401
    ContractViolation,
    DataError,
    Error,
    Graph,
    HopMask,
    NumericError,
    ParameterError,
    build_hop_mask,
    combine,
    gsl,
    load_edge_list,
    load_features,
    noise_report,
    nsl,
    ppr_exact,
    ppr_push,
    propagate,
    rmask_features,
    stationary_matrix,
)
from . import _core

__all__ = [
    "ContractViolation", "DataError", "Error", "Graph", "HopMask", "NumericError", "ParameterError",
    "build_hop_mask", "combine", "gsl", "load_edge_list", "load_features", "noise_report", "nsl",
    "ppr_exact", "ppr_push", "propagate", "rmask_features", "stationary_matrix",
    "load_config", "preprocess", "evaluate", "run_pipeline",
]


def _resolve(config, base_dir):
    if isinstance(config, (str, os.PathLike)):
        path = Path(config)
        return path.read_text(), str(path.resolve().parent)
    return json.dumps(config), str(Path(base_dir or os.getcwd()).resolve())


def load_config(config, base_dir=None):
    """Validated config with every default filled in and absolute paths."""
    return json.loads(_core._normalize_config(*_resolve(config, base_dir)))


def preprocess(config, base_dir=None, workers=1):
    """Returns (hops, coverage): hop feature matrices 0..depth_H and, in
    rmask mode, per-hop walk statistics."""
    return _core._preprocess(*_resolve(config, base_dir), workers)


def evaluate(hops, config, base_dir=None):
    """Combines the hops, trains the configured classifier and returns the
    metrics dict."""
    return json.loads(_core._evaluate(list(hops), *_resolve(config, base_dir)))


def run_pipeline(config, out, base_dir=None, workers=1):
    """Full preprocess + train run writing the usual artifacts into `out`."""
    return json.loads(_core._run_pipeline(*_resolve(config, base_dir), str(out), workers))
