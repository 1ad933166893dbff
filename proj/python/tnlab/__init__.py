"""Python access to the transport-noise mean-field lab.

Configs and manifests are plain dicts; they go through the C++ core as JSON.
"""

import json

from . import _tnlab
from ._tnlab import (
    InputError,
    SolverAbort,
    __version__,
    MANIFEST_SCHEMA_VERSION,
    acw_fk_quadrature,
    acw_simulate,
    criterion_ids,
    experiment_ids,
    normalization_constant,
    sobolev_norm,
    stability_report,
    steady_state,
)


def resolve_config(experiment, config=None):
    return json.loads(_tnlab.resolve_config(experiment, json.dumps(config or {})))


def run_experiment(experiment, config=None, seed=None, workers=0, out_dir=""):
    """Run one campaign; returns the manifest. Files are written only when out_dir is set."""
    text = _tnlab.run_experiment(experiment, json.dumps(config or {}), seed, workers, str(out_dir))
    return json.loads(text)


def check_acceptance(manifests):
    return json.loads(_tnlab.check_acceptance([json.dumps(m) for m in manifests]))


__all__ = [
    "InputError",
    "SolverAbort",
    "MANIFEST_SCHEMA_VERSION",
    "acw_fk_quadrature",
    "acw_simulate",
    "check_acceptance",
    "criterion_ids",
    "experiment_ids",
    "normalization_constant",
    "resolve_config",
    "run_experiment",
    "sobolev_norm",
    "stability_report",
    "steady_state",
]
