# utils/config_utils.py
import logging
import os

import yaml

logger = logging.getLogger(__name__)

DEFAULTS = {
    'l_max': 50,
    'trials': 2000,
    'seed': 0,
    'variants': ['fipa', 'sipa'],
    'mode': 'binary',
    'n_jobs': 1,
    'output_dir': 'results',
}

ENV_OVERRIDES = {
    'output_dir': 'IPA_OUTPUT_DIR',
}


def initialize_settings(overrides=None):
    """Defaults, then environment, then explicit overrides (None values are skipped)"""
    settings = dict(DEFAULTS)
    for key, var in ENV_OVERRIDES.items():
        if os.environ.get(var):
            settings[key] = os.environ[var]
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key] = value
    return settings


def load_sweep_settings(path):
    """Read a YAML sweep file into a flat dict; unknown keys are rejected"""
    with open(path, 'r') as f:
        loaded = yaml.safe_load(f) or {}
    if not isinstance(loaded, dict):
        raise ValueError(f"{path}: expected a mapping at top level")

    known = set(DEFAULTS) | {'matrix', 'gamma', 'rho', 'n', 'm', 'matrix_seed',
                             'field_mode', 'sparsities', 'ks', 'cost_model', 'extrinsic'}
    unknown = sorted(set(loaded) - known)
    if unknown:
        raise ValueError(f"{path}: unknown setting(s) {', '.join(unknown)}")
    logger.debug("📄 Loaded sweep settings from %s: %s", path, sorted(loaded))
    return loaded
