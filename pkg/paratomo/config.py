# paratomo/config.py
"""
Experiment configuration: loading, schema validation and defaults.

The configuration is a single JSON object. Every section below is optional
except `experiment`; missing keys take the listed defaults. A `null` value
means "derive it" (e.g. `recovery.M` in theorem mode).
"""
import copy
import hashlib
import json
import logging
import math
import os
import re

from .errors import ConfigError

EXPERIMENTS = ("nmr", "fermion", "support_id", "recover", "predict", "audit")
PROCEDURE_KINDS = ("exact", "pauli", "shadows")
MODES = ("theorem", "empirical")
VARIANTS = ("corollary", "algorithm1")
SYSTEM_KINDS = ("nmr", "fermion")

_INT = (int,)
_NUM = (int, float)
_STR = (str,)
_BOOL = (bool,)
_LIST = (list,)


def _positive(value):
    return value > 0


def _probability(value):
    return 0 < value < 1


def _unit_interval(value):
    return 0 < value <= 1


def _non_negative(value):
    return value >= 0


def _one_of(options):
    def check(value):
        return value in options
    check.options = options
    return check


# section -> key -> (allowed types, default, validator or None, nullable)
SCHEMA = {
    "system": {
        "kind": (_STR, None, _one_of(SYSTEM_KINDS), True),
        "n_qubits": (_INT, 2, _positive, False),
        "fields": (_LIST, None, None, True),
        "couplings": (_LIST, None, None, True),
        "e0": (_NUM, None, None, True),
        "sigma": (_NUM, 1.0, _positive, False),
        "gamma": (_NUM, 1e-3, _positive, False),
        "n_modes": (_INT, 2, _positive, False),
        "J": (_NUM, 1.0, _non_negative, False),
        "horizon": (_NUM, 1.0, _positive, False),
        "initial_state": (_STR, "plus", None, False),
        "support_size": (_INT, 3, _positive, False),
        "state_seed": (_INT, None, _non_negative, True),
    },
    "tomography": {
        "procedure": (_STR, "exact", _one_of(PROCEDURE_KINDS), False),
        "epsilon": (_NUM, 0.2, _positive, False),
        "delta": (_NUM, 0.1, _probability, False),
        "ell": (_INT, 2, _non_negative, False),
        "snapshots": (_INT, None, _positive, True),
        "shots_per_pauli": (_INT, None, _positive, True),
        "batches": (_INT, 1, _positive, False),
    },
    "recovery": {
        "mode": (_STR, "empirical", _one_of(MODES), False),
        "M": (_INT, None, _positive, True),
        "Delta": (_NUM, 1.0, _unit_interval, False),
        "support": (_LIST, None, None, True),
        "s": (_INT, None, _positive, True),
        "formula_variant": (_STR, "algorithm1", _one_of(VARIANTS), False),
        "extra_labels": (_INT, 0, _non_negative, False),
        "repetitions": (_INT, 1, _positive, False),
        "kappa": (_NUM, 0.0, _non_negative, False),
        "probes": (_INT, None, _positive, True),
        "exhaustive": (_BOOL, False, None, False),
        "strict": (_BOOL, False, None, False),
        "fresh_observations": (_BOOL, False, None, False),
        "coefficients": (_STR, None, None, True),
    },
    "observables": None,
    "grid": {
        "points": (_INT, 41, _positive, False),
        "budget": (_INT, None, _positive, True),
    },
    "output": {
        "dir": (_STR, "data/runs", None, False),
        "name": (_STR, None, None, True),
    },
    "numerics": {
        "shadow_constant": (_NUM, 34, _positive, False),
        "D1": (_NUM, 3.0, _positive, False),
        "D2": (_NUM, 6.0, _positive, False),
        "dense_qubit_cap": (_INT, 10, _positive, False),
        "fermion_mode_cap": (_INT, 6, _positive, False),
        "solver_tol": (_NUM, 1e-12, _positive, False),
        "solver_max_iters": (_INT, 1000, _positive, False),
        "quadrature_nodes": (_INT, 2048, _positive, False),
        "audit_scale": (_NUM, 1.0, _positive, False),
        "audit_max_snapshots": (_INT, 4000, _positive, False),
        "corrupt_coefficients": (_BOOL, False, None, False),
    },
}

DEFAULT_OBSERVABLES = {"Z0": "ZI", "Z1": "IZ", "ZZ": "ZZ"}


def _locate(text, key):
    """1-based line of the first occurrence of a JSON key, or None."""
    if text is None:
        return None
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def load_config(config_path, experiment=None):
    """Reads and validates a configuration file; `experiment` overrides the file's choice."""
    logging.debug("Loading configuration from %s", config_path)
    if not os.path.exists(config_path):
        raise ConfigError(f"Configuration file not found at {config_path}")
    with open(config_path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON: {e.msg} at column {e.colno}", line=e.lineno) from None
    return validate_config(raw, text, experiment)


def _check_value(path, value, spec, text):
    types, _, validator, nullable = spec
    key = path.rsplit(".", 1)[-1]
    if value is None:
        if not nullable:
            raise ConfigError("Value must not be null", path, _locate(text, key))
        return
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"Expected {'/'.join(t.__name__ for t in types)}, got bool", path, _locate(text, key))
    if not isinstance(value, types):
        raise ConfigError(
            f"Expected {'/'.join(t.__name__ for t in types)}, got {type(value).__name__}", path, _locate(text, key)
        )
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError("Value must be finite", path, _locate(text, key))
    if validator is not None and not validator(value):
        options = getattr(validator, "options", None)
        message = f"Value {value!r} must be one of {', '.join(options)}" if options else f"Value {value!r} is out of range"
        raise ConfigError(message, path, _locate(text, key))


def _check_observables(value, text):
    if isinstance(value, list):
        if not all(isinstance(label, str) for label in value):
            raise ConfigError("Observable lists hold Pauli words only", "observables", _locate(text, "observables"))
        value = {label: label for label in value}
    if not isinstance(value, dict) or not value:
        raise ConfigError("Expected a non-empty list or mapping of observables", "observables",
                          _locate(text, "observables"))
    for obs_id, obs in value.items():
        terms = obs.items() if isinstance(obs, dict) else [(obs, 1.0)]
        for label, weight in terms:
            if not isinstance(label, str) or not re.fullmatch(r"[IXYZixyz]+", label):
                raise ConfigError(f"'{label}' is not a Pauli word", f"observables.{obs_id}", _locate(text, obs_id))
            if isinstance(weight, bool) or not isinstance(weight, (int, float)):
                raise ConfigError("Pauli weights must be numbers", f"observables.{obs_id}", _locate(text, obs_id))
    return {str(k): (v if isinstance(v, dict) else v.upper()) for k, v in value.items()}


def validate_config(raw, text=None, experiment=None):
    """
    Validates a parsed configuration and fills in defaults.

    :param raw: The parsed JSON object.
    :param text: The source text, used to attach line numbers to errors.
    :param experiment: Experiment chosen on the command line, if any.
    :returns: A new, fully populated config dict.
    """
    if not isinstance(raw, dict):
        raise ConfigError("The configuration must be a JSON object", line=1)
    unknown = sorted(set(raw) - set(SCHEMA) - {"experiment", "seed"})
    if unknown:
        raise ConfigError(f"Unknown section '{unknown[0]}'", unknown[0], _locate(text, unknown[0]))
    experiment = experiment or raw.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}", "experiment",
                          _locate(text, "experiment"))
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "seed", _locate(text, "seed"))

    config = {"experiment": experiment, "seed": seed}
    for section, fields in SCHEMA.items():
        if fields is None:
            continue
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError("Expected an object", section, _locate(text, section))
        extra = sorted(set(given) - set(fields))
        if extra:
            raise ConfigError(f"Unknown key '{extra[0]}'", f"{section}.{extra[0]}", _locate(text, extra[0]))
        filled = {}
        for key, spec in fields.items():
            value = copy.deepcopy(given.get(key, spec[1]))
            _check_value(f"{section}.{key}", value, spec, text)
            filled[key] = value
        config[section] = filled
    config["observables"] = _check_observables(raw.get("observables", DEFAULT_OBSERVABLES), text)
    if config["system"]["kind"] is None:
        config["system"]["kind"] = "fermion" if experiment == "fermion" else "nmr"
    logging.debug("Configuration validated for experiment '%s'.", experiment)
    return config


def apply_overrides(config, seed=None, out=None, mode=None):
    """Command-line flags take precedence over the file."""
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
        config["seed"] = seed
    if out is not None:
        config["output"]["dir"] = out
    if mode is not None:
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}", "recovery.mode")
        config["recovery"]["mode"] = mode
    return config


def config_digest(config):
    """Stable digest of the experiment-defining part of a config (paths excluded)."""
    payload = {k: v for k, v in config.items() if k != "paths"}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]
