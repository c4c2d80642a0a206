# @file config.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Experiment configuration.

A configuration file is a JSON object whose keys are ExperimentConfig fields;
the judge settings sit under "judge" with JudgeConfig field names. Missing
keys take their defaults. Overrides, typically from command-line flags, are
applied on top of the file before validation, and use the same names, with
judge settings written "judge.<field>".
"""
import json
import logging
import collections

from .errors import ConfigError
from .field import FIELD_KINDS, JUDGE, DEFAULT_Q, DEFAULT_WINDOW
from .judge import JudgeConfig, validate_judge_config
from .baselines import BRACKETS, SHUFFLE

_log = logging.getLogger(__name__)

METHOD_NAMES = ("Pass@1", "BoN", "SC", "WSC", "SelfCertainty", "DeepConf", "KT",
                "JC", "JC-exact", "JC-J", "JC-J-exact", "JC-h")

DEFAULT_MU_GRID = (0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 20.0)
DEFAULT_TRIALS = 10

SIM_PRESET_DEFAULTS = {"preset": "preference_dominant",
                       "count": 10,
                       "K": 4,
                       "noise_sigma": 0.0,
                       "judge_noise": 0.0,
                       "seed": 0}

ExperimentConfig = collections.namedtuple("ExperimentConfig", ["pools",
                                                               "questions",
                                                               "sim",
                                                               "methods",
                                                               "N_grid",
                                                               "mu_grid",
                                                               "kappa_grid",
                                                               "m",
                                                               "exhaustive",
                                                               "trials",
                                                               "seed",
                                                               "field_kind",
                                                               "q",
                                                               "window",
                                                               "tau",
                                                               "kt_budget",
                                                               "kt_win_threshold",
                                                               "kt_bracket",
                                                               "lowest_generators",
                                                               "normalizer",
                                                               "workers",
                                                               "output_dir",
                                                               "judge"])
ExperimentConfig.__new__.__defaults__ = ((),                   # pools
                                         None,                 # questions
                                         None,                 # sim
                                         ("SC", "JC"),         # methods
                                         (1.0,),               # N_grid
                                         DEFAULT_MU_GRID,      # mu_grid
                                         (None,),              # kappa_grid
                                         1,                    # m
                                         False,                # exhaustive
                                         DEFAULT_TRIALS,       # trials
                                         0,                    # seed
                                         JUDGE,                # field_kind
                                         DEFAULT_Q,            # q
                                         DEFAULT_WINDOW,       # window
                                         1.0,                  # tau
                                         None,                 # kt_budget
                                         0.5,                  # kt_win_threshold
                                         SHUFFLE,              # kt_bracket
                                         None,                 # lowest_generators
                                         "exact",              # normalizer
                                         1,                    # workers
                                         None,                 # output_dir
                                         None)                 # judge

_LIST_FIELDS = ("pools", "methods", "N_grid", "mu_grid", "kappa_grid")


def _check(condition, message):
    if not condition:
        raise ConfigError(message)


def judge_config_from_dict(values):
    values = dict(values or {})
    unknown = set(values) - set(JudgeConfig._fields)
    _check(not unknown, "Unknown judge config keys: {}".format(", ".join(sorted(unknown))))
    try:
        return validate_judge_config(JudgeConfig(**values))
    except TypeError as e:
        raise ConfigError("Invalid judge config: {}".format(e))


def _n_entry(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("N_grid entries must be numbers, got {!r}".format(value))
    if 0 < value < 1 or value == 1.0 and isinstance(value, float):
        return float(value)
    _check(value >= 1 and float(value).is_integer(),
           "N_grid entries must be positive integers or fractions in (0, 1], got {!r}".format(value))
    return int(value)


def validate_experiment_config(config):
    _check(config.pools or config.sim, "Either pools or a sim preset is required")
    _check(config.methods, "methods must not be empty")
    for method in config.methods:
        _check(method in METHOD_NAMES, "Unknown method {!r}; choose from {}".format(
            method, ", ".join(METHOD_NAMES)))
    _check(config.N_grid, "N_grid must not be empty")
    _check(config.mu_grid, "mu_grid must not be empty")
    _check(config.kappa_grid, "kappa_grid must not be empty")
    _check(all(mu >= 0 for mu in config.mu_grid), "mu_grid entries must be nonnegative")
    _check(all(k is None or (isinstance(k, int) and k >= 1) for k in config.kappa_grid),
           "kappa_grid entries must be positive integers or null")
    _check(config.m >= 1, "m must be at least 1")
    _check(config.trials >= 1, "trials must be at least 1")
    _check(config.field_kind in FIELD_KINDS, "field_kind must be one of {}".format(FIELD_KINDS))
    _check(config.q > 0, "q must be positive")
    _check(config.window >= 1, "window must be at least 1")
    _check(config.tau > 0, "tau must be positive")
    _check(config.kt_budget is None or config.kt_budget >= 1, "kt_budget must be at least 1")
    _check(0 <= config.kt_win_threshold <= 1, "kt_win_threshold must lie in [0, 1]")
    _check(config.kt_bracket in BRACKETS, "kt_bracket must be one of {}".format(BRACKETS))
    _check(config.lowest_generators is None or config.lowest_generators >= 1,
           "lowest_generators must be at least 1")
    _check(config.workers >= 1, "workers must be at least 1")
    return config


def experiment_config_from_dict(values):
    values = dict(values)
    unknown = set(values) - set(ExperimentConfig._fields)
    _check(not unknown, "Unknown config keys: {}".format(", ".join(sorted(unknown))))
    for name in _LIST_FIELDS:
        if name in values:
            value = values[name]
            values[name] = tuple(value) if isinstance(value, (list, tuple)) else (value,)
    if "N_grid" in values:
        values["N_grid"] = tuple(_n_entry(n) for n in values["N_grid"])
    if "mu_grid" in values:
        values["mu_grid"] = tuple(float(mu) for mu in values["mu_grid"])
    if values.get("sim") is not None:
        sim = dict(SIM_PRESET_DEFAULTS)
        sim.update(values["sim"])
        values["sim"] = sim
    values["judge"] = judge_config_from_dict(values.get("judge"))
    return validate_experiment_config(ExperimentConfig(**values))


def apply_overrides(values, overrides):
    """Merge flag overrides into a config dict.

    "judge.x" keys go to the judge section and "sim.x" keys to the sim
    section; a sim override turns simulation on.
    """
    values = dict(values)
    sections = {"judge": dict(values.get("judge") or {})}
    if values.get("sim") is not None:
        sections["sim"] = dict(values["sim"])
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, field = key.partition(".")
        if field and section in ("judge", "sim"):
            sections.setdefault(section, {})[field] = value
        else:
            values[key] = value
    values.update(sections)
    return values


def load_experiment_config(path=None, overrides=None):
    """Read, override and validate an experiment configuration."""
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as f:
                values = json.load(f)
        except (IOError, ValueError) as e:
            raise ConfigError("Cannot read config file {}: {}".format(path, e))
        _check(isinstance(values, dict), "Config file {} must hold a JSON object".format(path))
    config = experiment_config_from_dict(apply_overrides(values, overrides))
    _log.debug("Experiment config: %s", config)
    return config
