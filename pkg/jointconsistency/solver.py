# @file solver.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Energy minimisation over answer groups.

A configuration x is the indicator vector of one answer group, and its energy
is H(x) = -mu <h, x> - x^T J x. Only K configurations are feasible, so the
minimum is found by evaluating each one. The quadratic term comes from the
exact interaction matrix or, in answer-level mode, from the row sums of the
answer-level estimate, in which case only the estimated groups are eligible.

Energies within TIE_TOLERANCE of the minimum count as tied. Ties go to the
larger group, then to the group whose answer appeared first.
"""
import logging
import collections

import numpy as np

from .errors import EmptyCandidateSet, ConfigError
from .interaction import (BetaMatrix,
                          InteractionExact,
                          quadratic_term)

_log = logging.getLogger(__name__)

EXACT_J = "exact_J"
ANSWER_LEVEL = "answer_level"
H_ONLY = "h_only"
J_ONLY = "J_only"
MODES = (EXACT_J, ANSWER_LEVEL, H_ONLY, J_ONLY)

DEFAULT_MU = 0.5
TIE_TOLERANCE = 1e-9

AggregationConfig = collections.namedtuple("AggregationConfig", ["mu",
                                                                 "mode",
                                                                 "kappa",
                                                                 "tau",
                                                                 "m",
                                                                 "exhaustive"])
AggregationConfig.__new__.__defaults__ = (DEFAULT_MU, ANSWER_LEVEL, None, 1.0, 1, False)


def validate_aggregation_config(config):
    if config.mode not in MODES:
        raise ConfigError("Unknown aggregation mode {!r}".format(config.mode))
    if config.mu < 0:
        raise ConfigError("mu must be nonnegative, got {}".format(config.mu))
    if config.mode == H_ONLY and config.mu == 0:
        raise ConfigError("mu must be positive when only the field is used")
    if config.kappa is not None and config.kappa < 1:
        raise ConfigError("kappa must be at least 1, got {}".format(config.kappa))
    if config.tau <= 0:
        raise ConfigError("tau must be positive, got {}".format(config.tau))
    if config.m < 1:
        raise ConfigError("m must be at least 1, got {}".format(config.m))
    return config


EnergyRow = collections.namedtuple("EnergyRow", ["group",
                                                 "answer_key",
                                                 "size",
                                                 "field_sum",
                                                 "quad_term",
                                                 "energy"])


class EnergyReport(object):
    """Every evaluated candidate, and the one chosen.

    interaction is the structure the quadratic terms came from; it is not
    part of the JSON form.
    """

    def __init__(self, rows, chosen_group, answer, tie_break_applied, eligible_groups,
                 mu, mode, budget=None, interaction=None):
        self.rows = tuple(rows)
        self.chosen_group = chosen_group
        self.answer = answer
        self.tie_break_applied = tie_break_applied
        self.eligible_groups = tuple(eligible_groups)
        self.mu = mu
        self.mode = mode
        self.budget = budget
        self.interaction = interaction

    @property
    def candidates_evaluated(self):
        return len(self.rows)

    def to_json(self):
        budget = None
        if self.budget is not None:
            budget = {category: {"calls": totals.calls,
                                 "input_tokens": totals.input_tokens,
                                 "output_tokens": totals.output_tokens,
                                 "cost_usd": str(totals.cost_usd)}
                      for category, totals in sorted(self.budget.items())}
        return {"mode": self.mode,
                "mu": self.mu,
                "chosen_group": self.chosen_group,
                "answer": self.answer,
                "tie_break_applied": self.tie_break_applied,
                "eligible_groups": list(self.eligible_groups),
                "candidates_evaluated": self.candidates_evaluated,
                "rows": [dict(r._asdict()) for r in self.rows],
                "budget": budget}


def select_group(energies, sizes, candidates):
    """Index into candidates of the minimum energy, with the tie rule.

    energies and candidates are parallel; sizes is indexed by group.
    Returns (group, tie_break_applied).
    """
    if not candidates:
        raise EmptyCandidateSet("No eligible answer group")
    lowest = min(energies)
    tied = [k for k, e in zip(candidates, energies) if e <= lowest + TIE_TOLERANCE]
    chosen = min(tied, key=lambda k: (-sizes[k], k))
    return chosen, len(tied) > 1


def energy(h, quad, member_indices, mu):
    """-mu * sum of h over the members, minus the quadratic term."""
    values = h.values if hasattr(h, "values") else np.asarray(h, dtype=float)
    return -mu * float(values[list(member_indices)].sum()) - quad


def _field_values(h, N):
    if h is None:
        return np.zeros(N)
    values = h.values if hasattr(h, "values") else np.asarray(h, dtype=float)
    if len(values) != N:
        raise ValueError("Field has {} entries, pool has {} traces".format(len(values), N))
    return values


def solve(partition, h, interaction, config, budget=None):
    """Choose the answer group of minimum energy."""
    config = validate_aggregation_config(config)
    values = _field_values(h, partition.N)

    mu = config.mu
    if config.mode == J_ONLY:
        mu = 0.0
    if config.mode in (EXACT_J, ANSWER_LEVEL, J_ONLY) and interaction is None:
        raise ValueError("Mode {} needs an interaction structure".format(config.mode))
    if config.mode == EXACT_J and not isinstance(interaction, InteractionExact):
        raise ValueError("Mode exact_J needs the exact interaction matrix")
    if config.mode == ANSWER_LEVEL and not isinstance(interaction, BetaMatrix):
        raise ValueError("Mode answer_level needs an answer-level estimate")

    if config.mode != H_ONLY and isinstance(interaction, BetaMatrix):
        candidates = list(interaction.groups)
    else:
        candidates = list(range(partition.K))

    # Candidates follow the estimate's group order, so row i belongs to candidate i.
    row_sums = None
    if config.mode != H_ONLY and isinstance(interaction, BetaMatrix):
        row_sums = np.asarray(interaction.beta, dtype=float).sum(axis=1)

    rows = []
    for position, k in enumerate(candidates):
        members = partition.members(k)
        if config.mode == H_ONLY:
            quad = 0.0
        elif row_sums is not None:
            quad = float(row_sums[position])
        else:
            quad = quadratic_term(interaction, members)
        field_sum = float(values[list(members)].sum())
        rows.append(EnergyRow(group=k,
                              answer_key=partition.answer_of(k),
                              size=partition.sizes[k],
                              field_sum=field_sum,
                              quad_term=quad,
                              energy=-mu * field_sum - quad))

    chosen, tie_break = select_group([r.energy for r in rows], partition.sizes, candidates)
    _log.debug("Chose group %d of %d candidates (mode %s, mu %s)",
               chosen, len(candidates), config.mode, mu)
    return EnergyReport(rows, chosen, partition.answer_of(chosen), tie_break,
                        candidates, mu, config.mode, budget, interaction)


def brute_force_oracle(partition, h, J, mu):
    """Reference minimiser: dense -mu h.x - x^T J x for each group indicator x."""
    values = _field_values(h, partition.N)
    J = np.asarray(J.J if isinstance(J, InteractionExact) else J, dtype=float)
    energies = []
    for k in range(partition.K):
        x = np.zeros(partition.N)
        x[list(partition.members(k))] = 1.0
        energies.append(float(-mu * values.dot(x) - x.dot(J).dot(x)))
    chosen, _ = select_group(energies, partition.sizes, list(range(partition.K)))
    return chosen
