# @file baselines.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Reference aggregators.

Each returns the answer key it selects. The voting rules break ties the way
the energy solver does: larger group first, then earlier first appearance.
"""
import logging
import collections

import numpy as np

from .errors import ScoreUnavailable, BudgetExhausted, ConfigError
from .field import (DEFAULT_Q,
                    DEFAULT_WINDOW,
                    pool_self_certainty_field,
                    pool_deepconf_field)
from .judge import CallBudget, SIGNAL_BASELINE
from .solver import select_group

_log = logging.getLogger(__name__)

SHUFFLE = "shuffle"
POOL_ORDER = "pool"
BRACKETS = (SHUFFLE, POOL_ORDER)

# An unavailable match score counts as indifference, which Response 1 wins.
UNAVAILABLE_MATCH_SCORE = 0.5


def pass_at_1(partition, rng):
    """The answer of one trace drawn uniformly at random."""
    i = int(rng.integers(partition.N))
    return partition.answer_of(partition.group_of(i))


def best_of_n(partition, h):
    """The answer of the highest-weighted trace, earliest on ties."""
    values = h.values if hasattr(h, "values") else np.asarray(h, dtype=float)
    i = int(np.argmax(values))
    return partition.answer_of(partition.group_of(i))


def majority_vote(partition):
    candidates = list(range(partition.K))
    chosen, _ = select_group([-size for size in partition.sizes], partition.sizes, candidates)
    return partition.answer_of(chosen)


def weighted_vote(partition, h):
    """The answer whose traces carry the most total weight."""
    values = h.values if hasattr(h, "values") else np.asarray(h, dtype=float)
    candidates = list(range(partition.K))
    weights = [-float(values[list(partition.members(k))].sum()) for k in candidates]
    chosen, _ = select_group(weights, partition.sizes, candidates)
    return partition.answer_of(chosen)


def self_certainty_vote(partition, q=DEFAULT_Q):
    return weighted_vote(partition, pool_self_certainty_field(partition.pool, q))


def deepconf_vote(partition, window=DEFAULT_WINDOW):
    return weighted_vote(partition, pool_deepconf_field(partition.pool, window))


KnockoutConfig = collections.namedtuple("KnockoutConfig", ["comparison_budget",
                                                           "rng_seed",
                                                           "win_threshold",
                                                           "bracket"])
KnockoutConfig.__new__.__defaults__ = (None, 0.5, SHUFFLE)

KnockoutMatch = collections.namedtuple("KnockoutMatch", ["round",
                                                         "left",
                                                         "right",
                                                         "score",
                                                         "winner",
                                                         "judged"])


class KnockoutResult(collections.namedtuple("KnockoutResult", ["answer",
                                                               "winner",
                                                               "matches",
                                                               "comparisons",
                                                               "exhausted",
                                                               "judge_calls"])):
    """Outcome of a knockout tournament.

    winner is the surviving trace index, or None when the budget ran out with
    several survivors and the answer was settled by frequency. comparisons
    counts judged matches; judge_calls counts the calls charged to the
    budget, replicates and retries included.
    """
    __slots__ = ()


def validate_knockout_config(config):
    if config.comparison_budget is None or config.comparison_budget < 1:
        raise ConfigError("The knockout comparison budget must be at least 1")
    if not 0.0 <= config.win_threshold <= 1.0:
        raise ConfigError("The knockout win threshold must lie in [0, 1]")
    if config.bracket not in BRACKETS:
        raise ConfigError("Unknown knockout bracket {!r}".format(config.bracket))
    return config


def _fallback_answer(partition, survivors):
    """Most frequent answer among survivors, with the solver tie rule."""
    counts = collections.Counter(partition.group_of(i) for i in survivors)
    candidates = sorted(counts)
    chosen, _ = select_group([-counts[k] for k in candidates], partition.sizes, candidates)
    return partition.answer_of(chosen)


def knockout_tournament(question, partition, gateway, config, rng=None):
    """Single-elimination bracket judged by pairwise comparisons.

    Survivors are paired in bracket order each round. Pairs with the same
    answer advance the left trace without a comparison; other pairs are
    judged and Response 1 advances iff its score reaches the win threshold.
    An odd survivor gets a bye.

    comparison_budget caps the pairwise judge calls charged to the tournament
    (cache hits included), so live calls never exceed it. Matches whose worst
    case fits in what is left of the budget are judged together; the rest
    are judged one at a time in bracket order. Once a match cannot be paid
    for, it and every later unjudged pair advance both traces, and the most
    frequent surviving answer wins.
    """
    config = validate_knockout_config(config)
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    pool = partition.pool
    budget = CallBudget(config.comparison_budget)
    kt_gateway = gateway.bind(call_budget=budget)
    worst_case = kt_gateway.worst_case_calls()

    def score(pair):
        left, right = pair
        try:
            return kt_gateway.score_pairwise(question, pool[left], pool[right],
                                             symmetrize=False, category=SIGNAL_BASELINE)
        except BudgetExhausted:
            return None
        except ScoreUnavailable:
            _log.debug("No score for match %s vs %s, counting it as a tie",
                       pool[left].trace_id, pool[right].trace_id)
            return UNAVAILABLE_MATCH_SCORE

    survivors = list(range(partition.N))
    matches = []
    comparisons = 0
    exhausted = False
    round_number = 0
    while len(survivors) > 1 and not exhausted:
        round_number += 1
        if config.bracket == SHUFFLE:
            survivors = [int(i) for i in rng.permutation(survivors)]
        pairs = [(survivors[i], survivors[i + 1]) for i in range(0, len(survivors) - 1, 2)]
        bye = survivors[-1] if len(survivors) % 2 else None

        contested = [p for p in pairs if partition.group_of(p[0]) != partition.group_of(p[1])]
        batch = contested[:budget.remaining // worst_case]
        scores = dict(zip(batch, kt_gateway.map(score, batch)))
        exhausted = any(s is None for s in scores.values())
        for pair in contested[len(batch):] if not exhausted else ():
            s = score(pair) if budget.remaining > 0 else None
            if s is None:
                exhausted = True
                break
            scores[pair] = s

        next_round = []
        for left, right in pairs:
            s = scores.get((left, right))
            if partition.group_of(left) == partition.group_of(right):
                matches.append(KnockoutMatch(round_number, left, right, None, left, False))
                next_round.append(left)
            elif s is not None:
                winner = left if s >= config.win_threshold else right
                matches.append(KnockoutMatch(round_number, left, right, s, winner, True))
                next_round.append(winner)
                comparisons += 1
            else:
                next_round.extend([left, right])
        if bye is not None:
            next_round.append(bye)
        survivors = next_round

    if len(survivors) == 1:
        winner = survivors[0]
        answer = partition.answer_of(partition.group_of(winner))
    else:
        winner = None
        answer = _fallback_answer(partition, survivors)
        _log.debug("Knockout budget of %d calls spent with %d survivors",
                   config.comparison_budget, len(survivors))
    return KnockoutResult(answer, winner, tuple(matches), comparisons, exhausted, budget.used)
