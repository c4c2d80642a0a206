# @file field.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
External-field builders.

The field h assigns each trace in a pool an independent weight. It is the
linear term of the aggregation energy: uniform weights give plain majority
voting, judge scores give weighted voting, and the intrinsic builders turn a
generator's own confidence into weights.
"""
import logging
import collections

import numpy as np

from .errors import ScoreUnavailable, IntrinsicUnavailable
from .judge import SIGNAL_H
from .pdlogs import JUDGE_SCORE_IMPUTED

_log = logging.getLogger(__name__)

UNIFORM = "uniform"
ZERO = "zero"
JUDGE = "judge"
SELF_CERTAINTY = "self_certainty"
DEEPCONF = "deepconf"
FIELD_KINDS = (UNIFORM, ZERO, JUDGE, SELF_CERTAINTY, DEEPCONF)

DEFAULT_Q = 2.0
DEFAULT_WINDOW = 2048

# Used when no judge score in a pool could be obtained.
FALLBACK_SCORE = 0.5

FieldVector = collections.namedtuple("FieldVector", ["values", "source", "imputed"])
FieldVector.__new__.__defaults__ = (0,)


def _field(values, source, imputed=0):
    values = np.asarray(values, dtype=float)
    values.setflags(write=False)
    if not np.all(np.isfinite(values)):
        raise ValueError("Field values must be finite")
    return FieldVector(values, source, imputed)


def uniform_field(N):
    if N < 1:
        raise ValueError("Pool size must be positive, got {}".format(N))
    return _field(np.ones(N), UNIFORM)


def zero_field(N):
    if N < 1:
        raise ValueError("Pool size must be positive, got {}".format(N))
    return _field(np.zeros(N), ZERO)


def judge_field(question, pool, gateway, category=SIGNAL_H):
    """Independent judge score for every trace.

    Traces whose score is unavailable get the median of the pool's other
    scores, or 0.5 if there are none.
    """
    if not pool:
        raise ValueError("Cannot build a field for an empty pool")

    def score(trace):
        try:
            return gateway.score_independent(question, trace, category=category)
        except ScoreUnavailable:
            return None

    scores = gateway.map(score, pool)
    missing = [i for i, s in enumerate(scores) if s is None]
    if missing:
        found = [s for s in scores if s is not None]
        value = float(np.median(found)) if found else FALLBACK_SCORE
        for i in missing:
            scores[i] = value
        JUDGE_SCORE_IMPUTED.log(count=len(missing),
                                kind="independent",
                                question_id=pool[0].question_id,
                                value=value)
    return _field(scores, JUDGE, len(missing))


def _intrinsic(pool, attribute, what):
    values = []
    for trace in pool:
        signal = getattr(trace.intrinsic, attribute, None) if trace.intrinsic else None
        if signal is None:
            raise IntrinsicUnavailable("Trace {} has no {}".format(trace.trace_id, what))
        values.append(signal)
    return values


def borda_weights(scores, q=DEFAULT_Q):
    """(N - r + 1)^q for 1-based ranks r by score descending, ties by position."""
    N = len(scores)
    order = sorted(range(N), key=lambda i: (-scores[i], i))
    weights = np.empty(N)
    for rank, i in enumerate(order, start=1):
        weights[i] = float(N - rank + 1) ** q
    return weights


def self_certainty_field(avg_logprobs, q=DEFAULT_Q):
    """Borda-style weights from average token log-probabilities."""
    if q <= 0:
        raise ValueError("q must be positive, got {}".format(q))
    logprobs = [float(v) for v in avg_logprobs]
    if not all(np.isfinite(logprobs)):
        raise IntrinsicUnavailable("Average log-probabilities must be finite")
    return _field(borda_weights(logprobs, q), SELF_CERTAINTY)


def pool_self_certainty_field(pool, q=DEFAULT_Q):
    return self_certainty_field(_intrinsic(pool, "avg_logprob", "average log-probability"), q)


def tail_confidence(confidences, window=DEFAULT_WINDOW):
    """Mean of the last window token confidences."""
    if window < 1:
        raise ValueError("Window must be positive, got {}".format(window))
    if len(confidences) < 1:
        raise IntrinsicUnavailable("Empty token confidence sequence")
    return float(np.mean(np.asarray(confidences[-window:], dtype=float)))


def deepconf_tail_field(token_confidences, window=DEFAULT_WINDOW):
    return _field([tail_confidence(c, window) for c in token_confidences], DEEPCONF)


def pool_deepconf_field(pool, window=DEFAULT_WINDOW):
    return deepconf_tail_field(_intrinsic(pool, "token_confidences", "token confidences"), window)


def build_field(kind, question, pool, gateway=None, q=DEFAULT_Q, window=DEFAULT_WINDOW):
    """Build the field of the named kind for a pool."""
    if kind == UNIFORM:
        return uniform_field(len(pool))
    if kind == ZERO:
        return zero_field(len(pool))
    if kind == JUDGE:
        if gateway is None:
            raise ValueError("A judge field needs a judge gateway")
        return judge_field(question, pool, gateway)
    if kind == SELF_CERTAINTY:
        return pool_self_certainty_field(pool, q)
    if kind == DEEPCONF:
        return pool_deepconf_field(pool, window)
    raise ValueError("Unknown field kind {!r}".format(kind))
