# @file helpers.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""Builders shared by the unit tests."""
import os
import json
import itertools

from jointconsistency.traces import Trace, Question, IntrinsicSignals
from jointconsistency.judge import JudgeConfig, JudgeGateway, ScriptedJudgeBackend

QUESTION = Question("q1", "Compute the answer.")

FIXTURE_DIR = os.path.dirname(os.path.abspath(__file__))


def make_trace(trace_id, answer, question_id="q1", label=None, avg_logprob=None,
               confidences=None, generator_id=None, content=None):
    intrinsic = None
    if avg_logprob is not None or confidences is not None:
        intrinsic = IntrinsicSignals(avg_logprob, tuple(confidences) if confidences else None)
    return Trace(trace_id=trace_id,
                 question_id=question_id,
                 content=content or "Reasoning {} so the answer is {}".format(trace_id, answer),
                 answer_raw=str(answer),
                 generator_id=generator_id,
                 intrinsic=intrinsic,
                 label=label)


def make_pool(answers, correct=None, question_id="q1", prefix="t"):
    """Traces t0, t1, ... with the given answers; labels set when correct is given."""
    pool = []
    for i, answer in enumerate(answers):
        label = None if correct is None else str(answer) == str(correct)
        pool.append(make_trace("{}{}".format(prefix, i), answer, question_id, label=label))
    return pool


def scripted_gateway(table, default=None, cache=None, **config):
    """A gateway over a scripted backend; returns (gateway, backend)."""
    backend = ScriptedJudgeBackend(table, default=default)
    judge_config = JudgeConfig(backend_id="scripted", backend="scripted", fixture="unused",
                               max_workers=config.pop("max_workers", 1), **config)
    return JudgeGateway(backend, judge_config, cache), backend


def pairwise_table(pool, preference):
    """Scripted replies for every ordered pair, from preference(trace_i, trace_j)."""
    table = {}
    for a, b in itertools.permutations(pool, 2):
        table[(a.trace_id, b.trace_id)] = "{:.12f}".format(preference(a, b))
    return table


def load_minority_correct():
    """The eight-trace scenario in which the correct answer 254 is not the mode."""
    with open(os.path.join(FIXTURE_DIR, "minority_correct.json"), encoding="utf-8") as f:
        data = json.load(f)
    pool = [make_trace(t["trace_id"], t["answer"], label=t["answer"] == data["correct"])
            for t in data["traces"]]
    answer_of = dict((t.trace_id, t.answer_raw) for t in pool)
    table = {}
    for t in pool:
        table[(t.trace_id,)] = data["independent"][t.answer_raw]
    for a, b in itertools.permutations(pool, 2):
        if a.answer_raw == b.answer_raw:
            continue
        table[(a.trace_id, b.trace_id)] = data["answer_preferences"][answer_of[a.trace_id]][answer_of[b.trace_id]]
    for key, reply in data["match_overrides"].items():
        table[tuple(key.split("|"))] = reply
    return data, pool, table
