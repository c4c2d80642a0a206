# @file traces.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Reasoning traces, answer normalization and answer-group partitions.

A pool is the list of traces collected for one question. Traces whose
normalized answers are equal form an answer group; the partition of the pool
into groups is the only structure the aggregators see. Group order is the
order in which answers first appear in the pool, so every group index is
reproducible.

Pool files hold one JSON object per line:

    {"trace_id": ..., "question_id": ..., "generator_id": ...,
     "content": ..., "answer_raw": ...,
     "intrinsic": {"avg_logprob": ..., "token_confidences": [...]},
     "label": true, "question": ..., "task": "math"}

Only trace_id, question_id, content and answer_raw are mandatory. Unknown
fields are ignored.
"""
import re
import json
import logging
import collections

import numpy as np

from .errors import InvalidAnswer, InvalidTrace

_log = logging.getLogger(__name__)

MATH = "math"
CODE = "code"
TASKS = (MATH, CODE)

NORMALIZERS = ("exact", "math", "casefold")

IntrinsicSignals = collections.namedtuple("IntrinsicSignals",
                                          ["avg_logprob", "token_confidences"])
IntrinsicSignals.__new__.__defaults__ = (None, None)

Trace = collections.namedtuple("Trace", ["trace_id",
                                         "question_id",
                                         "content",
                                         "answer_raw",
                                         "generator_id",
                                         "intrinsic",
                                         "label",
                                         "question",
                                         "task"])
Trace.__new__.__defaults__ = (None, None, None, None, None)

Group = collections.namedtuple("Group", ["answer_key", "member_indices"])

Question = collections.namedtuple("Question", ["question_id",
                                               "text",
                                               "task",
                                               "code",
                                               "input"])
Question.__new__.__defaults__ = (MATH, None, None)

_WHITESPACE = re.compile(r"\s+")
_DELIMITERS = (("$$", "$$"), ("$", "$"), ("\\(", "\\)"), ("\\[", "\\]"))
_BOXED_PREFIXES = ("\\boxed{", "\\fbox{")


def _collapse(text):
    return _WHITESPACE.sub(" ", text.strip())


def _strip_delimiters(text):
    for opening, closing in _DELIMITERS:
        if (len(text) > len(opening) + len(closing) - 1 and
                text.startswith(opening) and text.endswith(closing)):
            return text[len(opening):len(text) - len(closing)]
    return text


def _strip_boxed(text):
    """Remove a \\boxed{...} wrapper that spans the whole string."""
    for prefix in _BOXED_PREFIXES:
        if not (text.startswith(prefix) and text.endswith("}")):
            continue
        depth = 0
        for pos in range(len(prefix) - 1, len(text)):
            if text[pos] == "{":
                depth += 1
            elif text[pos] == "}":
                depth -= 1
                if depth == 0:
                    # The wrapper only counts if its brace closes at the end.
                    if pos == len(text) - 1:
                        return text[len(prefix):-1]
                    return text
    return text


def normalize_answer(raw, mode="exact"):
    """Map a raw answer string onto its canonical answer key.

    "exact" trims and collapses whitespace. "math" additionally strips a
    \\boxed{} wrapper and surrounding math delimiters. "casefold" is "exact"
    followed by case folding. Normalization is idempotent.
    """
    if mode not in NORMALIZERS:
        raise ValueError("Unknown normalizer {!r}".format(mode))
    if raw is None:
        raise InvalidAnswer("Answer is missing")

    key = _collapse(raw)
    if mode == "math":
        previous = None
        while key != previous:
            previous = key
            key = _collapse(_strip_boxed(_strip_delimiters(key)))
    elif mode == "casefold":
        key = key.casefold()

    if not key:
        raise InvalidAnswer("Answer {!r} is empty once normalized".format(raw))
    return key


class Partition(object):
    """The answer groups of a pool.

    pool is the tuple of traces, groups the tuple of Group records in
    first-appearance order, sizes the group sizes.
    """
    def __init__(self, pool, groups):
        self.pool = tuple(pool)
        self.groups = tuple(groups)
        self.sizes = tuple(len(g.member_indices) for g in self.groups)
        self._group_of = np.empty(len(self.pool), dtype=int)
        for k, group in enumerate(self.groups):
            self._group_of[list(group.member_indices)] = k

    @property
    def N(self):
        return len(self.pool)

    @property
    def K(self):
        return len(self.groups)

    def answer_of(self, k):
        return self.groups[k].answer_key

    def members(self, k):
        return self.groups[k].member_indices

    def group_of(self, i):
        """Index of the group holding trace i."""
        return int(self._group_of[i])

    def group_index(self, answer_key):
        for k, group in enumerate(self.groups):
            if group.answer_key == answer_key:
                return k
        raise KeyError(answer_key)

    def trace_group_sizes(self):
        """The length-N vector n with n[i] the size of trace i's group."""
        sizes = np.asarray(self.sizes, dtype=int)
        return sizes[self._group_of]

    def __repr__(self):
        return "Partition(N={}, sizes={})".format(self.N, list(self.sizes))


def build_partition(traces, mode="exact"):
    """Partition traces into answer groups.

    Raises InvalidTrace for an empty pool or repeated trace ids and
    propagates InvalidAnswer from normalization.
    """
    if not traces:
        raise InvalidTrace("Cannot partition an empty pool")

    members = collections.OrderedDict()
    seen_ids = set()
    for i, trace in enumerate(traces):
        if trace.trace_id in seen_ids:
            raise InvalidTrace("Duplicate trace_id {!r} in pool".format(trace.trace_id))
        seen_ids.add(trace.trace_id)
        key = normalize_answer(trace.answer_raw, mode)
        members.setdefault(key, []).append(i)

    groups = [Group(key, tuple(indices)) for key, indices in members.items()]
    _log.debug("Partitioned %d traces into %d answer groups", len(traces), len(groups))
    return Partition(traces, groups)


def top_kappa(partition, kappa):
    """Indices of the kappa most frequent groups.

    Sorted by size descending then first appearance, so the result for kappa
    is always a prefix of the result for kappa + 1.
    """
    if kappa < 1:
        raise ValueError("kappa must be at least 1, got {}".format(kappa))
    order = sorted(range(partition.K), key=lambda k: (-partition.sizes[k], k))
    return order[:kappa]


def trace_from_json(obj, line=None):
    """Build a Trace from a decoded pool record."""
    where = " on line {}".format(line) if line is not None else ""
    try:
        trace_id = obj["trace_id"]
        question_id = obj["question_id"]
        content = obj["content"]
        answer_raw = obj["answer_raw"]
    except KeyError as e:
        raise InvalidTrace("Trace record{} is missing mandatory field {}".format(where, e))
    except TypeError:
        raise InvalidTrace("Trace record{} is not a JSON object".format(where))

    if not isinstance(answer_raw, str) or not answer_raw:
        raise InvalidTrace("Trace {!r}{} has an empty answer_raw".format(trace_id, where))

    intrinsic = None
    raw_intrinsic = obj.get("intrinsic")
    if raw_intrinsic:
        confidences = raw_intrinsic.get("token_confidences")
        if confidences is not None:
            if len(confidences) < 1:
                raise InvalidTrace("Trace {!r}{} has empty token_confidences".format(trace_id, where))
            confidences = tuple(float(c) for c in confidences)
        avg_logprob = raw_intrinsic.get("avg_logprob")
        intrinsic = IntrinsicSignals(
            avg_logprob=float(avg_logprob) if avg_logprob is not None else None,
            token_confidences=confidences)

    task = obj.get("task")
    if task is not None and task not in TASKS:
        raise InvalidTrace("Trace {!r}{} has unknown task {!r}".format(trace_id, where, task))

    label = obj.get("label")
    return Trace(trace_id=str(trace_id),
                 question_id=str(question_id),
                 content=content,
                 answer_raw=answer_raw,
                 generator_id=obj.get("generator_id"),
                 intrinsic=intrinsic,
                 label=bool(label) if label is not None else None,
                 question=obj.get("question"),
                 task=task)


def trace_to_json(trace):
    obj = collections.OrderedDict()
    obj["trace_id"] = trace.trace_id
    obj["question_id"] = trace.question_id
    if trace.generator_id is not None:
        obj["generator_id"] = trace.generator_id
    obj["content"] = trace.content
    obj["answer_raw"] = trace.answer_raw
    if trace.intrinsic is not None:
        intrinsic = collections.OrderedDict()
        if trace.intrinsic.avg_logprob is not None:
            intrinsic["avg_logprob"] = trace.intrinsic.avg_logprob
        if trace.intrinsic.token_confidences is not None:
            intrinsic["token_confidences"] = list(trace.intrinsic.token_confidences)
        obj["intrinsic"] = intrinsic
    if trace.label is not None:
        obj["label"] = trace.label
    if trace.question is not None:
        obj["question"] = trace.question
    if trace.task is not None:
        obj["task"] = trace.task
    return obj


def load_pool(path):
    """Read every trace in a pool file, in file order."""
    traces = []
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as e:
                raise InvalidTrace("{}:{}: invalid JSON ({})".format(path, line_number, e))
            traces.append(trace_from_json(obj, line_number))
    _log.info("Loaded %d traces from %s", len(traces), path)
    return traces


def write_pool(path, traces):
    with open(path, "w", encoding="utf-8") as f:
        for trace in traces:
            f.write(json.dumps(trace_to_json(trace), ensure_ascii=False))
            f.write("\n")


def group_pools(traces):
    """Split traces into per-question pools, in first-appearance order."""
    pools = collections.OrderedDict()
    for trace in traces:
        pools.setdefault(trace.question_id, []).append(trace)
    return pools


def load_questions(path):
    """Read a questions file into a dict keyed by question_id.

    Each line is {"question_id", "question", "task"?, "code"?, "input"?}.
    """
    questions = collections.OrderedDict()
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                question_id = str(obj["question_id"])
            except (ValueError, KeyError, TypeError) as e:
                raise InvalidTrace("{}:{}: invalid question record ({})".format(path, line_number, e))
            questions[question_id] = Question(question_id=question_id,
                                              text=obj.get("question", ""),
                                              task=obj.get("task", MATH),
                                              code=obj.get("code"),
                                              input=obj.get("input"))
    return questions


def question_for_pool(pool, questions=None):
    """Find the Question a pool answers.

    A questions file wins; failing that the first trace carrying question
    text is used; failing that the question id stands in for the text.
    """
    question_id = pool[0].question_id
    if questions and question_id in questions:
        return questions[question_id]
    for trace in pool:
        if trace.question:
            return Question(question_id, trace.question, trace.task or MATH)
    _log.warning("No question text for %s, using its id in prompts", question_id)
    return Question(question_id, question_id, pool[0].task or MATH)
