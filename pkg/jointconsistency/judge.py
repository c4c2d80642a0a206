# @file judge.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
The judge gateway.

The gateway turns traces into scores. For an independent score it renders the
independent prompt, for a pairwise score the pairwise prompt, and in both cases
averages R replicate replies. Each replicate is looked up in the judge cache
by record id; on a miss the backend is queried, the reply parsed, the record
stored and its cost charged to the ledger. A reply with no score in [0, 1] is
resampled up to retry_limit times. When no replicate yields a score the query
raises ScoreUnavailable and the caller imputes.

Backends implement complete(request) -> JudgeReply:
- HttpJudgeBackend talks to a chat-completions endpoint,
- ScriptedJudgeBackend answers from a fixture table,
- simulation.SimulatedJudgeBackend answers from a simulated world.
"""
import os
import re
import json
import time
import logging
import threading
import collections
from decimal import Decimal
from concurrent.futures import Future, ThreadPoolExecutor

import httpx

from .errors import (ParseFailure,
                     ScoreUnavailable,
                     JudgeBackendError,
                     BudgetExhausted,
                     ConfigError)
from .prompts import (render_independent_prompt,
                      render_pairwise_prompt,
                      bundle_to_json)
from .traces import MATH
from .judge_cache import JudgeRecord, make_record_id, now_timestamp
from .judge_monitor import JudgeHealthMonitor
from .throttler import Throttler

_log = logging.getLogger(__name__)

# Signal categories the ledger accounts separately.
SIGNAL_H = "h"
SIGNAL_J = "J"
SIGNAL_BASELINE = "baseline"

SELF_COMPARISON_SCORE = 0.5

_THINK_BLOCK = re.compile(r"<think>.*?</think>", re.DOTALL)
_TAG = re.compile(r"<[^>]+>")
_MARKUP = re.compile(r"\\(?:boxed|text|textbf|mathrm)\{|\\[()\[\]]|[*_`$#]")
_NUMBER = re.compile(r"(?<![\w.])[-+]?(?:\d+\.\d+|\d+|\.\d+)(?!\w|\.\d)")


def parse_score(raw):
    """Extract a score in [0, 1] from a judge reply.

    Returns the last decimal literal lying in [0, 1] once markup is stripped.
    Raises ParseFailure if there is none.
    """
    if raw is None:
        raise ParseFailure("Judge reply is empty")
    text = _THINK_BLOCK.sub(" ", raw)
    text = _TAG.sub(" ", text)
    text = _MARKUP.sub(" ", text)
    for literal in reversed(_NUMBER.findall(text)):
        value = float(literal)
        if 0.0 <= value <= 1.0:
            return value
    raise ParseFailure("No score in [0, 1] in judge reply {!r}".format(raw[:200]))


def estimate_tokens(text):
    """Rough token count for backends that do not report usage."""
    return max(1, len(text) // 4)


JudgeConfig = collections.namedtuple("JudgeConfig", ["backend_id",
                                                     "backend",
                                                     "replicates",
                                                     "temperature",
                                                     "reasoning_effort",
                                                     "max_tokens",
                                                     "retry_limit",
                                                     "price_per_million_input",
                                                     "price_per_million_output",
                                                     "model",
                                                     "endpoint",
                                                     "auth_header",
                                                     "api_key_env",
                                                     "requests_per_second",
                                                     "burst",
                                                     "max_workers",
                                                     "http_retries",
                                                     "timeout",
                                                     "complement",
                                                     "symmetrize",
                                                     "cache",
                                                     "fixture",
                                                     "sidecar"])
JudgeConfig.__new__.__defaults__ = ("simulated",   # backend_id
                                    "simulated",   # backend
                                    1,             # replicates
                                    1.0,           # temperature
                                    "low",         # reasoning_effort
                                    None,          # max_tokens
                                    3,             # retry_limit
                                    0.039,         # price_per_million_input
                                    0.18,          # price_per_million_output
                                    None,          # model
                                    None,          # endpoint
                                    "Authorization",
                                    "JOINTCONSISTENCY_API_KEY",
                                    None,          # requests_per_second
                                    8,             # burst
                                    8,             # max_workers
                                    3,             # http_retries
                                    120.0,         # timeout
                                    False,         # complement
                                    False,         # symmetrize
                                    None,          # cache
                                    None,          # fixture
                                    None)          # sidecar

BACKENDS = ("http", "scripted", "simulated")


def validate_judge_config(config):
    def check(condition, message):
        if not condition:
            raise ConfigError(message)
    check(config.backend in BACKENDS,
          "judge.backend must be one of {}, got {!r}".format(BACKENDS, config.backend))
    check(config.replicates >= 1, "judge.replicates must be at least 1")
    check(config.retry_limit >= 0, "judge.retry_limit must be nonnegative")
    check(config.price_per_million_input >= 0, "judge.price_per_million_input must be nonnegative")
    check(config.price_per_million_output >= 0, "judge.price_per_million_output must be nonnegative")
    check(config.max_workers >= 1, "judge.max_workers must be at least 1")
    check(config.http_retries >= 0, "judge.http_retries must be nonnegative")
    check(config.requests_per_second is None or config.requests_per_second > 0,
          "judge.requests_per_second must be positive")
    if config.backend == "http":
        check(config.endpoint, "judge.endpoint is required for the http backend")
        check(config.model, "judge.model is required for the http backend")
    if config.backend == "scripted":
        check(config.fixture, "judge.fixture is required for the scripted backend")
    return config


def call_cost(config, input_tokens, output_tokens):
    """Exact USD cost of one call at the configured per-million prices."""
    return ((Decimal(input_tokens) * Decimal(str(config.price_per_million_input)) +
             Decimal(output_tokens) * Decimal(str(config.price_per_million_output))) /
            Decimal(1000000))


JudgeRequest = collections.namedtuple("JudgeRequest", ["bundle",
                                                       "subject",
                                                       "replicate",
                                                       "attempt"])
JudgeReply = collections.namedtuple("JudgeReply", ["text",
                                                   "input_tokens",
                                                   "output_tokens"])


class HttpJudgeBackend(object):
    """Judge reached over a chat-completions HTTP API.

    The request carries model, messages, temperature and, when configured,
    reasoning_effort and max_tokens. The reply text is the first choice's
    message content.
    """

    def __init__(self, config, api_key=None, client=None, throttler=None, monitor=None):
        self.backend_id = config.backend_id
        self._config = config
        if api_key is None:
            api_key = os.getenv(config.api_key_env)
        self._headers = {"Content-Type": "application/json"}
        if api_key:
            value = api_key if config.auth_header != "Authorization" else "Bearer " + api_key
            self._headers[config.auth_header] = value
        else:
            _log.warning("No API key in $%s; sending unauthenticated judge requests",
                         config.api_key_env)
        self._client = client if client is not None else httpx.Client(timeout=config.timeout)
        if throttler is None and config.requests_per_second:
            throttler = Throttler(config.requests_per_second, config.burst)
        self._throttler = throttler
        self._monitor = monitor if monitor is not None else JudgeHealthMonitor(self.backend_id)

    def payload(self, bundle):
        body = {"model": self._config.model,
                "messages": bundle_to_json(bundle),
                "temperature": self._config.temperature}
        if self._config.reasoning_effort:
            body["reasoning_effort"] = self._config.reasoning_effort
        if self._config.max_tokens:
            body["max_tokens"] = self._config.max_tokens
        return body

    def complete(self, request):
        body = self.payload(request.bundle)
        last_error = None
        for attempt in range(self._config.http_retries + 1):
            if attempt:
                delay = 2 ** (attempt - 1)
                _log.info("Retrying judge request in %ds (attempt %d)", delay, attempt + 1)
                time.sleep(delay)
            if self._throttler is not None:
                self._throttler.wait()
            try:
                response = self._client.post(self._config.endpoint,
                                             headers=self._headers,
                                             json=body)
            except httpx.HTTPError as e:
                last_error = "transport error: {}".format(e)
                _log.warning("Judge request failed: %s", last_error)
                self._monitor.inform_failure()
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = "HTTP {}".format(response.status_code)
                _log.warning("Judge request failed: %s", last_error)
                self._monitor.inform_failure()
                continue
            if response.status_code != 200:
                self._monitor.inform_failure()
                raise JudgeBackendError("Judge endpoint returned HTTP {}: {}".format(
                    response.status_code, response.text[:200]))
            self._monitor.inform_success()
            return self._reply_from(response)
        raise JudgeBackendError("Judge request failed after {} attempts ({})".format(
            self._config.http_retries + 1, last_error))

    def _reply_from(self, response):
        try:
            data = response.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise JudgeBackendError("Unexpected judge response shape: {}".format(e))
        usage = data.get("usage") or {}
        return JudgeReply(text=text if text is not None else "",
                          input_tokens=int(usage.get("prompt_tokens", 0)),
                          output_tokens=int(usage.get("completion_tokens", 0)))


def subject_key(subject):
    """Fixture-file key of a subject: "t1" or "t1|t2"."""
    return "|".join(subject)


class ScriptedJudgeBackend(object):
    """Judge answering from a fixture table, for tests and fixtures.

    table maps subjects, (trace_id,) or (trace_i, trace_j), to a reply or to
    a list of replies. Successive calls for one subject take successive
    entries of its list, repeating the last. Subjects missing from the table
    get default, or raise JudgeBackendError if there is none.
    """

    def __init__(self, table, backend_id="scripted", default=None):
        self.backend_id = backend_id
        self._table = {}
        for subject, replies in table.items():
            if isinstance(subject, str):
                subject = tuple(subject.split("|"))
            if isinstance(replies, str):
                replies = [replies]
            self._table[tuple(subject)] = list(replies)
        self._default = default
        self._served = collections.Counter()
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_file(cls, path, backend_id="scripted"):
        """Load a fixture: {"default": ..., "replies": {"t1": "0.9", "t1|t2": ["0.4"]}}."""
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        return cls(data.get("replies", {}), backend_id=backend_id, default=data.get("default"))

    def complete(self, request):
        subject = tuple(request.subject)
        with self._lock:
            self.calls += 1
            replies = self._table.get(subject)
            if replies is None:
                if self._default is None:
                    raise JudgeBackendError("No scripted reply for {}".format(subject_key(subject)))
                text = self._default
            else:
                index = min(self._served[subject], len(replies) - 1)
                self._served[subject] += 1
                text = replies[index]
        prompt_text = "".join(m.text for m in request.bundle.messages)
        return JudgeReply(text=text,
                          input_tokens=estimate_tokens(prompt_text),
                          output_tokens=estimate_tokens(text))


LedgerEntry = collections.namedtuple("LedgerEntry", ["category",
                                                     "record_id",
                                                     "kind",
                                                     "subject",
                                                     "input_tokens",
                                                     "output_tokens",
                                                     "cost_usd",
                                                     "live"])
LedgerTotals = collections.namedtuple("LedgerTotals", ["calls",
                                                       "input_tokens",
                                                       "output_tokens",
                                                       "cost_usd"])
PairwiseBudget = collections.namedtuple("PairwiseBudget", ["ordered_calls",
                                                           "unordered_pairs"])


class Ledger(object):
    """Append-only record of the judge records a run consumed.

    Entries served from the cache are kept with live=False: they cost nothing
    now but are attributed to the trial that used them.
    """

    def __init__(self):
        self._entries = []
        self._lock = threading.Lock()

    def add(self, category, record, live=True):
        entry = LedgerEntry(category=category,
                            record_id=record.record_id,
                            kind=record.kind,
                            subject=tuple(record.subject),
                            input_tokens=record.input_tokens,
                            output_tokens=record.output_tokens,
                            cost_usd=record.cost_usd,
                            live=live)
        with self._lock:
            self._entries.append(entry)

    def extend(self, entries):
        with self._lock:
            self._entries.extend(entries)

    def merge(self, other):
        self.extend(other.entries())

    def entries(self):
        with self._lock:
            return list(self._entries)

    def __len__(self):
        with self._lock:
            return len(self._entries)

    def categories(self):
        return sorted(set(e.category for e in self.entries()))

    def pairwise_budget(self, category=SIGNAL_J, live_only=True):
        """Pairwise spend counted as ordered calls and as distinct trace pairs."""
        pairs = [e.subject for e in self.entries()
                 if e.category == category and len(e.subject) == 2 and
                 (e.live or not live_only)]
        unordered = set(tuple(sorted(s)) for s in pairs)
        return PairwiseBudget(len(pairs), len(unordered))


def ledger_totals(ledger, category=None, live_only=True):
    """Exact sums over a ledger, optionally restricted to one category.

    live_only=False also counts records served from the cache.
    """
    calls = tokens_in = tokens_out = 0
    cost = Decimal(0)
    for entry in ledger.entries():
        if category is not None and entry.category != category:
            continue
        if live_only and not entry.live:
            continue
        calls += 1
        tokens_in += entry.input_tokens
        tokens_out += entry.output_tokens
        cost += entry.cost_usd
    return LedgerTotals(calls, tokens_in, tokens_out, cost)


class CallBudget(object):
    """Cap on judge calls, shared by every gateway bound to it.

    Every fetch takes one unit before it is made, whether it is answered
    live, from the cache or by a query already in flight, and whether or not
    the reply parses. Live calls therefore never exceed the limit, and a
    warm-cache replay spends the budget exactly as the cold run did.
    """

    def __init__(self, limit):
        self.limit = limit
        self._used = 0
        self._lock = threading.Lock()

    @property
    def used(self):
        return self._used

    @property
    def remaining(self):
        with self._lock:
            return self.limit - self._used

    def acquire(self):
        with self._lock:
            if self._used >= self.limit:
                return False
            self._used += 1
            return True


class JudgeGateway(object):
    """Scores traces through a backend, with caching, retries and metering."""

    def __init__(self, backend, config=None, cache=None, ledger=None, call_budget=None,
                 _inflight=None):
        self.backend = backend
        self.config = validate_judge_config(config if config is not None else JudgeConfig())
        self.cache = cache
        self.ledger = ledger if ledger is not None else Ledger()
        self.call_budget = call_budget
        self._inflight, self._inflight_lock = _inflight or ({}, threading.Lock())

    def bind(self, ledger=None, call_budget=None):
        """A gateway sharing this one's backend and cache, metering into ledger.

        ledger defaults to this gateway's own. With call_budget, fetches through
        the new gateway raise BudgetExhausted once it is spent.
        """
        return JudgeGateway(self.backend, self.config, self.cache,
                            ledger if ledger is not None else self.ledger,
                            call_budget,
                            (self._inflight, self._inflight_lock))

    def worst_case_calls(self, symmetrize=False):
        """Most live calls one score can take: every replicate and retry."""
        calls = self.config.replicates * (self.config.retry_limit + 1)
        return 2 * calls if symmetrize else calls

    def score_independent(self, question, trace, task=None, category=SIGNAL_H):
        """Mean of R replicate scores for one trace."""
        task = task or getattr(question, "task", None) or MATH
        bundle = render_independent_prompt(question, trace, task)
        return self._estimate(bundle, (trace.trace_id,), category)

    def score_pairwise(self, question, trace_i, trace_j, task=None, symmetrize=None,
                       category=SIGNAL_J):
        """Estimate of the probability that trace_i is better than trace_j.

        A trace compared with itself scores 0.5 without a query. With
        symmetrize, returns (p(i, j) + 1 - p(j, i)) / 2 at twice the cost.
        """
        if trace_i.trace_id == trace_j.trace_id:
            return SELF_COMPARISON_SCORE
        task = task or getattr(question, "task", None) or MATH
        if symmetrize is None:
            symmetrize = self.config.symmetrize
        forward = self._estimate(render_pairwise_prompt(question, trace_i, trace_j, task),
                                 (trace_i.trace_id, trace_j.trace_id), category)
        if not symmetrize:
            return forward
        backward = self._estimate(render_pairwise_prompt(question, trace_j, trace_i, task),
                                  (trace_j.trace_id, trace_i.trace_id), category)
        return (forward + 1.0 - backward) / 2.0

    def map(self, fn, items):
        """Apply fn to items concurrently; results come back in input order."""
        items = list(items)
        workers = min(self.config.max_workers, len(items))
        if workers <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(fn, items))

    def _estimate(self, bundle, subject, category):
        scores = []
        for replicate in range(self.config.replicates):
            score = self._replicate(bundle, subject, replicate, category)
            if score is not None:
                scores.append(score)
        if not scores:
            raise ScoreUnavailable("No usable judge score for {} after {} replicates".format(
                subject_key(subject), self.config.replicates))
        return sum(scores) / len(scores)

    def _replicate(self, bundle, subject, replicate, category):
        for attempt in range(self.config.retry_limit + 1):
            try:
                record = self._fetch(bundle, subject, replicate, attempt, category)
            except JudgeBackendError as e:
                _log.warning("Judge backend failed for %s replicate %d: %s",
                             subject_key(subject), replicate, e)
                return None
            if record.parsed_score is not None:
                return record.parsed_score
            _log.debug("Unparseable judge reply for %s replicate %d attempt %d",
                       subject_key(subject), replicate, attempt)
        return None

    def _fetch(self, bundle, subject, replicate, attempt, category):
        messages = bundle_to_json(bundle)
        record_id = make_record_id(self.backend.backend_id, messages, replicate, attempt)
        if self.call_budget is not None and not self.call_budget.acquire():
            raise BudgetExhausted("Judge call budget of {} spent before {}".format(
                self.call_budget.limit, subject_key(subject)))

        # A query already in flight on another thread is waited for, not repeated.
        with self._inflight_lock:
            cached = self.cache.get(record_id) if self.cache is not None else None
            pending = self._inflight.get(record_id) if cached is None else None
            owner = cached is None and pending is None
            if owner:
                pending = self._inflight[record_id] = Future()
        if cached is not None:
            self.ledger.add(category, cached, live=False)
            return cached
        if not owner:
            record = pending.result()
            self.ledger.add(category, record, live=False)
            return record

        try:
            record = self._query(bundle, subject, replicate, attempt, record_id)
        except BaseException as e:
            pending.set_exception(e)
            raise
        finally:
            with self._inflight_lock:
                self._inflight.pop(record_id, None)
        pending.set_result(record)
        self.ledger.add(category, record)
        return record

    def _query(self, bundle, subject, replicate, attempt, record_id):
        reply = self.backend.complete(JudgeRequest(bundle, subject, replicate, attempt))
        try:
            score = parse_score(reply.text)
        except ParseFailure:
            score = None
        record = JudgeRecord(record_id=record_id,
                             backend_id=self.backend.backend_id,
                             kind=bundle.kind,
                             subject=tuple(subject),
                             replicate=replicate,
                             attempt=attempt,
                             raw_output=reply.text,
                             parsed_score=score,
                             input_tokens=reply.input_tokens,
                             output_tokens=reply.output_tokens,
                             cost_usd=call_cost(self.config, reply.input_tokens, reply.output_tokens),
                             timestamp=now_timestamp())
        if self.cache is not None:
            self.cache.put(record)
        return record


def make_backend(config, sim_worlds=None):
    """Build the backend a judge config names."""
    if config.backend == "http":
        return HttpJudgeBackend(config)
    if config.backend == "scripted":
        return ScriptedJudgeBackend.from_file(config.fixture, backend_id=config.backend_id)
    # Imported here: the simulator itself builds on the judge types.
    from .simulation import SimulatedJudgeBackend
    if sim_worlds is not None:
        return SimulatedJudgeBackend(sim_worlds, backend_id=config.backend_id)
    if config.sidecar:
        return SimulatedJudgeBackend.from_sidecar(config.sidecar, backend_id=config.backend_id)
    raise ConfigError("The simulated judge needs a sim preset or judge.sidecar")
