# @file judge_cache.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Judge records and the persistent judge cache.

Every live judge interaction becomes a JudgeRecord. The record id is a hash of
(backend id, prompt bundle, replicate index[, retry attempt]), so a rerun of the
same aggregation finds each of its records and replays them without calling
the judge.

The cache file is append-only JSON lines, one record each, and is loaded in
full when the cache is opened. Each line carries a digest of its content; a
line that fails the check is skipped. Several processes may append to the same
file; appends take an exclusive lock.
"""
import os
import json
import logging
import threading
import collections
from decimal import Decimal
from datetime import datetime, timezone

from .utils import content_hash, append_lines, replace_file
from .errors import CacheCorrupt
from .pdlogs import JUDGE_CACHE_RECORD_CORRUPT

_log = logging.getLogger(__name__)

JudgeRecord = collections.namedtuple("JudgeRecord", ["record_id",
                                                     "backend_id",
                                                     "kind",
                                                     "subject",
                                                     "replicate",
                                                     "attempt",
                                                     "raw_output",
                                                     "parsed_score",
                                                     "input_tokens",
                                                     "output_tokens",
                                                     "cost_usd",
                                                     "timestamp"])


def make_record_id(backend_id, messages, replicate, attempt=0):
    """Content hash identifying one judge interaction.

    messages is the chat-messages list of the prompt bundle. Retry attempts
    fold in their index; attempt 0 hashes exactly (backend, bundle, replicate).
    """
    key = {"backend_id": backend_id, "messages": messages, "replicate": replicate}
    if attempt:
        key["attempt"] = attempt
    return content_hash(key)


def now_timestamp():
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def record_to_json(record):
    body = collections.OrderedDict()
    body["record_id"] = record.record_id
    body["backend_id"] = record.backend_id
    body["kind"] = record.kind
    body["subject"] = list(record.subject)
    body["replicate"] = record.replicate
    body["attempt"] = record.attempt
    body["raw_output"] = record.raw_output
    body["parsed_score"] = record.parsed_score
    body["input_tokens"] = record.input_tokens
    body["output_tokens"] = record.output_tokens
    body["cost_usd"] = str(record.cost_usd)
    body["timestamp"] = record.timestamp
    body["digest"] = content_hash(dict(body))
    return body


def record_from_json(obj):
    """Rebuild a record, raising CacheCorrupt if its digest does not match."""
    try:
        body = dict(obj)
        digest = body.pop("digest")
        if content_hash(body) != digest:
            raise CacheCorrupt("Digest mismatch for record {}".format(body.get("record_id")))
        score = body["parsed_score"]
        return JudgeRecord(record_id=body["record_id"],
                           backend_id=body["backend_id"],
                           kind=body["kind"],
                           subject=tuple(body["subject"]),
                           replicate=int(body["replicate"]),
                           attempt=int(body["attempt"]),
                           raw_output=body["raw_output"],
                           parsed_score=float(score) if score is not None else None,
                           input_tokens=int(body["input_tokens"]),
                           output_tokens=int(body["output_tokens"]),
                           cost_usd=Decimal(body["cost_usd"]),
                           timestamp=body["timestamp"])
    except (KeyError, TypeError, ValueError) as e:
        raise CacheCorrupt("Malformed judge record: {}".format(e))


class JudgeCache(object):
    """Record store keyed by record id, optionally backed by a file.

    Safe for concurrent get/put. Two puts of the same record id keep the
    later one; records with equal ids are equal by construction.
    """

    def __init__(self, path=None):
        self.path = path
        self._records = collections.OrderedDict()
        self._lock = threading.Lock()
        self.corrupt_lines = 0
        if path is not None and os.path.exists(path):
            self._load()

    def _load(self):
        with open(self.path, encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = record_from_json(json.loads(line))
                except (ValueError, CacheCorrupt) as e:
                    _log.debug("Skipping cache line %d: %s", line_number, e)
                    JUDGE_CACHE_RECORD_CORRUPT.log(path=self.path, line=line_number)
                    self.corrupt_lines += 1
                    continue
                self._records[record.record_id] = record
        _log.info("Loaded %d judge records from %s", len(self._records), self.path)

    def get(self, record_id):
        with self._lock:
            return self._records.get(record_id)

    def put(self, record):
        with self._lock:
            self._records[record.record_id] = record
            if self.path is not None:
                append_lines(self.path, [json.dumps(record_to_json(record), ensure_ascii=False)])

    def __contains__(self, record_id):
        with self._lock:
            return record_id in self._records

    def __len__(self):
        with self._lock:
            return len(self._records)

    def records(self):
        with self._lock:
            return list(self._records.values())


def compact(path):
    """Rewrite a cache file with one line per record id.

    The last record written for an id wins; ids keep the position of their
    first appearance. Returns (lines read, records kept).
    """
    latest = collections.OrderedDict()
    lines_read = 0
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            lines_read += 1
            try:
                record = record_from_json(json.loads(line))
            except (ValueError, CacheCorrupt):
                JUDGE_CACHE_RECORD_CORRUPT.log(path=path, line=line_number)
                continue
            latest[record.record_id] = record
    replace_file(path, [json.dumps(record_to_json(r), ensure_ascii=False)
                        for r in latest.values()])
    _log.info("Compacted %s: %d lines to %d records", path, lines_read, len(latest))
    return lines_read, len(latest)


CostReportRow = collections.namedtuple("CostReportRow", ["kind",
                                                         "calls",
                                                         "input_tokens",
                                                         "output_tokens",
                                                         "cost_usd"])


def cache_cost_report(cache):
    """Lifetime spend recorded in a cache, one row per prompt kind."""
    totals = collections.OrderedDict()
    for record in cache.records():
        calls, tokens_in, tokens_out, cost = totals.get(record.kind, (0, 0, 0, Decimal(0)))
        totals[record.kind] = (calls + 1,
                               tokens_in + record.input_tokens,
                               tokens_out + record.output_tokens,
                               cost + record.cost_usd)
    return [CostReportRow(kind, *values) for kind, values in sorted(totals.items())]
