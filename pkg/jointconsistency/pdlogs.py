# @file pdlogs.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import logging

_pd_log = logging.getLogger("jointconsistency.pd")


class PDLog(object):
    """Class for defining and making problem determination logs.

    PD logs describe conditions an operator of a sweep should act on. They go
    to the "jointconsistency.pd" logger so a run log can be filtered for them.
    """
    LOG_NOTICE = logging.INFO
    LOG_WARNING = logging.WARNING
    LOG_ERR = logging.ERROR

    # Number ranges, one per area of the package.
    CL_JUDGE_ID = 1000
    CL_CACHE_ID = 2000
    CL_HARNESS_ID = 3000

    def __init__(self, number, desc, cause, effect, action, priority):
        """Defines a particular log's priority and log text.

        The desc, cause, effect and action strings can have named format string
        parameters, which will be filled in when log() is called.

        The priority must be LOG_NOTICE, LOG_WARNING or LOG_ERR."""
        self.number = number
        self._text = ("{} - Description: {} "+
                      "@@Cause: {} "+
                      "@@Effect: {} "+
                      "@@Action: {}").format(number, desc, cause, effect, action)
        self._priority = priority

    def log(self, **kwargs):
        """Logs out the description/cause/effect/action, including named
        format parameters."""
        _pd_log.log(self._priority, self._text.format(**kwargs))


JUDGE_BACKEND_UNREACHABLE = PDLog(
    number=PDLog.CL_JUDGE_ID + 1,
    desc="The judge backend {backend} is failing requests.",
    cause="Every judge request in the last check interval failed.",
    effect="Scores for affected traces are imputed, which weakens aggregation.",
    action="(1). Check the endpoint and credentials in the judge config. " +\
      "(2). Check the provider's status and rate limits. " +\
      "(3). Rerun the sweep against the same cache once the backend recovers.",
    priority=PDLog.LOG_ERR)

JUDGE_BACKEND_RECOVERED = PDLog(
    number=PDLog.CL_JUDGE_ID + 2,
    desc="The judge backend {backend} is answering requests again.",
    cause="A judge request succeeded after a period of failures.",
    effect="Judge scores are being collected normally.",
    action="None.",
    priority=PDLog.LOG_NOTICE)

JUDGE_SCORE_IMPUTED = PDLog(
    number=PDLog.CL_JUDGE_ID + 3,
    desc="{count} {kind} judge scores for question {question_id} were imputed.",
    cause="The judge reply could not be parsed after all retries.",
    effect="The imputed value {value} was used in place of the missing scores.",
    action="Inspect the cached raw outputs for these records; consider a " +\
      "higher retry limit or a different judge model.",
    priority=PDLog.LOG_WARNING)

JUDGE_CACHE_RECORD_CORRUPT = PDLog(
    number=PDLog.CL_CACHE_ID + 1,
    desc="Judge cache {path} line {line} failed its integrity check.",
    cause="The record was edited or truncated after it was written.",
    effect="The record is ignored and the query will be made again if needed.",
    action="Run 'jointconsistency cache compact' to rewrite the cache.",
    priority=PDLog.LOG_WARNING)

TRIAL_FAILED = PDLog(
    number=PDLog.CL_HARNESS_ID + 1,
    desc="Trial {trial} of {method} on question {question_id} failed.",
    cause="{error}",
    effect="The result row records status {status} and no answer.",
    action="Check the pool and judge configuration for this question.",
    priority=PDLog.LOG_WARNING)
