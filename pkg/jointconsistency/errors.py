# @file errors.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""Exceptions raised by the package."""


class JointConsistencyError(Exception):
    """Base class for every error this package raises on purpose."""


class InvalidAnswer(JointConsistencyError):
    """An answer string is empty once normalized."""


class InvalidTrace(JointConsistencyError):
    """A trace record is malformed."""


class ParseFailure(JointConsistencyError):
    """A judge reply holds no score in [0, 1]."""


class ScoreUnavailable(JointConsistencyError):
    """Every replicate of a judge query failed."""


class JudgeBackendError(JointConsistencyError):
    """The judge backend could not be reached or gave an unusable reply."""


class BudgetExhausted(JointConsistencyError):
    """A live judge call would go over its call budget."""


class IntrinsicUnavailable(JointConsistencyError):
    """A trace lacks the intrinsic signal a field builder needs."""


class CandidateNotScored(JointConsistencyError):
    """An answer group has no row in the answer-level interaction estimate."""


class EmptyCandidateSet(JointConsistencyError):
    """The solver was left with no eligible answer group."""


class InsufficientTraces(JointConsistencyError):
    """A subsample asked for more traces than the pool holds."""


class ConfigError(JointConsistencyError):
    """A configuration file or flag is invalid."""


class CacheCorrupt(JointConsistencyError):
    """A judge cache record failed its digest check."""
