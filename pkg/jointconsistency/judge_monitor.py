# @file judge_monitor.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import logging
from threading import Lock
from monotonic import monotonic

from .pdlogs import JUDGE_BACKEND_UNREACHABLE, JUDGE_BACKEND_RECOVERED

_log = logging.getLogger(__name__)

# Seconds between health checks while healthy and while degraded.
HEALTHY_CHECK_INTERVAL = 30
DEGRADED_CHECK_INTERVAL = 15


class JudgeHealthMonitor(object):
    """Tracks whether a judge backend is answering.

    The backend is declared unreachable when a check interval saw failures
    and no successes, and recovered when a later interval sees a success.
    """
    def __init__(self, backend_id, unreachable_pd=JUDGE_BACKEND_UNREACHABLE,
                 recovered_pd=JUDGE_BACKEND_RECOVERED):
        self._backend_id = backend_id
        self._unreachable_pd = unreachable_pd
        self._recovered_pd = recovered_pd
        self.succeeded = 0
        self.failed = 0
        self.degraded = False
        self.mutex = Lock()
        self._next_check = 0

    def set_degraded(self):
        self.degraded = True
        _log.warning("Judge backend %s marked unreachable.", self._backend_id)
        self._unreachable_pd.log(backend=self._backend_id)

    def clear_degraded(self):
        self.degraded = False
        _log.warning("Judge backend %s recovered.", self._backend_id)
        self._recovered_pd.log(backend=self._backend_id)

    def update_state(self):
        now = monotonic()
        with self.mutex:
            _log.debug("Deciding whether to change judge state - degraded is %s, now is %s, "
                       "next check time is %s, succeeded count is %d, failed count is %d",
                       self.degraded, now, self._next_check, self.succeeded, self.failed)
            if (now > self._next_check):
                if not self.degraded:
                    if self.succeeded == 0 and self.failed > 0:
                        self.set_degraded()
                    self._next_check = now + HEALTHY_CHECK_INTERVAL
                else:
                    if self.succeeded > 0:
                        self.clear_degraded()
                    self._next_check = now + DEGRADED_CHECK_INTERVAL
                self.succeeded = self.failed = 0

    def inform_success(self):
        with self.mutex:
            self.succeeded += 1
        self.update_state()

    def inform_failure(self):
        with self.mutex:
            self.failed += 1
        self.update_state()
