# @file throttler.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.


import logging
import threading
import time
from monotonic import monotonic

_log = logging.getLogger(__name__)

# Slack on the token check; refills are float arithmetic.
TOKEN_EPSILON = 1e-9


class Throttler(object):
    """Leaky-bucket throttler for live judge requests."""

    def __init__(self, rate_per_second, burst_count):
        """Constructor.

        Arguments:
        rate_per_second -- the maximum sustained request rate to allow
        per second.
        burst_count -- the maximum number of requests to allow at once.
        """
        self._rate_per_second = rate_per_second
        self._burst_count = burst_count
        self._bucket = self._burst_count
        self._last_update = monotonic()
        self._lock = threading.Lock()

    def is_allowed(self):
        """Attempt a request and determine if it is allowed.

        Returns True if it is allowed, and False if it is throttled.
        """
        with self._lock:
            return self._take()

    def wait(self):
        """Block until a request is allowed, then take it."""
        while True:
            with self._lock:
                if self._take():
                    return
                shortfall = (1 - self._bucket) / self._rate_per_second
            _log.debug("Throttled, sleeping %.3fs", shortfall)
            time.sleep(shortfall)

    def _take(self):
        self._refill()
        if self._bucket >= 1 - TOKEN_EPSILON:
            self._bucket = max(0.0, self._bucket - 1)
            return True
        return False

    def _refill(self):
        now = monotonic()
        delta = (now - self._last_update) * self._rate_per_second
        self._bucket = min(self._burst_count, self._bucket + delta)
        self._last_update = now

    @property
    def interval_sec(self):
        """The typical sustained interval between requests,
        as an integer number of seconds.

        Never less than 1."""
        return max(1, int(1 / self._rate_per_second))
