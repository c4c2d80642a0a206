# @file logging_config.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Logging setup for command-line runs and for the unit tests.

A run logs to stderr and, when given an output directory, to hourly files in
that directory as well. Every package module logs through
logging.getLogger(__name__); nothing below the root logger is configured.
"""
import os
import sys
import time
import logging
from datetime import datetime, timezone
from logging.handlers import BaseRotatingHandler

# Shared with test code, which doesn't want the full run configuration.
THREAD_FORMAT = logging.Formatter('%(asctime)s.%(msecs)03d UTC %(levelname)s %(filename)s:%(lineno)d (thread %(threadName)s): %(message)s', "%d-%m-%Y %H:%M:%S")
NO_THREAD_FORMAT = logging.Formatter('%(asctime)s.%(msecs)03d UTC %(levelname)s %(filename)s:%(lineno)d: %(message)s', "%d-%m-%Y %H:%M:%S")
CONSOLE_FORMAT = logging.Formatter('%(levelname)s %(name)s: %(message)s')

SECONDS_PER_FILE = 3600
LOG_FILE_MODE = 0o644


def getCurrentFilename(currentTime, log_dir, prefix):
    """Path of the log file covering the hour of currentTime."""
    filename = "{}_{:%Y%m%dT%H}0000Z.txt".format(prefix, datetime(currentTime.year,
                                                                  currentTime.month,
                                                                  currentTime.day,
                                                                  currentTime.hour))
    return os.path.join(log_dir, filename)


class RunLogHandler(BaseRotatingHandler):
    """Appends to one log file per UTC hour inside a run's output directory."""

    def __init__(self, log_directory, logfile_prefix):
        BaseRotatingHandler.__init__(self, os.path.join(log_directory, logfile_prefix),
                                     'a', encoding="utf-8", delay=True)
        self._log_directory = log_directory
        self._logfile_prefix = logfile_prefix
        self.next_file_change = 0
        self.doRollover()

    def shouldRollover(self, record): #pragma: no cover
        return time.time() >= self.next_file_change

    def doRollover(self):
        if self.stream is not None:
            self.stream.close() #pragma: no cover
            self.stream = None
        now = int(time.time())
        self.baseFilename = getCurrentFilename(datetime.fromtimestamp(now, timezone.utc),
                                               self._log_directory,
                                               self._logfile_prefix)
        fd = os.open(self.baseFilename, os.O_WRONLY | os.O_CREAT | os.O_APPEND, LOG_FILE_MODE)
        self.stream = os.fdopen(fd, self.mode, encoding="utf-8")
        self.next_file_change = (now // SECONDS_PER_FILE + 1) * SECONDS_PER_FILE


def configure_logging(log_level,
                      log_dir,
                      log_prefix,
                      task_id=None,
                      show_thread=False):
    """Add hourly log files under log_dir to whatever is already configured.

    Files are named <log_prefix>[-<task_id>]_<YYYYMMDDTHH>0000Z.txt. The
    directory is created if missing.
    """
    if task_id:
        log_prefix += "-{}".format(task_id)
    if not os.path.isdir(log_dir):
        os.makedirs(log_dir)
    handler = RunLogHandler(log_dir, log_prefix)
    common_logging(handler, log_level, THREAD_FORMAT if show_thread else NO_THREAD_FORMAT,
                   replace=False)


def configure_console_logging(log_level):
    """Send logs at or above log_level to stderr, replacing other handlers."""
    common_logging(logging.StreamHandler(sys.stderr), log_level, CONSOLE_FORMAT)


def _remove_handlers(logger):
    for h in list(logger.handlers):
        logger.removeHandler(h)


def _log_uncaught(exc_type, value, tb): #pragma: no cover
    logging.getLogger().critical("Uncaught %s", exc_type.__name__,
                                 exc_info=(exc_type, value, tb))
    sys.__excepthook__(exc_type, value, tb)


def common_logging(handler, log_level, log_format, replace=True):
    """Attach handler to the root logger at log_level.

    The root logger itself passes everything; levels are set per handler so
    a quiet console can sit beside a verbose run log.
    """
    root_log = logging.getLogger()
    root_log.setLevel(logging.DEBUG)
    if replace:
        _remove_handlers(root_log)

    log_format.converter = time.gmtime
    handler.setFormatter(log_format)
    handler.setLevel(log_level)
    root_log.addHandler(handler)
    sys.excepthook = _log_uncaught


def configure_test_logging():
    """Logging for the unit tests.

    Debug level when NOISY is set, error level otherwise. Output goes to the
    file named by LOGFILE, or to stderr. Previously configured handlers are
    removed.
    """
    level = logging.DEBUG if os.getenv('NOISY') else logging.ERROR
    logfile = os.getenv('LOGFILE')

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    _remove_handlers(root_logger)

    if logfile: #pragma: no cover
        handler = logging.FileHandler(logfile)
        handler.setFormatter(THREAD_FORMAT)
    else: #pragma: no cover
        handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    root_logger.addHandler(handler)
