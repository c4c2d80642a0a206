# @file utils.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import os
import json
import logging
import hashlib
from contextlib import contextmanager
from fcntl import flock, LOCK_EX, LOCK_UN

_log = logging.getLogger(__name__)

# Seeds are folded into 63 bits so they are valid for numpy's SeedSequence and
# for Python's random alike.
_SEED_MASK = (1 << 63) - 1


def canonical_json(value):
    """Serialise a value so equal values always give identical bytes."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def content_hash(value):
    """sha256 hex digest of the canonical JSON form of value."""
    digest = hashlib.sha256()
    digest.update(canonical_json(value).encode("utf-8"))
    return digest.hexdigest()


def derive_seed(seed, *parts):
    """Derive an independent seed from a base seed and a key.

    The result is seed XOR hash(parts), so trials keyed differently get
    unrelated streams however they are scheduled.
    """
    key_hash = int(content_hash([str(p) for p in parts])[:16], 16)
    return (int(seed) ^ key_hash) & _SEED_MASK


@contextmanager
def locked_file(filename):
    """Hold an exclusive flock on a side lock file for the duration.

    A separate lock file is used so that the protected file can be opened,
    truncated or replaced while the lock is held.
    """
    lockfile_name = filename + ".lock"
    with open(lockfile_name, "a+") as lockfile:
        flock(lockfile, LOCK_EX)
        _log.debug("Acquired exclusive lock on %s", lockfile_name)
        try:
            yield
        finally:
            flock(lockfile, LOCK_UN)


def append_lines(filename, lines):
    """Append lines to a file under its lock, flushing before release."""
    if not lines:
        return
    with locked_file(filename):
        with open(filename, "a", encoding="utf-8") as f:
            for line in lines:
                f.write(line)
                f.write("\n")
            f.flush()
            os.fsync(f.fileno())


def replace_file(filename, lines):
    """Atomically replace a file's contents with the given lines."""
    tmp_name = filename + ".tmp"
    with locked_file(filename):
        with open(tmp_name, "w", encoding="utf-8") as f:
            for line in lines:
                f.write(line)
                f.write("\n")
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, filename)


def map_verbosity_to_log_level(verbosity):
    """
    Map a count of -v flags to a Python log level.

    0 gives warnings only, 1 adds info and 2 or more gives debug. Out of range
    values are clamped.
    """
    LOG_LEVELS = {0: logging.WARNING,
                  1: logging.INFO,
                  2: logging.DEBUG}

    verbosity = int(verbosity)

    if verbosity < 0:
        verbosity = 0
    elif verbosity > 2:
        verbosity = 2

    return LOG_LEVELS[verbosity]
