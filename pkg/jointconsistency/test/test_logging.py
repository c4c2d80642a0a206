# @file test_logging.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import re
import logging
import unittest
import mock

from jointconsistency.logging_config import (configure_logging,
                                             configure_console_logging,
                                             configure_test_logging,
                                             getCurrentFilename)


class LoggingTestCase(unittest.TestCase):
    """Tests utility functions for setting up logging."""

    def tearDown(self):
        # Once these tests are finished, we want to reset to using standard
        # test logging.
        configure_test_logging()

    @mock.patch('os.open')
    @mock.patch('os.fdopen')
    def testLogging(self, mock_fdopen, mock_open):
        """Test that configure_logging() will result in writing to file."""
        configure_logging(logging.DEBUG,
                          ".",
                          "test_log_prefix",
                          task_id="Fred",
                          show_thread=True)

        args, kwargs = mock_open.call_args

        filename_re = r"\./test_log_prefix-Fred_\d{8}T\d{2}0000Z.txt"
        match = re.compile(filename_re).match(args[0])
        self.assertIsNotNone(match, msg="Unexpected log file name")
        self.assertEqual(args[2], 0o644, msg="Unexpected log file open mode")

    def test_console_logging(self):
        """Test that console logging installs a single handler at the given level."""
        configure_console_logging(logging.INFO)
        handlers = logging.getLogger().handlers
        self.assertEqual(len(handlers), 1)
        self.assertEqual(handlers[0].level, logging.INFO)

    def test_filename(self):
        when = mock.Mock(year=2026, month=3, day=4, hour=5)
        self.assertEqual(getCurrentFilename(when, "logs", "run"),
                         "logs/run_20260304T050000Z.txt")


if __name__ == "__main__":
    unittest.main()
