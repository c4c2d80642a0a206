# @file test_utils.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import os
import shutil
import logging
import tempfile
import unittest

from jointconsistency.utils import (canonical_json,
                                    content_hash,
                                    derive_seed,
                                    append_lines,
                                    replace_file,
                                    map_verbosity_to_log_level)


class UtilsTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_canonical_json_ignores_key_order(self):
        self.assertEqual(canonical_json({"b": 1, "a": [1, 2]}),
                         canonical_json({"a": [1, 2], "b": 1}))
        self.assertEqual(canonical_json({"a": 1}), '{"a":1}')

    def test_content_hash(self):
        self.assertEqual(content_hash({"x": 1}), content_hash({"x": 1}))
        self.assertNotEqual(content_hash({"x": 1}), content_hash({"x": 2}))
        self.assertEqual(len(content_hash([])), 64)

    def test_derive_seed(self):
        seed = derive_seed(7, "q1", 16, 0)
        self.assertEqual(seed, derive_seed(7, "q1", 16, 0))
        self.assertNotEqual(seed, derive_seed(7, "q1", 16, 1))
        self.assertNotEqual(seed, derive_seed(8, "q1", 16, 0))
        self.assertTrue(0 <= seed < 2 ** 63)

    def test_append_and_replace(self):
        path = os.path.join(self.tmpdir, "lines.jsonl")
        append_lines(path, ["one", "two"])
        append_lines(path, ["three"])
        append_lines(path, [])
        with open(path) as f:
            self.assertEqual(f.read(), "one\ntwo\nthree\n")

        replace_file(path, ["only"])
        with open(path) as f:
            self.assertEqual(f.read(), "only\n")
        self.assertFalse(os.path.exists(path + ".tmp"))

    def test_map_verbosity_to_log_level(self):
        self.assertEqual(map_verbosity_to_log_level(0), logging.WARNING)
        self.assertEqual(map_verbosity_to_log_level(1), logging.INFO)
        self.assertEqual(map_verbosity_to_log_level(2), logging.DEBUG)

        self.assertEqual(map_verbosity_to_log_level(-1), logging.WARNING)
        self.assertEqual(map_verbosity_to_log_level(50), logging.DEBUG)

if __name__ == "__main__":
    unittest.main()
