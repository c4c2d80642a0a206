# @file test_traces.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import os
import json
import shutil
import tempfile
import unittest

from jointconsistency.errors import InvalidAnswer, InvalidTrace
from jointconsistency.traces import (normalize_answer,
                                     build_partition,
                                     top_kappa,
                                     trace_from_json,
                                     load_pool,
                                     write_pool,
                                     group_pools,
                                     load_questions,
                                     question_for_pool,
                                     Question)
from .helpers import make_pool, make_trace


class NormalizeTestCase(unittest.TestCase):
    def test_exact(self):
        self.assertEqual(normalize_answer("  12  ", "exact"), "12")
        self.assertEqual(normalize_answer("a \n b"), "a b")
        self.assertNotEqual(normalize_answer("X"), normalize_answer("x"))

    def test_math_strips_wrappers(self):
        self.assertEqual(normalize_answer("\\boxed{12}", "math"), "12")
        self.assertEqual(normalize_answer("$\\boxed{ 12 }$", "math"), "12")
        self.assertEqual(normalize_answer("\\(x+1\\)", "math"), "x+1")
        self.assertEqual(normalize_answer("\\boxed{\\frac{1}{2}}", "math"), "\\frac{1}{2}")
        # Not a wrapper when the first brace closes early.
        self.assertEqual(normalize_answer("\\boxed{1}+\\boxed{2}", "math"), "\\boxed{1}+\\boxed{2}")

    def test_casefold(self):
        self.assertEqual(normalize_answer(" Yes ", "casefold"), "yes")

    def test_idempotent(self):
        for mode in ("exact", "math", "casefold"):
            for raw in ("\\boxed{ $5$ }", "  A  b ", "$$7$$"):
                once = normalize_answer(raw, mode)
                self.assertEqual(normalize_answer(once, mode), once)

    def test_empty(self):
        self.assertRaises(InvalidAnswer, normalize_answer, "   ")
        self.assertRaises(InvalidAnswer, normalize_answer, "\\boxed{}", "math")
        self.assertRaises(InvalidAnswer, normalize_answer, None)
        self.assertRaises(ValueError, normalize_answer, "1", "fuzzy")


class PartitionTestCase(unittest.TestCase):
    def test_groups_in_first_appearance_order(self):
        pool = make_pool(["5", "7", "5", "9", "7", "5"])
        partition = build_partition(pool)
        self.assertEqual(partition.N, 6)
        self.assertEqual(partition.K, 3)
        self.assertEqual([partition.answer_of(k) for k in range(3)], ["5", "7", "9"])
        self.assertEqual(partition.sizes, (3, 2, 1))
        self.assertEqual(partition.members(1), (1, 4))
        self.assertEqual(partition.group_of(3), 2)
        self.assertEqual(partition.group_index("7"), 1)
        self.assertRaises(KeyError, partition.group_index, "8")
        self.assertEqual(list(partition.trace_group_sizes()), [3, 2, 3, 1, 2, 3])
        self.assertEqual(sum(partition.sizes), partition.N)

    def test_normalizer_merges_groups(self):
        pool = make_pool(["\\boxed{3}", "3", "$3$"])
        self.assertEqual(build_partition(pool, "exact").K, 3)
        self.assertEqual(build_partition(pool, "math").K, 1)

    def test_single_trace(self):
        partition = build_partition(make_pool(["1"]))
        self.assertEqual((partition.N, partition.K), (1, 1))

    def test_invalid_pools(self):
        self.assertRaises(InvalidTrace, build_partition, [])
        pool = [make_trace("t0", "1"), make_trace("t0", "2")]
        self.assertRaises(InvalidTrace, build_partition, pool)

    def test_top_kappa(self):
        partition = build_partition(make_pool(["a", "b", "b", "c", "c", "d"]))
        self.assertEqual(top_kappa(partition, 2), [1, 2])
        self.assertEqual(top_kappa(partition, 10), [1, 2, 0, 3])
        for kappa in range(1, 4):
            self.assertEqual(top_kappa(partition, kappa),
                             top_kappa(partition, kappa + 1)[:kappa])
        self.assertRaises(ValueError, top_kappa, partition, 0)


class PoolFileTestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def _write(self, name, lines):
        path = os.path.join(self.tmpdir, name)
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
        return path

    def test_load_and_write(self):
        records = [{"trace_id": "a", "question_id": "q1", "content": "c", "answer_raw": "1",
                    "intrinsic": {"avg_logprob": -0.5, "token_confidences": [1, 2]},
                    "label": True, "extra": "ignored"},
                   {"trace_id": "b", "question_id": "q2", "content": "c", "answer_raw": "2",
                    "question": "What?", "task": "math"}]
        path = self._write("pool.jsonl", [json.dumps(r) for r in records] + [""])
        pool = load_pool(path)
        self.assertEqual([t.trace_id for t in pool], ["a", "b"])
        self.assertEqual(pool[0].intrinsic.token_confidences, (1.0, 2.0))
        self.assertEqual(pool[0].intrinsic.avg_logprob, -0.5)
        self.assertTrue(pool[0].label)
        self.assertIsNone(pool[1].intrinsic)

        copy = os.path.join(self.tmpdir, "copy.jsonl")
        write_pool(copy, pool)
        self.assertEqual(load_pool(copy), pool)

        pools = group_pools(pool)
        self.assertEqual(list(pools), ["q1", "q2"])
        self.assertEqual(question_for_pool(pools["q2"]).text, "What?")
        self.assertEqual(question_for_pool(pools["q1"]).text, "q1")

    def test_bad_records(self):
        self.assertRaises(InvalidTrace, trace_from_json, {"trace_id": "a"})
        self.assertRaises(InvalidTrace, trace_from_json, ["not", "an", "object"])
        base = {"trace_id": "a", "question_id": "q", "content": "c"}
        self.assertRaises(InvalidTrace, trace_from_json, dict(base, answer_raw=""))
        self.assertRaises(InvalidTrace, trace_from_json,
                          dict(base, answer_raw="1", intrinsic={"token_confidences": []}))
        self.assertRaises(InvalidTrace, trace_from_json, dict(base, answer_raw="1", task="poetry"))
        path = self._write("bad.jsonl", ["{not json"])
        self.assertRaises(InvalidTrace, load_pool, path)

    def test_questions_file(self):
        path = self._write("questions.jsonl", [
            json.dumps({"question_id": "q1", "question": "Add.", "task": "code",
                        "code": "print(1)", "input": ""})])
        questions = load_questions(path)
        self.assertEqual(questions["q1"], Question("q1", "Add.", "code", "print(1)", ""))
        pool = make_pool(["1"], question_id="q1")
        self.assertEqual(question_for_pool(pool, questions).task, "code")
        self.assertRaises(InvalidTrace, load_questions, self._write("bad.jsonl", ['{"question": 1}']))

if __name__ == "__main__":
    unittest.main()
