# @file test_interaction.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import os
import json
import shutil
import tempfile
import unittest
import mock

import numpy as np

from jointconsistency.errors import CandidateNotScored
from jointconsistency.interaction import (build_preference_matrix,
                                          build_interaction_exact,
                                          quadratic_term,
                                          estimate_beta,
                                          answer_level_quadratic,
                                          min_eigenvalue,
                                          is_psd,
                                          dump_interaction,
                                          _draw,
                                          QUERIED,
                                          COMPLEMENTED,
                                          IMPUTED,
                                          DIAGONAL_QUERIED)
from jointconsistency.judge import ledger_totals
from jointconsistency.traces import build_partition
from .helpers import QUESTION, make_pool, scripted_gateway, pairwise_table

ANSWERS = ["x", "x", "x", "y", "y", "z"]
B = {"x": {"x": 0.5, "y": 0.3, "z": 0.9},
     "y": {"x": 0.7, "y": 0.5, "z": 0.6},
     "z": {"x": 0.1, "y": 0.4, "z": 0.5}}


def answer_preference(a, b):
    return B[a.answer_raw][b.answer_raw]


class PreferenceMatrixTestCase(unittest.TestCase):
    def setUp(self):
        self.pool = make_pool(["1", "2", "3"])
        self.table = pairwise_table(self.pool, lambda a, b: 0.8 if a.trace_id < b.trace_id else 0.3)

    def test_every_ordered_pair(self):
        gateway, backend = scripted_gateway(self.table)
        prefs = build_preference_matrix(QUESTION, self.pool, gateway)
        self.assertEqual(backend.calls, 6)
        np.testing.assert_allclose(prefs.p, [[0.5, 0.8, 0.8], [0.3, 0.5, 0.8], [0.3, 0.3, 0.5]])
        self.assertEqual(prefs.provenance[0, 1], QUERIED)
        self.assertEqual(prefs.imputed, 0)

    def test_complement(self):
        gateway, backend = scripted_gateway(self.table)
        prefs = build_preference_matrix(QUESTION, self.pool, gateway, complement=True)
        self.assertEqual(backend.calls, 3)
        np.testing.assert_allclose(prefs.p + prefs.p.T, np.ones((3, 3)))
        self.assertEqual(prefs.provenance[1, 0], COMPLEMENTED)

    @mock.patch("jointconsistency.interaction.JUDGE_SCORE_IMPUTED")
    def test_imputed(self, mock_pd):
        del self.table[("t2", "t0")]
        gateway, _ = scripted_gateway(self.table)
        prefs = build_preference_matrix(QUESTION, self.pool, gateway)
        self.assertEqual(prefs.p[2, 0], 0.5)
        self.assertEqual(prefs.provenance[2, 0], IMPUTED)
        self.assertEqual(prefs.imputed, 1)
        mock_pd.log.assert_called_once_with(count=1, kind="pairwise", question_id="q1", value=0.5)

    def test_empty_pool(self):
        gateway, _ = scripted_gateway({})
        self.assertRaises(ValueError, build_preference_matrix, QUESTION, [], gateway)


class ExactInteractionTestCase(unittest.TestCase):
    def setUp(self):
        self.pool = make_pool(ANSWERS)
        self.partition = build_partition(self.pool)
        gateway, _ = scripted_gateway(pairwise_table(self.pool, answer_preference))
        self.prefs = build_preference_matrix(QUESTION, self.pool, gateway)

    def test_definition(self):
        interaction = build_interaction_exact(self.prefs, self.partition)
        n = np.array([3, 3, 3, 2, 2, 1], dtype=float)
        expected_C = np.sqrt(self.prefs.p / (n[:, None] ** 2 * n[None, :]))
        np.testing.assert_allclose(interaction.C, expected_C)
        np.testing.assert_allclose(interaction.J, expected_C @ expected_C.T)
        self.assertEqual(list(interaction.n), [3, 3, 3, 2, 2, 1])

    def test_psd_and_symmetric(self):
        for tau in (0.5, 1.0, 3.0):
            J = build_interaction_exact(self.prefs, self.partition, tau).J
            np.testing.assert_allclose(J, J.T)
            self.assertTrue(is_psd(J))

    def test_tau(self):
        interaction = build_interaction_exact(self.prefs.p, self.partition, tau=2.0)
        n = self.partition.trace_group_sizes().astype(float)
        np.testing.assert_allclose(interaction.C ** 2, self.prefs.p ** 2 / (n[:, None] ** 2 * n[None, :]))
        self.assertRaises(ValueError, build_interaction_exact, self.prefs, self.partition, 0)

    def test_shape_mismatch(self):
        other = build_partition(make_pool(["1", "2"]))
        self.assertRaises(ValueError, build_interaction_exact, self.prefs, other)

    def test_quadratic_term_is_answer_row_sum(self):
        interaction = build_interaction_exact(self.prefs, self.partition)
        for k, answer in enumerate(["x", "y", "z"]):
            expected = sum(B[answer].values())
            self.assertAlmostEqual(quadratic_term(interaction, self.partition.members(k)), expected)

    def test_eigenvalues(self):
        self.assertAlmostEqual(min_eigenvalue([[1, 2], [2, 1]]), -1.0)
        self.assertFalse(is_psd([[1, 2], [2, 1]]))
        self.assertTrue(is_psd(np.eye(3)))


class BetaEstimateTestCase(unittest.TestCase):
    def setUp(self):
        self.pool = make_pool(ANSWERS)
        self.partition = build_partition(self.pool)
        self.table = pairwise_table(self.pool, answer_preference)

    def estimate(self, kappa, m=1, seed=0, **kwargs):
        gateway, backend = scripted_gateway(self.table, **kwargs.pop("judge", {}))
        beta = estimate_beta(QUESTION, self.partition, kappa, m, gateway,
                             np.random.default_rng(seed), **kwargs)
        return beta, gateway, backend

    def test_top_kappa_cells(self):
        beta, gateway, backend = self.estimate(2, m=2)
        self.assertEqual(beta.groups, (0, 1))
        np.testing.assert_allclose(beta.beta, [[0.5, 0.3], [0.7, 0.5]])
        self.assertEqual(backend.calls, 4)
        self.assertEqual(ledger_totals(gateway.ledger, "J").calls, 4)

    def test_call_budget(self):
        for kappa, m in ((1, 3), (2, 1), (3, 2)):
            _, _, backend = self.estimate(kappa, m)
            self.assertEqual(backend.calls, m * kappa * (kappa - 1))
        _, _, backend = self.estimate(3, 2, complement=True)
        self.assertEqual(backend.calls, 2 * 3)

    def test_complement(self):
        beta, _, _ = self.estimate(3, complement=True)
        np.testing.assert_allclose(beta.beta + beta.beta.T, np.ones((3, 3)))
        self.assertAlmostEqual(beta.beta[0, 1], 0.3)

    def test_row_sums_match_exact_quadratic(self):
        beta, _, _ = self.estimate(3)
        for k, answer in enumerate(["x", "y", "z"]):
            self.assertAlmostEqual(answer_level_quadratic(beta, k), sum(B[answer].values()))

    def test_kappa_larger_than_K(self):
        beta, _, _ = self.estimate(10)
        self.assertEqual(beta.groups, (0, 1, 2))

    def test_unscored_group(self):
        beta, _, _ = self.estimate(2)
        self.assertRaises(CandidateNotScored, answer_level_quadratic, beta, 2)

    def test_diagonal_queried(self):
        beta, _, backend = self.estimate(3, m=1, diagonal_policy=DIAGONAL_QUERIED)
        # Group z has one member, so its diagonal keeps the convention.
        self.assertEqual(backend.calls, 3 * 2 + 2)
        np.testing.assert_allclose(np.diag(beta.beta), [0.5, 0.5, 0.5])
        self.assertRaises(ValueError, self.estimate, 2, diagonal_policy="guess")

    def test_exhaustive(self):
        beta, _, backend = self.estimate(3, exhaustive=True)
        self.assertEqual(backend.calls, 2 * (3 * 2 + 3 * 1 + 2 * 1))
        self.assertTrue(beta.exhaustive)

    def test_deterministic_sampling(self):
        first, gateway1, _ = self.estimate(3, m=2, seed=11)
        second, gateway2, _ = self.estimate(3, m=2, seed=11)
        np.testing.assert_array_equal(first.beta, second.beta)
        self.assertEqual([e.subject for e in gateway1.ledger.entries()],
                         [e.subject for e in gateway2.ledger.entries()])

    @mock.patch("jointconsistency.interaction.JUDGE_SCORE_IMPUTED")
    def test_failed_cell_imputed(self, mock_pd):
        for key in list(self.table):
            if key[0] in ("t3", "t4") and key[1] in ("t0", "t1", "t2"):
                del self.table[key]
        beta, _, _ = self.estimate(2, m=2)
        self.assertEqual(beta.beta[1, 0], 0.5)
        self.assertEqual(beta.imputed, 1)
        mock_pd.log.assert_called_once_with(count=1, kind="answer-level",
                                            question_id="q1", value=0.5)

    def test_invalid_m(self):
        self.assertRaises(ValueError, self.estimate, 2, m=0)

    def test_draw(self):
        rng = np.random.default_rng(3)
        drawn = _draw(rng, [1, 2], 5)
        self.assertEqual(len(drawn), 5)
        self.assertEqual(sorted(drawn[:2]), [1, 2])
        drawn = _draw(rng, [1, 2, 3, 4], 3)
        self.assertEqual(len(set(drawn)), 3)


class DumpTestCase(unittest.TestCase):
    def test_dump(self):
        pool = make_pool(ANSWERS)
        partition = build_partition(pool)
        gateway, _ = scripted_gateway(pairwise_table(pool, answer_preference))
        tmpdir = tempfile.mkdtemp()
        try:
            path = os.path.join(tmpdir, "interaction.json")
            beta = estimate_beta(QUESTION, partition, 2, 1, gateway, np.random.default_rng(0))
            dump_interaction(path, beta, partition)
            with open(path) as f:
                data = json.load(f)
            self.assertEqual(data["kind"], "answer_level")
            self.assertEqual([g["answer"] for g in data["groups"]], ["x", "y"])
            self.assertEqual(data["beta"][0][1], 0.3)

            prefs = build_preference_matrix(QUESTION, pool, gateway)
            dump_interaction(path, build_interaction_exact(prefs, partition), partition)
            with open(path) as f:
                data = json.load(f)
            self.assertEqual(data["kind"], "exact")
            self.assertEqual(len(data["J"]), 6)
            self.assertEqual(data["trace_ids"][0], "t0")
        finally:
            shutil.rmtree(tmpdir)

if __name__ == "__main__":
    unittest.main()
