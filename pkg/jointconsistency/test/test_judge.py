# @file test_judge.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

import os
import json
import time
import shutil
import tempfile
import threading
import unittest
from decimal import Decimal
import mock

import httpx

from jointconsistency.errors import (ParseFailure,
                                     ScoreUnavailable,
                                     JudgeBackendError,
                                     BudgetExhausted,
                                     ConfigError)
from jointconsistency.judge import (parse_score,
                                    call_cost,
                                    validate_judge_config,
                                    make_backend,
                                    JudgeConfig,
                                    JudgeGateway,
                                    JudgeReply,
                                    JudgeRequest,
                                    HttpJudgeBackend,
                                    ScriptedJudgeBackend,
                                    Ledger,
                                    CallBudget,
                                    ledger_totals,
                                    SIGNAL_H,
                                    SIGNAL_J)
from jointconsistency.judge_cache import JudgeCache
from jointconsistency.prompts import render_independent_prompt
from .helpers import QUESTION, make_trace, scripted_gateway


class ParseScoreTestCase(unittest.TestCase):
    def test_plain_numbers(self):
        self.assertEqual(parse_score("0.7"), 0.7)
        self.assertEqual(parse_score("Score: 0.8"), 0.8)
        self.assertEqual(parse_score("1"), 1.0)
        self.assertEqual(parse_score("The probability is 1."), 1.0)
        self.assertEqual(parse_score(".25"), 0.25)

    def test_last_in_range_wins(self):
        self.assertEqual(parse_score("1.5 then 0.3"), 0.3)
        self.assertEqual(parse_score("0.75 out of 2"), 0.75)
        self.assertEqual(parse_score("first 0.2, finally 0.6"), 0.6)

    def test_markup_stripped(self):
        self.assertEqual(parse_score("<think>maybe 0.2</think> 0.9"), 0.9)
        self.assertEqual(parse_score("\\boxed{0.6}"), 0.6)
        self.assertEqual(parse_score("**0.4**"), 0.4)
        self.assertEqual(parse_score("<answer>0.35</answer>"), 0.35)

    def test_failures(self):
        for raw in (None, "", "none", "5", "-0.2", "version 2.0.1"):
            self.assertRaises(ParseFailure, parse_score, raw)


class JudgeConfigTestCase(unittest.TestCase):
    def test_validation(self):
        validate_judge_config(JudgeConfig())
        self.assertRaises(ConfigError, validate_judge_config, JudgeConfig(backend="carrier-pigeon"))
        self.assertRaises(ConfigError, validate_judge_config, JudgeConfig(replicates=0))
        self.assertRaises(ConfigError, validate_judge_config, JudgeConfig(backend="http"))
        self.assertRaises(ConfigError, validate_judge_config,
                          JudgeConfig(backend="http", endpoint="http://judge"))
        self.assertRaises(ConfigError, validate_judge_config, JudgeConfig(backend="scripted"))
        self.assertRaises(ConfigError, validate_judge_config, JudgeConfig(requests_per_second=0))

    def test_call_cost(self):
        config = JudgeConfig()
        self.assertEqual(call_cost(config, 1000000, 0), Decimal("0.039"))
        self.assertEqual(call_cost(config, 0, 1000000), Decimal("0.18"))
        self.assertEqual(call_cost(config, 500, 100), Decimal("0.0000375"))


class ScriptedBackendTestCase(unittest.TestCase):
    def request(self, *subject):
        bundle = render_independent_prompt(QUESTION, make_trace(subject[0], "1"))
        return JudgeRequest(bundle, subject, 0, 0)

    def test_successive_replies(self):
        backend = ScriptedJudgeBackend({"t0": ["0.1", "0.2"], "t0|t1": "0.9"})
        self.assertEqual(backend.complete(self.request("t0")).text, "0.1")
        self.assertEqual(backend.complete(self.request("t0")).text, "0.2")
        self.assertEqual(backend.complete(self.request("t0")).text, "0.2")
        self.assertEqual(backend.complete(self.request("t0", "t1")).text, "0.9")
        self.assertEqual(backend.calls, 4)

    def test_default_and_missing(self):
        self.assertEqual(ScriptedJudgeBackend({}, default="0.5").complete(self.request("x")).text, "0.5")
        self.assertRaises(JudgeBackendError, ScriptedJudgeBackend({}).complete, self.request("x"))

    def test_from_file(self):
        tmpdir = tempfile.mkdtemp()
        try:
            path = os.path.join(tmpdir, "fixture.json")
            with open(path, "w") as f:
                json.dump({"default": "0.5", "replies": {"a|b": ["0.8"]}}, f)
            backend = make_backend(JudgeConfig(backend="scripted", backend_id="fx", fixture=path))
            self.assertEqual(backend.backend_id, "fx")
            self.assertEqual(backend.complete(self.request("a", "b")).text, "0.8")
            self.assertEqual(backend.complete(self.request("c")).text, "0.5")
        finally:
            shutil.rmtree(tmpdir)

    def test_simulated_backend_needs_worlds(self):
        self.assertRaises(ConfigError, make_backend, JudgeConfig())


class GatewayTestCase(unittest.TestCase):
    def setUp(self):
        self.a = make_trace("a", "1")
        self.b = make_trace("b", "2")

    def test_independent_score(self):
        gateway, backend = scripted_gateway({"a": "Score: 0.8"})
        self.assertEqual(gateway.score_independent(QUESTION, self.a), 0.8)
        entries = gateway.ledger.entries()
        self.assertEqual(len(entries), 1)
        self.assertEqual(entries[0].category, SIGNAL_H)
        self.assertEqual(entries[0].kind, "independent_math")
        self.assertTrue(entries[0].live)

    def test_replicates_are_averaged(self):
        gateway, backend = scripted_gateway({"a": ["0.6", "0.8"]}, replicates=2)
        self.assertAlmostEqual(gateway.score_independent(QUESTION, self.a), 0.7)
        self.assertEqual(backend.calls, 2)

    def test_unparseable_reply_is_retried(self):
        gateway, backend = scripted_gateway({"a": ["I cannot say", "0.4"]}, retry_limit=3)
        self.assertEqual(gateway.score_independent(QUESTION, self.a), 0.4)
        self.assertEqual(backend.calls, 2)
        # Both attempts were paid for.
        self.assertEqual(ledger_totals(gateway.ledger).calls, 2)

    def test_retries_exhausted(self):
        gateway, backend = scripted_gateway({"a": "I cannot say"}, retry_limit=2)
        self.assertRaises(ScoreUnavailable, gateway.score_independent, QUESTION, self.a)
        self.assertEqual(backend.calls, 3)

    def test_one_failed_replicate_is_dropped(self):
        gateway, _ = scripted_gateway({"a": ["0.9", "nothing"]}, replicates=2, retry_limit=0)
        self.assertEqual(gateway.score_independent(QUESTION, self.a), 0.9)

    def test_backend_error_is_unavailable(self):
        gateway, _ = scripted_gateway({})
        self.assertRaises(ScoreUnavailable, gateway.score_pairwise, QUESTION, self.a, self.b)

    def test_self_pair_costs_nothing(self):
        gateway, backend = scripted_gateway({})
        self.assertEqual(gateway.score_pairwise(QUESTION, self.a, self.a), 0.5)
        self.assertEqual(backend.calls, 0)
        self.assertEqual(len(gateway.ledger), 0)

    def test_symmetrize(self):
        table = {("a", "b"): "0.6", ("b", "a"): "0.3"}
        gateway, backend = scripted_gateway(table)
        self.assertEqual(gateway.score_pairwise(QUESTION, self.a, self.b), 0.6)
        self.assertAlmostEqual(gateway.score_pairwise(QUESTION, self.a, self.b, symmetrize=True), 0.65)

        gateway, backend = scripted_gateway(table, symmetrize=True)
        self.assertAlmostEqual(gateway.score_pairwise(QUESTION, self.a, self.b), 0.65)
        budget = gateway.ledger.pairwise_budget(SIGNAL_J)
        self.assertEqual((budget.ordered_calls, budget.unordered_pairs), (2, 1))

    def test_cache_hit_costs_nothing_live(self):
        cache = JudgeCache()
        gateway, backend = scripted_gateway({("a", "b"): "0.7"}, cache=cache)
        first = gateway.score_pairwise(QUESTION, self.a, self.b)
        live_cost = ledger_totals(gateway.ledger).cost_usd
        self.assertGreater(live_cost, 0)

        replay = gateway.bind(Ledger())
        self.assertEqual(replay.score_pairwise(QUESTION, self.a, self.b), first)
        self.assertEqual(backend.calls, 1)
        self.assertEqual(ledger_totals(replay.ledger), (0, 0, 0, Decimal(0)))
        attributed = ledger_totals(replay.ledger, live_only=False)
        self.assertEqual(attributed.calls, 1)
        self.assertEqual(attributed.cost_usd, live_cost)

    def test_call_budget_charges_every_fetch(self):
        cache = JudgeCache()
        gateway, backend = scripted_gateway({("a", "b"): "0.7", ("b", "a"): "0.2"}, cache=cache)
        gateway.score_pairwise(QUESTION, self.a, self.b)

        budget = CallBudget(2)
        limited = gateway.bind(call_budget=budget)
        self.assertEqual(limited.score_pairwise(QUESTION, self.a, self.b), 0.7)
        self.assertEqual(limited.score_pairwise(QUESTION, self.b, self.a), 0.2)
        self.assertEqual((budget.used, budget.remaining), (2, 0))
        self.assertRaises(BudgetExhausted, limited.score_pairwise, QUESTION, self.a, self.b)
        self.assertEqual(backend.calls, 2)
        self.assertIs(limited.ledger, gateway.ledger)

    def test_worst_case_calls(self):
        gateway, _ = scripted_gateway({}, replicates=2, retry_limit=3)
        self.assertEqual(gateway.worst_case_calls(), 8)
        self.assertEqual(gateway.worst_case_calls(symmetrize=True), 16)

    def test_cached_parse_failure_is_not_requeried(self):
        cache = JudgeCache()
        gateway, backend = scripted_gateway({"a": ["junk", "0.2"]}, cache=cache, retry_limit=1)
        self.assertEqual(gateway.score_independent(QUESTION, self.a), 0.2)
        self.assertEqual(len(cache), 2)
        self.assertEqual(gateway.bind(Ledger()).score_independent(QUESTION, self.a), 0.2)
        self.assertEqual(backend.calls, 2)

    def test_ledger_categories(self):
        gateway, _ = scripted_gateway({}, default="0.5")
        gateway.score_independent(QUESTION, self.a)
        gateway.score_pairwise(QUESTION, self.a, self.b, category="baseline")
        self.assertEqual(gateway.ledger.categories(), ["baseline", "h"])
        self.assertEqual(ledger_totals(gateway.ledger, "baseline").calls, 1)
        self.assertEqual(ledger_totals(gateway.ledger, SIGNAL_J).calls, 0)
        merged = Ledger()
        merged.merge(gateway.ledger)
        self.assertEqual(len(merged), 2)

    def test_concurrent_duplicates_query_once(self):
        release = threading.Event()

        class SlowBackend(object):
            backend_id = "slow"
            calls = 0

            def complete(self, request):
                SlowBackend.calls += 1
                release.wait(5)
                return JudgeReply("0.3", 10, 1)

        gateway = JudgeGateway(SlowBackend(), JudgeConfig(max_workers=4), JudgeCache())
        results = []
        threads = [threading.Thread(target=lambda: results.append(
                       gateway.bind(Ledger()).score_independent(QUESTION, self.a)))
                   for _ in range(4)]
        for thread in threads:
            thread.start()
        time.sleep(0.05)
        release.set()
        for thread in threads:
            thread.join()
        self.assertEqual(results, [0.3] * 4)
        self.assertEqual(SlowBackend.calls, 1)

    def test_map_preserves_order(self):
        gateway, _ = scripted_gateway({}, max_workers=4)
        self.assertEqual(gateway.map(lambda x: x * 2, range(20)), [x * 2 for x in range(20)])
        self.assertEqual(gateway.map(lambda x: x, []), [])


def chat_response(content, prompt_tokens=120, completion_tokens=4):
    return httpx.Response(200, json={
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens}})


class HttpBackendTestCase(unittest.TestCase):
    CONFIG = JudgeConfig(backend="http", backend_id="http-ut", endpoint="http://judge/v1/chat",
                         model="judge-model", http_retries=2)

    def setUp(self):
        self.requests = []
        self.monitor = mock.Mock()

    def backend(self, replies, config=CONFIG):
        replies = list(replies)

        def handler(request):
            self.requests.append(request)
            reply = replies.pop(0)
            if isinstance(reply, Exception):
                raise reply
            return reply
        client = httpx.Client(transport=httpx.MockTransport(handler))
        return HttpJudgeBackend(config, api_key="k", client=client, monitor=self.monitor)

    def request(self):
        return JudgeRequest(render_independent_prompt(QUESTION, make_trace("a", "1")), ("a",), 0, 0)

    def test_success(self):
        reply = self.backend([chat_response("0.9")]).complete(self.request())
        self.assertEqual(reply, JudgeReply("0.9", 120, 4))
        sent = self.requests[0]
        self.assertEqual(sent.headers["Authorization"], "Bearer k")
        body = json.loads(sent.content)
        self.assertEqual(body["model"], "judge-model")
        self.assertEqual(body["temperature"], 1.0)
        self.assertEqual(body["reasoning_effort"], "low")
        self.assertNotIn("max_tokens", body)
        self.assertEqual([m["role"] for m in body["messages"]], ["user", "assistant", "user"])
        self.monitor.inform_success.assert_called_once_with()

    @mock.patch("jointconsistency.judge.time.sleep")
    def test_transient_failures_retried(self, mock_sleep):
        backend = self.backend([httpx.Response(503),
                                httpx.ConnectError("refused"),
                                chat_response("0.2")])
        self.assertEqual(backend.complete(self.request()).text, "0.2")
        self.assertEqual(len(self.requests), 3)
        self.assertEqual([c[0][0] for c in mock_sleep.call_args_list], [1, 2])
        self.assertEqual(self.monitor.inform_failure.call_count, 2)

    @mock.patch("jointconsistency.judge.time.sleep")
    def test_retries_exhausted(self, mock_sleep):
        backend = self.backend([httpx.Response(429)] * 3)
        self.assertRaises(JudgeBackendError, backend.complete, self.request())
        self.assertEqual(len(self.requests), 3)

    def test_client_error_not_retried(self):
        backend = self.backend([httpx.Response(400, text="bad request")])
        self.assertRaises(JudgeBackendError, backend.complete, self.request())
        self.assertEqual(len(self.requests), 1)

    def test_malformed_body(self):
        backend = self.backend([httpx.Response(200, json={"choices": []})])
        self.assertRaises(JudgeBackendError, backend.complete, self.request())

    def test_gateway_over_http(self):
        backend = self.backend([chat_response("Probability: 0.35", 1000, 10)])
        gateway = JudgeGateway(backend, self.CONFIG)
        self.assertEqual(gateway.score_independent(QUESTION, make_trace("a", "1")), 0.35)
        totals = ledger_totals(gateway.ledger)
        self.assertEqual(totals.input_tokens, 1000)
        self.assertEqual(totals.cost_usd, call_cost(self.CONFIG, 1000, 10))

if __name__ == "__main__":
    unittest.main()
