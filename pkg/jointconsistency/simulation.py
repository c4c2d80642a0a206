# @file simulation.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Simulated pools and a simulated judge.

A simulated world is one question whose traces fall into K answer groups.
Every answer has a latent quality and the probability that an answer beats
another is a link function of the quality gap. Trace-level preferences are
the answer-level ones plus optional noise, so with no noise every trace of
one answer is interchangeable as far as the judge is concerned.

Worlds can be written out as ordinary pool files plus a sidecar holding the
ground-truth preferences and scores, which the simulated judge backend reads
to answer queries.
"""
import os
import json
import logging
import collections

import numpy as np

from .errors import ConfigError, JudgeBackendError
from .judge import JudgeReply, estimate_tokens
from .traces import (MATH,
                     Trace,
                     Question,
                     IntrinsicSignals,
                     build_partition,
                     write_pool)
from .utils import derive_seed

_log = logging.getLogger(__name__)

LOGISTIC = "logistic"
LINEAR_CLAMPED = "linear_clamped"
LINKS = (LOGISTIC, LINEAR_CLAMPED)

PROBABILITY = "probability"
LOGIT = "logit"
NOISE_SPACES = (PROBABILITY, LOGIT)

POOL_FILE = "pool.jsonl"
QUESTIONS_FILE = "questions.jsonl"
SIDECAR_FILE = "sidecar.json"

CONFIDENCE_TOKENS = 32

SimConfig = collections.namedtuple("SimConfig", ["K",
                                                 "group_sizes",
                                                 "correct_index",
                                                 "quality",
                                                 "link",
                                                 "noise_sigma",
                                                 "score_params",
                                                 "seed",
                                                 "noise_space",
                                                 "question_id"])
SimConfig.__new__.__defaults__ = (LOGISTIC, 0.0, (0.8, 0.4, 0.1), 0, PROBABILITY, "sim-0")


def validate_sim_config(config):
    def check(condition, message):
        if not condition:
            raise ConfigError(message)
    check(config.K >= 1, "K must be at least 1")
    check(len(config.group_sizes) == config.K, "group_sizes must have K entries")
    check(all(s >= 1 for s in config.group_sizes), "group sizes must be positive")
    check(len(config.quality) == config.K, "quality must have K entries")
    check(0 <= config.correct_index < config.K, "correct_index must lie in [0, K)")
    check(config.link in LINKS, "link must be one of {}".format(LINKS))
    check(config.noise_sigma >= 0, "noise_sigma must be nonnegative")
    check(config.noise_space in NOISE_SPACES, "noise_space must be one of {}".format(NOISE_SPACES))
    correct_mean, incorrect_mean, spread = config.score_params
    check(0 <= correct_mean <= 1 and 0 <= incorrect_mean <= 1, "score means must lie in [0, 1]")
    check(spread >= 0, "score spread must be nonnegative")
    return config


class SimWorld(collections.namedtuple("SimWorld", ["question",
                                                   "traces",
                                                   "trace_ids",
                                                   "answers",
                                                   "correct_answer",
                                                   "beta",
                                                   "preferences",
                                                   "scores"])):
    """One simulated question.

    answers lists the answer keys in simulation order, and beta is indexed
    the same way. preferences and scores are indexed like trace_ids. traces is
    None for worlds loaded from a sidecar.
    """
    __slots__ = ()

    def index_of(self, trace_id):
        return self.trace_ids.index(trace_id)


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def gen_beta(quality, link=LOGISTIC):
    """Answer-level preferences from latent qualities.

    beta[k][k'] + beta[k'][k] == 1 holds exactly off the diagonal.
    """
    if link not in LINKS:
        raise ValueError("Unknown link {!r}".format(link))
    quality = np.asarray(quality, dtype=float)
    K = len(quality)
    if K < 1:
        raise ValueError("Need at least one answer")
    beta = np.full((K, K), 0.5)
    for k in range(K):
        for k2 in range(k + 1, K):
            gap = abs(quality[k] - quality[k2])
            if link == LOGISTIC:
                high = float(_logistic(gap))
            else:
                high = min(1.0, 0.5 + gap / 2.0)
            # The entry >= 0.5 is computed, so 1 - high is exact.
            if quality[k] >= quality[k2]:
                beta[k, k2], beta[k2, k] = high, 1.0 - high
            else:
                beta[k2, k], beta[k, k2] = high, 1.0 - high
    return beta


def _perturb(rng, values, sigma, space):
    if sigma == 0:
        return values
    if space == PROBABILITY:
        return np.clip(values + rng.normal(0.0, sigma, size=np.shape(values)), 0.0, 1.0)
    clipped = np.clip(values, 1e-12, 1.0 - 1e-12)
    logits = np.log(clipped / (1.0 - clipped))
    return _logistic(logits + rng.normal(0.0, sigma, size=np.shape(values)))


def gen_pool(config):
    """Generate one simulated world from a SimConfig."""
    config = validate_sim_config(config)
    rng = np.random.default_rng(config.seed)
    answers = ["A{}".format(k) for k in range(config.K)]
    beta = gen_beta(config.quality, config.link)

    groups = np.repeat(np.arange(config.K), config.group_sizes)
    groups = rng.permutation(groups)
    N = len(groups)

    preferences = beta[np.ix_(groups, groups)]
    preferences = np.array(_perturb(rng, preferences, config.noise_sigma, config.noise_space))
    np.fill_diagonal(preferences, 0.5)

    correct_mean, incorrect_mean, spread = config.score_params
    correct = groups == config.correct_index
    means = np.where(correct, correct_mean, incorrect_mean)
    scores = np.clip(means + spread * rng.normal(size=N), 0.0, 1.0)

    logprob_means = np.where(correct, -0.3, -0.6)
    avg_logprobs = logprob_means + 0.1 * rng.normal(size=N)
    confidence_means = np.where(correct, 0.8, 0.6)
    confidences = np.clip(confidence_means[:, None] + 0.1 * rng.normal(size=(N, CONFIDENCE_TOKENS)),
                          0.0, 1.0)

    question = Question(config.question_id,
                        "Simulated question {}".format(config.question_id), MATH)
    traces = []
    for i, k in enumerate(groups):
        traces.append(Trace(trace_id="{}-t{}".format(config.question_id, i),
                            question_id=config.question_id,
                            content="Simulated reasoning {} ending in {}".format(i, answers[k]),
                            answer_raw=answers[k],
                            generator_id="sim",
                            intrinsic=IntrinsicSignals(float(avg_logprobs[i]),
                                                       tuple(float(c) for c in confidences[i])),
                            label=bool(correct[i]),
                            question=question.text,
                            task=MATH))
    return SimWorld(question=question,
                    traces=tuple(traces),
                    trace_ids=tuple(t.trace_id for t in traces),
                    answers=tuple(answers),
                    correct_answer=answers[config.correct_index],
                    beta=beta,
                    preferences=preferences,
                    scores=scores)


def world_partition(world):
    return build_partition(list(world.traces))


def preference_dominant_config(K=4, correct_size=2, seed=0, noise_sigma=0.0, quality_gap=2.0,
                               link=LOGISTIC, question_id=None):
    """A world where the correct answer is the rarest but the most preferred.

    Majority voting is wrong by construction; with no noise the answer with
    the largest preference row sum is the correct one.
    """
    if K < 2:
        raise ValueError("The preset needs at least two answers")
    rng = np.random.default_rng(derive_seed(seed, "preference_dominant"))
    sizes = [correct_size] + [correct_size + 1 + int(rng.integers(0, 3)) for _ in range(K - 1)]
    quality = [quality_gap] + [float(q) for q in rng.uniform(-quality_gap, 0.0, size=K - 1)]
    return SimConfig(K=K,
                     group_sizes=tuple(sizes),
                     correct_index=0,
                     quality=tuple(quality),
                     link=link,
                     noise_sigma=noise_sigma,
                     seed=seed,
                     question_id=question_id or "sim-{}".format(seed))


class SimulatedJudgeBackend(object):
    """Judge that answers from the ground truth of simulated worlds.

    An independent query returns the trace's simulated score and a pairwise
    query the simulated preference. judge_noise adds Gaussian noise seeded by
    the query, so replicates differ but reruns do not.
    """

    def __init__(self, worlds, backend_id="simulated", judge_noise=0.0, seed=0):
        self.backend_id = backend_id
        self._judge_noise = judge_noise
        self._seed = seed
        self._index = {}
        for world in worlds:
            for i, trace_id in enumerate(world.trace_ids):
                self._index[trace_id] = (world, i)

    @classmethod
    def from_sidecar(cls, path, backend_id="simulated", judge_noise=0.0, seed=0):
        return cls(load_sidecar(path), backend_id, judge_noise, seed)

    def _locate(self, trace_id):
        try:
            return self._index[trace_id]
        except KeyError:
            raise JudgeBackendError("Trace {} is not in any simulated world".format(trace_id))

    def complete(self, request):
        subject = tuple(request.subject)
        if len(subject) == 1:
            world, i = self._locate(subject[0])
            value = float(world.scores[i])
        else:
            world, i = self._locate(subject[0])
            other, j = self._locate(subject[1])
            if other is not world:
                raise JudgeBackendError("Traces {} and {} answer different questions".format(*subject))
            value = float(world.preferences[i][j])
        if self._judge_noise > 0:
            rng = np.random.default_rng(derive_seed(self._seed, *(subject + (request.replicate,
                                                                             request.attempt))))
            value = float(np.clip(value + rng.normal(0.0, self._judge_noise), 0.0, 1.0))
        text = "{:.12f}".format(value)
        prompt_text = "".join(m.text for m in request.bundle.messages)
        return JudgeReply(text=text,
                          input_tokens=estimate_tokens(prompt_text),
                          output_tokens=estimate_tokens(text))


def _world_to_json(world):
    return {"question_id": world.question.question_id,
            "question": world.question.text,
            "trace_ids": list(world.trace_ids),
            "answers": list(world.answers),
            "correct_answer": world.correct_answer,
            "beta": np.asarray(world.beta).tolist(),
            "preferences": np.asarray(world.preferences).tolist(),
            "scores": np.asarray(world.scores).tolist()}


def write_sim_pools(directory, worlds):
    """Write worlds as a pool file, a questions file and a sidecar.

    Returns the paths written, keyed "pool", "questions" and "sidecar".
    """
    if not os.path.isdir(directory):
        os.makedirs(directory)
    paths = {"pool": os.path.join(directory, POOL_FILE),
             "questions": os.path.join(directory, QUESTIONS_FILE),
             "sidecar": os.path.join(directory, SIDECAR_FILE)}
    write_pool(paths["pool"], [t for world in worlds for t in world.traces])
    with open(paths["questions"], "w", encoding="utf-8") as f:
        for world in worlds:
            f.write(json.dumps({"question_id": world.question.question_id,
                                "question": world.question.text,
                                "task": world.question.task}))
            f.write("\n")
    with open(paths["sidecar"], "w", encoding="utf-8") as f:
        json.dump({"worlds": [_world_to_json(w) for w in worlds]}, f)
        f.write("\n")
    _log.info("Wrote %d simulated worlds to %s", len(worlds), directory)
    return paths


def load_sidecar(path):
    """Read the ground truth written by write_sim_pools."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    worlds = []
    for obj in data["worlds"]:
        worlds.append(SimWorld(question=Question(obj["question_id"], obj["question"], MATH),
                               traces=None,
                               trace_ids=tuple(obj["trace_ids"]),
                               answers=tuple(obj["answers"]),
                               correct_answer=obj["correct_answer"],
                               beta=np.asarray(obj["beta"], dtype=float),
                               preferences=np.asarray(obj["preferences"], dtype=float),
                               scores=np.asarray(obj["scores"], dtype=float)))
    return worlds


def simulate(preset="preference_dominant", count=1, seed=0, K=4, noise_sigma=0.0, **kwargs):
    """Generate count worlds from a named preset with per-world derived seeds."""
    worlds = []
    for n in range(count):
        world_seed = derive_seed(seed, "world", n)
        if preset == "preference_dominant":
            config = preference_dominant_config(K=K, seed=world_seed, noise_sigma=noise_sigma,
                                                question_id="sim-{}".format(n), **kwargs)
        elif preset == "random":
            rng = np.random.default_rng(world_seed)
            sizes = tuple(int(s) for s in rng.integers(1, 6, size=K))
            config = SimConfig(K=K,
                               group_sizes=sizes,
                               correct_index=int(rng.integers(K)),
                               quality=tuple(float(q) for q in rng.normal(size=K)),
                               noise_sigma=noise_sigma,
                               seed=world_seed,
                               question_id="sim-{}".format(n),
                               **kwargs)
        else:
            raise ConfigError("Unknown simulation preset {!r}".format(preset))
        worlds.append(gen_pool(config))
    return worlds
