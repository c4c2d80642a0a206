# @file interaction.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Interaction structures built from pairwise judge comparisons.

Two forms are supported.

The exact form queries every ordered pair of traces into a preference matrix
p and sets C[i][j] = sqrt(p[i][j]^tau / (n_i^2 n_j)), where n_i is the size of
trace i's answer group, and J = C C^T. J is positive semi-definite by
construction. For a group indicator x, x^T J x is the group's quadratic term.

The answer-level form only compares answer groups. For the top-kappa groups by
size it samples m trace pairs per ordered group pair and averages their
scores into beta[k][k']. When preferences depend only on the answers, the
exact quadratic term of group k equals the row sum of beta over all groups, so
the row sum of the estimate stands in for it at O(m kappa^2) judge calls.
"""
import json
import logging
import itertools
import collections

import numpy as np

from .errors import ScoreUnavailable, CandidateNotScored
from .judge import SIGNAL_J, SELF_COMPARISON_SCORE
from .pdlogs import JUDGE_SCORE_IMPUTED
from .traces import top_kappa

_log = logging.getLogger(__name__)

QUERIED = "queried"
CONVENTION = "convention"
COMPLEMENTED = "complemented"
IMPUTED = "imputed"

CONVENTION_HALF = "convention_half"
DIAGONAL_QUERIED = "queried"
DIAGONAL_POLICIES = (CONVENTION_HALF, DIAGONAL_QUERIED)

IMPUTED_PREFERENCE = 0.5

PSD_TOLERANCE = 1e-9

PreferenceMatrix = collections.namedtuple("PreferenceMatrix", ["p", "provenance", "imputed"])
InteractionExact = collections.namedtuple("InteractionExact", ["C", "J", "n", "tau"])


class BetaMatrix(collections.namedtuple("BetaMatrix", ["groups",
                                                       "beta",
                                                       "m",
                                                       "diagonal_policy",
                                                       "imputed",
                                                       "exhaustive"])):
    """Answer-level preference estimate over a subset of answer groups.

    groups lists partition group indices; beta[a][b] is the estimated
    probability that a trace answering groups[a] beats one answering
    groups[b].
    """
    __slots__ = ()

    def position(self, k):
        try:
            return self.groups.index(k)
        except ValueError:
            raise CandidateNotScored("Group {} has no answer-level estimate".format(k))


def _frozen(array):
    array.setflags(write=False)
    return array


def _pairwise_scores(question, gateway, pairs, symmetrize, category):
    """Score (trace_i, trace_j) pairs, giving None where no score was had."""
    def score(pair):
        trace_i, trace_j = pair
        try:
            return gateway.score_pairwise(question, trace_i, trace_j,
                                          symmetrize=symmetrize, category=category)
        except ScoreUnavailable:
            return None
    return gateway.map(score, pairs)


def build_preference_matrix(question, pool, gateway, complement=None, symmetrize=None,
                            category=SIGNAL_J):
    """Query the judge for every ordered pair of traces in a pool.

    With complement, only pairs i < j are queried and p[j][i] = 1 - p[i][j].
    Failed queries are filled with 0.5.
    """
    if not pool:
        raise ValueError("Cannot build a preference matrix for an empty pool")
    if complement is None:
        complement = gateway.config.complement
    N = len(pool)
    p = np.full((N, N), SELF_COMPARISON_SCORE)
    provenance = np.full((N, N), CONVENTION, dtype=object)

    if complement:
        cells = list(itertools.combinations(range(N), 2))
    else:
        cells = list(itertools.permutations(range(N), 2))
    scores = _pairwise_scores(question, gateway, [(pool[i], pool[j]) for i, j in cells],
                              symmetrize, category)

    imputed = 0
    for (i, j), score in zip(cells, scores):
        if score is None:
            score = IMPUTED_PREFERENCE
            provenance[i, j] = IMPUTED
            imputed += 1
        else:
            provenance[i, j] = QUERIED
        p[i, j] = score
        if complement:
            p[j, i] = 1.0 - score
            provenance[j, i] = COMPLEMENTED
    if imputed:
        JUDGE_SCORE_IMPUTED.log(count=imputed, kind="pairwise",
                                question_id=pool[0].question_id, value=IMPUTED_PREFERENCE)
    return PreferenceMatrix(_frozen(p), _frozen(provenance), imputed)


def build_interaction_exact(preferences, partition, tau=1.0):
    """C and J = C C^T from a trace-level preference matrix."""
    p = preferences.p if isinstance(preferences, PreferenceMatrix) else np.asarray(preferences, dtype=float)
    if p.shape != (partition.N, partition.N):
        raise ValueError("Preference matrix is {}, pool has {} traces".format(p.shape, partition.N))
    if tau <= 0:
        raise ValueError("tau must be positive, got {}".format(tau))
    n = partition.trace_group_sizes().astype(float)
    powered = p if tau == 1 else p ** tau
    C = np.sqrt(powered / (n[:, None] ** 2 * n[None, :]))
    J = C @ C.T
    return InteractionExact(_frozen(C), _frozen(J), _frozen(partition.trace_group_sizes()), tau)


def quadratic_term(interaction, member_indices):
    """x^T J x for the indicator x of member_indices."""
    J = interaction.J if isinstance(interaction, InteractionExact) else np.asarray(interaction)
    indices = np.asarray(member_indices, dtype=int)
    return float(J[np.ix_(indices, indices)].sum())


def _draw(rng, members, m):
    """m members, without replacement until the group is used up."""
    members = np.asarray(members)
    if m <= len(members):
        return list(rng.choice(members, size=m, replace=False))
    drawn = list(rng.permutation(members))
    return drawn + list(rng.choice(members, size=m - len(members), replace=True))


def _cell_pairs(rng, partition, k, k2, m, exhaustive):
    members_a = partition.members(k)
    members_b = partition.members(k2)
    if k == k2:
        if exhaustive:
            return list(itertools.permutations(members_a, 2))
        if len(members_a) < 2:
            return []
        pairs = []
        for _ in range(m):
            i, j = rng.choice(np.asarray(members_a), size=2, replace=False)
            pairs.append((int(i), int(j)))
        return pairs
    if exhaustive:
        return list(itertools.product(members_a, members_b))
    return [(int(i), int(j)) for i, j in zip(_draw(rng, members_a, m), _draw(rng, members_b, m))]


def estimate_beta(question, partition, kappa, m, gateway, rng, complement=None,
                  exhaustive=False, diagonal_policy=CONVENTION_HALF, symmetrize=None,
                  category=SIGNAL_J):
    """Sampled answer-level preferences over the top-kappa groups.

    All trace pairs are drawn from rng in a fixed cell order before any query
    runs, so the estimate does not depend on query scheduling. Cells whose
    queries all fail are set to 0.5.
    """
    if m < 1:
        raise ValueError("m must be at least 1, got {}".format(m))
    if diagonal_policy not in DIAGONAL_POLICIES:
        raise ValueError("Unknown diagonal policy {!r}".format(diagonal_policy))
    if complement is None:
        complement = gateway.config.complement
    groups = tuple(top_kappa(partition, min(kappa, partition.K)))
    size = len(groups)

    cells = []
    for a, b in itertools.product(range(size), repeat=2):
        if a == b and diagonal_policy == CONVENTION_HALF:
            continue
        if complement and a > b:
            continue
        cells.append((a, b))

    queries = []
    for a, b in cells:
        for i, j in _cell_pairs(rng, partition, groups[a], groups[b], m, exhaustive):
            queries.append(((a, b), i, j))
    pool = partition.pool
    scores = _pairwise_scores(question, gateway, [(pool[i], pool[j]) for _, i, j in queries],
                              symmetrize, category)

    collected = collections.defaultdict(list)
    for (cell, _, _), score in zip(queries, scores):
        collected[cell].append(score)

    beta = np.full((size, size), SELF_COMPARISON_SCORE)
    imputed = 0
    for a, b in cells:
        found = [s for s in collected.get((a, b), []) if s is not None]
        if found:
            value = float(np.mean(found))
        else:
            value = IMPUTED_PREFERENCE
            if collected.get((a, b)):
                imputed += 1
        beta[a, b] = value
        if complement and a != b:
            beta[b, a] = 1.0 - value
    if imputed:
        JUDGE_SCORE_IMPUTED.log(count=imputed, kind="answer-level",
                                question_id=pool[0].question_id, value=IMPUTED_PREFERENCE)
    _log.debug("Estimated answer-level preferences for %d groups from %d queries",
               size, len(queries))
    return BetaMatrix(groups, _frozen(beta), m, diagonal_policy, imputed, exhaustive)


def answer_level_quadratic(beta, k):
    """Row sum of the estimate for group k, diagonal included."""
    return float(beta.beta[beta.position(k)].sum())


def min_eigenvalue(J):
    J = np.asarray(J, dtype=float)
    return float(np.linalg.eigvalsh((J + J.T) / 2.0).min())


def is_psd(J, tol=PSD_TOLERANCE):
    return min_eigenvalue(J) >= -tol


def _group_metadata(partition, groups):
    return [{"group": int(k),
             "answer": partition.answer_of(k),
             "size": partition.sizes[k]} for k in groups]


def interaction_to_json(interaction, partition):
    if isinstance(interaction, BetaMatrix):
        return {"kind": "answer_level",
                "groups": _group_metadata(partition, interaction.groups),
                "beta": interaction.beta.tolist(),
                "m": interaction.m,
                "exhaustive": interaction.exhaustive,
                "diagonal_policy": interaction.diagonal_policy,
                "imputed": interaction.imputed}
    return {"kind": "exact",
            "groups": _group_metadata(partition, range(partition.K)),
            "trace_ids": [t.trace_id for t in partition.pool],
            "tau": interaction.tau,
            "n": [int(v) for v in interaction.n],
            "C": interaction.C.tolist(),
            "J": interaction.J.tolist()}


def dump_interaction(path, interaction, partition):
    """Write an interaction structure and its group metadata as JSON."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(interaction_to_json(interaction, partition), f, indent=2, ensure_ascii=False)
        f.write("\n")
