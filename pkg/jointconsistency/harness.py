# @file harness.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""
Experiment harness.

A sweep runs every method on every question for each pool size N, each mu and
kappa the method uses, and each trial. A trial subsamples N traces from the
question's pool, aggregates them and records the chosen answer, whether it
is correct, and the judge calls and cost attributed to it.

Every random stream is derived from the sweep seed and the cell it serves, so
rows do not depend on the order trials are scheduled in. The sub-pool depends
on (question, N, trial) only, so all methods in a cell see the same traces.
"""
import io
import os
import csv
import json
import logging
import collections
from decimal import Decimal
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import JointConsistencyError, InsufficientTraces
from .traces import build_partition, group_pools, load_pool, load_questions, question_for_pool
from .judge import (SIGNAL_H,
                    SIGNAL_J,
                    SIGNAL_BASELINE,
                    JudgeGateway,
                    Ledger,
                    ledger_totals,
                    make_backend)
from .judge_cache import JudgeCache
from .field import JUDGE, build_field
from .interaction import build_preference_matrix, build_interaction_exact, estimate_beta
from .solver import (EXACT_J,
                     ANSWER_LEVEL,
                     H_ONLY,
                     J_ONLY,
                     AggregationConfig,
                     solve)
from .baselines import (KnockoutConfig,
                        pass_at_1,
                        best_of_n,
                        majority_vote,
                        weighted_vote,
                        self_certainty_vote,
                        deepconf_vote,
                        knockout_tournament)
from .pdlogs import TRIAL_FAILED
from .text_table import TextTableContent
from .utils import derive_seed

_log = logging.getLogger(__name__)

CATEGORIES = (SIGNAL_H, SIGNAL_J, SIGNAL_BASELINE)

RESULTS_CSV = "results.csv"
SUMMARY_CSV = "summary.csv"
RESULTS_JSON = "results.json"
SUMMARY_TXT = "summary.txt"
PARETO_CSV = "pareto.csv"
LEDGER_JSON = "ledger.json"

STATUS_OK = "ok"

MethodSpec = collections.namedtuple("MethodSpec", ["name",
                                                   "mode",
                                                   "uses_mu",
                                                   "uses_kappa",
                                                   "uses_field"])

METHODS = collections.OrderedDict((spec.name, spec) for spec in [
    MethodSpec("Pass@1", None, False, False, False),
    MethodSpec("BoN", None, False, False, True),
    MethodSpec("SC", None, False, False, False),
    MethodSpec("WSC", None, False, False, True),
    MethodSpec("SelfCertainty", None, False, False, False),
    MethodSpec("DeepConf", None, False, False, False),
    MethodSpec("KT", None, False, True, False),
    MethodSpec("JC", ANSWER_LEVEL, True, True, True),
    MethodSpec("JC-exact", EXACT_J, True, False, True),
    MethodSpec("JC-J", J_ONLY, False, True, False),
    MethodSpec("JC-J-exact", J_ONLY, False, False, False),
    MethodSpec("JC-h", H_ONLY, False, False, True),
])

# Methods whose J_only interaction is the exact matrix rather than the estimate.
_EXACT_INTERACTION = ("JC-exact", "JC-J-exact")

TrialSpec = collections.namedtuple("TrialSpec", ["dataset",
                                                 "question_id",
                                                 "method",
                                                 "n_setting",
                                                 "mu",
                                                 "kappa",
                                                 "trial"])

ResultRow = collections.namedtuple("ResultRow", ["dataset",
                                                 "question_id",
                                                 "method",
                                                 "n_setting",
                                                 "N",
                                                 "mu",
                                                 "kappa",
                                                 "trial",
                                                 "answer",
                                                 "correct",
                                                 "judge_calls",
                                                 "cost_h",
                                                 "cost_J",
                                                 "cost_baseline",
                                                 "cost_usd",
                                                 "status"])

SummaryRow = collections.namedtuple("SummaryRow", ["dataset",
                                                   "method",
                                                   "n_setting",
                                                   "mu",
                                                   "kappa",
                                                   "trials",
                                                   "accuracy_mean",
                                                   "accuracy_std",
                                                   "judge_calls_mean",
                                                   "cost_mean",
                                                   "failures"])

Dataset = collections.namedtuple("Dataset", ["name", "questions", "pools"])


def subsample(pool, N, rng):
    """N traces drawn uniformly without replacement, kept in pool order."""
    if N < 1:
        raise ValueError("N must be at least 1, got {}".format(N))
    if N > len(pool):
        raise InsufficientTraces("Asked for {} traces from a pool of {}".format(N, len(pool)))
    chosen = np.sort(rng.choice(len(pool), size=N, replace=False))
    return [pool[i] for i in chosen]


def resolve_n(n_setting, pool_size):
    """Pool size for an N_grid entry; floats in (0, 1] are shares of the pool."""
    if isinstance(n_setting, float):
        return max(1, int(round(n_setting * pool_size)))
    return int(n_setting)


def format_axis(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "{:g}".format(value)
    return str(value)


def group_label(partition, k):
    """Correctness label of an answer group, None when its traces are unlabeled."""
    for i in partition.members(k):
        label = partition.pool[i].label
        if label is not None:
            return label
    return None


def kt_budget(config, kappa, partition):
    """Knockout budget: configured, or matched to the answer-level JC budget."""
    if config.kt_budget is not None:
        return config.kt_budget
    groups = partition.K if kappa is None else min(kappa, partition.K)
    return max(1, config.m * groups * (groups - 1))


def aggregate(question, partition, method, config, gateway, rng, mu=None, kappa=None):
    """Run one method on a partition. Returns (answer, EnergyReport or None)."""
    spec = METHODS[method]
    if method == "Pass@1":
        return pass_at_1(partition, rng), None
    if method == "SC":
        return majority_vote(partition), None
    if method == "SelfCertainty":
        return self_certainty_vote(partition, config.q), None
    if method == "DeepConf":
        return deepconf_vote(partition, config.window), None
    if method == "KT":
        knockout = KnockoutConfig(comparison_budget=kt_budget(config, kappa, partition),
                                  win_threshold=config.kt_win_threshold,
                                  bracket=config.kt_bracket)
        return knockout_tournament(question, partition, gateway, knockout, rng).answer, None

    pool = list(partition.pool)
    h = None
    if spec.uses_field:
        kind = JUDGE if method in ("BoN", "WSC") else config.field_kind
        h = build_field(kind, question, pool, gateway, config.q, config.window)
    if method == "BoN":
        return best_of_n(partition, h), None
    if method == "WSC":
        return weighted_vote(partition, h), None

    interaction = None
    if spec.mode != H_ONLY:
        if method in _EXACT_INTERACTION:
            preferences = build_preference_matrix(question, pool, gateway)
            interaction = build_interaction_exact(preferences, partition, config.tau)
        else:
            interaction = estimate_beta(question, partition,
                                        partition.K if kappa is None else kappa,
                                        config.m, gateway, rng, exhaustive=config.exhaustive)
    if mu is None:
        mu = 1.0 if spec.mode == H_ONLY else 0.0
    aggregation = AggregationConfig(mu=mu, mode=spec.mode, kappa=kappa, tau=config.tau,
                                    m=config.m, exhaustive=config.exhaustive)
    budget = None
    if gateway is not None:
        budget = {c: ledger_totals(gateway.ledger, c, live_only=False) for c in CATEGORIES}
    report = solve(partition, h, interaction, aggregation, budget)
    return report.answer, report


def _row(spec, N, answer, correct, ledger, status):
    costs = {c: ledger_totals(ledger, c, live_only=False) for c in CATEGORIES}
    total = ledger_totals(ledger, live_only=False)
    return ResultRow(dataset=spec.dataset,
                     question_id=spec.question_id,
                     method=spec.method,
                     n_setting=spec.n_setting,
                     N=N,
                     mu=spec.mu,
                     kappa=spec.kappa,
                     trial=spec.trial,
                     answer=answer,
                     correct=correct,
                     judge_calls=total.calls,
                     cost_h=costs[SIGNAL_H].cost_usd,
                     cost_J=costs[SIGNAL_J].cost_usd,
                     cost_baseline=costs[SIGNAL_BASELINE].cost_usd,
                     cost_usd=total.cost_usd,
                     status=status)


def run_trial(question, pool, spec, config, gateway, ledger=None):
    """Run one trial and return its result row.

    pool is the question's full pool; the trial subsamples it. Judge usage
    is metered into ledger. Package errors become the row's status.
    """
    ledger = ledger if ledger is not None else Ledger()
    trial_gateway = gateway.bind(ledger) if gateway is not None else None
    N = resolve_n(spec.n_setting, len(pool))
    try:
        sub_rng = np.random.default_rng(derive_seed(config.seed, spec.question_id, N, spec.trial))
        sub_pool = subsample(pool, N, sub_rng)
        rng = np.random.default_rng(derive_seed(config.seed, spec.question_id, spec.method, N,
                                                format_axis(spec.mu), format_axis(spec.kappa),
                                                spec.trial))
        partition = build_partition(sub_pool, config.normalizer)
        answer, _ = aggregate(question, partition, spec.method, config, trial_gateway, rng,
                              spec.mu, spec.kappa)
    except JointConsistencyError as e:
        status = type(e).__name__
        TRIAL_FAILED.log(trial=spec.trial, method=spec.method,
                         question_id=spec.question_id, error=e, status=status)
        return _row(spec, N, None, None, ledger, status)
    correct = group_label(partition, partition.group_index(answer))
    return _row(spec, N, answer, correct, ledger, STATUS_OK)


def _axis(values, used):
    return list(values) if used else [None]


def trial_specs(config, dataset, question_id):
    specs = []
    for method in config.methods:
        spec = METHODS[method]
        kappa_used = spec.uses_kappa and not (method == "KT" and config.kt_budget is not None)
        for n_setting in config.N_grid:
            for mu in _axis(config.mu_grid, spec.uses_mu):
                for kappa in _axis(config.kappa_grid, kappa_used):
                    for trial in range(config.trials):
                        specs.append(TrialSpec(dataset, question_id, method, n_setting,
                                               mu, kappa, trial))
    return specs


def row_sort_key(row):
    return (row.dataset,
            row.question_id,
            list(METHODS).index(row.method),
            float(row.n_setting),
            -1.0 if row.mu is None else row.mu,
            -1 if row.kappa is None else row.kappa,
            row.trial)


class ResultTable(object):
    """Trial rows of a sweep, in a fixed order, with the sweep ledger."""

    def __init__(self, rows, ledger=None):
        self.rows = sorted(rows, key=row_sort_key)
        self.ledger = ledger if ledger is not None else Ledger()

    def summary(self):
        """Mean and sample standard deviation of accuracy over trials, per cell.

        A trial's accuracy is the mean correctness of its labeled questions.
        Cells without labels report no accuracy.
        """
        cells = collections.OrderedDict()
        for row in self.rows:
            key = (row.dataset, row.method, row.n_setting, row.mu, row.kappa)
            cells.setdefault(key, collections.OrderedDict()).setdefault(row.trial, []).append(row)

        summary = []
        for (dataset, method, n_setting, mu, kappa), trials in cells.items():
            accuracies = []
            calls = []
            costs = []
            failures = 0
            for rows in trials.values():
                labeled = [r.correct for r in rows if r.correct is not None]
                if labeled:
                    accuracies.append(sum(labeled) / float(len(labeled)))
                calls.append(sum(r.judge_calls for r in rows))
                costs.append(sum((r.cost_usd for r in rows), Decimal(0)))
                failures += sum(1 for r in rows if r.status != STATUS_OK)
            if accuracies:
                mean = float(np.mean(accuracies))
                std = float(np.std(accuracies, ddof=1)) if len(accuracies) > 1 else 0.0
            else:
                mean = std = None
            summary.append(SummaryRow(dataset=dataset,
                                      method=method,
                                      n_setting=n_setting,
                                      mu=mu,
                                      kappa=kappa,
                                      trials=len(trials),
                                      accuracy_mean=mean,
                                      accuracy_std=std,
                                      judge_calls_mean=float(np.mean(calls)),
                                      cost_mean=sum(costs, Decimal(0)) / len(costs),
                                      failures=failures))
        return summary


RESULT_HEADERS = list(ResultRow._fields)
SUMMARY_HEADERS = list(SummaryRow._fields)
PARETO_HEADERS = ["dataset", "method", "n_setting", "mu", "kappa", "accuracy_mean", "cost_mean"]


def _format_float(value):
    return "" if value is None else "{:.6f}".format(value)


def result_entry(row):
    """A result row as CSV fields, in RESULT_HEADERS order."""
    return (row.dataset,
            row.question_id,
            row.method,
            format_axis(row.n_setting),
            row.N,
            format_axis(row.mu),
            format_axis(row.kappa),
            row.trial,
            "" if row.answer is None else row.answer,
            "" if row.correct is None else str(row.correct),
            row.judge_calls,
            str(row.cost_h),
            str(row.cost_J),
            str(row.cost_baseline),
            str(row.cost_usd),
            row.status)


def summary_entry(row):
    return (row.dataset,
            row.method,
            format_axis(row.n_setting),
            format_axis(row.mu),
            format_axis(row.kappa),
            row.trials,
            _format_float(row.accuracy_mean),
            _format_float(row.accuracy_std),
            "{:.2f}".format(row.judge_calls_mean),
            str(row.cost_mean),
            row.failures)


def _write_csv(path, headers, entries):
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(headers)
    for entry in entries:
        writer.writerow(entry)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(output.getvalue())


def write_results_csv(path, table):
    _log.info("Writing %d result rows to %s", len(table.rows), path)
    _write_csv(path, RESULT_HEADERS, [result_entry(r) for r in table.rows])


def write_summary_csv(path, summary):
    _write_csv(path, SUMMARY_HEADERS, [summary_entry(r) for r in summary])


def write_pareto_csv(path, summary):
    _write_csv(path, PARETO_HEADERS,
               [(r.dataset, r.method, format_axis(r.n_setting), format_axis(r.mu),
                 format_axis(r.kappa), _format_float(r.accuracy_mean), str(r.cost_mean))
                for r in summary])


def write_results_json(path, table, summary):
    def jsonable(row):
        obj = collections.OrderedDict(zip(row._fields, row))
        for key, value in obj.items():
            if isinstance(value, Decimal):
                obj[key] = str(value)
        return obj
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"rows": [jsonable(r) for r in table.rows],
                   "summary": [jsonable(r) for r in summary]}, f, indent=1, ensure_ascii=False)
        f.write("\n")


def ledger_report(ledger):
    """Ledger totals per category, live and attributed."""
    report = collections.OrderedDict()
    for name, live_only in (("live", True), ("attributed", False)):
        section = collections.OrderedDict()
        for category in CATEGORIES + (None,):
            totals = ledger_totals(ledger, category, live_only=live_only)
            section[category or "total"] = {"calls": totals.calls,
                                            "input_tokens": totals.input_tokens,
                                            "output_tokens": totals.output_tokens,
                                            "cost_usd": str(totals.cost_usd)}
        report[name] = section
    budget = ledger.pairwise_budget(live_only=False)
    report["pairwise"] = {"ordered_calls": budget.ordered_calls,
                          "unordered_pairs": budget.unordered_pairs}
    return report


def write_ledger_json(path, ledger):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(ledger_report(ledger), f, indent=2)
        f.write("\n")


def render_summary(summary, title="Sweep summary"):
    content = TextTableContent()
    content.begin_section(title)
    for dataset in sorted(set(r.dataset for r in summary)):
        content.begin_table(dataset,
                            ["method", "N", "mu", "kappa", "trials", "accuracy", "std",
                             "calls", "cost_usd"],
                            [False, True, True, True, True, True, True, True, True])
        for r in summary:
            if r.dataset != dataset:
                continue
            content.add_table_entry([r.method,
                                     format_axis(r.n_setting),
                                     format_axis(r.mu),
                                     format_axis(r.kappa),
                                     r.trials,
                                     _format_float(r.accuracy_mean),
                                     _format_float(r.accuracy_std),
                                     "{:.2f}".format(r.judge_calls_mean),
                                     "{:.6f}".format(r.cost_mean)])
        content.end_table()
    content.end_section()
    return content.text


def write_outputs(directory, table):
    if not os.path.isdir(directory):
        os.makedirs(directory)
    summary = table.summary()
    write_results_csv(os.path.join(directory, RESULTS_CSV), table)
    write_summary_csv(os.path.join(directory, SUMMARY_CSV), summary)
    write_results_json(os.path.join(directory, RESULTS_JSON), table, summary)
    write_pareto_csv(os.path.join(directory, PARETO_CSV), summary)
    write_ledger_json(os.path.join(directory, LEDGER_JSON), table.ledger)
    with open(os.path.join(directory, SUMMARY_TXT), "w", encoding="utf-8") as f:
        f.write(render_summary(summary))


def lowest_generators(pools, R):
    """Keep only traces of the R generators with the lowest labeled accuracy.

    Accuracy is measured over every loaded trace. Ties go to the generator id
    that sorts first; generators without labels are dropped.
    """
    correct = collections.Counter()
    total = collections.Counter()
    for pool in pools.values():
        for trace in pool:
            if trace.label is not None:
                total[trace.generator_id] += 1
                correct[trace.generator_id] += int(trace.label)
    ranked = sorted(total, key=lambda g: (correct[g] / float(total[g]), str(g)))
    keep = set(ranked[:R])
    _log.info("Keeping the %d weakest generators: %s", len(keep), sorted(keep, key=str))
    filtered = collections.OrderedDict()
    for question_id, pool in pools.items():
        kept = [t for t in pool if t.generator_id in keep]
        if kept:
            filtered[question_id] = kept
    return filtered


def load_datasets(config):
    """Datasets named by the config, plus the simulated worlds if any."""
    questions = load_questions(config.questions) if config.questions else None
    datasets = []
    worlds = None
    for path in config.pools:
        name = os.path.splitext(os.path.basename(path))[0]
        pools = group_pools(load_pool(path))
        if config.lowest_generators is not None:
            pools = lowest_generators(pools, config.lowest_generators)
        datasets.append(Dataset(name, questions, pools))
    if config.sim:
        # Imported here: the simulator is only needed for simulated sweeps.
        from .simulation import simulate
        sim = dict(config.sim)
        judge_noise = sim.pop("judge_noise", 0.0)
        worlds = simulate(**sim)
        pools = collections.OrderedDict((w.question.question_id, list(w.traces)) for w in worlds)
        sim_questions = {w.question.question_id: w.question for w in worlds}
        datasets.append(Dataset("sim-" + sim["preset"], sim_questions, pools))
        worlds = (worlds, judge_noise)
    return datasets, worlds


def build_gateway(config, worlds=None):
    """The sweep's judge gateway; the cache defaults to an in-memory one."""
    judge = config.judge
    if worlds is not None and judge.backend == "simulated":
        from .simulation import SimulatedJudgeBackend
        sim_worlds, judge_noise = worlds
        backend = SimulatedJudgeBackend(sim_worlds, backend_id=judge.backend_id,
                                        judge_noise=judge_noise, seed=config.seed)
    else:
        backend = make_backend(judge)
    return JudgeGateway(backend, judge, JudgeCache(judge.cache))


def needs_judge(config):
    for method in config.methods:
        spec = METHODS[method]
        if method in ("BoN", "WSC", "KT"):
            return True
        if spec.mode in (EXACT_J, ANSWER_LEVEL, J_ONLY):
            return True
        if spec.mode == H_ONLY and config.field_kind == JUDGE:
            return True
    return False


def run_sweep(config, gateway=None, datasets=None):
    """Run every trial a config describes and write its outputs.

    Returns the ResultTable. A trial that fails is recorded with its status
    and does not stop the sweep.
    """
    worlds = None
    if datasets is None:
        datasets, worlds = load_datasets(config)
    if gateway is None and needs_judge(config):
        gateway = build_gateway(config, worlds)

    tasks = []
    for dataset in datasets:
        for question_id, pool in dataset.pools.items():
            question = question_for_pool(pool, dataset.questions)
            for spec in trial_specs(config, dataset.name, question_id):
                tasks.append((question, pool, spec))
    _log.info("Running %d trials", len(tasks))

    def run(task):
        question, pool, spec = task
        ledger = Ledger()
        return run_trial(question, pool, spec, config, gateway, ledger), ledger

    if config.workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            outcomes = list(executor.map(run, tasks))
    else:
        outcomes = [run(task) for task in tasks]

    outcomes.sort(key=lambda outcome: row_sort_key(outcome[0]))
    sweep_ledger = Ledger()
    for _, ledger in outcomes:
        sweep_ledger.merge(ledger)
    table = ResultTable([row for row, _ in outcomes], sweep_ledger)
    if config.output_dir:
        write_outputs(config.output_dir, table)
    return table
