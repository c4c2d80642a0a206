# @file cli.py
#
# Copyright (C) jointconsistency contributors 2026
# Distributed under the terms of the COPYING file at the root of this
# repository.

"""Aggregate reasoning traces with joint consistency, and run experiment sweeps.

Subcommands:
  aggregate     choose an answer for each question in a pool file
  sweep         run a configured experiment sweep
  simulate      write simulated pools and their ground truth
  cache         maintain a judge cache file
  cost          report spend recorded in a judge cache

The judge API key is read from the environment variable named by the judge
config (JOINTCONSISTENCY_API_KEY by default).
"""
import sys
import json
import logging
import argparse
from argparse import RawTextHelpFormatter

import numpy as np

from . import __version__
from .config import METHOD_NAMES, load_experiment_config
from .errors import JointConsistencyError
from .harness import (METHODS,
                      aggregate,
                      build_gateway,
                      load_datasets,
                      needs_judge,
                      run_sweep,
                      render_summary)
from .interaction import dump_interaction
from .judge_cache import JudgeCache, compact, cache_cost_report
from .logging_config import configure_console_logging, configure_logging
from .simulation import simulate, write_sim_pools
from .traces import build_partition, question_for_pool
from .utils import derive_seed, map_verbosity_to_log_level

_log = logging.getLogger(__name__)


def _number_list(cast):
    def parse(text):
        values = []
        for item in text.split(","):
            item = item.strip()
            if cast is None:
                values.append(None if item in ("", "none", "all") else int(item))
            else:
                values.append(cast(item))
        return values
    return parse


def _n_value(item):
    return float(item) if "." in item else int(item)


def add_experiment_flags(parser):
    """Flags overriding ExperimentConfig and JudgeConfig fields."""
    group = parser.add_argument_group("experiment")
    group.add_argument("--config", help="JSON experiment config file.")
    group.add_argument("--questions", help="Questions JSONL file.")
    group.add_argument("--methods", type=lambda s: s.split(","),
                       help="Comma-separated methods from: " + ", ".join(METHOD_NAMES))
    group.add_argument("--N-grid", dest="N_grid", type=_number_list(_n_value),
                       help="Pool sizes; fractions below 1 are shares of each pool.")
    group.add_argument("--mu-grid", dest="mu_grid", type=_number_list(float))
    group.add_argument("--kappa-grid", dest="kappa_grid", type=_number_list(None),
                       help="Top-kappa values; 'all' keeps every answer group.")
    group.add_argument("--m", type=int, help="Samples per ordered answer-group pair.")
    group.add_argument("--exhaustive", action="store_true", default=None,
                       help="Query every cross pair when estimating answer-level preferences.")
    group.add_argument("--trials", type=int)
    group.add_argument("--seed", type=int)
    group.add_argument("--field", dest="field_kind",
                       choices=["uniform", "zero", "judge", "self_certainty", "deepconf"])
    group.add_argument("--q", type=float, help="Self-certainty Borda exponent.")
    group.add_argument("--window", type=int, help="DeepConf tail window in tokens.")
    group.add_argument("--tau", type=float, help="Preference power in the exact interaction.")
    group.add_argument("--kt-budget", dest="kt_budget", type=int)
    group.add_argument("--kt-win-threshold", dest="kt_win_threshold", type=float)
    group.add_argument("--kt-bracket", dest="kt_bracket", choices=["shuffle", "pool"])
    group.add_argument("--lowest-generators", dest="lowest_generators", type=int)
    group.add_argument("--normalizer", choices=["exact", "math", "casefold"])
    group.add_argument("--workers", type=int)
    group.add_argument("--output-dir", dest="output_dir")

    judge = parser.add_argument_group("judge")
    judge.add_argument("--judge-backend", dest="judge.backend",
                       choices=["http", "scripted", "simulated"])
    judge.add_argument("--judge-id", dest="judge.backend_id")
    judge.add_argument("--judge-model", dest="judge.model")
    judge.add_argument("--judge-endpoint", dest="judge.endpoint")
    judge.add_argument("--judge-replicates", dest="judge.replicates", type=int)
    judge.add_argument("--judge-temperature", dest="judge.temperature", type=float)
    judge.add_argument("--judge-reasoning-effort", dest="judge.reasoning_effort")
    judge.add_argument("--judge-max-tokens", dest="judge.max_tokens", type=int)
    judge.add_argument("--judge-price-input", dest="judge.price_per_million_input", type=float,
                       help="USD per million input tokens.")
    judge.add_argument("--judge-price-output", dest="judge.price_per_million_output", type=float,
                       help="USD per million output tokens.")
    judge.add_argument("--judge-auth-header", dest="judge.auth_header")
    judge.add_argument("--judge-api-key-env", dest="judge.api_key_env",
                       help="Environment variable holding the judge API key.")
    judge.add_argument("--judge-retry-limit", dest="judge.retry_limit", type=int)
    judge.add_argument("--judge-rps", dest="judge.requests_per_second", type=float)
    judge.add_argument("--judge-burst", dest="judge.burst", type=int)
    judge.add_argument("--judge-http-retries", dest="judge.http_retries", type=int)
    judge.add_argument("--judge-timeout", dest="judge.timeout", type=float,
                       help="HTTP timeout in seconds.")
    judge.add_argument("--judge-workers", dest="judge.max_workers", type=int)
    judge.add_argument("--judge-cache", dest="judge.cache")
    judge.add_argument("--judge-fixture", dest="judge.fixture")
    judge.add_argument("--judge-sidecar", dest="judge.sidecar")
    judge.add_argument("--complement", dest="judge.complement", action="store_true", default=None)
    judge.add_argument("--symmetrize", dest="judge.symmetrize", action="store_true", default=None)

    sim = parser.add_argument_group("simulation", "Any of these turns on simulated pools.")
    sim.add_argument("--sim-preset", dest="sim.preset", choices=["preference_dominant", "random"])
    sim.add_argument("--sim-count", dest="sim.count", type=int)
    sim.add_argument("--sim-K", dest="sim.K", type=int)
    sim.add_argument("--sim-noise-sigma", dest="sim.noise_sigma", type=float)
    sim.add_argument("--sim-judge-noise", dest="sim.judge_noise", type=float)
    sim.add_argument("--sim-seed", dest="sim.seed", type=int)


_NOT_OVERRIDES = ("command", "cache_command", "cost_command", "verbose", "log_dir", "config",
                  "pool", "method", "mu", "kappa", "question_id", "explain", "dump_interaction",
                  "func")


def overrides_from_args(args):
    return {key: value for key, value in vars(args).items()
            if key not in _NOT_OVERRIDES and value is not None}


def parse_args(argv=None):
    """Get the command-line arguments."""
    parser = argparse.ArgumentParser(prog="jointconsistency", description=__doc__,
                                     formatter_class=RawTextHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="Log more; repeat for debug output.")
    parser.add_argument("--log-dir", dest="log_dir",
                        help="Also write an hourly run log to this directory.")
    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True

    agg = subparsers.add_parser("aggregate", help="Choose an answer per question in a pool.")
    agg.add_argument("pool", help="Pool JSONL file.")
    agg.add_argument("--method", default="JC", choices=METHOD_NAMES)
    agg.add_argument("--mu", type=float, default=None)
    agg.add_argument("--kappa", type=int, default=None)
    agg.add_argument("--question-id", dest="question_id",
                     help="Only aggregate this question.")
    agg.add_argument("--explain", action="store_true",
                     help="Print the energy of every candidate answer.")
    agg.add_argument("--dump-interaction", dest="dump_interaction", metavar="PATH",
                     help="Write the interaction structure as JSON (one question only).")
    add_experiment_flags(agg)
    agg.set_defaults(func=cmd_aggregate)

    sweep = subparsers.add_parser("sweep", help="Run an experiment sweep.")
    sweep.add_argument("--pools", type=lambda s: s.split(","),
                       help="Comma-separated pool JSONL files.")
    add_experiment_flags(sweep)
    sweep.set_defaults(func=cmd_sweep)

    sim = subparsers.add_parser("simulate", help="Write simulated pools.")
    sim.add_argument("output_dir")
    sim.add_argument("--preset", default="preference_dominant",
                     choices=["preference_dominant", "random"])
    sim.add_argument("--count", type=int, default=10)
    sim.add_argument("--K", type=int, default=4)
    sim.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=cmd_simulate)

    cache = subparsers.add_parser("cache", help="Maintain a judge cache.")
    cache_commands = cache.add_subparsers(dest="cache_command")
    cache_commands.required = True
    compact_parser = cache_commands.add_parser("compact", help="Drop superseded records.")
    compact_parser.add_argument("path")
    compact_parser.set_defaults(func=cmd_cache_compact)

    cost = subparsers.add_parser("cost", help="Report judge spend.")
    cost_commands = cost.add_subparsers(dest="cost_command")
    cost_commands.required = True
    report_parser = cost_commands.add_parser("report", help="Spend recorded in a cache.")
    report_parser.add_argument("path")
    report_parser.set_defaults(func=cmd_cost_report)

    args = parser.parse_args(argv)
    _log.debug("Command-line arguments: %s", vars(args))
    return args


def cmd_aggregate(args, out):
    overrides = overrides_from_args(args)
    overrides["pools"] = [args.pool]
    overrides["methods"] = [args.method]
    config = load_experiment_config(args.config, overrides)
    datasets, worlds = load_datasets(config)
    dataset = datasets[0]
    pools = dataset.pools
    if args.question_id is not None:
        if args.question_id not in pools:
            raise JointConsistencyError("Question {} is not in {}".format(args.question_id, args.pool))
        pools = {args.question_id: pools[args.question_id]}
    if args.dump_interaction and len(pools) != 1:
        raise JointConsistencyError("--dump-interaction needs a single question")

    gateway = build_gateway(config, worlds) if needs_judge(config) else None
    spec = METHODS[args.method]
    mu = args.mu if args.mu is not None else (0.5 if spec.uses_mu else None)
    for question_id, pool in pools.items():
        question = question_for_pool(pool, dataset.questions)
        partition = build_partition(pool, config.normalizer)
        rng = np.random.default_rng(derive_seed(config.seed, question_id, args.method))
        answer, report = aggregate(question, partition, args.method, config, gateway, rng,
                                   mu, args.kappa)
        if args.explain and report is not None:
            out.write(json.dumps({"question_id": question_id, "report": report.to_json()},
                                 indent=2, ensure_ascii=False))
            out.write("\n")
        else:
            out.write("{}\t{}\n".format(question_id, answer))
        if args.dump_interaction:
            if report is None or report.interaction is None:
                raise JointConsistencyError("Method {} has no interaction to dump".format(args.method))
            dump_interaction(args.dump_interaction, report.interaction, partition)
    return 0


def cmd_sweep(args, out):
    config = load_experiment_config(args.config, overrides_from_args(args))
    table = run_sweep(config)
    out.write(render_summary(table.summary()))
    return 0


def cmd_simulate(args, out):
    worlds = simulate(preset=args.preset, count=args.count, seed=args.seed, K=args.K,
                      noise_sigma=args.noise_sigma)
    paths = write_sim_pools(args.output_dir, worlds)
    for name in sorted(paths):
        out.write("{}\t{}\n".format(name, paths[name]))
    return 0


def cmd_cache_compact(args, out):
    lines, records = compact(args.path)
    out.write("Compacted {}: {} lines, {} records kept\n".format(args.path, lines, records))
    return 0


def cmd_cost_report(args, out):
    rows = cache_cost_report(JudgeCache(args.path))
    out.write("kind\tcalls\tinput_tokens\toutput_tokens\tcost_usd\n")
    for row in rows:
        out.write("{}\t{}\t{}\t{}\t{}\n".format(*row))
    return 0


def main(argv=None, out=None):
    """Main entry point for the script."""
    out = out or sys.stdout
    args = parse_args(argv)
    level = map_verbosity_to_log_level(args.verbose)
    configure_console_logging(level)
    if args.log_dir:
        configure_logging(level, args.log_dir, "jointconsistency")
    try:
        return args.func(args, out)
    except JointConsistencyError as e:
        _log.error("%s", e)
        sys.stderr.write("error: {}\n".format(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
