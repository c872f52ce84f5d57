"""godunf - goal-driven unfolding of safe Petri nets."""
import argparse
import logging as log
import os
import sys
from typing import Optional, Sequence

import psutil

from config import Limits
from goal_driven import AltRule, Strategy, extract_goal_configurations, gd_prefix
from net_format import NetFormatError, load_net
from oracle import minimal_sequences
from petri_net import (CapExceededError, Goal, GoalMode, Net, NetError, SafetyVerdict,
                       SequenceError, check_safe)
from prefix_storage import PrefixDocument, emit_dot, save_prefix_document, save_prefix_hdf5
from reduction import ReducerKind
from unfolder import PrefixStats, complete_prefix, load_verified

EXIT_OK = 0
EXIT_UNREACHABLE = 1
EXIT_INPUT = 2
EXIT_CAP = 3


def _memory_mb() -> float:
    return psutil.Process(os.getpid()).memory_info().rss / 1024 / 1024


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('net', help="net file in the godunf text format")
    parser.add_argument('-v', '--verbose', action='store_true', help="increase output verbosity")
    parser.add_argument('--assume-safe', action='store_true',
                        help="skip the 1-safety check (results are meaningless on unsafe nets)")
    parser.add_argument('--state-bound', type=int, help="max markings explored by exhaustive searches")
    parser.add_argument('--alt-cap', type=int, help="max alternating configurations per base")
    parser.add_argument('--max-events', type=int, help="max events in a prefix")


def _add_goal(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--goal', help="comma-separated goal places (default: goal line of the net file)")
    parser.add_argument('--goal-mode', choices=[m.value for m in GoalMode], default=None,
                        help="exact marking or submarking (default: subset)")


def _add_gd(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--reducer', choices=[k.value for k in ReducerKind], default='oracle')
    parser.add_argument('--strategy', default='always', help="always, first:N or level:K")
    parser.add_argument('--alt-rule', choices=[r.value for r in AltRule], default='literal')


def _add_outputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--out', help="write the prefix document (JSON)")
    parser.add_argument('--dot', help="write the prefix as a DOT graph")
    parser.add_argument('--h5', help="write a compressed HDF5 archive of the prefix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='godunf',
                                     description='Goal-driven unfolding of safe Petri nets')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('check-safe', help="verify 1-safety by exhaustive exploration")
    _add_common(p)

    p = sub.add_parser('unfold', help="build the finite complete prefix")
    _add_common(p)
    _add_outputs(p)

    p = sub.add_parser('gd-unfold', help="build the goal-driven prefix")
    _add_common(p)
    _add_goal(p)
    _add_gd(p)
    _add_outputs(p)

    p = sub.add_parser('minimal-configs', help="goal configurations of the goal-driven prefix")
    _add_common(p)
    _add_goal(p)
    _add_gd(p)

    p = sub.add_parser('oracle', help="brute-force minimal firing sequences")
    _add_common(p)
    _add_goal(p)
    return parser


def _resolve_goal(args, net: Net, file_goal: Optional[Goal]) -> Goal:
    mode = GoalMode(args.goal_mode) if args.goal_mode else None
    if args.goal:
        places = frozenset(p.strip() for p in args.goal.split(',') if p.strip())
        goal = Goal(places, mode or GoalMode.SUBSET)
    elif file_goal is not None:
        goal = Goal(file_goal.places, mode or file_goal.mode)
    else:
        raise NetError("no goal given: use --goal or a goal line in the net file")
    return goal.check_against(net)


def _print_stats(stats: PrefixStats) -> None:
    stats.memory_mb = round(_memory_mb(), 1)
    print(f"non-cutoff events: {stats.non_cutoff_events}")
    print(f"cut-offs: {stats.cutoff_events}")
    print(f"conditions: {stats.conditions}")
    print(f"reducer calls: {stats.reducer_calls}")
    print(f"iterations: {stats.iterations}")
    print(f"wall time: {stats.wall_time:.3f} s")
    print(f"memory: {stats.memory_mb:.1f} MB")


def _write_outputs(args, prefix, stats: PrefixStats, goal: Optional[Goal]) -> None:
    # wall time and memory vary between runs; documents keep the counters only
    counters = stats.to_dict()
    counters.pop('wall_time')
    counters.pop('memory_mb')
    if args.out:
        save_prefix_document(args.out, PrefixDocument.from_prefix(prefix, counters, goal))
        log.info("prefix document written to %s", args.out)
    if args.dot:
        with open(args.dot, 'w') as f:
            f.write(emit_dot(prefix))
    if args.h5:
        save_prefix_hdf5(args.h5, prefix, counters, goal)


def _gd_options(args) -> dict:
    return dict(reducer=ReducerKind(args.reducer), strategy=Strategy.parse(args.strategy),
                alt_rule=AltRule(args.alt_rule))


def _run(args) -> int:
    limits = Limits.from_env().override(args.state_bound, args.alt_cap, args.max_events)
    net, file_goal = load_net(args.net)

    if args.command == 'check-safe':
        report = check_safe(net, limits.state_bound)
        print(f"{report.verdict.value} ({len(report.markings)} markings explored)")
        if report.witness:
            print("witness: " + " ".join(report.witness))
        if report.verdict is SafetyVerdict.BOUND_EXCEEDED:
            return EXIT_CAP
        return EXIT_OK if report.is_safe else EXIT_INPUT

    if args.command == 'unfold':
        prefix, stats = complete_prefix(net, limits=limits, assume_safe=args.assume_safe)
        _print_stats(stats)
        _write_outputs(args, prefix, stats, file_goal)
        return EXIT_OK

    goal = _resolve_goal(args, net, file_goal)

    if args.command == 'oracle':
        load_verified(net, args.assume_safe, limits.state_bound)
        sequences = minimal_sequences(net, None, goal, limits)
        for seq in sequences:
            print(" ".join(seq) if seq else "(empty)")
        return EXIT_OK if sequences else EXIT_UNREACHABLE

    prefix, stats = gd_prefix(net, goal, limits=limits, assume_safe=args.assume_safe,
                              **_gd_options(args))
    if args.command == 'gd-unfold':
        _print_stats(stats)
        _write_outputs(args, prefix, stats, goal)
        return EXIT_OK

    classes = extract_goal_configurations(prefix, net, goal, limits)
    for cls in classes:
        label = " ".join(cls.linearization) if cls.linearization else "(empty)"
        verdict = "minimal" if cls.minimal else "not minimal"
        where = "in prefix" if cls.in_prefix else "via cut-off"
        print(f"{label}  [{verdict}, {where}]")
        if cls.witness:
            print(f"  cycling witness: {' '.join(cls.witness)}")
    return EXIT_OK if classes else EXIT_UNREACHABLE


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one godunf command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT

    if args.verbose:
        log.basicConfig(format="%(message)s", level=log.DEBUG)
    else:
        log.basicConfig(format="%(message)s")

    try:
        return _run(args)
    except CapExceededError as err:
        print(f"godunf: {err}", file=sys.stderr)
        return EXIT_CAP
    except (NetFormatError, NetError, SequenceError, ValueError, OSError) as err:
        print(f"godunf: {err}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
