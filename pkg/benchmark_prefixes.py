"""Prefix size, reduction count, time and memory: complete vs goal-driven prefixes."""

import argparse
import gc
import os
import time
from pathlib import Path

import psutil

from goal_driven import Strategy, gd_prefix
from net_format import load_net
from net_generator import DEFAULT_SEED, random_instances
from petri_net import CapExceededError
from reduction import ReducerKind
from unfolder import complete_prefix

DATA_DIR = Path(__file__).parent / "data"


def get_process_memory():
    """Get current memory usage in MB"""
    process = psutil.Process(os.getpid())
    return process.memory_info().rss / 1024 / 1024


def benchmark_instance(net, goal, reducer, strategies):
    """Complete prefix size, then one goal-driven prefix per strategy"""
    gc.collect()
    start_mem = get_process_memory()
    start_time = time.time()
    _, full_stats = complete_prefix(net)
    rows = [{
        'method': 'complete',
        'size': full_stats.non_cutoff_events,
        'cutoffs': full_stats.cutoff_events,
        'reductions': 0,
        'iterations': 1,
        'time': time.time() - start_time,
        'memory_mb': get_process_memory() - start_mem,
    }]

    for strategy in strategies:
        gc.collect()
        start_mem = get_process_memory()
        start_time = time.time()
        try:
            _, stats = gd_prefix(net, goal, reducer, strategy)
        except CapExceededError as err:
            rows.append({'method': f'gd {strategy}', 'error': str(err)})
            continue
        rows.append({
            'method': f'gd {strategy}',
            'size': stats.non_cutoff_events,
            'cutoffs': stats.cutoff_events,
            'reductions': stats.reducer_calls,
            'iterations': stats.iterations,
            'time': time.time() - start_time,
            'memory_mb': get_process_memory() - start_mem,
        })
    return rows


def print_rows(title, rows):
    print(f"\n{title}")
    print(f"{'method':<14}{'size':>8}{'cut-offs':>10}{'reductions':>12}{'rounds':>8}{'time (s)':>10}{'mem (MB)':>10}")
    for row in rows:
        if 'error' in row:
            print(f"{row['method']:<14}  {row['error']}")
            continue
        print(f"{row['method']:<14}{row['size']:>8}{row['cutoffs']:>10}{row['reductions']:>12}"
              f"{row['iterations']:>8}{row['time']:>10.3f}{row['memory_mb']:>10.1f}")


def run_benchmarks(seed=DEFAULT_SEED, count=10, reducer=ReducerKind.ORACLE):
    print("Running complete vs goal-driven prefix benchmarks")
    print("-" * 50)
    strategies = [Strategy.always(), Strategy.first(5), Strategy.level(2)]

    for name in ("fig2.net", "fig2_distractor.net"):
        net, goal = load_net(DATA_DIR / name)
        print_rows(f"{name} (goal {goal})", benchmark_instance(net, goal, reducer, strategies))

    for k, (net, goal) in enumerate(random_instances(count, seed)):
        title = f"random net {k} (seed {seed}): {len(net.places)} places, {len(net.transitions)} transitions, goal {goal}"
        print_rows(title, benchmark_instance(net, goal, reducer, strategies))


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Benchmark goal-driven prefixes")
    parser.add_argument('--seed', type=int, default=DEFAULT_SEED)
    parser.add_argument('--count', type=int, default=10, help="number of random nets")
    parser.add_argument('--reducer', choices=[k.value for k in ReducerKind], default='oracle')
    args = parser.parse_args()
    run_benchmarks(args.seed, args.count, ReducerKind(args.reducer))
