from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from config import Limits
from net_format import load_net
from net_generator import random_safe_net
from occurrence import Prefix, configurations, extensions_of, mark, seq_to_configuration
from petri_net import CapExceededError, Net, UnsafeNetError, fire, reachable_markings
from unfolder import (AdequateOrder, Ordering, PrefixStats, Unfolder, complete_prefix,
                      load_verified, possible_extensions)

DATA = Path(__file__).parent / "data"


def fig2():
    net, _ = load_net(DATA / "fig2.net")
    return net


def test_triv_prefix():
    net, _ = load_net(DATA / "triv.net")
    prefix, stats = complete_prefix(net)
    assert stats.non_cutoff_events == 1
    assert stats.cutoff_events == 0
    assert stats.conditions == 2


def test_fig2_prefix_size():
    prefix, stats = complete_prefix(fig2())
    assert stats.non_cutoff_events == 4
    assert stats.cutoff_events == 3
    assert sorted(e.transition for e in prefix.events if not e.cutoff) == ['a', "a'", 'b', 'c']
    assert sorted(e.transition for e in prefix.events if e.cutoff) == ['b', "b'", "b'"]
    # c can only ever follow a, so one c event whatever the adequate order
    assert [e.transition for e in prefix.events].count('c') == 1


def test_fig2_prefix_is_complete():
    net = fig2()
    prefix, _ = complete_prefix(net)
    marks = {mark(prefix, conf) for conf in configurations(prefix)}
    assert marks == reachable_markings(net)


def test_order_refines_size():
    net = fig2()
    prefix, _ = complete_prefix(net)
    order = AdequateOrder.for_net(net)
    a = seq_to_configuration(prefix, ['a'])
    ab = seq_to_configuration(prefix, ['a', 'b'])
    a2 = seq_to_configuration(prefix, ["a'"])
    assert order.compare(prefix, a, ab) is Ordering.LESS
    assert order.compare(prefix, ab, a) is Ordering.GREATER
    assert order.compare(prefix, a2, ab) is Ordering.LESS
    assert order.compare(prefix, a, a2) is Ordering.LESS
    assert order.compare(prefix, ab, ab) is Ordering.EQUAL


def test_weights_steer_the_order():
    net = fig2()
    prefix, _ = complete_prefix(net)
    weighted = AdequateOrder.for_net(net, weights={"a'": 10})
    ab = seq_to_configuration(prefix, ['a', 'b'])
    a2 = seq_to_configuration(prefix, ["a'"])
    assert weighted.compare(prefix, ab, a2) is Ordering.LESS

    steered, stats = complete_prefix(net, order=weighted)
    cutoffs = sorted(e.transition for e in steered.events if e.cutoff)
    assert "a'" in cutoffs
    assert stats.non_cutoff_events == 4

    with pytest.raises(ValueError):
        AdequateOrder.for_net(net, weights={'zz': 2})
    with pytest.raises(ValueError):
        AdequateOrder.for_net(net, weights={'a': 0})


def test_order_refines_inclusion_on_random_nets():
    rng = np.random.default_rng(5)
    for _ in range(10):
        net = random_safe_net(rng)
        prefix, _ = complete_prefix(net)
        order = AdequateOrder.for_net(net)
        for e in prefix.events:
            local = e.local_configuration
            for p in e.causal_past:
                smaller = prefix.events[p].local_configuration
                assert order.key(prefix, smaller) < order.key(prefix, local)


def test_insertion_follows_the_order():
    prefix, _ = complete_prefix(fig2())
    keys = [e.local_config_key for e in prefix.events]
    assert keys == sorted(keys)


def test_possible_extensions_after_first_event():
    net = fig2()
    prefix = Prefix(net)
    (p0,) = prefix.initial_conditions
    initial = possible_extensions(prefix, prefix.initial_conditions)
    assert [ext.transition for ext in initial] == ['a', "a'"]

    event = prefix.add_event('a', [p0])
    found = possible_extensions(prefix, event.postset)
    assert [ext.transition for ext in found] == ['b', 'c']
    assert all(ext.depth == 2 for ext in found)
    assert possible_extensions(prefix, []) == []


def test_possible_extensions_skip_cutoff_outputs():
    net = fig2()
    prefix = Prefix(net)
    (p0,) = prefix.initial_conditions
    event = prefix.add_event("a'", [p0], cutoff=True)
    assert possible_extensions(prefix, event.postset) == []


def test_depth_bounded_unfolding_holds_every_shallow_extension():
    net = fig2()
    prefix = Unfolder(net, detect_cutoffs=False, depth_bound=4).run()
    assert not any(e.cutoff for e in prefix.events)
    assert max(e.depth for e in prefix.events) == 4
    for conf in configurations(prefix):
        depth = max((prefix.events[e].depth for e in conf.events), default=0)
        if depth >= 4:
            continue
        for t, preset in extensions_of(prefix, conf):
            assert prefix.find_event(t, preset) is not None
    pending = possible_extensions(prefix, range(len(prefix.conditions)))
    assert pending and all(ext.depth == 5 for ext in pending)


def test_max_events_cap():
    with pytest.raises(CapExceededError) as info:
        complete_prefix(fig2(), limits=Limits(max_events=2))
    assert info.value.cap == "max_events"


def test_unsafe_net_is_refused():
    net = Net(('p0', 'p1'), ('t',), {'t': {'p0'}}, {'t': {'p0', 'p1'}}, {'p0'})
    with pytest.raises(UnsafeNetError):
        complete_prefix(net)
    load_verified(fig2())
    load_verified(net, assume_safe=True)


def test_on_insert_sees_every_event():
    seen = []
    prefix = Unfolder(fig2(), on_insert=lambda p, e: seen.append(e.id)).run()
    assert seen == list(range(len(prefix.events)))


def test_stats_dict():
    prefix, stats = complete_prefix(fig2())
    data = stats.to_dict()
    assert data['non_cutoff_events'] == 4
    assert data['reducer_calls'] == 0
    assert data['iterations'] == 1
    assert 'memory_mb' in data and 'peak_memory_mb' not in data
    assert PrefixStats.of_prefix(prefix).cutoff_events == 3


def test_random_nets_complete_prefix():
    rng = np.random.default_rng(2024)
    for k in range(100):
        net = random_safe_net(rng)
        prefix, _ = complete_prefix(net)
        marks = [mark(prefix, conf) for conf in configurations(prefix)]
        assert set(marks) == reachable_markings(net), f"net {k}"
        # one non-cut-off event per marking
        non_cutoff_marks = [e.mark for e in prefix.events if not e.cutoff]
        assert len(non_cutoff_marks) == len(set(non_cutoff_marks))


def firing_runs(net, length, start=None):
    """(sequence, marking) for every firing sequence of at most `length` steps."""
    start = net.initial_marking if start is None else start
    frontier = [((), start)]
    runs = list(frontier)
    for _ in range(length):
        frontier = [(seq + (t,), fire(net, m, t))
                    for seq, m in frontier for t in net.transitions if net.pre[t] <= m]
        runs.extend(frontier)
    return runs


def test_order_preserved_by_extensions_on_random_nets():
    rng = np.random.default_rng(13)
    checked = 0
    for k in range(10):
        net = random_safe_net(rng)
        order = AdequateOrder.for_net(net)
        scratch = Prefix(net)
        by_mark = {}
        for seq, m in firing_runs(net, 3):
            conf = seq_to_configuration(scratch, seq, extend=True)
            by_mark.setdefault(m, {}).setdefault(conf.events, seq)
        for m, runs in by_mark.items():
            tails = [seq for seq, _ in firing_runs(net, 2, m) if seq]
            for first, second in combinations(list(runs.values())[:6], 2):
                before = order.compare(scratch, seq_to_configuration(scratch, first),
                                       seq_to_configuration(scratch, second))
                assert before is not Ordering.EQUAL
                for tail in tails:
                    after = order.compare(scratch, seq_to_configuration(scratch, first + tail, extend=True),
                                          seq_to_configuration(scratch, second + tail, extend=True))
                    assert after is before, f"net {k}: {first} vs {second} extended by {tail}"
                    checked += 1
    assert checked


def test_possible_extensions_match_recomputation_on_random_nets():
    rng = np.random.default_rng(17)

    def from_scratch(prefix):
        found = set()
        for conf in configurations(prefix):
            for t, preset in extensions_of(prefix, conf):
                if prefix.find_event(t, preset) is None:
                    found.add((t, preset))
        return found

    def check(prefix, event):
        incremental = {(ext.transition, ext.preset)
                       for ext in possible_extensions(prefix, range(len(prefix.conditions)))}
        assert incremental == from_scratch(prefix), f"after event {event.id}"

    for _ in range(8):
        net = random_safe_net(rng)
        prefix = Unfolder(net, on_insert=check).run()
        assert possible_extensions(prefix, range(len(prefix.conditions))) == []
