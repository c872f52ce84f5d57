from pathlib import Path

import numpy as np
import pytest

from net_format import load_net
from net_generator import random_safe_net
from occurrence import (Configuration, Prefix, causally_related, configurations, cut,
                        extensions_of, in_conflict, is_configuration, linearize, mark,
                        seq_to_configuration, transitions_of, validate_prefix)
from petri_net import NotEnabledError, SequenceError, replay
from unfolder import complete_prefix

DATA = Path(__file__).parent / "data"


def fig2_prefix():
    net, _ = load_net(DATA / "fig2.net")
    prefix, _ = complete_prefix(net)
    return prefix


def single_event(prefix, sequence):
    """The event reached by the last transition of `sequence`."""
    conf = seq_to_configuration(prefix, sequence)
    last = [eid for eid in conf.events
            if prefix.events[eid].transition == sequence[-1]
            and len(prefix.events[eid].local_configuration) == len(conf.events)]
    assert len(last) == 1
    return last[0]


def test_relations_on_fig2():
    prefix = fig2_prefix()
    a = single_event(prefix, ['a'])
    a2 = single_event(prefix, ["a'"])
    b = single_event(prefix, ['a', 'b'])
    c = single_event(prefix, ['a', 'c'])

    assert causally_related(prefix, a, b)
    assert causally_related(prefix, b, a)
    assert causally_related(prefix, a, a)
    assert not causally_related(prefix, a, a2)

    assert in_conflict(prefix, a, a2)
    assert in_conflict(prefix, b, c)
    assert in_conflict(prefix, b, a2)
    assert not in_conflict(prefix, a, a)
    assert not in_conflict(prefix, a, c)


def test_cut_and_mark():
    prefix = fig2_prefix()
    assert cut(prefix, Configuration()) == prefix.initial_conditions
    assert mark(prefix, set()) == {'p0'}
    assert mark(prefix, seq_to_configuration(prefix, ['a'])) == {'p1', 'p2'}
    assert mark(prefix, seq_to_configuration(prefix, ['a', 'b'])) == {'p1', 'p3'}
    assert mark(prefix, seq_to_configuration(prefix, ['a', 'c', 'b'])) == {'p3', 'p4'}

    b = single_event(prefix, ['a', 'b'])
    assert not is_configuration(prefix, {b})
    with pytest.raises(ValueError):
        cut(prefix, {b})


def test_cut_conditions_are_pairwise_concurrent():
    prefix = fig2_prefix()
    for conf in configurations(prefix, include_cutoffs=True):
        conditions = sorted(cut(prefix, conf))
        for i in conditions:
            for j in conditions:
                if i != j:
                    assert prefix.co(i, j)


def test_seq_to_configuration_on_scratch_prefix():
    net, _ = load_net(DATA / "fig2.net")
    scratch = Prefix(net)
    assert seq_to_configuration(scratch, []) == Configuration()

    short = seq_to_configuration(scratch, ['a', 'c', 'b'], extend=True)
    long = seq_to_configuration(scratch, ["a'", "b'", 'c', 'b'], extend=True)
    assert len(short) == 3
    assert len(long) == 4
    assert scratch.event_keys(short.events) != scratch.event_keys(long.events)
    # replaying again reuses the events already built
    size = len(scratch.events)
    assert seq_to_configuration(scratch, ['a', 'c', 'b'], extend=True) == short
    assert len(scratch.events) == size

    with pytest.raises(NotEnabledError):
        seq_to_configuration(scratch, ['b'], extend=True)


def test_seq_to_configuration_outside_prefix():
    prefix = fig2_prefix()
    # c after a' b' lies behind the cut-off b'(a')
    with pytest.raises(SequenceError):
        seq_to_configuration(prefix, ["a'", "b'", 'c'])


def test_interleavings_share_configuration():
    net, _ = load_net(DATA / "fig2_distractor.net")
    scratch = Prefix(net)
    first = seq_to_configuration(scratch, ['a', 'x', 'c'], extend=True)
    second = seq_to_configuration(scratch, ['x', 'a', 'c'], extend=True)
    third = seq_to_configuration(scratch, ['a', 'c', 'x'], extend=True)
    assert first == second == third


def test_extensions_of():
    triv, _ = load_net(DATA / "triv.net")
    scratch = Prefix(triv)
    assert extensions_of(scratch, set()) == {('t', scratch.initial_conditions)}

    prefix = fig2_prefix()
    after_a = extensions_of(prefix, seq_to_configuration(prefix, ['a']))
    assert sorted(t for t, _ in after_a) == ['b', 'c']
    after_ab = extensions_of(prefix, seq_to_configuration(prefix, ['a', 'b']))
    assert [t for t, _ in after_ab] == ["b'"]


def test_linearize_and_replay_agree_with_mark():
    prefix = fig2_prefix()
    for conf in configurations(prefix, include_cutoffs=True):
        order = linearize(prefix, conf)
        assert sorted(order) == sorted(conf.events)
        visited = replay(prefix.net, transitions_of(prefix, order))
        assert visited[-1] == mark(prefix, conf)


def test_configurations_skip_cutoffs():
    prefix = fig2_prefix()
    plain = list(configurations(prefix))
    assert len(plain) == 5
    assert all(not prefix.events[e].cutoff for conf in plain for e in conf.events)
    assert len(list(configurations(prefix, include_cutoffs=True))) > len(plain)


def test_local_configuration_and_depth():
    prefix = fig2_prefix()
    b = single_event(prefix, ['a', 'c', 'b'])
    event = prefix.events[b]
    assert event.depth == 3
    assert sorted(transitions_of(prefix, event.causal_past)) == ['a', 'c']
    assert event.mark == {'p3', 'p4'}
    assert mark(prefix, event.local_configuration) == event.mark


def test_add_event_checks_preset():
    net, _ = load_net(DATA / "fig2.net")
    prefix = Prefix(net)
    (p0,) = prefix.initial_conditions
    with pytest.raises(ValueError):
        prefix.add_event('b', [p0])
    prefix.add_event('a', [p0])
    with pytest.raises(ValueError):
        prefix.add_event('a', [p0])


def test_validate_prefix():
    assert validate_prefix(fig2_prefix()) == []

    net, _ = load_net(DATA / "fig2_distractor.net")
    distractor, _ = complete_prefix(net)
    assert validate_prefix(distractor) == []

    rng = np.random.default_rng(11)
    for _ in range(10):
        prefix, _ = complete_prefix(random_safe_net(rng))
        assert validate_prefix(prefix) == []
