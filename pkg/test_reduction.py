from pathlib import Path

import pytest

from net_format import load_net
from net_generator import random_instances
from oracle import goal_reachable, minimal_sequences, useful_transitions
from petri_net import Goal, GoalMode, reachable_markings, restrict
from reduction import (MemoizedReducer, ReducerError, ReducerKind, exact_useless, flow_useless,
                       forward_fireable, goal_connected, make_reducer, null_useless, ug)

DATA = Path(__file__).parent / "data"


def fig2():
    return load_net(DATA / "fig2.net")


def test_null_reducer():
    net, goal = fig2()
    assert null_useless(net, net.initial_marking, goal) == frozenset()
    assert ug(null_useless, net, {'p1', 'p2'}, {'b'}, goal) == {'b'}


def test_flow_reducer_on_fig2():
    net, goal = fig2()
    assert flow_useless(net, net.initial_marking, goal) == frozenset()
    assert flow_useless(net, frozenset({'p1', 'p2'}), goal) == {'a', "a'"}
    assert forward_fireable(net, frozenset({'p3'})).tolist() == [False, False, True, True, False]

    triv, triv_goal = load_net(DATA / "triv.net")
    assert flow_useless(triv, frozenset({'p1'}), triv_goal) == {'t'}


def test_goal_connected():
    net, _ = fig2()
    assert goal_connected(net, Goal({'p4'})).tolist() == [True, True, True, True, True]
    # nothing produces p0
    assert goal_connected(net, Goal({'p0'})).tolist() == [False, False, False, False, False]


def test_flow_refuses_exact_goals():
    net, _ = fig2()
    exact = Goal({'p3', 'p4'}, GoalMode.EXACT)
    with pytest.raises(ReducerError):
        flow_useless(net, net.initial_marking, exact)
    with pytest.raises(ReducerError):
        make_reducer(ReducerKind.FLOW, exact)


def test_exact_reducer_on_fig2():
    net, goal = fig2()
    assert exact_useless(net, net.initial_marking, goal) == frozenset()
    assert exact_useless(net, frozenset({'p1', 'p2'}), goal) == {'a', "a'", "b'"}
    assert exact_useless(net, frozenset({'p1', 'p3'}), goal) == {'a', "a'"}
    assert exact_useless(net, frozenset({'p3', 'p4'}), goal) == set(net.transitions)


def test_ug_keeps_ignored_transitions():
    net, goal = fig2()
    reducer = make_reducer(ReducerKind.ORACLE, goal)
    assert ug(reducer, net, {'p1', 'p2'}, {"b'"}, goal) == {'a', "a'", "b'"}
    # without b' there is no way back from p3 to the goal
    assert ug(reducer, net, {'p1', 'p3'}, {'a', "a'", "b'"}, goal) == set(net.transitions)
    for ignored in ({'b'}, {'c'}, {'a', 'b'}):
        assert ignored <= ug(reducer, net, net.initial_marking, ignored, goal)


def _check_sound(net, goal, kind):
    reducer = make_reducer(kind, goal)
    for m in reachable_markings(net):
        useless = reducer(net, m, goal)
        assert not useless & useful_transitions(net, m, goal)


def test_reducers_are_sound_on_fig2():
    net, goal = fig2()
    for kind in ReducerKind:
        _check_sound(net, goal, kind)
    _check_sound(net, Goal({'p3', 'p4'}, GoalMode.EXACT), ReducerKind.ORACLE)


def test_reducers_are_sound_on_random_nets():
    for net, goal in random_instances(30, seed=3):
        _check_sound(net, goal, ReducerKind.FLOW)
        _check_sound(net, goal, ReducerKind.ORACLE)
        for m in reachable_markings(net):
            assert flow_useless(net, m, goal) <= exact_useless(net, m, goal)


def test_removing_useless_transitions_preserves_reachability():
    for net, goal in random_instances(30, seed=4):
        for kind in (ReducerKind.FLOW, ReducerKind.ORACLE):
            reducer = make_reducer(kind, goal)
            for m in reachable_markings(net):
                reduced = restrict(net, reducer(net, m, goal))
                assert goal_reachable(reduced, goal, m) == goal_reachable(net, goal, m)


def test_restricted_minimal_sequences_stay_minimal():
    for net, goal in random_instances(20, seed=9):
        useless = exact_useless(net, net.initial_marking, goal)
        for removed in (useless, frozenset(net.transitions[:1])):
            reduced = restrict(net, removed)
            assert set(minimal_sequences(reduced, None, goal)) <= set(minimal_sequences(net, None, goal))


def test_memoized_reducer_counts_calls():
    net, goal = fig2()
    memo = MemoizedReducer(make_reducer(ReducerKind.ORACLE, goal), net, goal)
    first = memo({'p1', 'p2'}, set())
    again = memo(frozenset({'p2', 'p1'}), frozenset())
    assert first == again == {'a', "a'", "b'"}
    assert memo.calls == 1
    memo({'p1', 'p2'}, {'c'})
    assert memo.calls == 2
    assert not memo.is_null
    assert MemoizedReducer(null_useless, net, goal).is_null
