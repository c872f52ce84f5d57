"""
Goal-oriented model reduction: procedures returning transitions that
occur in no minimal firing sequence from a marking to the goal.
"""
from enum import Enum
from functools import partial
import logging
from typing import Callable, Dict, FrozenSet, Iterable, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from config import DEFAULT_LIMITS, Limits
from oracle import useful_transitions
from petri_net import Goal, GoalMode, Marking, Net, restrict

log = logging.getLogger(__name__)

Reducer = Callable[[Net, Marking, Goal], FrozenSet[str]]


class ReducerError(ValueError):
    """Reducer used outside the goals it is sound for."""


class ReducerKind(Enum):
    NULL = "null"
    FLOW = "flow"
    ORACLE = "oracle"


def null_useless(net: Net, m: Marking, goal: Goal) -> FrozenSet[str]:
    return frozenset()


def forward_fireable(net: Net, m: Marking) -> np.ndarray:
    """Boolean mask of transitions fireable in the token-monotone over-approximation."""
    pre, post = net.pre_matrix, net.post_matrix
    reached = net.marking_vector(m)
    fireable = np.zeros(len(net.transitions), dtype=bool)
    while True:
        now = ~np.any(pre & ~reached, axis=1)
        if np.array_equal(now, fireable):
            return fireable
        fireable = now
        reached = reached | np.any(post[fireable], axis=0)


def goal_connected(net: Net, goal: Goal) -> np.ndarray:
    """Boolean mask of transitions with a flow path to some goal place."""
    n_places, n_trans = len(net.places), len(net.transitions)
    if n_trans == 0:
        return np.zeros(0, dtype=bool)
    # reversed flow graph: nodes are places then transitions
    pre_t, pre_p = np.nonzero(net.pre_matrix)
    post_t, post_p = np.nonzero(net.post_matrix)
    rows = np.concatenate([pre_t + n_places, post_p])
    cols = np.concatenate([pre_p, post_t + n_places])
    size = n_places + n_trans
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
    reached = np.zeros(size, dtype=bool)
    for p in goal.places:
        order = breadth_first_order(graph, net.place_index[p], directed=True,
                                    return_predecessors=False)
        reached[order] = True
    return reached[n_places:]


def flow_useless(net: Net, m: Marking, goal: Goal) -> FrozenSet[str]:
    """
    Transitions that cannot fire from `m` or whose outputs never flow
    towards the goal. Sound for submarking goals only.
    """
    if goal.mode is not GoalMode.SUBSET:
        raise ReducerError("the flow reducer only supports subset goals")
    keep = forward_fireable(net, m) & goal_connected(net, goal)
    return frozenset(t for t, kept in zip(net.transitions, keep) if not kept)


def exact_useless(net: Net, m: Marking, goal: Goal, limits: Limits = DEFAULT_LIMITS) -> FrozenSet[str]:
    """Largest sound answer: everything outside the minimal sequences."""
    return frozenset(net.transitions) - useful_transitions(net, m, goal, limits)


def ug(reducer: Reducer, net: Net, m: Marking, ignored: Iterable[str], goal: Goal) -> FrozenSet[str]:
    """Reduce the net without `ignored` from `m`, keeping `ignored` in the answer."""
    ignored = frozenset(ignored)
    return reducer(restrict(net, ignored), frozenset(m), goal) | ignored


def make_reducer(kind: ReducerKind, goal: Goal, limits: Limits = DEFAULT_LIMITS) -> Reducer:
    if kind is ReducerKind.NULL:
        return null_useless
    if kind is ReducerKind.FLOW:
        if goal.mode is not GoalMode.SUBSET:
            raise ReducerError("the flow reducer only supports subset goals")
        return flow_useless
    return partial(exact_useless, limits=limits)


class MemoizedReducer:
    """
    Ug with a cache on (marking, ignored) for one prefix build.
    `calls` counts actual reducer invocations.
    """
    def __init__(self, reducer: Reducer, net: Net, goal: Goal):
        self.reducer = reducer
        self.net = net
        self.goal = goal
        self.calls = 0
        self._cache: Dict[Tuple[Marking, FrozenSet[str]], FrozenSet[str]] = {}

    @property
    def is_null(self) -> bool:
        return self.reducer is null_useless

    def __call__(self, m: Marking, ignored: Iterable[str]) -> FrozenSet[str]:
        key = (frozenset(m), frozenset(ignored))
        cached = self._cache.get(key)
        if cached is None:
            self.calls += 1
            cached = ug(self.reducer, self.net, key[0], key[1], self.goal)
            self._cache[key] = cached
            log.debug("reduction at {%s} ignoring %d: %d useless",
                      ', '.join(self.net.sorted_places(key[0])), len(key[1]), len(cached))
        return cached
