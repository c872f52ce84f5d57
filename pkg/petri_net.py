"""Safe Petri nets: structure, firing rule, safety check and goals."""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
import logging
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)

Marking = FrozenSet[str]


class NetError(ValueError):
    """Malformed net or reference to an unknown node."""

    def __init__(self, message: str, identifier: Optional[str] = None):
        super().__init__(message)
        self.identifier = identifier


class NotEnabledError(NetError):
    """A transition was fired at a marking that does not cover its preset."""


class UnsafeNetError(NetError):
    """An algorithm requiring 1-safety was given a net not verified safe."""


class SequenceError(ValueError):
    """A firing sequence handed to the oracle is infeasible or misses the goal."""


class CapExceededError(RuntimeError):
    """A resource cap from config.Limits was hit."""

    def __init__(self, cap: str, value: int, detail: str = ""):
        message = f"{cap} of {value} exceeded"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.cap = cap
        self.value = value


@dataclass(frozen=True)
class Net:
    """
    1-safe place/transition net.
    Declaration order of places and transitions is the canonical order
    used for every tie-break downstream.
    """
    places: Tuple[str, ...]
    transitions: Tuple[str, ...]
    pre: Mapping[str, FrozenSet[str]]
    post: Mapping[str, FrozenSet[str]]
    initial_marking: Marking = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, 'places', tuple(self.places))
        object.__setattr__(self, 'transitions', tuple(self.transitions))
        object.__setattr__(self, 'pre', {t: frozenset(self.pre.get(t, ())) for t in self.transitions})
        object.__setattr__(self, 'post', {t: frozenset(self.post.get(t, ())) for t in self.transitions})
        object.__setattr__(self, 'initial_marking', frozenset(self.initial_marking))
        self._validate()

    def _validate(self) -> None:
        seen = set()
        for p in self.places:
            if p in seen:
                raise NetError(f"duplicate place {p!r}", p)
            seen.add(p)
        seen = set()
        for t in self.transitions:
            if t in seen:
                raise NetError(f"duplicate transition {t!r}", t)
            seen.add(t)
        place_set = set(self.places)
        for t in self.transitions:
            if not self.pre[t]:
                raise NetError(f"transition {t!r} has an empty preset", t)
            for p in sorted(self.pre[t] | self.post[t]):
                if p not in place_set:
                    raise NetError(f"transition {t!r} refers to undeclared place {p!r}", p)
        for p in sorted(self.initial_marking):
            if p not in place_set:
                raise NetError(f"initial marking refers to undeclared place {p!r}", p)

    def __hash__(self):
        return hash((self.places, self.transitions,
                     tuple((self.pre[t], self.post[t]) for t in self.transitions),
                     self.initial_marking))

    def __eq__(self, other):
        if not isinstance(other, Net):
            return NotImplemented
        return (self.places == other.places and self.transitions == other.transitions
                and self.pre == other.pre and self.post == other.post
                and self.initial_marking == other.initial_marking)

    @cached_property
    def place_index(self) -> Dict[str, int]:
        return {p: i for i, p in enumerate(self.places)}

    @cached_property
    def transition_rank(self) -> Dict[str, int]:
        return {t: i for i, t in enumerate(self.transitions)}

    @cached_property
    def pre_matrix(self) -> np.ndarray:
        """Boolean incidence matrix, transitions x places."""
        return self._incidence(self.pre)

    @cached_property
    def post_matrix(self) -> np.ndarray:
        return self._incidence(self.post)

    def _incidence(self, arcs: Mapping[str, FrozenSet[str]]) -> np.ndarray:
        matrix = np.zeros((len(self.transitions), len(self.places)), dtype=bool)
        for i, t in enumerate(self.transitions):
            for p in arcs[t]:
                matrix[i, self.place_index[p]] = True
        return matrix

    @cached_property
    def _consumers(self) -> Dict[str, Tuple[str, ...]]:
        consumers: Dict[str, List[str]] = {p: [] for p in self.places}
        for t in self.transitions:
            for p in self.pre[t]:
                consumers[p].append(t)
        return {p: tuple(ts) for p, ts in consumers.items()}

    def consumers(self, place: str) -> Tuple[str, ...]:
        """Transitions with `place` in their preset, in canonical order."""
        return self._consumers[place]

    def marking_vector(self, marking: Iterable[str]) -> np.ndarray:
        vector = np.zeros(len(self.places), dtype=bool)
        for p in marking:
            vector[self.place_index[p]] = True
        return vector

    def sorted_places(self, places: Iterable[str]) -> List[str]:
        return sorted(places, key=self.place_index.__getitem__)

    def sorted_transitions(self, transitions: Iterable[str]) -> List[str]:
        return sorted(transitions, key=self.transition_rank.__getitem__)


class GoalMode(Enum):
    EXACT = "exact"
    SUBSET = "subset"


@dataclass(slots=True, frozen=True)
class Goal:
    """Places to be marked together, either exactly or as a submarking."""
    places: FrozenSet[str]
    mode: GoalMode = GoalMode.SUBSET

    def __post_init__(self):
        object.__setattr__(self, 'places', frozenset(self.places))
        if not self.places:
            raise NetError("goal must name at least one place")

    def check_against(self, net: Net) -> 'Goal':
        for p in sorted(self.places):
            if p not in net.place_index:
                raise NetError(f"goal refers to undeclared place {p!r}", p)
        return self

    def __str__(self):
        return f"{self.mode.value} {{{', '.join(sorted(self.places))}}}"


def _check_transition(net: Net, t: str) -> None:
    if t not in net.transition_rank:
        raise NetError(f"unknown transition {t!r}", t)


def enabled(net: Net, m: Marking, t: str) -> bool:
    _check_transition(net, t)
    return net.pre[t] <= m


def fire(net: Net, m: Marking, t: str) -> Marking:
    """Successor marking (m minus pre(t)) plus post(t)."""
    if not enabled(net, m, t):
        raise NotEnabledError(f"transition {t!r} is not enabled at {{{', '.join(net.sorted_places(m))}}}", t)
    return (m - net.pre[t]) | net.post[t]


def violates_safety(net: Net, m: Marking, t: str) -> bool:
    """True iff firing t at m would put a second token on some place."""
    return bool((net.post[t] - net.pre[t]) & m)


def replay(net: Net, sequence: Sequence[str], start: Optional[Marking] = None) -> List[Marking]:
    """Markings visited by `sequence`, start included."""
    m = net.initial_marking if start is None else frozenset(start)
    visited = [m]
    for t in sequence:
        m = fire(net, m, t)
        visited.append(m)
    return visited


def is_fireable(net: Net, sequence: Sequence[str], start: Optional[Marking] = None) -> bool:
    try:
        replay(net, sequence, start)
    except NotEnabledError:
        return False
    return True


def goal_holds(goal: Goal, m: Marking) -> bool:
    if goal.mode is GoalMode.EXACT:
        return m == goal.places
    return goal.places <= m


def restrict(net: Net, removed: Iterable[str]) -> Net:
    """The net without `removed` transitions; places and M0 unchanged."""
    removed = frozenset(removed)
    for t in sorted(removed):
        _check_transition(net, t)
    if not removed:
        return net
    kept = tuple(t for t in net.transitions if t not in removed)
    return Net(
        places=net.places,
        transitions=kept,
        pre={t: net.pre[t] for t in kept},
        post={t: net.post[t] for t in kept},
        initial_marking=net.initial_marking,
    )


class SafetyVerdict(Enum):
    SAFE = "safe"
    UNSAFE = "unsafe"
    BOUND_EXCEEDED = "bound-exceeded"


@dataclass(slots=True)
class SafetyReport:
    verdict: SafetyVerdict
    markings: FrozenSet[Marking]
    witness: Optional[Tuple[str, ...]] = None

    @property
    def is_safe(self) -> bool:
        return self.verdict is SafetyVerdict.SAFE


def check_safe(net: Net, state_bound: int = 1_000_000) -> SafetyReport:
    """
    Breadth-first exploration of the reachable markings.
    Stops at the first firing that would double-mark a place and returns
    the firing sequence leading to it as witness.
    """
    parent: Dict[Marking, Optional[Tuple[Marking, str]]] = {net.initial_marking: None}
    queue = deque([net.initial_marking])

    def path_to(m: Marking) -> List[str]:
        steps = []
        while parent[m] is not None:
            m, t = parent[m]
            steps.append(t)
        return steps[::-1]

    while queue:
        m = queue.popleft()
        for t in net.transitions:
            if not net.pre[t] <= m:
                continue
            if violates_safety(net, m, t):
                witness = tuple(path_to(m) + [t])
                log.debug("unsafe firing of %s after %s", t, witness[:-1])
                return SafetyReport(SafetyVerdict.UNSAFE, frozenset(parent), witness)
            succ = (m - net.pre[t]) | net.post[t]
            if succ not in parent:
                if len(parent) >= state_bound:
                    return SafetyReport(SafetyVerdict.BOUND_EXCEEDED, frozenset(parent))
                parent[succ] = (m, t)
                queue.append(succ)
    return SafetyReport(SafetyVerdict.SAFE, frozenset(parent))


def reachability_graph(net: Net, start: Optional[Marking] = None,
                       state_bound: int = 1_000_000) -> Dict[Marking, List[Tuple[str, Marking]]]:
    """Explicit state graph: marking -> [(transition, successor)] in canonical order."""
    start = net.initial_marking if start is None else frozenset(start)
    graph: Dict[Marking, List[Tuple[str, Marking]]] = {}
    queue = deque([start])
    graph[start] = []
    while queue:
        m = queue.popleft()
        edges = graph[m]
        for t in net.transitions:
            if net.pre[t] <= m:
                succ = (m - net.pre[t]) | net.post[t]
                edges.append((t, succ))
                if succ not in graph:
                    if len(graph) >= state_bound:
                        raise CapExceededError("state_bound", state_bound, "reachability graph")
                    graph[succ] = []
                    queue.append(succ)
    return graph


def reachable_markings(net: Net, start: Optional[Marking] = None,
                       state_bound: int = 1_000_000) -> FrozenSet[Marking]:
    return frozenset(reachability_graph(net, start, state_bound))
