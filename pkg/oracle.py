"""
Brute-force reference semantics for goal reachability: minimal firing
sequences, cycling permutations and minimal configurations.
Desk-scale only; every other module is checked against it.
"""
from collections import Counter, deque
from dataclasses import dataclass
import logging
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from config import DEFAULT_LIMITS, Limits
from occurrence import EventKey, Prefix, linearize, seq_to_configuration, transitions_of
from petri_net import (CapExceededError, Goal, Marking, Net, NotEnabledError, SequenceError,
                       goal_holds, reachability_graph, replay)

log = logging.getLogger(__name__)


@dataclass(slots=True, frozen=True)
class SequenceVerdict:
    sequence: Tuple[str, ...]
    minimal: bool
    witness: Optional[Tuple[str, ...]] = None


def is_cycling(net: Net, sequence: Sequence[str], start: Optional[Marking] = None) -> bool:
    """True iff the run of `sequence` visits some marking twice."""
    try:
        visited = replay(net, sequence, start)
    except NotEnabledError as err:
        raise SequenceError(f"infeasible sequence: {err}") from err
    return len(set(visited)) < len(visited)


def is_minimal(net: Net, sequence: Sequence[str], goal: Goal,
               start: Optional[Marking] = None) -> SequenceVerdict:
    """
    Decide minimality over all feasible permutations of `sequence`.

    A permutation's run is a path in the lattice of sub-multisets of the
    sequence, and in a safe net the marking after a sub-multiset does not
    depend on the order it was fired in. The sequence is not minimal iff
    some permutation passes two comparable sub-multisets with the same
    marking or, for a submarking goal, reaches the goal before its end.
    """
    sequence = tuple(sequence)
    try:
        visited = replay(net, sequence, start)
    except NotEnabledError as err:
        raise SequenceError(f"infeasible sequence: {err}") from err
    if not goal_holds(goal, visited[-1]):
        raise SequenceError(f"sequence {' '.join(sequence)} does not reach the goal {goal}")

    letters = sorted(set(sequence), key=net.transition_rank.__getitem__)
    full = tuple(Counter(sequence)[t] for t in letters)
    origin = tuple(0 for _ in letters)
    start_marking = visited[0]

    # forward exploration of feasible sub-multisets
    markings: Dict[tuple, Marking] = {origin: start_marking}
    succ: Dict[tuple, List[Tuple[str, tuple]]] = {}
    queue = deque([origin])
    while queue:
        node = queue.popleft()
        m = markings[node]
        edges = []
        for i, t in enumerate(letters):
            if node[i] < full[i] and net.pre[t] <= m:
                nxt = node[:i] + (node[i] + 1,) + node[i + 1:]
                edges.append((t, nxt))
                if nxt not in markings:
                    markings[nxt] = (m - net.pre[t]) | net.post[t]
                    queue.append(nxt)
        succ[node] = edges

    pred: Dict[tuple, List[tuple]] = {node: [] for node in markings}
    for node, edges in succ.items():
        for _, nxt in edges:
            pred[nxt].append(node)
    good: Set[tuple] = {full}
    queue = deque([full])
    while queue:
        node = queue.popleft()
        for prev in pred[node]:
            if prev not in good:
                good.add(prev)
                queue.append(prev)

    def path(src: tuple, dst: tuple) -> List[str]:
        parent = {src: None}
        queue = deque([src])
        while queue:
            node = queue.popleft()
            if node == dst:
                break
            for t, nxt in succ[node]:
                if nxt in good and nxt not in parent:
                    parent[nxt] = (node, t)
                    queue.append(nxt)
        steps = []
        node = dst
        while parent[node] is not None:
            node, t = parent[node]
            steps.append(t)
        return steps[::-1]

    def verdict_through(x: tuple, y: tuple) -> SequenceVerdict:
        witness = tuple(path(origin, x) + path(x, y) + path(y, full))
        log.debug("%s is not minimal, witness %s", ' '.join(sequence), ' '.join(witness))
        return SequenceVerdict(sequence, False, witness)

    for x in sorted(good, key=sum):
        if x != full and goal_holds(goal, markings[x]):
            return verdict_through(x, x)
        seen = {x}
        queue = deque([x])
        while queue:
            node = queue.popleft()
            for _, nxt in succ[node]:
                if nxt in good and nxt not in seen:
                    if markings[nxt] == markings[x]:
                        return verdict_through(x, nxt)
                    seen.add(nxt)
                    queue.append(nxt)
    return SequenceVerdict(sequence, True)


def _goal_coreachable(graph: Dict[Marking, List[Tuple[str, Marking]]], goal: Goal) -> Set[Marking]:
    reverse: Dict[Marking, List[Marking]] = {m: [] for m in graph}
    for m, edges in graph.items():
        for _, nxt in edges:
            reverse[nxt].append(m)
    found = {m for m in graph if goal_holds(goal, m)}
    queue = deque(found)
    while queue:
        m = queue.popleft()
        for prev in reverse[m]:
            if prev not in found:
                found.add(prev)
                queue.append(prev)
    return found


def goal_reachable(net: Net, goal: Goal, start: Optional[Marking] = None,
                   limits: Limits = DEFAULT_LIMITS) -> bool:
    graph = reachability_graph(net, start, limits.state_bound)
    return any(goal_holds(goal, m) for m in graph)


def minimal_sequences(net: Net, m: Optional[Marking], goal: Goal,
                      limits: Limits = DEFAULT_LIMITS) -> List[Tuple[str, ...]]:
    """
    All minimal firing sequences from `m` to the goal.
    Depth-first search that never revisits a marking on the current path,
    never enters a marking from which the goal is unreachable and stops at
    the first goal marking; survivors are filtered with is_minimal.
    """
    start = net.initial_marking if m is None else frozenset(m)
    graph = reachability_graph(net, start, limits.state_bound)
    alive = _goal_coreachable(graph, goal)
    if start not in alive:
        return []

    candidates: List[Tuple[str, ...]] = []
    expanded = 0
    stack = [(start, (), frozenset([start]))]
    while stack:
        marking, seq, on_path = stack.pop()
        expanded += 1
        if expanded > limits.enumeration_cap:
            raise CapExceededError("enumeration_cap", limits.enumeration_cap, "minimal sequence search")
        if goal_holds(goal, marking):
            candidates.append(seq)
            continue
        for t, nxt in reversed(graph[marking]):
            if nxt in alive and nxt not in on_path:
                stack.append((nxt, seq + (t,), on_path | {nxt}))

    minimal = [seq for seq in candidates if is_minimal(net, seq, goal, start).minimal]
    rank = net.transition_rank
    minimal.sort(key=lambda seq: (len(seq), [rank[t] for t in seq]))
    return minimal


def useful_transitions(net: Net, m: Optional[Marking], goal: Goal,
                       limits: Limits = DEFAULT_LIMITS) -> FrozenSet[str]:
    return frozenset(t for seq in minimal_sequences(net, m, goal, limits) for t in seq)


@dataclass(slots=True)
class ConfigurationClass:
    """Firing sequences that share one configuration K(sequence) of the unfolding."""
    event_keys: FrozenSet[EventKey]
    linearization: Tuple[str, ...]
    sequences: Tuple[Tuple[str, ...], ...] = ()
    minimal: bool = True
    witness: Optional[Tuple[str, ...]] = None
    in_prefix: Optional[bool] = None

    def __len__(self):
        return len(self.event_keys)


def classify_sequences(net: Net, sequences: Iterable[Sequence[str]], goal: Goal,
                       scratch: Optional[Prefix] = None) -> List[ConfigurationClass]:
    """
    Group goal-reaching sequences from M0 by configuration and decide each
    group's minimality on its canonical linearization.
    """
    scratch = scratch or Prefix(net)
    groups: Dict[FrozenSet[EventKey], List[Tuple[str, ...]]] = {}
    linear: Dict[FrozenSet[EventKey], Tuple[str, ...]] = {}
    for seq in sequences:
        conf = seq_to_configuration(scratch, seq, extend=True)
        keys = scratch.event_keys(conf.events)
        if keys not in groups:
            groups[keys] = []
            linear[keys] = tuple(transitions_of(scratch, linearize(scratch, conf)))
        groups[keys].append(tuple(seq))

    classes = []
    for keys, seqs in groups.items():
        verdict = is_minimal(net, linear[keys], goal)
        classes.append(ConfigurationClass(event_keys=keys, linearization=linear[keys],
                                          sequences=tuple(sorted(set(seqs))),
                                          minimal=verdict.minimal, witness=verdict.witness))
    rank = net.transition_rank
    classes.sort(key=lambda cls: (len(cls.linearization), [rank[t] for t in cls.linearization]))
    return classes


def minimal_configurations(net: Net, goal: Goal,
                           limits: Limits = DEFAULT_LIMITS) -> List[ConfigurationClass]:
    return classify_sequences(net, minimal_sequences(net, None, goal, limits), goal)
