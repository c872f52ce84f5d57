"""
Branching processes of a safe net: conditions, events, causality,
conflict, concurrency, configurations, cuts and markings.
"""
from collections import defaultdict
from dataclasses import dataclass
import heapq
import logging
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple

import numpy as np

from petri_net import Marking, Net, NotEnabledError, SequenceError, CapExceededError

log = logging.getLogger(__name__)

# Canonical coordinates in the full unfolding, stable across prefixes:
#   condition key = (place, parent event key or None)
#   event key     = (transition, frozenset of preset condition keys)
ConditionKey = tuple
EventKey = tuple


@dataclass(slots=True)
class Condition:
    id: int
    place: str
    parent: Optional[int]
    key: ConditionKey

    @property
    def is_initial(self) -> bool:
        return self.parent is None


@dataclass(slots=True)
class Event:
    """
    Event of a branching process.
    causal_past holds the strict past, so the local configuration is
    causal_past plus the event itself.
    """
    id: int
    transition: str
    preset: FrozenSet[int]
    postset: Tuple[int, ...]
    causal_past: FrozenSet[int]
    depth: int
    key: EventKey
    mark: Marking
    cut: FrozenSet[int]
    cutoff: bool = False
    local_config_key: tuple = ()
    useless: FrozenSet[str] = frozenset()

    @property
    def local_configuration(self) -> FrozenSet[int]:
        return self.causal_past | {self.id}


@dataclass(slots=True, frozen=True)
class Configuration:
    events: FrozenSet[int] = frozenset()

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(sorted(self.events))


class Prefix:
    """
    Finite branching process under construction.
    Single writer while it is built; read-only afterwards.
    """
    def __init__(self, net: Net):
        self.net = net
        self.conditions: List[Condition] = []
        self.events: List[Event] = []
        self.by_place: Dict[str, List[int]] = defaultdict(list)
        self.delta: Dict[ConditionKey, FrozenSet[str]] = {}
        self._co = np.zeros((16, 16), dtype=bool)
        self._event_by_key: Dict[EventKey, int] = {}
        self._events_by_mark: Dict[Marking, List[int]] = defaultdict(list)

        initial = [self._new_condition(p, None) for p in net.places if p in net.initial_marking]
        for i in initial:
            for j in initial:
                if i != j:
                    self._co[i, j] = True
        self.initial_conditions: FrozenSet[int] = frozenset(initial)

    # -- structure ---------------------------------------------------------

    def _grow(self, needed: int) -> None:
        size = self._co.shape[0]
        if needed <= size:
            return
        while size < needed:
            size *= 2
        grown = np.zeros((size, size), dtype=bool)
        old = self._co.shape[0]
        grown[:old, :old] = self._co
        self._co = grown

    def _new_condition(self, place: str, parent: Optional[int]) -> int:
        cid = len(self.conditions)
        parent_key = None if parent is None else self.events[parent].key
        key = (place, parent_key)
        self._grow(cid + 1)
        self.conditions.append(Condition(cid, place, parent, key))
        self.by_place[place].append(cid)
        return cid

    def add_event(self, transition: str, preset: Iterable[int], cutoff: bool = False,
                  local_config_key: tuple = ()) -> Event:
        """
        Append the event <preset, transition> with one fresh condition per
        output place. The preset must be a co-set labelled by pre(transition).
        """
        preset = frozenset(preset)
        if {self.conditions[c].place for c in preset} != self.net.pre[transition] \
                or len(preset) != len(self.net.pre[transition]):
            raise ValueError(f"preset of {transition!r} does not match its input places")
        key = self.event_key(transition, preset)
        if key in self._event_by_key:
            raise ValueError(f"event {transition!r} on {sorted(preset)} already present")

        past: Set[int] = set()
        depth = 0
        for c in preset:
            parent = self.conditions[c].parent
            if parent is not None:
                past.add(parent)
                past |= self.events[parent].causal_past
                depth = max(depth, self.events[parent].depth)

        eid = len(self.events)
        event = Event(id=eid, transition=transition, preset=preset, postset=(),
                      causal_past=frozenset(past), depth=depth + 1, key=key,
                      mark=frozenset(), cut=frozenset(), cutoff=cutoff,
                      local_config_key=local_config_key)
        self.events.append(event)
        self._event_by_key[key] = eid

        rows = sorted(preset)
        co_row = np.logical_and.reduce(self._co[rows, :len(self.conditions)], axis=0)
        postset = tuple(self._new_condition(p, eid)
                        for p in self.net.places if p in self.net.post[transition])
        for c in postset:
            self._co[c, :len(co_row)] = co_row
            self._co[:len(co_row), c] = co_row
        for c in postset:
            for d in postset:
                if c != d:
                    self._co[c, d] = True
        event.postset = postset
        event.cut = self.cut_of(event.local_configuration)
        event.mark = frozenset(self.conditions[c].place for c in event.cut)
        self._events_by_mark[event.mark].append(eid)
        return event

    # -- lookups -----------------------------------------------------------

    def event_key(self, transition: str, preset: Iterable[int]) -> EventKey:
        return (transition, frozenset(self.conditions[c].key for c in preset))

    def find_event(self, transition: str, preset: Iterable[int]) -> Optional[Event]:
        eid = self._event_by_key.get(self.event_key(transition, preset))
        return None if eid is None else self.events[eid]

    def event_by_key(self, key: EventKey) -> Optional[Event]:
        eid = self._event_by_key.get(key)
        return None if eid is None else self.events[eid]

    def has_event_key(self, key: EventKey) -> bool:
        return key in self._event_by_key

    def events_with_mark(self, m: Marking) -> List[int]:
        return list(self._events_by_mark.get(frozenset(m), ()))

    def co(self, c1: int, c2: int) -> bool:
        return bool(self._co[c1, c2])

    def co_row(self, c: int) -> np.ndarray:
        return self._co[c, :len(self.conditions)]

    @property
    def coff(self) -> FrozenSet[int]:
        return frozenset(e.id for e in self.events if e.cutoff)

    def cut_of(self, events: Iterable[int]) -> FrozenSet[int]:
        """(C0 plus postsets) minus presets, without validity checks."""
        produced = set(self.initial_conditions)
        consumed = set()
        for eid in events:
            e = self.events[eid]
            produced.update(e.postset)
            consumed.update(e.preset)
        return frozenset(produced - consumed)

    def delta_of(self, cid: int) -> FrozenSet[str]:
        return self.delta.get(self.conditions[cid].key, frozenset())

    def event_keys(self, events: Iterable[int]) -> FrozenSet[EventKey]:
        return frozenset(self.events[e].key for e in events)

    def __len__(self):
        return len(self.events)


# -- relations -------------------------------------------------------------

def causally_related(prefix: Prefix, e1: int, e2: int) -> bool:
    return (e1 == e2 or e1 in prefix.events[e2].causal_past
            or e2 in prefix.events[e1].causal_past)


def _locals_conflict(prefix: Prefix, local1: Iterable[int], local2: Iterable[int]) -> bool:
    consumer = {}
    for u in local1:
        for c in prefix.events[u].preset:
            consumer[c] = u
    for v in local2:
        for c in prefix.events[v].preset:
            if c in consumer and consumer[c] != v:
                return True
    return False


def in_conflict(prefix: Prefix, e1: int, e2: int) -> bool:
    return _locals_conflict(prefix, prefix.events[e1].local_configuration,
                            prefix.events[e2].local_configuration)


def is_configuration(prefix: Prefix, events: Iterable[int]) -> bool:
    events = frozenset(events)
    consumed = set()
    for eid in events:
        e = prefix.events[eid]
        if not e.causal_past <= events:
            return False
        if consumed & e.preset:
            return False
        consumed |= e.preset
    return True


def _as_events(conf) -> FrozenSet[int]:
    return conf.events if isinstance(conf, Configuration) else frozenset(conf)


def cut(prefix: Prefix, conf) -> FrozenSet[int]:
    events = _as_events(conf)
    if not is_configuration(prefix, events):
        raise ValueError(f"not a configuration: {sorted(events)}")
    return prefix.cut_of(events)


def mark(prefix: Prefix, conf) -> Marking:
    return frozenset(prefix.conditions[c].place for c in cut(prefix, conf))


def seq_to_configuration(prefix: Prefix, sequence: Iterable[str], extend: bool = False) -> Configuration:
    """
    K(sequence): replay the transitions, picking at each step the event
    whose preset lies in the current cut. With `extend`, missing events are
    appended to the prefix, which then plays the role of an unfolding builder.
    """
    net = prefix.net
    current = set(prefix.initial_conditions)
    chosen: Set[int] = set()
    for t in sequence:
        by_place = {prefix.conditions[c].place: c for c in current}
        if not net.pre[t] <= by_place.keys():
            raise NotEnabledError(f"transition {t!r} is not enabled after {len(chosen)} steps", t)
        preset = frozenset(by_place[p] for p in net.pre[t])
        event = prefix.find_event(t, preset)
        if event is None:
            if not extend:
                raise SequenceError(f"transition {t!r} at step {len(chosen) + 1} is not represented in the prefix")
            event = prefix.add_event(t, preset)
        chosen.add(event.id)
        current -= preset
        current.update(event.postset)
    return Configuration(frozenset(chosen))


def extensions_of(prefix: Prefix, conf) -> Set[Tuple[str, FrozenSet[int]]]:
    """All (t, co-set) pairs enabled at cut(conf)."""
    by_place = {prefix.conditions[c].place: c for c in cut(prefix, conf)}
    found = set()
    for t in prefix.net.transitions:
        if prefix.net.pre[t] <= by_place.keys():
            found.add((t, frozenset(by_place[p] for p in prefix.net.pre[t])))
    return found


def configurations(prefix: Prefix, include_cutoffs: bool = False,
                   cap: int = 100_000) -> Iterator[Configuration]:
    """
    Every configuration of the prefix, smallest first.
    Without include_cutoffs, configurations containing a cut-off are skipped.
    """
    seen = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for events in frontier:
            yield Configuration(events)
            current = prefix.cut_of(events)
            for e in prefix.events:
                if e.id in events or (e.cutoff and not include_cutoffs):
                    continue
                if e.preset <= current:
                    grown = events | {e.id}
                    if grown not in seen:
                        if len(seen) >= cap:
                            raise CapExceededError("enumeration_cap", cap, "configurations of the prefix")
                        seen.add(grown)
                        nxt.append(grown)
        frontier = nxt


def linearize(prefix: Prefix, conf) -> List[int]:
    """Topological order of the events, smallest transition rank first."""
    events = _as_events(conf)
    rank = prefix.net.transition_rank
    current = set(prefix.initial_conditions)
    pending = set(events)
    heap = []
    order = []

    def push_enabled():
        for eid in list(pending):
            e = prefix.events[eid]
            if e.preset <= current:
                pending.discard(eid)
                heapq.heappush(heap, (rank[e.transition], eid))

    push_enabled()
    while heap:
        _, eid = heapq.heappop(heap)
        e = prefix.events[eid]
        order.append(eid)
        current -= e.preset
        current.update(e.postset)
        push_enabled()
    if pending:
        raise ValueError(f"not a configuration: {sorted(events)}")
    return order


def transitions_of(prefix: Prefix, event_ids: Iterable[int]) -> List[str]:
    return [prefix.events[e].transition for e in event_ids]


def validate_prefix(prefix: Prefix) -> List[str]:
    """Structural problems of the prefix; empty when it is a valid occurrence net."""
    problems = []
    for e in prefix.events:
        if e.id in e.causal_past:
            problems.append(f"event {e.id} causally precedes itself")
        if not is_configuration(prefix, e.local_configuration):
            problems.append(f"event {e.id} is in self-conflict")
        places = [prefix.conditions[c].place for c in e.postset]
        if sorted(places) != sorted(prefix.net.post[e.transition]):
            problems.append(f"event {e.id} postset does not match post({e.transition})")
    for c in prefix.conditions:
        if (c.parent is None) != (c.id in prefix.initial_conditions):
            problems.append(f"condition {c.id} has inconsistent parent")

    def past_of(cid: int) -> FrozenSet[int]:
        parent = prefix.conditions[cid].parent
        return frozenset() if parent is None else prefix.events[parent].local_configuration

    consumed_before = {}
    for c in prefix.conditions:
        local = past_of(c.id)
        consumed_before[c.id] = set().union(*(prefix.events[e].preset for e in local)) if local else set()
    n = len(prefix.conditions)
    for i in range(n):
        for j in range(i + 1, n):
            causal = i in consumed_before[j] or j in consumed_before[i]
            conflict = _locals_conflict(prefix, past_of(i), past_of(j))
            if prefix.co(i, j) != (not causal and not conflict):
                problems.append(f"co({i}, {j}) inconsistent")
            if prefix.co(i, j) != prefix.co(j, i):
                problems.append(f"co({i}, {j}) not symmetric")
    return problems
