"""Finite complete prefixes: adequate order, possible extensions, cut-offs."""
from dataclasses import dataclass, asdict
from enum import Enum
import heapq
import itertools
import logging
import time
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from config import DEFAULT_LIMITS, Limits
from occurrence import Event, Prefix
from petri_net import CapExceededError, Net, SafetyVerdict, UnsafeNetError, check_safe

log = logging.getLogger(__name__)


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class AdequateOrder:
    """
    Total adequate order on finite configurations.
    Configurations compare by size, then by the sorted multiset of
    transition ranks, then level by level on their Foata normal form.
    Levels compare as multisets of event signatures: the smallest
    signature whose count differs decides, and the level holding more of
    it is smaller. Adding the same event to both levels keeps the verdict.
    Optional positive weights prefix the key with the weighted size,
    which keeps the order adequate while letting a test steer it.
    """
    def __init__(self, transitions: Sequence[str], weights: Optional[Mapping[str, int]] = None):
        self.transition_rank: Dict[str, int] = {t: i for i, t in enumerate(transitions)}
        self.weights: Dict[str, int] = dict(weights or {})
        # sorts after every signature, closing each Foata level
        self._level_end = (len(self.transition_rank),)
        for t, w in self.weights.items():
            if t not in self.transition_rank:
                raise ValueError(f"weight given for unknown transition {t!r}")
            if not isinstance(w, int) or w <= 0:
                raise ValueError(f"weight of {t!r} must be a positive integer, got {w!r}")
        # keyed by canonical event key, valid across prefixes
        self._signatures: Dict[tuple, tuple] = {}

    @classmethod
    def for_net(cls, net: Net, weights: Optional[Mapping[str, int]] = None) -> 'AdequateOrder':
        return cls(net.transitions, weights)

    def signature(self, prefix: Prefix, eid: int) -> tuple:
        """Orderable encoding of the event's canonical key."""
        event = prefix.events[eid]
        sig = self._signatures.get(event.key)
        if sig is None:
            sig = self._signature(prefix, event.transition, event.preset)
            self._signatures[event.key] = sig
        return sig

    def _signature(self, prefix: Prefix, transition: str, preset: Iterable[int]) -> tuple:
        parts = []
        for c in preset:
            cond = prefix.conditions[c]
            parent = () if cond.parent is None else self.signature(prefix, cond.parent)
            parts.append((prefix.net.place_index[cond.place], parent))
        return (self.transition_rank[transition], tuple(sorted(parts)))

    def _key_from_items(self, items: List[Tuple[int, str, tuple]]) -> tuple:
        weighted = sum(self.weights.get(t, 1) for _, t, _ in items)
        parikh = tuple(sorted(self.transition_rank[t] for _, t, _ in items))
        levels: Dict[int, List[tuple]] = {}
        for depth, _, sig in items:
            levels.setdefault(depth, []).append(sig)
        foata = tuple(tuple(sorted(levels[d])) + (self._level_end,) for d in sorted(levels))
        return (weighted, len(items), parikh, foata)

    def key(self, prefix: Prefix, events: Iterable[int]) -> tuple:
        items = [(prefix.events[e].depth, prefix.events[e].transition, self.signature(prefix, e))
                 for e in events]
        return self._key_from_items(items)

    def extension_key(self, prefix: Prefix, transition: str, preset: FrozenSet[int],
                      past: FrozenSet[int], depth: int) -> tuple:
        items = [(prefix.events[e].depth, prefix.events[e].transition, self.signature(prefix, e))
                 for e in past]
        items.append((depth, transition, self._signature(prefix, transition, preset)))
        return self._key_from_items(items)

    def compare(self, prefix: Prefix, c1, c2) -> Ordering:
        k1 = self.key(prefix, getattr(c1, 'events', c1))
        k2 = self.key(prefix, getattr(c2, 'events', c2))
        if k1 < k2:
            return Ordering.LESS
        if k1 > k2:
            return Ordering.GREATER
        return Ordering.EQUAL


@dataclass(slots=True)
class PrefixStats:
    """Counters reported for a prefix; size is the non-cut-off event count."""
    non_cutoff_events: int = 0
    cutoff_events: int = 0
    conditions: int = 0
    reducer_calls: int = 0
    iterations: int = 1
    wall_time: float = 0.0
    memory_mb: float = 0.0

    @classmethod
    def of_prefix(cls, prefix: Prefix, **extra) -> 'PrefixStats':
        cutoffs = sum(1 for e in prefix.events if e.cutoff)
        return cls(non_cutoff_events=len(prefix.events) - cutoffs,
                   cutoff_events=cutoffs,
                   conditions=len(prefix.conditions),
                   **extra)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(slots=True, frozen=True)
class Extension:
    transition: str
    preset: FrozenSet[int]
    past: FrozenSet[int]
    depth: int
    order_key: tuple


def make_extension(prefix: Prefix, order: AdequateOrder, transition: str,
                   preset: FrozenSet[int]) -> Extension:
    past: Set[int] = set()
    depth = 0
    for c in preset:
        parent = prefix.conditions[c].parent
        if parent is not None:
            past.add(parent)
            past |= prefix.events[parent].causal_past
            depth = max(depth, prefix.events[parent].depth)
    past = frozenset(past)
    return Extension(transition, preset, past, depth + 1,
                     order.extension_key(prefix, transition, preset, past, depth + 1))


def _usable(prefix: Prefix, cid: int) -> bool:
    parent = prefix.conditions[cid].parent
    return parent is None or not prefix.events[parent].cutoff


def possible_extensions(prefix: Prefix, dirty: Iterable[int],
                        order: Optional[AdequateOrder] = None) -> List[Extension]:
    """
    New extensions <C', t> with C' meeting `dirty`, C' a co-set labelled
    pre(t) and no condition of C' produced by a cut-off.
    """
    order = order or AdequateOrder.for_net(prefix.net)
    net = prefix.net
    found: Set[Tuple[str, FrozenSet[int]]] = set()
    for c in sorted(dirty):
        if not _usable(prefix, c):
            continue
        place = prefix.conditions[c].place
        for t in net.consumers(place):
            others = net.sorted_places(net.pre[t] - {place})
            row = prefix.co_row(c)
            candidates = [[x for x in prefix.by_place[p] if row[x] and _usable(prefix, x)]
                          for p in others]
            if any(not cands for cands in candidates):
                continue
            for combo in itertools.product(*candidates):
                if all(prefix.co(x, y) for x, y in itertools.combinations(combo, 2)):
                    preset = frozenset((c,) + combo)
                    if prefix.find_event(t, preset) is None:
                        found.add((t, preset))
    ordered = sorted(found, key=lambda ext: (net.transition_rank[ext[0]], sorted(ext[1])))
    return [make_extension(prefix, order, t, preset) for t, preset in ordered]


Admit = Callable[[Prefix, Extension], bool]
OnInsert = Callable[[Prefix, Event], None]


class Unfolder:
    """
    Generic unfolding loop: repeatedly insert the order-minimal pending
    extension. Shared by the complete prefix, the goal-driven putative
    prefix and the depth-bounded goal-driven unfolding.
    """
    def __init__(self, net: Net, order: Optional[AdequateOrder] = None,
                 detect_cutoffs: bool = True, depth_bound: Optional[int] = None,
                 limits: Limits = DEFAULT_LIMITS,
                 admit: Optional[Admit] = None, on_insert: Optional[OnInsert] = None):
        self.net = net
        self.order = order or AdequateOrder.for_net(net)
        self.detect_cutoffs = detect_cutoffs
        self.depth_bound = depth_bound
        self.limits = limits
        self.admit = admit
        self.on_insert = on_insert
        self.prefix = Prefix(net)
        self._queue: List[Tuple[tuple, int, Extension]] = []
        self._counter = itertools.count()

    def _enqueue(self, dirty: Iterable[int]) -> None:
        for ext in possible_extensions(self.prefix, dirty, self.order):
            if self.depth_bound is not None and ext.depth > self.depth_bound:
                continue
            if self.admit is not None and not self.admit(self.prefix, ext):
                log.debug("extension %s on %s filtered", ext.transition, sorted(ext.preset))
                continue
            heapq.heappush(self._queue, (ext.order_key, next(self._counter), ext))

    def run(self) -> Prefix:
        prefix = self.prefix
        self._enqueue(prefix.initial_conditions)
        while self._queue:
            _, _, ext = heapq.heappop(self._queue)
            if prefix.find_event(ext.transition, ext.preset) is not None:
                continue
            if len(prefix.events) >= self.limits.max_events:
                raise CapExceededError("max_events", self.limits.max_events, "prefix construction")
            event = prefix.add_event(ext.transition, ext.preset, local_config_key=ext.order_key)
            if self.detect_cutoffs and len(prefix.events_with_mark(event.mark)) > 1:
                event.cutoff = True
            log.debug("event %d %s depth=%d%s", event.id, event.transition, event.depth,
                      " cut-off" if event.cutoff else "")
            if self.on_insert is not None:
                self.on_insert(prefix, event)
            if not event.cutoff:
                self._enqueue(event.postset)
        return prefix


def load_verified(net: Net, assume_safe: bool = False, state_bound: int = DEFAULT_LIMITS.state_bound) -> None:
    """Refuse nets that are not verified 1-safe, unless told to trust them."""
    if assume_safe:
        log.warning("safety check skipped, results assume the net is 1-safe")
        return
    report = check_safe(net, state_bound)
    if report.verdict is SafetyVerdict.UNSAFE:
        raise UnsafeNetError(f"net is not 1-safe, witness: {' '.join(report.witness)}")
    if report.verdict is SafetyVerdict.BOUND_EXCEEDED:
        raise CapExceededError("state_bound", state_bound, "safety check")


def complete_prefix(net: Net, order: Optional[AdequateOrder] = None,
                    limits: Limits = DEFAULT_LIMITS,
                    assume_safe: bool = False) -> Tuple[Prefix, PrefixStats]:
    """Finite complete prefix of the unfolding under the given adequate order."""
    load_verified(net, assume_safe, limits.state_bound)
    started = time.time()
    prefix = Unfolder(net, order=order, limits=limits).run()
    stats = PrefixStats.of_prefix(prefix, wall_time=time.time() - started)
    log.info("complete prefix: %d events, %d cut-offs, %d conditions",
             stats.non_cutoff_events, stats.cutoff_events, stats.conditions)
    return prefix, stats
