"""
Goal-driven unfolding.

Events whose transition was declared useless by a reduction procedure
somewhere in their causal past are never added. The finite prefix is a
fixpoint over a map from conditions to ignored transitions: each round
builds a putative prefix under the current map, then shrinks the map
wherever cut-offs or alternative configurations show that an ignored
transition could still be needed.
"""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
import logging
import re
import time
from typing import Dict, FrozenSet, List, Optional, Set, Tuple, Union

from config import DEFAULT_LIMITS, Limits
from occurrence import ConditionKey, Event, Prefix, configurations, is_configuration
from oracle import ConfigurationClass, classify_sequences
from petri_net import CapExceededError, Goal, Marking, Net, goal_holds
from reduction import MemoizedReducer, Reducer, ReducerKind, make_reducer
from unfolder import AdequateOrder, Extension, PrefixStats, Unfolder, load_verified

log = logging.getLogger(__name__)

DeltaMap = Dict[ConditionKey, FrozenSet[str]]


class StrategyKind(Enum):
    ALWAYS = "always"
    FIRST_N = "first"
    LEVEL_AT_MOST = "level"


@dataclass(slots=True, frozen=True)
class Strategy:
    """Which events the reduction procedure is called on."""
    kind: StrategyKind = StrategyKind.ALWAYS
    bound: int = 0

    @classmethod
    def always(cls) -> 'Strategy':
        return cls(StrategyKind.ALWAYS)

    @classmethod
    def first(cls, n: int) -> 'Strategy':
        return cls(StrategyKind.FIRST_N, n)

    @classmethod
    def level(cls, k: int) -> 'Strategy':
        return cls(StrategyKind.LEVEL_AT_MOST, k)

    @classmethod
    def parse(cls, text: str) -> 'Strategy':
        """Parse `always`, `first:N` or `level:K`."""
        text = text.strip().lower()
        if text == "always":
            return cls.always()
        match = re.fullmatch(r"(first|level):(\d+)", text)
        if not match:
            raise ValueError(f"unknown strategy {text!r}, expected always, first:N or level:K")
        return cls(StrategyKind(match.group(1)), int(match.group(2)))

    def includes(self, event: Event) -> bool:
        if self.kind is StrategyKind.ALWAYS:
            return True
        if self.kind is StrategyKind.FIRST_N:
            return event.id < self.bound
        return event.depth <= self.bound

    def __str__(self):
        if self.kind is StrategyKind.ALWAYS:
            return "always"
        return f"{self.kind.value}:{self.bound}"


class AltRule(Enum):
    LITERAL = "literal"
    WIDENED = "widened"


@dataclass(slots=True, frozen=True)
class AltSet:
    base: FrozenSet[int]
    members: FrozenSet[FrozenSet[int]]

    def __len__(self):
        return len(self.members)


@dataclass(slots=True)
class GoalContext:
    """Everything one goal-driven construction shares across rounds."""
    net: Net
    goal: Goal
    reducer: MemoizedReducer
    strategy: Strategy = field(default_factory=Strategy.always)
    order: Optional[AdequateOrder] = None
    limits: Limits = DEFAULT_LIMITS
    alt_rule: AltRule = AltRule.LITERAL

    def __post_init__(self):
        if self.order is None:
            self.order = AdequateOrder.for_net(self.net)

    @classmethod
    def build(cls, net: Net, goal: Goal, reducer: Union[ReducerKind, Reducer] = ReducerKind.ORACLE,
              strategy: Optional[Strategy] = None, order: Optional[AdequateOrder] = None,
              limits: Limits = DEFAULT_LIMITS, alt_rule: AltRule = AltRule.LITERAL) -> 'GoalContext':
        goal.check_against(net)
        if isinstance(reducer, ReducerKind):
            reducer = make_reducer(reducer, goal, limits)
        return cls(net=net, goal=goal, reducer=MemoizedReducer(reducer, net, goal),
                   strategy=strategy or Strategy.always(), order=order,
                   limits=limits, alt_rule=alt_rule)


def _parent_events(prefix: Prefix, event: Event) -> Set[int]:
    return {prefix.conditions[c].parent for c in event.preset
            if prefix.conditions[c].parent is not None}


def useless_of_event(prefix: Prefix, event: Event, ctx: GoalContext) -> FrozenSet[str]:
    """
    Useless(e): what the causal past ignores, reduced again at Mark([e])
    when e is selected by the strategy. Parents are enough since the
    sets only grow along causality.
    """
    inherited = frozenset().union(*(prefix.events[p].useless for p in _parent_events(prefix, event)))
    if not ctx.strategy.includes(event):
        return inherited
    return ctx.reducer(event.mark, inherited)


def gd_unfold(net: Net, goal: Goal, reducer: Union[ReducerKind, Reducer] = ReducerKind.ORACLE,
              strategy: Optional[Strategy] = None, depth_bound: int = 8,
              limits: Limits = DEFAULT_LIMITS, assume_safe: bool = False) -> Prefix:
    """Depth-bounded goal-driven unfolding, without cut-offs."""
    load_verified(net, assume_safe, limits.state_bound)
    ctx = GoalContext.build(net, goal, reducer, strategy, limits=limits)

    def admit(prefix: Prefix, ext: Extension) -> bool:
        return all(ext.transition not in prefix.delta_of(c) for c in ext.preset)

    def on_insert(prefix: Prefix, event: Event) -> None:
        event.useless = useless_of_event(prefix, event, ctx)
        for c in event.postset:
            prefix.delta[prefix.conditions[c].key] = event.useless

    unfolder = Unfolder(net, order=ctx.order, detect_cutoffs=False, depth_bound=depth_bound,
                        limits=limits, admit=admit, on_insert=on_insert)
    for c in unfolder.prefix.initial_conditions:
        unfolder.prefix.delta[unfolder.prefix.conditions[c].key] = frozenset()
    prefix = unfolder.run()
    log.info("goal-driven unfolding to depth %d: %d events, %d reductions",
             depth_bound, len(prefix.events), ctx.reducer.calls)
    return prefix


def _alt_candidates(prefix: Prefix, order: AdequateOrder) -> List[int]:
    """All but the order-largest event of every group sharing a marking."""
    groups: Dict[Marking, List[Event]] = {}
    for e in prefix.events:
        groups.setdefault(e.mark, []).append(e)
    candidates = []
    for events in groups.values():
        if len(events) < 2:
            continue
        events.sort(key=lambda e: (e.local_config_key or order.key(prefix, e.local_configuration), e.id))
        candidates.extend(e.id for e in events[:-1])
    return sorted(candidates)


def alt(conf, prefix: Prefix, order: Optional[AdequateOrder] = None,
        rule: AltRule = AltRule.LITERAL, cap: int = DEFAULT_LIMITS.alt_cap) -> AltSet:
    """
    Alternating configurations of `conf` over the current prefix.
    Least fixpoint of: for a member C' and a smaller event e' of an
    equal-marking pair, add [e'] + C' when cut([e']) meets the postset of
    C' (or, widened, its preset too) and the union is conflict-free.
    """
    base = frozenset(getattr(conf, 'events', conf))
    order = order or AdequateOrder.for_net(prefix.net)
    candidates = [prefix.events[e] for e in _alt_candidates(prefix, order)]
    members = {base}
    queue = deque([base])
    while queue:
        current = queue.popleft()
        produced = set()
        consumed = set()
        for eid in current:
            produced.update(prefix.events[eid].postset)
            consumed.update(prefix.events[eid].preset)
        for e in candidates:
            touches = e.cut & produced
            if not touches and rule is AltRule.WIDENED:
                touches = e.cut & consumed
            if not touches:
                continue
            grown = current | e.local_configuration
            if grown in members or not is_configuration(prefix, grown):
                continue
            if len(members) >= cap:
                raise CapExceededError("alt_cap", cap, f"alternating configurations of {sorted(base)}")
            members.add(grown)
            queue.append(grown)
    return AltSet(base, frozenset(members))


def useless_of_condition(prefix: Prefix, cid: int, delta: DeltaMap, ctx: GoalContext) -> FrozenSet[str]:
    """
    Useless(c, delta, P) for a condition produced by event e: the union of
    delta over e's preset, reduced at every alternating configuration of
    [e] and intersected when e is selected by the strategy.
    """
    cond = prefix.conditions[cid]
    if cond.parent is None:
        return frozenset()
    event = prefix.events[cond.parent]
    inherited = frozenset().union(*(delta.get(prefix.conditions[c].key, frozenset()) for c in event.preset))
    if not ctx.strategy.includes(event):
        return inherited
    if ctx.reducer.is_null:
        return inherited
    alternatives = alt(event.local_configuration, prefix, ctx.order, ctx.alt_rule, ctx.limits.alt_cap)
    result = None
    for member in sorted(alternatives.members, key=sorted):
        m = frozenset(prefix.conditions[c].place for c in prefix.cut_of(member))
        useless = ctx.reducer(m, inherited)
        result = useless if result is None else result & useless
    return result


def putative_gd_prefix(ctx: GoalContext, delta: DeltaMap) -> Tuple[Prefix, DeltaMap]:
    """
    Unfold while skipping extensions whose transition is ignored by one
    of their input conditions; fresh conditions get their entry on
    creation. Returns the prefix and the extended map.
    """
    delta = dict(delta)

    def admit(prefix: Prefix, ext: Extension) -> bool:
        for c in ext.preset:
            if ext.transition in delta.get(prefix.conditions[c].key, frozenset()):
                return False
        return True

    def on_insert(prefix: Prefix, event: Event) -> None:
        for c in event.postset:
            key = prefix.conditions[c].key
            if key not in delta:
                delta[key] = useless_of_condition(prefix, c, delta, ctx)

    prefix = Unfolder(ctx.net, order=ctx.order, limits=ctx.limits,
                      admit=admit, on_insert=on_insert).run()
    prefix.delta = {c.key: delta.get(c.key, frozenset()) for c in prefix.conditions}
    return prefix, delta


def post_delta(ctx: GoalContext, prefix: Prefix, delta: DeltaMap) -> DeltaMap:
    """
    Shrink the map: recompute every condition against the finished
    prefix, then let each event sharing its marking with a non-cut-off
    event pass its allowances to that event's cut, place by place.
    """
    shrunk = dict(delta)
    events = sorted(prefix.events, key=lambda e: (e.local_config_key, e.id))
    for e in events:
        for c in e.postset:
            key = prefix.conditions[c].key
            current = shrunk.get(key, delta.get(key, frozenset()))
            shrunk[key] = current & useless_of_condition(prefix, c, delta, ctx)
        for partner in prefix.events_with_mark(e.mark):
            other = prefix.events[partner]
            if partner == e.id or other.cutoff:
                continue
            mine = {prefix.conditions[c].place: prefix.conditions[c].key for c in e.cut}
            for c in other.cut:
                place = prefix.conditions[c].place
                key = prefix.conditions[c].key
                shrunk[key] = shrunk.get(key, frozenset()) & shrunk.get(mine[place], frozenset())
    return shrunk


def _shrunk_entries(before: DeltaMap, after: DeltaMap) -> int:
    return sum(1 for key, value in after.items() if key in before and value != before[key])


def gd_prefix(net: Net, goal: Goal, reducer: Union[ReducerKind, Reducer] = ReducerKind.ORACLE,
              strategy: Optional[Strategy] = None, order: Optional[AdequateOrder] = None,
              limits: Limits = DEFAULT_LIMITS, alt_rule: AltRule = AltRule.LITERAL,
              assume_safe: bool = False,
              trace: Optional[List[Tuple[DeltaMap, DeltaMap]]] = None) -> Tuple[Prefix, PrefixStats]:
    """
    Goal-driven finite prefix: rebuild the putative prefix until the map
    of ignored transitions stops shrinking.
    With `trace`, every round appends (map after build, map after shrink).
    """
    load_verified(net, assume_safe, limits.state_bound)
    ctx = GoalContext.build(net, goal, reducer, strategy, order, limits, alt_rule)
    started = time.time()
    scratch = Prefix(net)
    delta: DeltaMap = {scratch.conditions[c].key: frozenset() for c in scratch.initial_conditions}

    iterations = 0
    while True:
        iterations += 1
        if iterations > limits.iteration_cap:
            raise CapExceededError("iteration_cap", limits.iteration_cap, "goal-driven fixpoint")
        prefix, built = putative_gd_prefix(ctx, delta)
        shrunk = post_delta(ctx, prefix, built)
        if trace is not None:
            trace.append((built, shrunk))
        changed = _shrunk_entries(built, shrunk)
        log.debug("round %d: %d events, %d entries shrunk", iterations, len(prefix.events), changed)
        if changed == 0:
            break
        delta = shrunk

    prefix.delta = {c.key: shrunk.get(c.key, frozenset()) for c in prefix.conditions}
    stats = PrefixStats.of_prefix(prefix, reducer_calls=ctx.reducer.calls, iterations=iterations,
                                  wall_time=time.time() - started)
    log.info("goal-driven prefix: %d events, %d cut-offs, %d rounds, %d reductions",
             stats.non_cutoff_events, stats.cutoff_events, iterations, stats.reducer_calls)
    return prefix, stats


Step = Tuple[Marking, str, Marking]


def prefix_steps(prefix: Prefix, cap: int = DEFAULT_LIMITS.enumeration_cap) -> Set[Step]:
    """
    (mark(C'), h(f'), successor) for every cut-off-free configuration C'
    and every event f' of the prefix, cut-offs included, enabled at cut(C').
    """
    net = prefix.net
    steps: Set[Step] = set()
    for conf in configurations(prefix, include_cutoffs=False, cap=cap):
        current = prefix.cut_of(conf.events)
        m = frozenset(prefix.conditions[c].place for c in current)
        for e in prefix.events:
            if e.id not in conf.events and e.preset <= current:
                steps.add((m, e.transition, (m - net.pre[e.transition]) | net.post[e.transition]))
    return steps


def extract_goal_configurations(prefix: Prefix, net: Net, goal: Goal,
                                limits: Limits = DEFAULT_LIMITS) -> List[ConfigurationClass]:
    """
    Goal configurations represented by the prefix, each with a minimality
    verdict. Firing sequences are read off the prefix's marking steps, so
    configurations reached through cut-offs are found as well; `in_prefix`
    tells whether a configuration is literally a cut-off-free
    configuration of the prefix.
    """
    successors: Dict[Marking, List[Tuple[str, Marking]]] = {}
    rank = net.transition_rank
    for m, t, nxt in prefix_steps(prefix, limits.enumeration_cap):
        successors.setdefault(m, []).append((t, nxt))
    for edges in successors.values():
        edges.sort(key=lambda edge: (rank[edge[0]], sorted(edge[1])))

    sequences: List[Tuple[str, ...]] = []
    expanded = 0
    start = net.initial_marking
    stack = [(start, (), frozenset([start]))]
    while stack:
        marking, seq, on_path = stack.pop()
        expanded += 1
        if expanded > limits.enumeration_cap:
            raise CapExceededError("enumeration_cap", limits.enumeration_cap, "goal configuration extraction")
        if goal_holds(goal, marking):
            sequences.append(seq)
            continue
        for t, nxt in reversed(successors.get(marking, [])):
            if nxt not in on_path:
                stack.append((nxt, seq + (t,), on_path | {nxt}))

    classes = classify_sequences(net, sequences, goal)
    for cls in classes:
        events = [prefix.event_by_key(key) for key in cls.event_keys]
        cls.in_prefix = all(e is not None and not e.cutoff for e in events)
    log.info("%d goal configurations extracted, %d minimal",
             len(classes), sum(1 for cls in classes if cls.minimal))
    return classes
