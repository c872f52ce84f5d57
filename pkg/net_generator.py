"""Seeded random safe nets built as small networks of synchronized automata."""
from collections import deque
from typing import Dict, List, Optional, Tuple

import numpy as np

from petri_net import Goal, GoalMode, Marking, Net, reachability_graph

DEFAULT_SEED = 42


def random_safe_net(rng: np.random.Generator, max_places: int = 8,
                    max_transitions: int = 10, dormant_rate: float = 0.5) -> Net:
    """
    Automata with 2-3 local states each. Automaton 0 starts with a token;
    each other one starts with a token or, with probability `dormant_rate`,
    dormant. A dormant automaton j gets a fork/join pair with an earlier
    automaton i: the fork moves i into a waiting place and starts j, the
    join consumes j's token and releases i. While i waits it cannot fork
    again, so every automaton holds at most one token and the net is 1-safe.
    Other transitions move one automaton and optionally move, or only
    read, a second one.
    """
    n_automata = int(rng.integers(2, 4))
    sizes = [int(rng.integers(2, 4)) for _ in range(n_automata)]
    dormant = [j for j in range(1, n_automata) if rng.random() < dormant_rate]
    while sum(sizes) + len(dormant) > max_places and max(sizes) > 2:
        sizes[int(np.argmax(sizes))] -= 1
    places = [f"a{i}s{j}" for i, size in enumerate(sizes) for j in range(size)]

    arcs: List[Tuple[frozenset, frozenset]] = []
    for j in dormant:
        i = int(rng.integers(j))
        src, dst = (int(x) for x in rng.choice(sizes[i], size=2, replace=False))
        waiting = f"a{i}w{j}"
        places.append(waiting)
        arcs.append((frozenset({f"a{i}s{src}"}), frozenset({waiting, f"a{j}s0"})))
        y = int(rng.integers(sizes[j]))
        arcs.append((frozenset({waiting, f"a{j}s{y}"}), frozenset({f"a{i}s{dst}"})))

    wanted = len(arcs) + int(rng.integers(max(2, n_automata), max(3, max_transitions - len(arcs)) + 1))
    seen = set(arcs)
    attempts = 0
    while len(arcs) < wanted and attempts < 20 * max_transitions:
        attempts += 1
        i = int(rng.integers(n_automata))
        src, dst = (int(x) for x in rng.choice(sizes[i], size=2, replace=False))
        pre = {f"a{i}s{src}"}
        post = {f"a{i}s{dst}"}
        if rng.random() < 0.5:
            j = int(rng.choice([k for k in range(n_automata) if k != i]))
            u = int(rng.integers(sizes[j]))
            pre.add(f"a{j}s{u}")
            if rng.random() < 0.5:
                # read arc: the partner keeps its state
                post.add(f"a{j}s{u}")
            else:
                v = int(rng.choice([s for s in range(sizes[j]) if s != u]))
                post.add(f"a{j}s{v}")
        signature = (frozenset(pre), frozenset(post))
        if signature in seen:
            continue
        seen.add(signature)
        arcs.append(signature)

    transitions = [f"t{k}" for k in range(len(arcs))]
    return Net(
        places=tuple(places),
        transitions=tuple(transitions),
        pre={t: arcs[k][0] for k, t in enumerate(transitions)},
        post={t: arcs[k][1] for k, t in enumerate(transitions)},
        initial_marking=frozenset(f"a{i}s0" for i in range(n_automata) if i not in dormant),
    )


def _distances(net: Net) -> Dict[Marking, int]:
    graph = reachability_graph(net)
    distance = {net.initial_marking: 0}
    queue = deque([net.initial_marking])
    while queue:
        m = queue.popleft()
        for _, nxt in graph[m]:
            if nxt not in distance:
                distance[nxt] = distance[m] + 1
                queue.append(nxt)
    return distance


def random_goal(net: Net, rng: np.random.Generator, max_size: int = 2) -> Optional[Goal]:
    """
    Submarking goal drawn from a reachable marking, preferring markings at
    least two steps away. The goal always names a place unmarked at M0, so
    it never holds initially. None when M0 is the only reachable marking
    that marks a new place.
    """
    distance = _distances(net)
    fresh = {m: m - net.initial_marking for m in distance}
    far = [m for m, d in distance.items() if d >= 2 and fresh[m]]
    near = [m for m, d in distance.items() if d == 1 and fresh[m]]
    pool = sorted(far or near, key=net.sorted_places)
    if not pool:
        return None
    target = pool[int(rng.integers(len(pool)))]
    anchor = net.sorted_places(fresh[target])
    chosen = {anchor[int(rng.integers(len(anchor)))]}
    rest = net.sorted_places(target - chosen)
    extra = int(rng.integers(0, min(max_size - 1, len(rest)) + 1))
    if extra:
        chosen.update(rest[int(k)] for k in rng.choice(len(rest), size=extra, replace=False))
    return Goal(frozenset(chosen), GoalMode.SUBSET)


def random_instances(count: int, seed: int = DEFAULT_SEED) -> List[Tuple[Net, Goal]]:
    """`count` nets with goals; nets that cannot move away from M0 are redrawn."""
    rng = np.random.default_rng(seed)
    instances = []
    while len(instances) < count:
        net = random_safe_net(rng)
        goal = random_goal(net, rng)
        if goal is not None:
            instances.append((net, goal))
    return instances
