"""
Line-oriented text format for nets:

    # comment
    places p0 p1 p2
    transition a : p0 -> p1 p2
    initial p0
    goal subset p1 p2

Identifiers are runs of letters, digits and _ . - ' characters.
"""
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from petri_net import Goal, GoalMode, Net

TOKEN = re.compile(r"\S+")
IDENT = re.compile(r"[A-Za-z0-9_.'\-]+")


class NetFormatError(ValueError):
    """Syntax error, with 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _tokens(text: str) -> List[Tuple[str, int]]:
    return [(m.group(0), m.start() + 1) for m in TOKEN.finditer(text)]


def _idents(tokens: List[Tuple[str, int]], lineno: int) -> List[str]:
    for tok, col in tokens:
        if not IDENT.fullmatch(tok):
            raise NetFormatError(f"invalid identifier {tok!r}", lineno, col)
    return [tok for tok, _ in tokens]


def parse_net(text: str) -> Tuple[Net, Optional[Goal]]:
    places: List[str] = []
    transitions: List[str] = []
    pre: Dict[str, List[str]] = {}
    post: Dict[str, List[str]] = {}
    initial: List[str] = []
    goal = None
    seen_places = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0]
        tokens = _tokens(line)
        if not tokens:
            continue
        keyword, col = tokens[0]
        rest = tokens[1:]
        if keyword == "places":
            places.extend(_idents(rest, lineno))
            seen_places = True
        elif keyword == "transition":
            words = [tok for tok, _ in rest]
            if len(words) < 3 or words[1] != ":" or "->" not in words:
                column = rest[0][1] if rest else col + len(keyword)
                raise NetFormatError("expected 'transition NAME : PLACES -> PLACES'", lineno, column)
            arrow = words.index("->")
            name = _idents(rest[:1], lineno)[0]
            if name in pre:
                raise NetFormatError(f"duplicate transition {name!r}", lineno, rest[0][1])
            transitions.append(name)
            pre[name] = _idents(rest[2:arrow], lineno)
            post[name] = _idents(rest[arrow + 1:], lineno)
        elif keyword == "initial":
            initial.extend(_idents(rest, lineno))
        elif keyword == "goal":
            if not rest:
                raise NetFormatError("expected 'goal exact|subset PLACES'", lineno, col + len(keyword))
            mode_tok, mode_col = rest[0]
            try:
                mode = GoalMode(mode_tok)
            except ValueError:
                raise NetFormatError(f"goal mode must be exact or subset, got {mode_tok!r}",
                                     lineno, mode_col) from None
            targets = _idents(rest[1:], lineno)
            if not targets:
                raise NetFormatError("goal needs at least one place", lineno, mode_col + len(mode_tok))
            goal = Goal(frozenset(targets), mode)
        else:
            raise NetFormatError(f"unknown keyword {keyword!r}", lineno, col)

    if not seen_places:
        raise NetFormatError("missing 'places' declaration", 1, 1)
    net = Net(tuple(places), tuple(transitions), pre, post, frozenset(initial))
    if goal is not None:
        goal.check_against(net)
    return net, goal


def emit_net(net: Net, goal: Optional[Goal] = None) -> str:
    """Canonical text: parse_net(emit_net(n, g)) == (n, g)."""
    lines = ["places " + " ".join(net.places)]
    for t in net.transitions:
        lines.append(" ".join(["transition", t, ":", *net.sorted_places(net.pre[t]),
                               "->", *net.sorted_places(net.post[t])]))
    lines.append(" ".join(["initial", *net.sorted_places(net.initial_marking)]))
    if goal is not None:
        lines.append(f"goal {goal.mode.value} " + " ".join(net.sorted_places(goal.places)))
    return "\n".join(lines) + "\n"


def load_net(path: Union[str, Path]) -> Tuple[Net, Optional[Goal]]:
    return parse_net(Path(path).read_text())
