"""Generators and independent oracles shared by the tests."""

from __future__ import annotations

import random
import re

from planewalk.core import (ALT_UNBOUNDED, Automaton, Edge, HierarchyLevel, Quantifier,
                            State, _deterministic, effective_quantifier)

UNIT = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
LONG = UNIT + [(1, 1), (2, 0), (-1, 2), (0, -2)]


def random_automaton(rng: random.Random, max_states=4, alphabet=("0", "1"), dirs=UNIT,
                     max_out=3, quants=(Quantifier.EXISTS, Quantifier.FORALL),
                     min_states=None) -> Automaton:
    """A valid automaton with at least one state per symbol."""
    k = len(alphabet)
    n = rng.randint(min_states or k, max(max_states, k))
    symbols = list(alphabet) + [rng.choice(alphabet) for _ in range(n - k)]
    ids = [f"s{i}" for i in range(n)]
    edges = set()
    for i in range(n):
        for _ in range(rng.randint(0, max_out)):
            edges.add((ids[i], ids[rng.randrange(n)], *rng.choice(dirs)))
    edges = [Edge(*e) for e in sorted(edges)]
    states = [State(ids[i], symbols[i], rng.choice(quants)) for i in range(n)]
    initial = {s: ids[i] for i, s in enumerate(alphabet)}
    a = Automaton(tuple(alphabet), tuple(states), tuple(edges), initial)
    # nondeterministic states need a quantifier
    fixed = []
    for st in states:
        if st.quant is Quantifier.UNSPECIFIED and not _deterministic(a, st.id):
            st = State(st.id, st.symbol, rng.choice([Quantifier.EXISTS, Quantifier.FORALL]))
        fixed.append(st)
    return Automaton(tuple(alphabet), tuple(fixed), tuple(edges), initial)


def random_recogniser(rng: random.Random, max_states=3, alphabet=("0", "1"), density=0.6):
    k = len(alphabet)
    n = rng.randint(k, max(max_states, k))
    symbols = list(alphabet) + [rng.choice(alphabet) for _ in range(n - k)]
    ids = [f"r{i}" for i in range(n)]
    edges = [Edge(u, v, *d) for d in ((1, 0), (0, 1)) for u in ids for v in ids
             if rng.random() < density]
    return Automaton(tuple(alphabet), tuple(State(i, s) for i, s in zip(ids, symbols)),
                     tuple(edges), {s: ids[i] for i, s in enumerate(alphabet)})


def _level_regex(level: HierarchyLevel) -> str:
    def blocks(first, n):
        other = "A" if first == "E" else "E"
        return "".join(f"{first if i % 2 == 0 else other}*" for i in range(n))
    if level.kind == "Sigma":
        return blocks("E", level.n)
    if level.kind == "Pi":
        return blocks("A", level.n)
    if level.n == 1:
        return ""
    return f"(?:{blocks('E', level.n - 1)}|{blocks('A', level.n - 1)})"


def classify_by_walks(a: Automaton) -> HierarchyLevel:
    """Classification by exploring quantifier words along walks.

    Walk states carry (state, block word so far); the word is capped one past
    |V| blocks, which is only reachable through a mixed cycle.  The answer is
    the first level in the order Δ1, Σ1, Π1, Δ2, ... whose regular expression
    matches every word seen.
    """
    n = len(a.states)
    q = {s.id: effective_quantifier(a, s.id) for s in a.states}
    letter = {sid: {Quantifier.EXISTS: "E", Quantifier.FORALL: "A"}.get(v, "") for sid, v in q.items()}
    succ = {s.id: set() for s in a.states}
    for e in a.edges:
        succ[e.src].add(e.dst)
    todo = []
    seen = set()
    for sid in a.initial.values():
        w = letter[sid]
        todo.append((sid, w))
    while todo:
        node = todo.pop()
        if node in seen:
            continue
        seen.add(node)
        sid, w = node
        for t in succ[sid]:
            lt = letter[t]
            w2 = w + lt if lt and (not w or w[-1] != lt) else w
            if len(w2) > n + 1:
                continue
            todo.append((t, w2))
    words = {w for _, w in seen}
    if any(len(w) > n for w in words):
        return ALT_UNBOUNDED
    for k in range(1, n + 3):
        for level in (HierarchyLevel("Delta", k), HierarchyLevel("Sigma", k), HierarchyLevel("Pi", k)):
            rx = re.compile(_level_regex(level))
            if all(rx.fullmatch(w) for w in words):
                return level
    return ALT_UNBOUNDED
