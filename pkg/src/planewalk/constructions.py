"""Transformations between automata and subshifts of finite type."""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass

from .core import (RIGHT, UP, Automaton, Cell, Edge, FinitePattern, Quantifier,
                   SftSpec, State, Torus, domino, validate_automaton)
from .errors import (InvalidAutomaton, NotDominoSft, PatternTooLarge,
                     TooManyStates)
from .semantics import _recognising, build_arena, solve

MAX_COVER_STATES = 16
GUARD_WINDOW = 3

# ------------------------------------------------------- recognisers & SFT


def sft_to_recogniser(f: SftSpec, proj: Mapping) -> Automaton:
    """Recogniser whose runs are the configurations of ``f``, read through ``proj``.

    States are the SFT symbols; an → (resp. ↑) edge joins two symbols exactly
    when the corresponding horizontal (resp. vertical) domino is allowed.
    """
    hor, ver = f.domino_parts()
    sym = list(f.alphabet)
    missing = [s for s in sym if s not in proj]
    if missing:
        raise NotDominoSft(f"projection undefined on {missing}")
    ids = {s: str(s) for s in sym}
    if len(set(ids.values())) != len(sym):
        raise ValueError("SFT symbols must have distinct string forms")
    base = []
    for s in sym:
        if proj[s] not in base:
            base.append(proj[s])
    states = [State(ids[s], proj[s]) for s in sym]
    edges = []
    for s, t in itertools.product(sym, repeat=2):
        if (s, t) not in hor:
            edges.append(Edge(ids[s], ids[t], *RIGHT))
    for s, t in itertools.product(sym, repeat=2):
        if (s, t) not in ver:
            edges.append(Edge(ids[s], ids[t], *UP))
    initial = {}
    for s in sym:
        initial.setdefault(proj[s], ids[s])
    return Automaton(tuple(base), tuple(states), tuple(edges), initial)


def recogniser_to_sft(a: Automaton) -> tuple[SftSpec, dict[str, str]]:
    """The SFT on state ids forbidding every non-edge, and the labelling D."""
    allowed, _ = _recognising(a)
    ids = [s.id for s in a.states]
    pats = []
    for u, v in itertools.product(ids, repeat=2):
        if (u, v) not in allowed[RIGHT]:
            pats.append(domino(u, v))
    for u, v in itertools.product(ids, repeat=2):
        if (u, v) not in allowed[UP]:
            pats.append(domino(u, v, vertical=True))
    return SftSpec.from_patterns(ids, pats), {s.id: s.symbol for s in a.states}


def _window_cells(n: int) -> list[Cell]:
    return [(i, j) for j in range(n) for i in range(n)]


def higher_block_code(f: SftSpec, n: int) -> tuple[SftSpec, dict[tuple, str]]:
    """Recode ``f`` on the alphabet of its legal n × n windows.

    A window symbol is the tuple of the n² symbols of the block, listed row by
    row from the bottom.  Forbidden dominoes are the pairs whose overlap
    disagrees; the decoding map reads the bottom-left symbol of a block.
    """
    w, h = f.window_size()
    if w > n or h > n:
        raise PatternTooLarge(f"forbidden shapes need a {w}x{h} window, block size is {n}")
    cells = _window_cells(n)
    legal = []
    for combo in itertools.product(f.alphabet, repeat=n * n):
        block = dict(zip(cells, combo))
        if not any(f.forbidden_at(block.get, c) for c in cells):
            legal.append(combo)
    pos = {c: k for k, c in enumerate(cells)}
    pats = []
    for u, v in itertools.product(legal, repeat=2):
        # v sits right of u
        if any(u[pos[(i + 1, j)]] != v[pos[(i, j)]] for j in range(n) for i in range(n - 1)):
            pats.append(domino(u, v))
        # v sits above u
        if any(u[pos[(i, j + 1)]] != v[pos[(i, j)]] for j in range(n - 1) for i in range(n)):
            pats.append(domino(u, v, vertical=True))
    coded = SftSpec(tuple(legal), tuple(p.normalized() for p in pats))
    return coded, {u: u[0] for u in legal}


def block_code_torus(t: Torus, n: int) -> Torus:
    """The canonical block-coded image of a torus (window anchored at each cell)."""
    cells = _window_cells(n)
    return Torus(t.width, t.height, tuple(
        tuple(t.at(x + i, y + j) for i, j in cells) for y in range(t.height)
        for x in range(t.width)))


# ------------------------------------------------------------------- guard


@dataclass(frozen=True)
class _Constraint:
    cells: dict  # offset -> symbol, or None for a predicate window
    shape: tuple | None = None
    predicate: Callable | None = None


def _guard_constraints(f: SftSpec) -> dict[str, list]:
    """Group forbidden shapes by the symbol they need at their anchor."""
    out: dict[str, list] = {s: [] for s in f.alphabet}
    for p in f.patterns:
        cells = dict(p.cells)
        out[cells.pop((0, 0))].append(_Constraint(cells))
    if f.predicate is not None:
        for s in f.alphabet:
            out[s].append(_Constraint(None, f.shape, f.predicate))
    return out


@dataclass(frozen=True)
class Guard:
    """A deterministic scanner plus, per start symbol, its handoff state."""

    automaton: Automaton
    handoff: dict[str, str]
    entry: dict[str, str]


def _row_major(c: Cell):
    return (-c[1], c[0])


def guard_automaton(f: SftSpec, alphabet: Sequence[str] | None = None,
                    *, max_window: int = GUARD_WINDOW) -> Guard:
    """Deterministic automaton rejecting exactly where a forbidden pattern is anchored.

    From the start cell it reads, in row-major order, every cell that some
    still-possible forbidden pattern needs (the state remembers what it has
    read), dies as soon as a whole pattern matched, and otherwise jumps back
    to the start into the handoff state of the start symbol.  Handoff states
    loop on •, so the guard alone accepts exactly the configurations
    avoiding ``f``.
    """
    alphabet = tuple(alphabet) if alphabet is not None else f.alphabet
    w, h = f.window_size()
    if w > max_window or h > max_window:
        raise PatternTooLarge(f"forbidden shapes need a {w}x{h} window (limit {max_window})")
    groups = _guard_constraints(f)
    states: list[State] = []
    edges: list[Edge] = []
    handoff, entry = {}, {}

    def sid(start, read):
        return "guard[" + start + "".join(f"|{o[0]},{o[1]}={s}" for o, s in read) + "]"

    for start in alphabet:
        cons = groups.get(start, [])
        hand = f"handoff[{start}]"
        handoff[start] = hand
        states.append(State(hand, start))
        edges.append(Edge(hand, hand, 0, 0))
        if not cons:
            entry[start] = hand
            continue
        entry[start] = sid(start, ())
        needed = set()
        for c in cons:
            needed |= set(c.cells) if c.cells is not None else set(c.shape)
        needed.discard((0, 0))
        order = sorted(needed, key=_row_major)

        def status(read):
            """('dead' | 'done' | next offset) for a partial read."""
            known = dict(read)
            known[(0, 0)] = start
            pending = []
            for c in cons:
                if c.cells is not None:
                    if any(o in known and known[o] != s for o, s in c.cells.items()):
                        continue
                    rest = [o for o in c.cells if o not in known]
                    if not rest:
                        return "dead"
                    pending.extend(rest)
                else:
                    rest = [o for o in c.shape if o not in known]
                    if not rest:
                        if c.predicate(tuple(known[o] for o in c.shape)):
                            return "dead"
                        continue
                    pending.extend(rest)
            if not pending:
                return "done"
            return min(pending, key=lambda o: order.index(o))

        frontier = [((), (0, 0), start)]
        while frontier:
            read, here, sym = frontier.pop()
            me = sid(start, read)
            states.append(State(me, sym))
            st = status(read)
            if st == "dead":
                continue
            if st == "done":
                edges.append(Edge(me, hand, -here[0], -here[1]))
                continue
            step = (st[0] - here[0], st[1] - here[1])
            for s in alphabet:
                nxt = read + ((st, s),)
                edges.append(Edge(me, sid(start, nxt), *step))
                frontier.append((nxt, st, s))
    auto = Automaton(alphabet, tuple(states), tuple(edges), dict(entry), "guard")
    return Guard(auto, handoff, entry)


def intersect_with_sft(a: Automaton, f: SftSpec, *, max_window: int = GUARD_WINDOW) -> Automaton:
    """Automaton accepting what ``a`` accepts among configurations avoiding ``f``.

    Every start first runs the guard for patterns anchored at the start cell
    and then enters ``a`` through the initial state of the start symbol.
    Guard states are deterministic, so the hierarchy level is unchanged.
    """
    problems = validate_automaton(a)
    if problems:
        raise InvalidAutomaton(problems)
    g = guard_automaton(f, a.alphabet, max_window=max_window)
    taken = {s.id for s in a.states}
    clash = any(s.id in taken for s in g.automaton.states)
    prefix = "a:" if clash else ""
    ren = {s.id: prefix + s.id for s in a.states}
    base = a.renamed(ren) if prefix else a
    redirect = {g.handoff[s]: base.initial[s] for s in a.alphabet}
    states = [s for s in g.automaton.states if s.id not in redirect]
    edges = [Edge(e.src, redirect.get(e.dst, e.dst), e.dx, e.dy)
             for e in g.automaton.edges if e.src not in redirect]
    initial = {s: redirect.get(g.entry[s], g.entry[s]) for s in a.alphabet}
    name = f"{a.name}+guard" if a.name else "guarded"
    return Automaton(a.alphabet, tuple(states) + base.states, tuple(edges) + base.edges,
                     initial, name)


# ------------------------------------------------------------------- cover

PLUS: tuple[Cell, ...] = ((0, 0), (-1, 0), (1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class Cover:
    """SFT over ``(symbol, state-set bitmask)`` whose projection is ``L(a)``.

    Bit ``k`` of a mask stands for ``automaton.states[k]``.
    """

    automaton: Automaton
    sft: SftSpec

    def projection(self, product_symbol) -> str:
        return product_symbol[0]

    def state_set(self, product_symbol) -> frozenset[str]:
        mask = product_symbol[1]
        return frozenset(s.id for k, s in enumerate(self.automaton.states) if mask >> k & 1)

    @property
    def shape(self) -> tuple[Cell, ...]:
        return self.sft.shape

    def violations(self, window) -> list[int]:
        return _cover_clauses(self.automaton, self.sft.shape, window, first_only=False)

    def product_alphabet_size(self) -> int:
        return len(self.automaton.alphabet) * 2 ** len(self.automaton.states)


def _cover_clauses(a: Automaton, shape, window, first_only=True) -> list[int]:
    comp = a.compiled
    s, mask = window[0]
    sidx = comp.sym_index[s]
    where = {off: k for k, off in enumerate(shape)}
    fired = []
    if any(mask >> v & 1 and comp.sym_of[v] != sidx for v in range(len(comp.ids))):
        fired.append(1)
        if first_only:
            return fired
    if not mask >> comp.init[sidx] & 1:
        fired.append(2)
        if first_only:
            return fired
    for v in range(len(comp.ids)):
        if not mask >> v & 1:
            continue
        universal = not comp.exists[v]
        some_applicable = False
        good = False
        bad = False
        for _, t, dx, dy in comp.out[v]:
            ns, nmask = window[where[(dx, dy)]]
            inside = nmask >> t & 1
            if universal:
                if comp.sym_of[t] != comp.sym_index[ns]:
                    continue  # edge blocked by the symbol filter
                some_applicable = True
                if not inside:
                    bad = True
                    break
            elif inside:
                good = True
                break
        if (universal and (bad or not some_applicable)) or (not universal and not good):
            fired.append(3)
            break
    return fired


def alternating_to_cover(a: Automaton) -> Cover:
    """Cover SFT over Σ × P(V), given as a predicate on the plus-shaped window.

    A window with centre ``(s, S)`` is forbidden when some state of ``S`` reads
    another symbol, when ``S`` misses the initial state of ``s``, or when some
    state of ``S`` fails its quantifier against its neighbours' sets.  The
    window also contains every non-unit edge direction of ``a``.
    """
    comp = a.compiled
    if len(comp.ids) > MAX_COVER_STATES:
        raise TooManyStates(f"{len(comp.ids)} states (limit {MAX_COVER_STATES})")
    shape = list(PLUS)
    for d in sorted(a.directions(), key=_row_major):
        if d not in shape:
            shape.append(d)
    shape = tuple(shape)
    alphabet = tuple((s, m) for s in a.alphabet for m in range(2 ** len(comp.ids)))

    def forbidden(window):
        return bool(_cover_clauses(a, shape, window))
    sft = SftSpec(alphabet, (), shape, forbidden)
    return Cover(a, sft)


def annotate(a: Automaton, t: Torus) -> Torus:
    """Pair every cell with the bitmask of states that have an accepting run there."""
    comp = a.compiled
    if len(comp.ids) > MAX_COVER_STATES:
        raise TooManyStates(f"{len(comp.ids)} states (limit {MAX_COVER_STATES})")
    ar = build_arena(a, t)
    ws = solve(ar)
    masks = {c: 0 for c in t.domain()}
    for n, lab in enumerate(ar.labels):
        if ws.winning[n]:
            cell, v = lab
            masks[cell] |= 1 << v
    return Torus(t.width, t.height,
                 tuple((t.at(x, y), masks[(x, y)]) for y in range(t.height)
                       for x in range(t.width)))


def cover_consistent(a: Automaton, t: Torus, cover: Cover | None = None) -> bool:
    cover = cover or alternating_to_cover(a)
    y = annotate(a, t)
    return cover.sft.avoided_by(y)


def some_annotation_avoids(cover: Cover, t: Torus) -> bool:
    """Exhaustive search over every product annotation of ``t``."""
    n = len(cover.automaton.states)
    cells = list(t.domain())
    for masks in itertools.product(range(2 ** n), repeat=len(cells)):
        y = Torus(t.width, t.height, tuple((t[c], m) for c, m in zip(cells, masks)))
        if cover.sft.avoided_by(y):
            return True
    return False


def iter_forbidden_windows(cover: Cover, cap: int) -> Iterator[tuple]:
    """Forbidden windows in lexicographic order, at most ``cap`` of them."""
    count = 0
    for window in itertools.product(cover.sft.alphabet, repeat=len(cover.sft.shape)):
        if cover.sft.predicate(window):
            yield window
            count += 1
            if count >= cap:
                return


def cover_statistics(cover: Cover) -> dict:
    """Counts of centre symbols rejected by the local clauses 1 and 2.

    Clause 3 depends on the neighbours, so it is summarised by the number of
    centre symbols for which some neighbourhood triggers it.
    """
    a = cover.automaton
    comp = a.compiled
    n = len(comp.ids)
    c1 = c2 = ok = 0
    for s, mask in cover.sft.alphabet:
        sidx = comp.sym_index[s]
        if any(mask >> v & 1 and comp.sym_of[v] != sidx for v in range(n)):
            c1 += 1
        elif not mask >> comp.init[sidx] & 1:
            c2 += 1
        else:
            ok += 1
    states_with_edges = sum(1 for v in range(n) if comp.out[v])
    return {
        "alphabet": len(a.alphabet),
        "states": n,
        "product_alphabet": cover.product_alphabet_size(),
        "window": len(cover.sft.shape),
        "clause1_centres": c1,
        "clause2_centres": c2,
        "locally_consistent_centres": ok,
        "clause3_candidate_states": states_with_edges,
    }


# ------------------------------------------------------------ lift/flatten


def lift_word(w: Sequence[str], q: int) -> Torus:
    """Vertically constant torus whose every row is the cyclic word ``w``."""
    if not w or q < 1:
        raise ValueError("need a nonempty word and a positive height")
    p = len(w)
    return Torus(p, q, tuple(w[x] for _ in range(q) for x in range(p)))


def flatten_automaton(a: Automaton) -> Automaton:
    """Replace every vertical component of a direction by 0."""
    seen = set()
    edges = []
    for e in a.edges:
        key = (e.src, e.dst, e.dx)
        if key in seen:
            continue  # two edges may collapse onto one
        seen.add(key)
        edges.append(Edge(e.src, e.dst, e.dx, 0))
    return a.with_edges(edges)
