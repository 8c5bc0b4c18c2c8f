"""Acceptance of plane-walking automata as an alternating safety game.

A run from ``(cell, state)`` is a play in the product arena: existential
nodes pick one applicable move, universal nodes must survive every applicable
move and need at least one.  A play is won by lasting forever or, on finite
patterns, by stepping out of the support.  The set of winning nodes is the
greatest fixpoint of the one-step condition; :func:`solve` computes it by
deleting losing nodes with a worklist, which also yields attractor ranks.
"""

from __future__ import annotations

import itertools
import sys
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field

import networkx as nx

from .core import (RIGHT, UP, Automaton, Cell, Direction, FinitePattern,
                   Quantifier, Torus, validate_automaton)
from .errors import (AlphabetMismatch, ArenaTooLarge, InvalidAutomaton,
                     NotExistential, NotRecognisingMode, NotUniversal)

EXTERIOR = "ExteriorAccept"
ORACLE_NODE_LIMIT = 4000


@dataclass
class Arena:
    """Product game graph of cells and states.

    ``labels[i]`` is ``(cell, state_index)`` or :data:`EXTERIOR`;
    ``moves[i]`` lists ``(edge_id, successor)`` sorted by edge id;
    ``exists[i]`` tells who owns node ``i``.  ``starts`` holds, per cell of
    the fundamental domain (or support), the node of its initial state.
    """

    automaton: Automaton
    mode: str  # "torus" or "pattern"
    labels: list
    moves: list[list[tuple[int, int]]]
    exists: list[bool]
    starts: dict[Cell, int]
    index: dict = field(repr=False)
    exterior: int | None = None

    def __len__(self):
        return len(self.labels)

    def node(self, cell: Cell, state_id: str) -> int | None:
        return self.index.get((cell, self.automaton.compiled.index[state_id]))

    def describe(self, n: int):
        if n == self.exterior:
            return EXTERIOR
        cell, v = self.labels[n]
        return (cell, self.automaton.compiled.ids[v])


@dataclass
class WinningSet:
    winning: list[bool]
    strategy: dict[int, tuple[int, int]]  # existential node -> (edge id, successor)
    rank: dict[int, int]  # losing node -> attractor depth

    def __contains__(self, n: int) -> bool:
        return self.winning[n]

    def nodes(self) -> set[int]:
        return {i for i, w in enumerate(self.winning) if w}


def _check(a: Automaton, x):
    comp = a.compiled
    x.check_alphabet(comp.symbols)
    return comp


def build_arena(a: Automaton, x: Torus | FinitePattern, *, reachable_only: bool = False) -> Arena:
    """Product arena of ``a`` on a torus (modular moves) or a finite pattern.

    In pattern mode every move leaving the support goes to the absorbing
    accepting exterior node, whatever the target state's symbol.  With
    ``reachable_only`` only nodes reachable from the start nodes are built.
    """
    comp = _check(a, x)
    sym_of, out = comp.sym_of, comp.out
    labels: list = []
    index: dict = {}
    moves: list = []
    exists: list = []
    exterior = None
    if isinstance(x, Torus):
        mode = "torus"
        w, h = x.width, x.height
        grid = [comp.sym_index[s] for s in x.cells]

        def lookup(cx, cy):
            return (cx % w, cy % h), grid[(cy % h) * w + (cx % w)]
        domain = list(x.domain())
    else:
        mode = "pattern"
        cells = {c: comp.sym_index[s] for c, s in x.cells.items()}

        def lookup(cx, cy):
            c = (cx, cy)
            s = cells.get(c)
            return (c, s)
        domain = sorted(cells, key=lambda c: (-c[1], c[0]))
        exterior = 0
        labels.append(EXTERIOR)
        moves.append([])
        exists.append(True)

    def add(cell, v):
        key = (cell, v)
        n = index.get(key)
        if n is None:
            n = len(labels)
            index[key] = n
            labels.append(key)
            moves.append(None)
            exists.append(comp.exists[v])
        return n

    starts = {}
    for cell in domain:
        s = lookup(*cell)[1]
        starts[cell] = add(cell, comp.init[s])
    if not reachable_only:
        for cell in domain:
            s = lookup(*cell)[1]
            for v in range(len(comp.ids)):
                if sym_of[v] == s:
                    add(cell, v)
    todo = list(range(len(labels)))
    while todo:
        n = todo.pop()
        if n == exterior or moves[n] is not None:
            continue
        (cx, cy), v = labels[n]
        mv = []
        for eid, t, dx, dy in out[v]:
            c2, s2 = lookup(cx + dx, cy + dy)
            if s2 is None:
                mv.append((eid, exterior))
            elif sym_of[t] == s2:
                m = add(c2, t)
                mv.append((eid, m))
                if moves[m] is None:
                    todo.append(m)
        moves[n] = mv
    return Arena(a, mode, labels, moves, exists, starts, index, exterior)


def solve(ar: Arena) -> WinningSet:
    """Greatest fixpoint of the winning condition by counter-based deletion.

    Losing nodes are deleted breadth-first from the dead ends, so the deletion
    order is also the attractor rank.  Existential winners get the move with
    the lowest edge id that stays winning.
    """
    n = len(ar.labels)
    win = [True] * n
    preds: list[list[int]] = [[] for _ in range(n)]
    count = [0] * n
    rank: dict[int, int] = {}
    queue: deque[int] = deque()
    for i, mv in enumerate(ar.moves):
        if i == ar.exterior:
            continue
        count[i] = len(mv)
        for _, m in mv:
            preds[m].append(i)
        if not mv:
            win[i] = False
            rank[i] = 0
            queue.append(i)
    exists = ar.exists
    while queue:
        u = queue.popleft()
        r = rank[u] + 1
        for p in preds[u]:
            if not win[p]:
                continue
            if exists[p]:
                count[p] -= 1
                if count[p]:
                    continue
            win[p] = False
            rank[p] = r
            queue.append(p)
    strategy = {}
    for i, mv in enumerate(ar.moves):
        if win[i] and exists[i] and i != ar.exterior:
            for eid, m in mv:
                if win[m]:
                    strategy[i] = (eid, m)
                    break
    return WinningSet(win, strategy, rank)


def accepts_torus(a: Automaton, t: Torus) -> bool:
    if not isinstance(t, Torus):
        raise TypeError("accepts_torus expects a Torus")
    ar = build_arena(a, t, reachable_only=True)
    ws = solve(ar)
    return all(ws.winning[n] for n in ar.starts.values())


def accepts_pattern(a: Automaton, p: FinitePattern) -> bool:
    if not isinstance(p, FinitePattern):
        raise TypeError("accepts_pattern expects a FinitePattern")
    ar = build_arena(a, p, reachable_only=True)
    ws = solve(ar)
    return all(ws.winning[n] for n in ar.starts.values())


def accepts(a: Automaton, x: Torus | FinitePattern) -> bool:
    return accepts_torus(a, x) if isinstance(x, Torus) else accepts_pattern(a, x)


# ------------------------------------------------------------------ oracles


def brute_force_accepts(a: Automaton, x: Torus | FinitePattern) -> bool:
    """Acceptance by coinductive search, independent of :func:`solve`.

    ``wins(node)`` explores the run tree depth-first and treats a node that
    is already on the current call path as winning (an infinite branch).
    Results proved false are always sound and are memoized; a true result is
    memoized only when it did not lean on an assumption about an ancestor.
    Rounds are repeated until the set of refuted nodes stops growing.
    """
    ar = build_arena(a, x)
    if len(ar) > ORACLE_NODE_LIMIT:
        raise ArenaTooLarge(f"arena has {len(ar)} nodes (limit {ORACLE_NODE_LIMIT})")
    moves, exists, ext = ar.moves, ar.exists, ar.exterior
    refuted: set[int] = set()
    proved: set[int] = set()

    def wins(n, depth_of, depth):
        # returns (value, lowest stack depth this value relied on)
        if n == ext or n in proved:
            return True, depth
        if n in refuted:
            return False, depth
        if n in depth_of:
            return True, depth_of[n]
        depth_of[n] = depth
        low = depth
        succ = moves[n]
        if exists[n]:
            value = False
            for _, m in succ:
                ok, lo = wins(m, depth_of, depth + 1)
                if ok:
                    value, low = True, min(low, lo)
                    break
        else:
            value = bool(succ)
            for _, m in succ:
                ok, lo = wins(m, depth_of, depth + 1)
                if not ok:
                    value = False
                    break
                low = min(low, lo)
        del depth_of[n]
        if not value:
            refuted.add(n)
        elif low >= depth:
            proved.add(n)
        return value, low

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(ar) + 1000))
    try:
        while True:
            before = len(refuted)
            verdicts = [wins(s, {}, 0)[0] for s in ar.starts.values()]
            if len(refuted) == before:
                return all(verdicts)
            proved.clear()
    finally:
        sys.setrecursionlimit(old)


def _start_graph(a: Automaton, t: Torus):
    ar = build_arena(a, t, reachable_only=True)
    g = nx.DiGraph()
    g.add_nodes_from(range(len(ar)))
    for i, mv in enumerate(ar.moves):
        g.add_edges_from((i, m) for _, m in mv)
    return ar, g


def exists_only_oracle(a: Automaton, t: Torus) -> bool:
    """Plain reachability check for automata without universal states."""
    comp = a.compiled
    if any(q is Quantifier.FORALL for q in comp.effective):
        raise NotExistential("automaton has universal states")
    ar, g = _start_graph(a, t)
    on_cycle = set()
    for comp_nodes in nx.strongly_connected_components(g):
        if len(comp_nodes) > 1 or any(g.has_edge(v, v) for v in comp_nodes):
            on_cycle |= comp_nodes
    good = set(on_cycle)
    for v in on_cycle:
        good |= nx.ancestors(g, v)
    return all(s in good for s in ar.starts.values())


def forall_only_oracle(a: Automaton, t: Torus) -> bool:
    """No reachable node may be stuck, for automata without existential states."""
    comp = a.compiled
    if any(q is Quantifier.EXISTS for q in comp.effective):
        raise NotUniversal("automaton has existential states")
    ar, g = _start_graph(a, t)
    seen = set(ar.starts.values())
    for s in ar.starts.values():
        seen |= nx.descendants(g, s)
    return all(ar.moves[v] for v in seen)


# -------------------------------------------------------- recognising runs


def _recognising(a: Automaton):
    problems = validate_automaton(a, alternating=False)
    if problems:
        raise InvalidAutomaton(problems)
    bad = {e.direction for e in a.edges} - {RIGHT, UP}
    if bad:
        raise NotRecognisingMode(f"directions {sorted(bad)} are not → or ↑")
    quant = [s.id for s in a.states if s.quant is not Quantifier.UNSPECIFIED]
    if quant:
        raise NotRecognisingMode(f"states {quant} carry quantifiers")
    allowed = {RIGHT: set(), UP: set()}
    for e in a.edges:
        allowed[e.direction].add((e.src, e.dst))
    by_symbol: dict[str, list[str]] = {}
    for s in a.states:
        by_symbol.setdefault(s.symbol, []).append(s.id)
    return allowed, by_symbol


def _csp(variables, domains, constraints):
    """Arc-consistent backtracking search.

    ``constraints`` maps an ordered pair of distinct variables (u, w) to the
    set of allowed value pairs.  Returns an assignment dict or None.
    """
    neigh: dict = {v: [] for v in variables}
    for (u, w), rel in constraints.items():
        neigh[u].append((w, rel, False))
        neigh[w].append((u, rel, True))

    def supported(val, other_dom, rel, flipped):
        if flipped:
            return any((o, val) in rel for o in other_dom)
        return any((val, o) in rel for o in other_dom)

    def propagate(doms, queue):
        while queue:
            w = queue.pop()
            for u, rel, flipped in neigh[w]:
                # revise u against w: roles swap relative to w's listing
                new = [val for val in doms[u] if supported(val, doms[w], rel, not flipped)]
                if len(new) != len(doms[u]):
                    if not new:
                        return False
                    doms[u] = new
                    queue.append(u)
        return True

    doms = {v: list(domains[v]) for v in variables}
    if any(not d for d in doms.values()):
        return None
    if not propagate(doms, list(variables)):
        return None

    def search(doms):
        open_vars = [v for v in variables if len(doms[v]) > 1]
        if not open_vars:
            return {v: doms[v][0] for v in variables}
        var = min(open_vars, key=lambda v: len(doms[v]))
        for val in doms[var]:
            trial = {k: list(d) for k, d in doms.items()}
            trial[var] = [val]
            if propagate(trial, [var]):
                got = search(trial)
                if got is not None:
                    return got
        return None

    return search(doms)


def _run_problem(allowed, by_symbol, lookup_neighbour, cells, symbol_at):
    domains = {c: by_symbol.get(symbol_at(c), []) for c in cells}
    constraints = {}
    for c in cells:
        for d in (RIGHT, UP):
            n = lookup_neighbour(c, d)
            if n is None:
                continue
            if n == c:
                domains[c] = [v for v in domains[c] if (v, v) in allowed[d]]
                continue
            key = (c, n)
            rel = allowed[d]
            if key in constraints:
                constraints[key] = constraints[key] & rel
            elif (n, c) in constraints:
                constraints[(n, c)] = constraints[(n, c)] & {(w, v) for v, w in rel}
            else:
                constraints[key] = set(rel)
    return domains, constraints


def recognising_run_exists(a: Automaton, p: FinitePattern) -> dict[Cell, str] | None:
    """A state annotation of ``p`` consistent with the → and ↑ edges, or None."""
    allowed, by_symbol = _recognising(a)
    p.check_alphabet(a.alphabet)
    cells = sorted(p.cells, key=lambda c: (-c[1], c[0]))

    def neighbour(c, d):
        n = (c[0] + d[0], c[1] + d[1])
        return n if n in p.cells else None
    domains, constraints = _run_problem(allowed, by_symbol, neighbour, cells, p.get)
    return _csp(cells, domains, constraints)


def recognising_run_transfer(a: Automaton, p: FinitePattern) -> dict[Cell, str] | None:
    """Row-by-row transfer method for rectangular patterns.

    Enumerates the admissible annotations of each row (walks in the → graph)
    and sweeps upwards keeping the rows compatible through ↑ edges.
    """
    allowed, by_symbol = _recognising(a)
    p.check_alphabet(a.alphabet)
    if not p.is_rectangle():
        raise ValueError("the transfer method needs a rectangular support")
    x0, y0, x1, y1 = p.bbox()

    def row_runs(y):
        runs = [()]
        for x in range(x0, x1 + 1):
            nxt = []
            for r in runs:
                for v in by_symbol.get(p[(x, y)], []):
                    if not r or (r[-1], v) in allowed[RIGHT]:
                        nxt.append(r + (v,))
            runs = nxt
        return runs

    layer = {r: None for r in row_runs(y0)}
    history = [layer]
    for y in range(y0 + 1, y1 + 1):
        nxt = {}
        for r in row_runs(y):
            for below in layer:
                if all((b, v) in allowed[UP] for b, v in zip(below, r)):
                    nxt[r] = below
                    break
        layer = nxt
        history.append(layer)
    if not layer:
        return None
    run = {}
    row = next(iter(layer))
    for k in range(len(history) - 1, -1, -1):
        y = y0 + k
        for i, v in enumerate(row):
            run[(x0 + i, y)] = v
        row = history[k][row]
    return run


def recognising_run_on_torus(a: Automaton, t: Torus) -> dict[Cell, str] | None:
    """A run with the same periods as ``t``; None does not disprove membership."""
    allowed, by_symbol = _recognising(a)
    t.check_alphabet(a.alphabet)
    cells = list(t.domain())

    def neighbour(c, d):
        return ((c[0] + d[0]) % t.width, (c[1] + d[1]) % t.height)
    domains, constraints = _run_problem(allowed, by_symbol, neighbour, cells, t.__getitem__)
    return _csp(cells, domains, constraints)


def brute_force_torus_runs(a: Automaton, t: Torus) -> Iterable[dict[Cell, str]]:
    """Every periodic run, by enumerating all state annotations."""
    allowed, by_symbol = _recognising(a)
    cells = list(t.domain())
    for combo in itertools.product(*(by_symbol.get(t[c], []) for c in cells)):
        run = dict(zip(cells, combo))
        if all((run[c], run[((c[0] + d[0]) % t.width, (c[1] + d[1]) % t.height)]) in allowed[d]
               for c in cells for d in (RIGHT, UP)):
            yield run


def is_recognising_run(a: Automaton, x: Torus | FinitePattern, run: dict[Cell, str]) -> bool:
    allowed, _ = _recognising(a)
    sym = a.state_map
    if isinstance(x, Torus):
        cells = list(x.domain())

        def nb(c, d):
            return ((c[0] + d[0]) % x.width, (c[1] + d[1]) % x.height)
    else:
        cells = list(x.cells)

        def nb(c, d):
            n = (c[0] + d[0], c[1] + d[1])
            return n if n in x.cells else None
    for c in cells:
        if c not in run or sym[run[c]].symbol != x[c]:
            return False
        for d in (RIGHT, UP):
            n = nb(c, d)
            if n is not None and (run[c], run[n]) not in allowed[d]:
                return False
    return True


# ------------------------------------------------------ branches & pumping


@dataclass(frozen=True)
class Step:
    cell: Cell
    state: str
    edge: int | None  # edge taken from this step, None on the last one


@dataclass(frozen=True)
class Branch:
    """A path in a run tree with unbounded ℤ² coordinates.

    A lasso branch has ``cycle_start`` set: the edge of the last step leads
    back to step ``cycle_start`` translated by ``drift``.
    """

    steps: tuple[Step, ...]
    cycle_start: int | None = None
    drift: Direction = (0, 0)

    def __len__(self):
        return len(self.steps)

    @property
    def is_lasso(self) -> bool:
        return self.cycle_start is not None


@dataclass(frozen=True)
class PumpingPair:
    i: int
    j: int
    vector: Direction


def footprint(b: Branch) -> set[Cell]:
    return {s.cell for s in b.steps}


def find_pumping_pairs(b: Branch) -> list[PumpingPair]:
    pairs = []
    for i, j in itertools.combinations(range(len(b.steps)), 2):
        si, sj = b.steps[i], b.steps[j]
        if si.state == sj.state:
            pairs.append(PumpingPair(i, j, (sj.cell[0] - si.cell[0], sj.cell[1] - si.cell[1])))
    return pairs


def pump_branch(b: Branch, pair: PumpingPair, k: int) -> Branch:
    """Repeat the segment ``[i, j)`` k times, each copy shifted by the vector."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    i, j = pair.i, pair.j
    vx, vy = pair.vector

    def moved(s, r):
        return Step((s.cell[0] + r * vx, s.cell[1] + r * vy), s.state, s.edge)
    steps = list(b.steps[:i])
    for r in range(k):
        steps.extend(moved(s, r) for s in b.steps[i:j])
    steps.extend(moved(s, k - 1) for s in b.steps[j:])
    cycle, drift = b.cycle_start, b.drift
    if cycle is not None:
        if cycle <= i:
            # the tail moved but the loop entry did not
            drift = (drift[0] + (k - 1) * vx, drift[1] + (k - 1) * vy)
        elif cycle >= j or k > 0:
            # the entry now lives in the last copy (or in the shifted tail)
            cycle += (k - 1) * (j - i)
        else:
            cycle, drift = None, (0, 0)  # the loop entry was excised
    return Branch(tuple(steps), cycle, drift)


def replay(b: Branch, a: Automaton, x: Torus | FinitePattern) -> list[str]:
    """Check a branch step by step; returns a list of mismatch descriptions."""
    problems = []
    sm = a.state_map
    for k, s in enumerate(b.steps):
        if s.state not in sm:
            problems.append(f"step {k}: unknown state {s.state!r}")
            continue
        here = x[s.cell] if isinstance(x, Torus) else x.get(s.cell)
        if here is not None and sm[s.state].symbol != here:
            problems.append(f"step {k}: state {s.state!r} reads {sm[s.state].symbol!r} "
                            f"but cell {s.cell} holds {here!r}")
        if s.edge is None:
            if k != len(b.steps) - 1:
                problems.append(f"step {k}: missing edge")
            continue
        e = a.edges[s.edge]
        if k + 1 < len(b.steps):
            nxt = b.steps[k + 1]
        elif b.cycle_start is not None:
            c = b.steps[b.cycle_start]
            nxt = Step((c.cell[0] + b.drift[0], c.cell[1] + b.drift[1]), c.state, c.edge)
        else:
            problems.append(f"step {k}: edge {s.edge} leads nowhere")
            continue
        if e.src != s.state or e.dst != nxt.state:
            problems.append(f"step {k}: edge {s.edge} does not join {s.state!r} to {nxt.state!r}")
        if (s.cell[0] + e.dx, s.cell[1] + e.dy) != nxt.cell:
            problems.append(f"step {k}: edge {s.edge} moves to "
                            f"{(s.cell[0] + e.dx, s.cell[1] + e.dy)}, not {nxt.cell}")
    return problems


def extract_branch(ar: Arena, ws: WinningSet, start: Cell) -> Branch:
    """A branch from the start node of ``start``.

    From a winning start, follow the strategy (lowest edge id at universal
    nodes) until a node repeats.  From a losing start, let universal nodes
    pick a successor of least attractor rank; the branch then dies in a
    dead end.
    """
    comp = ar.automaton.compiled
    n = ar.starts[start]
    winning = ws.winning[n]
    cell = start
    steps: list[Step] = []
    seen: dict[int, int] = {}
    origin: dict[int, Cell] = {}
    last_target = None
    while True:
        if n == ar.exterior:
            steps.append(Step(cell, last_target, None))
            return Branch(tuple(steps))
        if n in seen:
            k = seen[n]
            drift = (cell[0] - origin[n][0], cell[1] - origin[n][1])
            return Branch(tuple(steps), k, drift)
        seen[n] = len(steps)
        origin[n] = cell
        _, v = ar.labels[n]
        mv = ar.moves[n]
        if winning:
            if ar.exists[n]:
                choice = ws.strategy[n]
            else:
                choice = mv[0]
        else:
            if not mv:
                steps.append(Step(cell, comp.ids[v], None))
                return Branch(tuple(steps))
            choice = min(mv, key=lambda em: (ws.rank.get(em[1], len(ar)), em[0]))
        eid, m = choice
        steps.append(Step(cell, comp.ids[v], eid))
        e = ar.automaton.edges[eid]
        cell = (cell[0] + e.dx, cell[1] + e.dy)
        last_target = e.dst
        n = m
