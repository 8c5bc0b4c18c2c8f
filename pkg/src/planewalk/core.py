"""Domain types for plane-walking automata, patterns and periodic configurations.

Coordinates follow the usual lattice convention: x grows to the right and
y grows upwards, so ``UP == (0, 1)``.  Text grids are always listed top row
first; the top row therefore carries the largest y.
"""

from __future__ import annotations

import enum
import itertools
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx

from .errors import InvalidAutomaton, NondeterministicUnquantified, PatternTooLarge

Cell = tuple[int, int]
Direction = tuple[int, int]

STAY: Direction = (0, 0)
RIGHT: Direction = (1, 0)
LEFT: Direction = (-1, 0)
UP: Direction = (0, 1)
DOWN: Direction = (0, -1)
UNIT_DIRECTIONS = (UP, DOWN, RIGHT, LEFT, STAY)
ARROWS = {STAY: "•", RIGHT: "→", LEFT: "←", UP: "↑", DOWN: "↓"}


def arrow(d: Direction) -> str:
    return ARROWS.get(tuple(d), f"({d[0]},{d[1]})")


class Quantifier(enum.Enum):
    EXISTS = "exists"
    FORALL = "forall"
    UNSPECIFIED = None
    # only ever produced by effective_quantifier, never declared
    WILDCARD = "wildcard"


@dataclass(frozen=True)
class State:
    id: str
    symbol: str
    quant: Quantifier = Quantifier.UNSPECIFIED


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    dx: int
    dy: int

    @property
    def direction(self) -> Direction:
        return (self.dx, self.dy)


class _Compiled:
    """Index-based view of a valid automaton, shared by the solvers."""

    __slots__ = ("ids", "index", "symbols", "sym_index", "sym_of", "out",
                 "exists", "init", "effective")

    def __init__(self, a: Automaton):
        problems = validate_automaton(a)
        if problems:
            raise InvalidAutomaton(problems)
        self.ids = [s.id for s in a.states]
        self.index = {sid: i for i, sid in enumerate(self.ids)}
        self.symbols = list(a.alphabet)
        self.sym_index = {s: i for i, s in enumerate(self.symbols)}
        self.sym_of = [self.sym_index[s.symbol] for s in a.states]
        self.out = [[] for _ in a.states]
        for eid, e in enumerate(a.edges):
            self.out[self.index[e.src]].append(
                (eid, self.index[e.dst], e.dx, e.dy))
        self.effective = [_effective(a, s) for s in a.states]
        # wildcard states have at most one applicable move, so either
        # reading of the quantifier gives the same game
        self.exists = [q is not Quantifier.FORALL for q in self.effective]
        self.init = [self.index[a.initial[s]] for s in self.symbols]


@dataclass(frozen=True)
class Automaton:
    """A labelled directed graph ``(V, E, Σ, D, I)`` with optional quantifiers.

    ``initial`` maps every symbol ``a`` to the id of the state ``i_a``.
    Construction never raises; use :func:`validate_automaton` to list
    problems, or touch any solver, which refuses invalid input.
    """

    alphabet: tuple[str, ...]
    states: tuple[State, ...]
    edges: tuple[Edge, ...]
    initial: Mapping[str, str] = field(default_factory=dict)
    name: str = ""

    @classmethod
    def build(cls, alphabet, states, edges, initial, name=""):
        """Convenience constructor from plain tuples.

        ``states`` holds ``(id, symbol)`` or ``(id, symbol, quant)`` items where
        quant is ``"exists"``, ``"forall"``, ``None`` or a :class:`Quantifier`;
        ``edges`` holds ``(src, dst, dx, dy)`` or ``(src, dst, (dx, dy))``.
        """
        sts = []
        for s in states:
            if isinstance(s, State):
                sts.append(s)
                continue
            q = s[2] if len(s) > 2 else None
            sts.append(State(s[0], s[1], q if isinstance(q, Quantifier) else Quantifier(q)))
        eds = []
        for e in edges:
            if isinstance(e, Edge):
                eds.append(e)
            elif len(e) == 3:
                eds.append(Edge(e[0], e[1], e[2][0], e[2][1]))
            else:
                eds.append(Edge(*e))
        return cls(tuple(alphabet), tuple(sts), tuple(eds), dict(initial), name)

    @cached_property
    def compiled(self) -> _Compiled:
        return _Compiled(self)

    @cached_property
    def state_map(self) -> dict[str, State]:
        return {s.id: s for s in self.states}

    def state(self, sid: str) -> State:
        return self.state_map[sid]

    def out_edges(self, sid: str) -> list[tuple[int, Edge]]:
        return [(i, e) for i, e in enumerate(self.edges) if e.src == sid]

    def directions(self) -> set[Direction]:
        return {e.direction for e in self.edges}

    def with_edges(self, edges: Iterable[Edge]) -> Automaton:
        return Automaton(self.alphabet, self.states, tuple(edges), dict(self.initial), self.name)

    def renamed(self, mapping: Mapping[str, str]) -> Automaton:
        """Copy with every state id passed through ``mapping``."""
        return Automaton(
            self.alphabet,
            tuple(State(mapping[s.id], s.symbol, s.quant) for s in self.states),
            tuple(Edge(mapping[e.src], mapping[e.dst], e.dx, e.dy) for e in self.edges),
            {a: mapping[v] for a, v in self.initial.items()},
            self.name,
        )


# ---------------------------------------------------------------- patterns


def _check_cell_symbols(cells: Iterable[str], alphabet: Sequence[str] | None):
    if alphabet is None:
        return
    allowed = set(alphabet)
    bad = sorted({c for c in cells if c not in allowed})
    if bad:
        from .errors import AlphabetMismatch
        raise AlphabetMismatch(f"symbols {bad} are not in alphabet {list(alphabet)}")


class FinitePattern:
    """A symbol assignment on a finite, nonempty support of ℤ²."""

    __slots__ = ("cells", "_hash")

    def __init__(self, cells: Mapping[Cell, str]):
        if not cells:
            raise ValueError("a pattern needs a nonempty support")
        self.cells = {(int(x), int(y)): s for (x, y), s in cells.items()}
        self._hash = None

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[str | None]]) -> FinitePattern:
        """Rows are given top to bottom; ``None`` or ``"."`` leaves a hole."""
        h = len(rows)
        cells = {}
        for r, row in enumerate(rows):
            for x, s in enumerate(row):
                if s is not None and s != ".":
                    cells[(x, h - 1 - r)] = s
        return cls(cells)

    @property
    def support(self) -> frozenset[Cell]:
        return frozenset(self.cells)

    def __contains__(self, cell) -> bool:
        return cell in self.cells

    def __getitem__(self, cell: Cell) -> str:
        return self.cells[cell]

    def get(self, cell: Cell, default=None):
        return self.cells.get(cell, default)

    def __len__(self) -> int:
        return len(self.cells)

    def bbox(self) -> tuple[int, int, int, int]:
        xs = [c[0] for c in self.cells]
        ys = [c[1] for c in self.cells]
        return min(xs), min(ys), max(xs), max(ys)

    def is_rectangle(self) -> bool:
        x0, y0, x1, y1 = self.bbox()
        return len(self.cells) == (x1 - x0 + 1) * (y1 - y0 + 1)

    def rows(self) -> list[list[str | None]]:
        x0, y0, x1, y1 = self.bbox()
        return [[self.cells.get((x, y)) for x in range(x0, x1 + 1)]
                for y in range(y1, y0 - 1, -1)]

    def translate(self, dx: int, dy: int) -> FinitePattern:
        return FinitePattern({(x + dx, y + dy): s for (x, y), s in self.cells.items()})

    def anchor(self) -> Cell:
        """First support cell in row-major order (top row, then leftmost)."""
        return min(self.cells, key=lambda c: (-c[1], c[0]))

    def normalized(self) -> FinitePattern:
        ax, ay = self.anchor()
        return self.translate(-ax, -ay)

    def symbols(self) -> set[str]:
        return set(self.cells.values())

    def check_alphabet(self, alphabet):
        _check_cell_symbols(self.cells.values(), alphabet)

    def __eq__(self, other):
        return isinstance(other, FinitePattern) and self.cells == other.cells

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.cells.items()))
        return self._hash

    def __repr__(self):
        return f"FinitePattern({self.rows()!r})"


@dataclass(frozen=True)
class Torus:
    """The (p, q)-periodic configuration ``x[i, j] = grid[i mod p, j mod q]``.

    ``cells`` is stored bottom row first: index ``y * width + x``.
    """

    width: int
    height: int
    cells: tuple[str, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("torus periods must be positive")
        if len(self.cells) != self.width * self.height:
            raise ValueError("torus grid size does not match its periods")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[str]]) -> Torus:
        h = len(rows)
        w = len(rows[0]) if h else 0
        if any(len(r) != w for r in rows):
            raise ValueError("torus rows have different lengths")
        cells = [None] * (w * h)
        for r, row in enumerate(rows):
            y = h - 1 - r
            for x, s in enumerate(row):
                cells[y * w + x] = s
        return cls(w, h, tuple(cells))

    @classmethod
    def uniform(cls, symbol: str, width: int = 1, height: int = 1) -> Torus:
        return cls(width, height, (symbol,) * (width * height))

    def at(self, x: int, y: int) -> str:
        return self.cells[(y % self.height) * self.width + (x % self.width)]

    def __getitem__(self, cell: Cell) -> str:
        return self.at(*cell)

    def rows(self) -> list[list[str]]:
        w = self.width
        return [list(self.cells[y * w:(y + 1) * w]) for y in range(self.height - 1, -1, -1)]

    def domain(self) -> Iterator[Cell]:
        for y in range(self.height):
            for x in range(self.width):
                yield (x, y)

    def shifted(self, dx: int, dy: int) -> Torus:
        """The configuration σ^(dx,dy)(x), i.e. ``y[i] = x[i + (dx, dy)]``."""
        return Torus(self.width, self.height,
                     tuple(self.at(x + dx, y + dy) for y in range(self.height)
                           for x in range(self.width)))

    def unfold(self, m: int, n: int) -> Torus:
        """Same ℤ² configuration, fundamental domain repeated m × n times."""
        w, h = self.width * m, self.height * n
        return Torus(w, h, tuple(self.at(x, y) for y in range(h) for x in range(w)))

    def window(self, x0: int, y0: int, w: int, h: int) -> FinitePattern:
        return FinitePattern({(x, y): self.at(x0 + x, y0 + y)
                              for y in range(h) for x in range(w)})

    def symbols(self) -> set[str]:
        return set(self.cells)

    def check_alphabet(self, alphabet):
        _check_cell_symbols(self.cells, alphabet)


def all_tori(alphabet: Sequence[str], width: int, height: int) -> Iterator[Torus]:
    for cells in itertools.product(alphabet, repeat=width * height):
        yield Torus(width, height, cells)


def all_rectangles(alphabet: Sequence[str], width: int, height: int) -> Iterator[FinitePattern]:
    coords = [(x, y) for y in range(height) for x in range(width)]
    for cells in itertools.product(alphabet, repeat=width * height):
        yield FinitePattern(dict(zip(coords, cells)))


# --------------------------------------------------------------------- SFT


@dataclass(frozen=True)
class SftSpec:
    """Forbidden patterns over ``alphabet``, explicit or as a predicate.

    Explicit patterns are stored normalized (anchor at the origin).  The
    predicate form receives the tuple of symbols read at ``shape`` (offsets
    from the anchor) and answers whether that window is forbidden.
    """

    alphabet: tuple[str, ...]
    patterns: tuple[FinitePattern, ...] = ()
    shape: tuple[Cell, ...] | None = None
    predicate: Callable[[tuple[str, ...]], bool] | None = None

    @classmethod
    def from_patterns(cls, alphabet, patterns) -> SftSpec:
        pats = []
        for p in patterns:
            if not isinstance(p, FinitePattern):
                p = FinitePattern.from_rows(p)
            p.check_alphabet(alphabet)
            n = p.normalized()
            if n not in pats:
                pats.append(n)
        return cls(tuple(alphabet), tuple(pats))

    @classmethod
    def from_predicate(cls, alphabet, shape, predicate) -> SftSpec:
        return cls(tuple(alphabet), (), tuple(shape), predicate)

    @property
    def is_predicate(self) -> bool:
        return self.predicate is not None

    def window_size(self) -> tuple[int, int]:
        """Width and height of the smallest box holding every forbidden shape."""
        shapes = [tuple(p.cells) for p in self.patterns]
        if self.shape is not None:
            shapes.append(self.shape)
        if not shapes:
            return (0, 0)
        w = max(max(c[0] for c in s) - min(c[0] for c in s) + 1 for s in shapes)
        h = max(max(c[1] for c in s) - min(c[1] for c in s) + 1 for s in shapes)
        return (w, h)

    def forbidden_at(self, lookup: Callable[[Cell], str | None], cell: Cell) -> bool:
        """Whether some forbidden pattern sits anchored at ``cell``.

        ``lookup`` returns ``None`` off the support; a pattern that is not
        fully inside the support does not count as an occurrence.
        """
        cx, cy = cell
        for p in self.patterns:
            for (dx, dy), s in p.cells.items():
                if lookup((cx + dx, cy + dy)) != s:
                    break
            else:
                return True
        if self.predicate is not None:
            window = tuple(lookup((cx + dx, cy + dy)) for dx, dy in self.shape)
            if None not in window and self.predicate(window):
                return True
        return False

    def occurrences(self, x: Torus | FinitePattern) -> list[Cell]:
        if isinstance(x, Torus):
            return [c for c in x.domain() if self.forbidden_at(lambda d: x.at(*d), c)]
        return sorted((c for c in x.cells if self.forbidden_at(x.get, c)),
                      key=lambda c: (-c[1], c[0]))

    def avoided_by(self, x: Torus | FinitePattern) -> bool:
        return not self.occurrences(x)

    def domino_parts(self) -> tuple[set[tuple[str, str]], set[tuple[str, str]]]:
        """Split explicit domino patterns into (horizontal, vertical) pairs.

        Horizontal pairs are (left, right); vertical pairs are (bottom, top).
        """
        from .errors import NotDominoSft
        if self.is_predicate:
            raise NotDominoSft("predicate-form SFTs have no explicit dominoes")
        hor, ver = set(), set()
        for p in self.patterns:
            cells = sorted(p.cells)
            if len(cells) == 2 and cells[1][0] - cells[0][0] == 1 and cells[0][1] == cells[1][1]:
                hor.add((p[cells[0]], p[cells[1]]))
            elif len(cells) == 2 and cells[0][0] == cells[1][0] and cells[1][1] - cells[0][1] == 1:
                ver.add((p[cells[0]], p[cells[1]]))
            else:
                raise NotDominoSft(f"pattern {p.rows()} is not a domino")
        return hor, ver


def domino(left_or_bottom: str, right_or_top: str, vertical: bool = False) -> FinitePattern:
    if vertical:
        return FinitePattern({(0, 0): left_or_bottom, (0, 1): right_or_top})
    return FinitePattern({(0, 0): left_or_bottom, (1, 0): right_or_top})


# --------------------------------------------------------------- hierarchy


@dataclass(frozen=True, order=False)
class HierarchyLevel:
    kind: str  # "Delta", "Sigma", "Pi" or "AltUnbounded"
    n: int | None = None

    def __post_init__(self):
        if self.kind == "AltUnbounded":
            if self.n is not None:
                raise ValueError("AltUnbounded takes no index")
        elif self.kind in ("Delta", "Sigma", "Pi"):
            if self.n is None or self.n < 1:
                raise ValueError(f"{self.kind} needs an index n >= 1")
        else:
            raise ValueError(f"unknown level kind {self.kind!r}")

    def __str__(self):
        return self.kind if self.n is None else f"{self.kind}({self.n})"

    @classmethod
    def parse(cls, text: str) -> HierarchyLevel:
        text = text.strip()
        if text == "AltUnbounded":
            return cls("AltUnbounded")
        kind, _, rest = text.partition("(")
        return cls(kind, int(rest.rstrip(")")))

    def covers(self, blocks: int, first: str | None) -> bool:
        """Whether a quantifier word with ``blocks`` blocks fits this level.

        ``first`` is ``"E"`` or ``"A"`` (ignored for the empty word).
        """
        if self.kind == "AltUnbounded":
            return True
        if self.kind == "Delta":
            return blocks <= self.n - 1
        lead = "E" if self.kind == "Sigma" else "A"
        return blocks <= self.n - 1 or (blocks == self.n and first == lead)

    def __le__(self, other: HierarchyLevel) -> bool:
        if other.kind == "AltUnbounded":
            return True
        if self.kind == "AltUnbounded":
            return False
        top = self.n + 1
        return all(other.covers(b, f) for b in range(top + 1) for f in "EA"
                   if self.covers(b, f))

    def __lt__(self, other):
        return self <= other and self != other


Delta = lambda n: HierarchyLevel("Delta", n)  # noqa: E731
Sigma = lambda n: HierarchyLevel("Sigma", n)  # noqa: E731
Pi = lambda n: HierarchyLevel("Pi", n)  # noqa: E731
ALT_UNBOUNDED = HierarchyLevel("AltUnbounded")


# -------------------------------------------------------------- operations


def validate_automaton(a: Automaton, *, alternating: bool = True) -> list[str]:
    """List every violated invariant; an empty list means the automaton is valid.

    With ``alternating=False`` (recognising mode) nondeterministic states
    without quantifiers are allowed.
    """
    out = []
    alphabet = list(a.alphabet)
    if not alphabet:
        out.append("alphabet is empty")
    seen = set()
    for s in alphabet:
        if not isinstance(s, str) or not s:
            out.append(f"symbol {s!r} is not a nonempty string")
        if s in seen:
            out.append(f"symbol {s!r} is declared twice")
        seen.add(s)
    ids = set()
    for st in a.states:
        if st.id in ids:
            out.append(f"state {st.id!r} is declared twice")
        ids.add(st.id)
        if st.symbol not in seen:
            out.append(f"state {st.id!r} carries symbol {st.symbol!r} outside the alphabet")
        if st.quant is Quantifier.WILDCARD:
            out.append(f"state {st.id!r} declares the internal wildcard quantifier")
    edge_keys = set()
    for i, e in enumerate(a.edges):
        label = f"edge {i} ({e.src} -> {e.dst}, {arrow(e.direction)})"
        if e.src not in ids:
            out.append(f"{label}: undeclared source state {e.src!r}")
        if e.dst not in ids:
            out.append(f"{label}: undeclared target state {e.dst!r}")
        key = (e.src, e.dst, e.dx, e.dy)
        if key in edge_keys:
            out.append(f"{label}: duplicate edge")
        edge_keys.add(key)
    for sym in alphabet:
        if sym not in a.initial:
            out.append(f"initial state missing for symbol {sym!r}")
    targets = {}
    for sym, sid in a.initial.items():
        if sym not in seen:
            out.append(f"initial map names symbol {sym!r} outside the alphabet")
            continue
        if sid not in ids:
            out.append(f"initial state {sid!r} for symbol {sym!r} is undeclared")
            continue
        if a.state(sid).symbol != sym:
            out.append(f"initial state {sid!r} for symbol {sym!r} carries symbol "
                       f"{a.state(sid).symbol!r}")
        if sid in targets:
            out.append(f"initial state {sid!r} is shared by symbols {targets[sid]!r} and {sym!r}")
        targets[sid] = sym
    if alternating and not out:
        for st in a.states:
            if st.quant is Quantifier.UNSPECIFIED and not _deterministic(a, st.id):
                out.append(f"state {st.id!r} is nondeterministic but has no quantifier")
    return out


def _deterministic(a: Automaton, sid: str) -> bool:
    outs = [e for e in a.edges if e.src == sid]
    if len(outs) <= 1:
        return True
    if len({e.direction for e in outs}) != 1:
        return False
    syms = [a.state(e.dst).symbol for e in outs]
    return len(set(syms)) == len(syms)


def _effective(a: Automaton, st: State) -> Quantifier:
    if _deterministic(a, st.id):
        return Quantifier.WILDCARD
    if st.quant is Quantifier.UNSPECIFIED:
        raise NondeterministicUnquantified(st.id)
    return st.quant


def effective_quantifier(a: Automaton, sid: str) -> Quantifier:
    """``WILDCARD`` for syntactically deterministic states, else the declared one.

    A state is syntactically deterministic when it has at most one outgoing
    edge, or all its edges share one direction and lead to states with
    pairwise distinct symbols (so at most one of them can ever apply).
    """
    if sid not in a.state_map:
        raise KeyError(sid)
    return _effective(a, a.state(sid))


def classify(a: Automaton) -> HierarchyLevel:
    """Syntactic level of ``a`` in the Δ/Σ/Π alternation hierarchy."""
    problems = validate_automaton(a)
    if problems:
        raise InvalidAutomaton(problems)
    g = nx.DiGraph()
    g.add_nodes_from(s.id for s in a.states)
    g.add_edges_from((e.src, e.dst) for e in a.edges)
    starts = set(a.initial.values())
    reach = set(starts)
    for s in starts:
        reach |= nx.descendants(g, s)
    g = g.subgraph(reach)
    cond = nx.condensation(g)
    quant = {}
    for c in cond.nodes:
        members = cond.nodes[c]["members"]
        qs = {_effective(a, a.state(v)) for v in members} - {Quantifier.WILDCARD}
        cyclic = len(members) > 1 or any(g.has_edge(v, v) for v in members)
        if len(qs) == 2 and cyclic:
            return ALT_UNBOUNDED
        quant[c] = ("E" if Quantifier.EXISTS in qs else "A") if qs else None

    # profiles: (first letter, last letter) -> max number of blocks
    def extend(profiles, q):
        if q is None:
            return dict(profiles)
        out = {}
        for (first, last), b in profiles.items():
            if first is None:
                key, nb = (q, q), 1
            elif last == q:
                key, nb = (first, last), b
            else:
                key, nb = (first, q), b + 1
            out[key] = max(out.get(key, 0), nb)
        return out

    mapping = cond.graph["mapping"]
    incoming: dict[int, dict] = {}
    for s in starts:
        incoming.setdefault(mapping[s], {})[(None, None)] = 0
    best: dict = {}
    for c in nx.topological_sort(cond):
        here = extend(incoming.get(c, {}), quant[c])
        for k, b in here.items():
            best[k] = max(best.get(k, 0), b)
        for succ in cond.successors(c):
            tgt = incoming.setdefault(succ, {})
            for k, b in here.items():
                tgt[k] = max(tgt.get(k, -1), b)
    k = max(best.values(), default=0)
    if k == 0:
        return Delta(1)
    firsts = {f for (f, _), b in best.items() if b == k}
    if firsts == {"E"}:
        return Sigma(k)
    if firsts == {"A"}:
        return Pi(k)
    return Delta(k + 1)


def _unit_path(d: Direction) -> list[Direction]:
    dx, dy = d
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    return [(sx, 0)] * abs(dx) + [(0, sy)] * abs(dy)


def normalize_directions(a: Automaton) -> Automaton:
    """Equivalent automaton (on tori) whose directions are unit or stay moves.

    Long edges leaving a state ``v`` in direction ``d`` are replaced by one
    chain per ``(v, d)``: the head steps one unit at a time through fan
    states (one per symbol, since every state reads the cell it stands on),
    and the last fan carries ``v``'s quantifier and jumps to the original
    targets.  For universal states each chain also gets accepting sinks for
    symbols no target could match, and an extra deterministic branch checks
    that at least one original edge applies, so blocked chains stay vacuous
    exactly as blocked edges were.  Every added state is deterministic, which
    keeps :func:`classify` unchanged.

    Finite-pattern acceptance is not preserved: a chain may leave the support
    (and accept) where the original jump landed inside it.
    """
    a.compiled  # validates
    if all(abs(dx) + abs(dy) <= 1 for dx, dy in a.directions()):
        return a
    sigma = list(a.alphabet)
    used = {s.id for s in a.states}
    new_states = list(a.states)
    new_edges: list[Edge] = []

    def fresh(base):
        name, k = base, 1
        while name in used:
            k += 1
            name = f"{base}~{k}"
        used.add(name)
        return name

    sinks: dict[str, str] = {}

    def sink(sym):
        if sym not in sinks:
            sid = fresh(f"acc[{sym}]")
            new_states.append(State(sid, sym))
            new_edges.append(Edge(sid, sid, 0, 0))
            sinks[sym] = sid
        return sinks[sym]

    def walk(tag, steps, last_quant, finals):
        """Fans for every intermediate cell of ``steps``.

        ``finals`` maps a symbol to the list of states reached in that symbol
        after the last step.  Returns the list of (target, step) edges leaving
        the source.
        """
        if len(steps) == 1:
            return [(t, steps[0]) for sym in sigma for t in finals.get(sym, [])]
        fans = []
        for k in range(1, len(steps)):
            quant = last_quant if k == len(steps) - 1 else Quantifier.UNSPECIFIED
            layer = {}
            for sym in sigma:
                sid = fresh(f"{tag}#{k}[{sym}]")
                new_states.append(State(sid, sym, quant))
                layer[sym] = sid
            fans.append(layer)
        for k in range(len(fans) - 1):
            for sid in fans[k].values():
                for nxt in fans[k + 1].values():
                    new_edges.append(Edge(sid, nxt, *steps[k + 1]))
        for sid in fans[-1].values():
            for sym in sigma:
                for t in finals.get(sym, []):
                    new_edges.append(Edge(sid, t, *steps[-1]))
        return [(sid, steps[0]) for sid in fans[0].values()]

    for st in a.states:
        outs = [e for e in a.edges if e.src == st.id]
        long_dirs = sorted({e.direction for e in outs if abs(e.dx) + abs(e.dy) > 1})
        new_edges.extend(e for e in outs if abs(e.dx) + abs(e.dy) <= 1)
        if not long_dirs:
            continue
        universal = _effective(a, st) is Quantifier.FORALL
        for d in long_dirs:
            finals: dict[str, list[str]] = {}
            for e in outs:
                if e.direction == d:
                    finals.setdefault(a.state(e.dst).symbol, []).append(e.dst)
            if universal:
                for sym in sigma:
                    if sym not in finals:
                        finals[sym] = [sink(sym)]
            for t, step in walk(f"{st.id}>{d[0]},{d[1]}", _unit_path(d), st.quant, finals):
                new_edges.append(Edge(st.id, t, *step))
        if universal:
            _nonempty_branch(a, st, outs, sigma, fresh, sink, new_states, new_edges)

    b = Automaton(a.alphabet, tuple(new_states), tuple(new_edges), dict(a.initial), a.name)
    return b


def _nonempty_branch(a, st, outs, sigma, fresh, sink, new_states, new_edges):
    """Deterministic branch accepting iff some edge of ``st`` applies.

    Visits every target offset of ``st`` (in a fixed order) reading the
    symbol there and jumps to an accepting sink on the first match.
    """
    wanted: dict[Direction, set[str]] = {}
    for e in outs:
        wanted.setdefault(e.direction, set()).add(a.state(e.dst).symbol)
    offsets = sorted(wanted, key=lambda d: (-d[1], d[0]))
    pos = (0, 0)
    sources = [st.id]
    for k, off in enumerate(offsets):
        step = (off[0] - pos[0], off[1] - pos[1])
        path = _unit_path(step) if step != (0, 0) else [(0, 0)]
        # intermediate fans
        for j, u in enumerate(path):
            last = j == len(path) - 1
            layer = []
            for sym in sigma:
                if last and sym in wanted[off]:
                    tgt = sink(sym)
                elif last and k == len(offsets) - 1:
                    continue  # nothing applies: dead end
                else:
                    tgt = fresh(f"{st.id}?{k}.{j}[{sym}]")
                    new_states.append(State(tgt, sym))
                    layer.append(tgt)
                for src in sources:
                    new_edges.append(Edge(src, tgt, *u))
            sources = layer
        pos = off
