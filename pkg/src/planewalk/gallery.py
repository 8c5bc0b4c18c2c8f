"""Concrete automata, direct membership deciders and pattern generators."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .constructions import intersect_with_sft
from .core import Automaton, FinitePattern, SftSpec, Torus
from .errors import AlphabetMismatch, NoComplementFound
from .formats import parse_automaton

BINARY = ("0", "1")
LABYRINTH = ("0", "1", "#")


def _load(name: str) -> Automaton:
    text = resources.files("planewalk.data").joinpath(name).read_text(encoding="utf-8")
    return parse_automaton(text)


def _check(x, alphabet):
    bad = sorted(set(x.cells) if isinstance(x, Torus) else set(x.cells.values()))
    bad = [s for s in bad if s not in alphabet]
    if bad:
        raise AlphabetMismatch(f"symbols {bad} are not in {list(alphabet)}")


# ---------------------------------------------------------------- even runs


@lru_cache(maxsize=None)
def even_runs_automaton() -> Automaton:
    """Π₁ automaton: every run of 1s, by row and by column, is even or infinite.

    The universal ``zero`` state starts on a 0 and sends one branch right
    and one up; each branch counts the 1s modulo 2 and may stop only on the
    next 0 after an even count.
    """
    return _load("even_runs.json")


def _runs_even(line) -> bool:
    if all(s == "1" for s in line):
        return True
    k = line.index("0")
    rolled = line[k:] + line[:k]
    run = 0
    for s in rolled + ["0"]:
        if s == "1":
            run += 1
        else:
            if run % 2:
                return False
            run = 0
    return True


def in_even_runs(t: Torus) -> bool:
    _check(t, BINARY)
    rows = t.rows()
    cols = [[t.at(x, y) for y in range(t.height)] for x in range(t.width)]
    return all(_runs_even(r) for r in rows) and all(_runs_even(c) for c in cols)


def even_runs_sample() -> FinitePattern:
    """A small pattern whose runs are all even; its torus completion is in the subshift."""
    return FinitePattern.from_rows([
        ["0", "1", "1", "0"],
        ["0", "1", "1", "0"],
        ["0", "0", "0", "0"],
    ])


# ------------------------------------------------------------ sunny side up


@lru_cache(maxsize=None)
def ssu_automaton() -> Automaton:
    """Π₁ automaton for configurations with at most one 1.

    From a 1, universal branches sweep each quarter plane: straight along
    one axis, turning once, and the ``hit`` state (a 1 with no moves)
    rejects whenever a second 1 is found.
    """
    return _load("ssu.json")


def in_ssu(x: Torus | FinitePattern) -> bool:
    _check(x, BINARY)
    if isinstance(x, Torus):
        return "1" not in x.cells
    return sum(1 for s in x.cells.values() if s == "1") <= 1


# ----------------------------------------------------------- cone labyrinth

CONE_LABYRINTH_FORBIDDEN = (
    [["0", "1", "0"]],
    [["1", "1"]],
    [["#", "1", "#"]],
    [["0"], ["#"]],
    [["#"], ["0"]],
    [["1"], ["#"]],
    [["#"], ["1"]],
)


def cone_labyrinth_sft() -> SftSpec:
    return SftSpec.from_patterns(LABYRINTH, CONE_LABYRINTH_FORBIDDEN)


@lru_cache(maxsize=None)
def cone_labyrinth_core() -> Automaton:
    """Σ₁ automaton assuming the local rules already hold.

    From an entrance ``#1`` it walks ↗, → or ↘ (each diagonal as a vertical
    move followed by a → move) through 0s and accepts on a 1.
    """
    return _load("cone_labyrinth_core.json")


@lru_cache(maxsize=None)
def cone_labyrinth_automaton() -> Automaton:
    """The core automaton guarded by the seven forbidden patterns."""
    a = intersect_with_sft(cone_labyrinth_core(), cone_labyrinth_sft())
    return Automaton(a.alphabet, a.states, a.edges, a.initial, "cone_labyrinth")


@dataclass
class LabyrinthVerdict:
    in_subshift: bool
    violations: list[tuple[str, tuple[int, int]]] = field(default_factory=list)
    escaped: list[tuple[int, int]] = field(default_factory=list)

    def __bool__(self):
        return self.in_subshift


_CONE_STEPS = ((1, 1), (1, 0), (1, -1))


def in_cone_labyrinth(x: Torus | FinitePattern) -> LabyrinthVerdict:
    """Decide membership from the definition.

    Every entrance (a 1 whose left neighbour is #) must reach an exit (a 1
    whose right neighbour is #) by ↗, → and ↘ steps through 0s.  On finite
    patterns only fully visible forbidden patterns count, and an entrance
    whose search leaves the support counts as matched.
    """
    _check(x, LABYRINTH)
    torus = isinstance(x, Torus)
    if torus:
        def get(c):
            return x.at(*c)

        def norm(c):
            return (c[0] % x.width, c[1] % x.height)
        cells = list(x.domain())
    else:
        get = x.get

        def norm(c):
            return c
        cells = sorted(x.cells, key=lambda c: (-c[1], c[0]))
    violations = []
    sft = cone_labyrinth_sft()
    for c in cells:
        if sft.forbidden_at(get, c):
            violations.append(("ForbiddenPattern", c))
    escaped = []
    for c in cells:
        if get(c) != "1" or get((c[0] - 1, c[1])) != "#":
            continue
        found = False
        out = False
        seen = {norm(c)}
        queue = deque([c])
        while queue and not found:
            u = queue.popleft()
            for dx, dy in _CONE_STEPS:
                v = (u[0] + dx, u[1] + dy)
                s = get(v)
                if s is None:
                    out = True
                    continue
                if s == "1":
                    right = get((v[0] + 1, v[1]))
                    if right == "#":
                        found = True
                        break
                    if right is None:
                        out = True
                elif s == "0" and norm(v) not in seen:
                    seen.add(norm(v))
                    queue.append(v)
        if found:
            continue
        if out:
            escaped.append(c)
        else:
            violations.append(("UnmatchedEntrance", c))
    return LabyrinthVerdict(not violations, violations, escaped)


def x_n_pattern(n: int) -> FinitePattern:
    """The labyrinth with one entrance and no exit.

    Cell (0, 0) holds 1, the other cells with 0 <= i <= n hold 0 and the rest
    hold #.  The window [-1, n+1] × [-(n+1), n+1] contains the whole cone of
    the entrance, so no search escapes it.
    """
    cells = {}
    for j in range(-(n + 1), n + 2):
        for i in range(-1, n + 2):
            if (i, j) == (0, 0):
                s = "1"
            elif 0 <= i <= n:
                s = "0"
            else:
                s = "#"
            cells[(i, j)] = s
    return FinitePattern(cells)


def x_n_torus(n: int) -> Torus:
    """Periodic version of ``x_n_pattern``: one # column, period 2n+3 vertically."""
    h = 2 * n + 3
    rows = []
    for j in range(h - 1, -1, -1):
        row = ["#"] + ["0"] * (n + 1)
        if j == n + 1:
            row[1] = "1"
        rows.append(row)
    return Torus.from_rows(rows)


def random_labyrinth(rng: random.Random, max_corridors: int = 2, max_width: int = 5,
                     max_height: int = 6) -> Torus:
    """A torus in the cone labyrinth built by planting matched entrance/exit pairs.

    Each corridor is a # column followed by ``k >= 2`` columns of 0s.  Every
    planted entrance on the first corridor column gets an exit on the last
    one within reach of its cone.
    """
    height = rng.randint(1, max_height)
    columns: list[list[str]] = []
    for _ in range(rng.randint(1, max_corridors)):
        k = rng.randint(2, max_width)
        grid = [["0"] * height for _ in range(k)]
        rows = list(range(height))
        rng.shuffle(rows)
        entrances: list[int] = []
        exits: set[int] = set()
        for r in rows[:rng.randint(0, height)]:
            # on a two-wide corridor a row cannot hold both an entrance and an exit
            if k == 2 and r in exits:
                continue
            choices = [(r + d) % height for d in range(-(k - 1), k)]
            if k == 2:
                choices = [e for e in choices if e != r and e not in entrances]
            if not choices:
                continue
            entrances.append(r)
            exits.add(rng.choice(choices))
        for r in entrances:
            grid[0][r] = "1"
        for e in exits:
            grid[k - 1][e] = "1"
        columns.append(["#"] * height)
        columns.extend(grid)
    width = len(columns)
    return Torus(width, height, tuple(columns[x][y] for y in range(height) for x in range(width)))


# ------------------------------------------------------------- Kari-Moore


def kari_moore_rectangle(n: int, k: int) -> FinitePattern:
    """Pattern on [0, n] × [0, k]: row 0 and column 0 hold 1, everything else 0."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be at least 1")
    return FinitePattern({(i, j): "1" if i == 0 or j == 0 else "0"
                          for i in range(n + 1) for j in range(k + 1)})


def kari_moore_torus(n: int, k: int) -> Torus:
    """The (n+1, k+1)-periodic completion of ``kari_moore_rectangle``."""
    r = kari_moore_rectangle(n, k)
    return Torus(n + 1, k + 1, tuple(r[(i, j)] for j in range(k + 1) for i in range(n + 1)))


def is_in_f_default(n: int, m: int, strict: bool = True) -> bool:
    """Whether ``m = i*n + j`` for naturals with ``j < i`` (``j <= i`` if not strict)."""
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    for i in range(m + 1):
        j = m - i * n
        if j < 0:
            break
        if j < i or (not strict and j == i):
            return True
    return False


def complement_max(n: int, strict: bool = True) -> int:
    """Largest ``m <= 2n²`` outside f(n), checking the tail above it is full."""
    if n < 2:
        raise ValueError("n must be at least 2")
    bound = 2 * n * n
    missing = [m for m in range(bound + 1) if not is_in_f_default(n, m, strict)]
    if not missing:
        raise NoComplementFound(f"f({n}) contains every m <= {bound}")
    return missing[-1]


def closed_complement_formula(n: int) -> int:
    return (n - 2) * n + (n - 1)


# ------------------------------------------------------------------ catalog

CATALOG = {
    "even_runs": ("runs of 1s are even or infinite; 7 states, one universal", even_runs_automaton),
    "ssu": ("sunny side up: at most one 1; universal quarter-plane sweep", ssu_automaton),
    "cone_labyrinth_core": ("cone labyrinth search, local rules assumed", cone_labyrinth_core),
    "cone_labyrinth": ("cone labyrinth with the seven local rules guarded", cone_labyrinth_automaton),
}

SOURCES = {
    "even_runs": "data/even_runs.json",
    "ssu": "data/ssu.json",
    "cone_labyrinth_core": "data/cone_labyrinth_core.json",
    "cone_labyrinth": "data/cone_labyrinth_core.json guarded by CONE_LABYRINTH_FORBIDDEN",
}

ORACLES = {
    "even_runs": in_even_runs,
    "ssu": in_ssu,
    "cone_labyrinth": lambda x: in_cone_labyrinth(x).in_subshift,
}


def gallery_automaton(name: str) -> Automaton:
    try:
        return CATALOG[name][1]()
    except KeyError:
        raise KeyError(f"unknown gallery automaton {name!r}; known: {sorted(CATALOG)}") from None


def gallery_patterns() -> dict[str, FinitePattern]:
    out = {"even_runs_sample": even_runs_sample()}
    for n in range(2, 6):
        out[f"x{n}"] = x_n_pattern(n)
    out["kari_moore_3_2"] = kari_moore_rectangle(3, 2)
    out["labyrinth_row"] = FinitePattern.from_rows([["#", "1", "0", "0", "1", "#"]])
    return out
