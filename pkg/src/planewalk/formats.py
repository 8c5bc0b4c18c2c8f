"""Text and JSON file formats for automata, finite patterns and tori.

Automaton JSON::

    {"alphabet": ["0", "1"],
     "states": [{"id": "a", "symbol": "0", "quant": "forall"}, ...],
     "edges": [{"from": "a", "to": "b", "dx": 1, "dy": 0}, ...],
     "initial": {"0": "a", "1": "b"}}

``quant`` is ``"exists"``, ``"forall"`` or ``null`` and may be omitted.
Unknown keys are rejected.

Patterns are whitespace-separated tokens, one row per line, top row
first; ``.`` marks a cell outside the support.  Tori use the same grid
preceded by a ``torus p q`` header line.  Blank lines are ignored.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import Automaton, Edge, FinitePattern, Quantifier, State, Torus
from .errors import FormatError

_TOP_KEYS = {"alphabet", "states", "edges", "initial", "name"}
_STATE_KEYS = {"id", "symbol", "quant"}
_EDGE_KEYS = {"from", "to", "dx", "dy"}


def _require(obj, key, where, kind):
    if key not in obj:
        raise FormatError(f"{where}: missing field '{key}'")
    val = obj[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise FormatError(f"{where}.{key}: expected an integer, got {val!r}")
    if kind is str and not isinstance(val, str):
        raise FormatError(f"{where}.{key}: expected a string, got {val!r}")
    return val


def _no_extra(obj, allowed, where):
    extra = sorted(set(obj) - allowed)
    if extra:
        raise FormatError(f"{where}: unknown field '{extra[0]}'")


def automaton_from_dict(doc) -> Automaton:
    if not isinstance(doc, dict):
        raise FormatError("automaton: expected a JSON object")
    _no_extra(doc, _TOP_KEYS, "automaton")
    alphabet = _require(doc, "alphabet", "automaton", list)
    if not isinstance(alphabet, list) or not all(isinstance(s, str) for s in alphabet):
        raise FormatError("automaton.alphabet: expected a list of strings")
    raw_states = _require(doc, "states", "automaton", list)
    if not isinstance(raw_states, list):
        raise FormatError("automaton.states: expected a list")
    states = []
    for i, s in enumerate(raw_states):
        where = f"states[{i}]"
        if not isinstance(s, dict):
            raise FormatError(f"{where}: expected an object")
        _no_extra(s, _STATE_KEYS, where)
        q = s.get("quant")
        try:
            quant = Quantifier(q)
        except ValueError:
            raise FormatError(f"{where}.quant: expected 'exists', 'forall' or null, got {q!r}") from None
        if quant is Quantifier.WILDCARD:
            raise FormatError(f"{where}.quant: 'wildcard' cannot be declared")
        states.append(State(_require(s, "id", where, str), _require(s, "symbol", where, str), quant))
    raw_edges = _require(doc, "edges", "automaton", list)
    if not isinstance(raw_edges, list):
        raise FormatError("automaton.edges: expected a list")
    edges = []
    for i, e in enumerate(raw_edges):
        where = f"edges[{i}]"
        if not isinstance(e, dict):
            raise FormatError(f"{where}: expected an object")
        _no_extra(e, _EDGE_KEYS, where)
        edges.append(Edge(_require(e, "from", where, str), _require(e, "to", where, str),
                          _require(e, "dx", where, int), _require(e, "dy", where, int)))
    initial = _require(doc, "initial", "automaton", dict)
    if not isinstance(initial, dict) or not all(isinstance(v, str) for v in initial.values()):
        raise FormatError("automaton.initial: expected an object mapping symbols to state ids")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise FormatError("automaton.name: expected a string")
    return Automaton(tuple(alphabet), tuple(states), tuple(edges), dict(initial), name)


def automaton_to_dict(a: Automaton) -> dict:
    doc = {
        "alphabet": list(a.alphabet),
        "states": [{"id": s.id, "symbol": s.symbol, "quant": s.quant.value} for s in a.states],
        "edges": [{"from": e.src, "to": e.dst, "dx": e.dx, "dy": e.dy} for e in a.edges],
        "initial": {k: a.initial[k] for k in a.alphabet if k in a.initial},
    }
    if a.name:
        doc["name"] = a.name
    return doc


def parse_automaton(text: str) -> Automaton:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"automaton: malformed JSON at line {exc.lineno} column {exc.colno}") from None
    return automaton_from_dict(doc)


def print_automaton(a: Automaton) -> str:
    return json.dumps(automaton_to_dict(a), indent=2, ensure_ascii=False) + "\n"


def load_automaton(path: str | Path) -> Automaton:
    return parse_automaton(Path(path).read_text(encoding="utf-8"))


# -------------------------------------------------------------------- grids


def _grid_lines(text: str) -> list[list[str]]:
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rows.append(line.split())
    return rows


def parse_pattern(text: str) -> FinitePattern:
    rows = _grid_lines(text)
    if not rows:
        raise FormatError("pattern: no rows")
    if rows[0] and rows[0][0] == "torus":
        raise FormatError("pattern: found a torus header")
    if any(len(r) != len(rows[0]) for r in rows):
        raise FormatError("pattern: rows have different lengths")
    try:
        return FinitePattern.from_rows(rows)
    except ValueError as exc:
        raise FormatError(f"pattern: {exc}") from None


def print_pattern(p: FinitePattern) -> str:
    return "".join(" ".join("." if s is None else s for s in row) + "\n" for row in p.rows())


def parse_torus(text: str) -> Torus:
    rows = _grid_lines(text)
    if not rows or rows[0][:1] != ["torus"]:
        raise FormatError("torus: first line must be 'torus p q'")
    head = rows[0]
    if len(head) != 3 or not all(t.isdigit() for t in head[1:]):
        raise FormatError("torus: header must be 'torus p q' with positive integers")
    p, q = int(head[1]), int(head[2])
    grid = rows[1:]
    if p < 1 or q < 1:
        raise FormatError("torus: periods must be positive")
    if len(grid) != q:
        raise FormatError(f"torus: header says {q} rows, found {len(grid)}")
    for i, r in enumerate(grid):
        if len(r) != p:
            raise FormatError(f"torus: row {i} has {len(r)} cells, header says {p}")
        if "." in r:
            raise FormatError(f"torus: row {i} has a hole")
    return Torus.from_rows(grid)


def print_torus(t: Torus) -> str:
    return f"torus {t.width} {t.height}\n" + "".join(" ".join(r) + "\n" for r in t.rows())


def parse_configuration(text: str) -> Torus | FinitePattern:
    rows = _grid_lines(text)
    if rows and rows[0][:1] == ["torus"]:
        return parse_torus(text)
    return parse_pattern(text)


def print_configuration(x: Torus | FinitePattern) -> str:
    return print_torus(x) if isinstance(x, Torus) else print_pattern(x)
