"""Experiment harness: instance enumeration, comparisons and JSON-lines records.

Every record is one JSON object with the keys ``instance`` and ``verdict``,
plus ``witness`` when requested and ``millis`` when timing is switched on.
Timing is off by default so reports are byte-for-byte reproducible.

Sampling uses :class:`random.Random` (Mersenne Twister, MT19937) seeded
with the ``--seed`` value; the draw order is documented in :func:`sample_instances`.
"""

from __future__ import annotations

import json
import random
import time
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .core import Automaton, FinitePattern, Torus
from .errors import BoundTooLarge
from .gallery import ORACLES
from .semantics import accepts, build_arena, extract_branch, find_pumping_pairs, replay, solve

MAX_INSTANCES = 10 ** 7
CHUNK = 4096


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


# ---------------------------------------------------------------- instances


@dataclass(frozen=True)
class Shape:
    kind: str  # "torus" or "pattern"
    width: int
    height: int

    def count(self, k: int) -> int:
        return k ** (self.width * self.height)


def shapes(max_torus: tuple[int, int] | None, patterns: tuple[int, int] | None) -> list[Shape]:
    out = []
    if max_torus:
        out += [Shape("torus", p, q) for p in range(1, max_torus[0] + 1)
                for q in range(1, max_torus[1] + 1)]
    if patterns:
        out += [Shape("pattern", w, h) for w in range(1, patterns[0] + 1)
                for h in range(1, patterns[1] + 1)]
    return out


def count_instances(alphabet: Sequence[str], shape_list: list[Shape]) -> int:
    return sum(s.count(len(alphabet)) for s in shape_list)


def check_bound(alphabet, shape_list, samples=None):
    total = samples if samples is not None else count_instances(alphabet, shape_list)
    if total > MAX_INSTANCES:
        raise BoundTooLarge(f"{total} instances exceed the limit of {MAX_INSTANCES}")
    return total


def make_instance(shape: Shape, cells: Sequence[str]):
    """Cells are listed bottom row first, left to right."""
    w = shape.width
    if shape.kind == "torus":
        return Torus(w, shape.height, tuple(cells))
    return FinitePattern({(i % w, i // w): s for i, s in enumerate(cells)})


def unrank(alphabet: Sequence[str], shape: Shape, index: int):
    """Instance number ``index`` of ``shape`` in ``itertools.product`` order."""
    k = len(alphabet)
    n = shape.width * shape.height
    cells = [None] * n
    for pos in range(n - 1, -1, -1):
        index, r = divmod(index, k)
        cells[pos] = alphabet[r]
    return make_instance(shape, cells)


def describe(x) -> str:
    if isinstance(x, Torus):
        return f"torus {x.width}x{x.height} " + "/".join(" ".join(r) for r in x.rows())
    x0, y0, x1, y1 = x.bbox()
    return (f"pattern {x1 - x0 + 1}x{y1 - y0 + 1} "
            + "/".join(" ".join("." if s is None else s for s in r) for r in x.rows()))


def enumerate_instances(alphabet, shape_list) -> Iterator[tuple[Shape, int]]:
    for s in shape_list:
        for i in range(s.count(len(alphabet))):
            yield s, i


def sample_instances(alphabet, shape_list, seed: int, samples: int):
    """Draw ``samples`` instances: a shape uniformly, then each cell uniformly."""
    rng = random.Random(seed)
    out = []
    for _ in range(samples):
        s = rng.choice(shape_list)
        cells = [rng.choice(list(alphabet)) for _ in range(s.width * s.height)]
        out.append(make_instance(s, cells))
    return out


# ----------------------------------------------------------------- deciders


@dataclass(frozen=True)
class Decider:
    """An automaton, or the name of a gallery oracle."""

    automaton: Automaton | None = None
    oracle: str | None = None
    name: str | None = None

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.oracle:
            return f"oracle:{self.oracle}"
        return self.automaton.name or "automaton"

    def __call__(self, x) -> bool:
        if self.oracle:
            return bool(ORACLES[self.oracle](x))
        return accepts(self.automaton, x)


def oracle_decider(name: str) -> Decider:
    if name not in ORACLES:
        raise KeyError(f"unknown oracle {name!r}; known: {sorted(ORACLES)}")
    return Decider(oracle=name)


def _run_chunk(args):
    a, b, alphabet, shape, start, stop, timing = args
    out = []
    for i in range(start, stop):
        x = unrank(alphabet, shape, i)
        t0 = time.perf_counter()
        va = a(x)
        vb = b(x) if b is not None else None
        ms = (time.perf_counter() - t0) * 1000 if timing else None
        out.append((describe(x), va, vb, ms))
    return out


def _chunks(alphabet, shape_list):
    for s in shape_list:
        n = s.count(len(alphabet))
        for start in range(0, n, CHUNK):
            yield s, start, min(n, start + CHUNK)


def evaluate(a: Decider, b: Decider | None, alphabet, shape_list, *, jobs: int = 1,
             timing: bool = False, instances=None):
    """Verdict tuples ``(description, a(x), b(x), millis)`` in canonical order.

    With ``jobs > 1`` chunks of instances run in worker processes; results are
    merged back in enumeration order, so the output does not depend on ``jobs``.
    """
    if instances is not None:
        out = []
        for x in instances:
            t0 = time.perf_counter()
            va = a(x)
            vb = b(x) if b is not None else None
            ms = (time.perf_counter() - t0) * 1000 if timing else None
            out.append((describe(x), va, vb, ms))
        return out
    tasks = [(a, b, tuple(alphabet), s, lo, hi, timing) for s, lo, hi in _chunks(alphabet, shape_list)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    return [r for part in parts for r in part]


@dataclass
class CompareReport:
    left: str
    right: str
    checked: int
    disagreements: list[dict] = field(default_factory=list)
    seed: int | None = None

    @property
    def equivalent(self) -> bool:
        return not self.disagreements

    def records(self, all_disagreements: bool = False) -> list[dict]:
        shown = self.disagreements if all_disagreements else self.disagreements[:1]
        recs = list(shown)
        summary = {
            "instance": "summary",
            "verdict": "equivalent" if self.equivalent else "different",
            "left": self.left,
            "right": self.right,
            "checked": self.checked,
            "disagreements": len(self.disagreements),
        }
        if self.seed is not None:
            summary["seed"] = self.seed
        recs.append(summary)
        return recs

    def text(self) -> str:
        if self.equivalent:
            return (f"{self.left} and {self.right}: equivalent at this scale "
                    f"({self.checked} instances)")
        first = self.disagreements[0]
        return (f"{self.left} and {self.right} differ on {len(self.disagreements)} of "
                f"{self.checked} instances; first: {first['instance']} "
                f"({self.left}={first['verdict']['left']}, {self.right}={first['verdict']['right']})")


def compare(a: Decider, b: Decider, alphabet: Sequence[str], *,
            max_torus: tuple[int, int] | None = None, patterns: tuple[int, int] | None = None,
            seed: int | None = None, samples: int | None = None, jobs: int = 1,
            timing: bool = False) -> CompareReport:
    shape_list = shapes(max_torus, patterns)
    if not shape_list:
        raise ValueError("give --max-torus and/or --patterns")
    instances = None
    if samples is not None:
        check_bound(alphabet, shape_list, samples)
        instances = sample_instances(alphabet, shape_list, seed or 0, samples)
        checked = samples
    else:
        checked = check_bound(alphabet, shape_list)
    rows = evaluate(a, b, alphabet, shape_list, jobs=jobs, timing=timing, instances=instances)
    report = CompareReport(a.label, b.label, checked, seed=seed if samples is not None else None)
    for desc, va, vb, ms in rows:
        if va != vb:
            rec = {"instance": desc, "verdict": {"left": va, "right": vb}}
            if ms is not None:
                rec["millis"] = round(ms, 3)
            report.disagreements.append(rec)
    return report


def enum_records(a: Decider, alphabet, *, max_torus=None, patterns=None, jobs=1,
                 timing=False) -> list[dict]:
    shape_list = shapes(max_torus, patterns)
    check_bound(alphabet, shape_list)
    out = []
    for desc, va, _, ms in evaluate(a, None, alphabet, shape_list, jobs=jobs, timing=timing):
        rec = {"instance": desc, "verdict": "accept" if va else "reject"}
        if ms is not None:
            rec["millis"] = round(ms, 3)
        out.append(rec)
    return out


# ------------------------------------------------------------------ witness


def acceptance_record(a: Automaton, x, *, witness: bool = False, timing: bool = False) -> dict:
    """Verdict for one instance; the witness is a strategy or attractor depths."""
    t0 = time.perf_counter()
    ar = build_arena(a, x, reachable_only=True)
    ws = solve(ar)
    ok = all(ws.winning[n] for n in ar.starts.values())
    rec: dict = {"instance": describe(x), "verdict": "accept" if ok else "reject"}
    if witness:
        if ok:
            moves = []
            for n in sorted(ws.strategy):
                eid, m = ws.strategy[n]
                cell, state = ar.describe(n)
                moves.append({"cell": list(cell), "state": state, "edge": eid,
                              "to": _node_json(ar, m)})
            rec["witness"] = {"strategy": moves}
        else:
            depth = [{"cell": list(c), "depth": ws.rank[n]}
                     for c, n in sorted(ar.starts.items(), key=lambda kv: (-kv[0][1], kv[0][0]))
                     if not ws.winning[n]]
            rec["witness"] = {"rejecting_cells": depth}
    if timing:
        rec["millis"] = round((time.perf_counter() - t0) * 1000, 3)
    return rec


def _node_json(ar, n):
    d = ar.describe(n)
    if isinstance(d, str):
        return d
    return {"cell": list(d[0]), "state": d[1]}


def pump_record(a: Automaton, x, cell) -> dict:
    """Extract a branch from ``cell``, replay it and list its pumping pairs."""
    ar = build_arena(a, x, reachable_only=True)
    ws = solve(ar)
    cell = tuple(cell)
    if isinstance(x, Torus):
        cell = (cell[0] % x.width, cell[1] % x.height)
    if cell not in ar.starts:
        raise KeyError(f"cell {cell} is not in the configuration")
    branch = extract_branch(ar, ws, cell)
    pairs = find_pumping_pairs(branch)
    return {
        "instance": describe(x),
        "verdict": "accept" if ws.winning[ar.starts[cell]] else "reject",
        "witness": {
            "start": list(cell),
            "steps": [{"cell": list(s.cell), "state": s.state, "edge": s.edge} for s in branch.steps],
            "lasso": None if branch.cycle_start is None else
            {"cycle_start": branch.cycle_start, "drift": list(branch.drift)},
            "replay_problems": replay(branch, a, x),
            "pumping_pairs": [{"i": p.i, "j": p.j, "vector": list(p.vector)} for p in pairs],
        },
    }


# -------------------------------------------------------------------- audit


def f_audit(ns: Sequence[int] = range(2, 9)) -> list[dict]:
    """complement_max under both readings of the set f(n), next to the closed formula."""
    from .gallery import complement_max, closed_complement_formula
    out = []
    for n in ns:
        strict = complement_max(n, strict=True)
        loose = complement_max(n, strict=False)
        formula = closed_complement_formula(n)
        out.append({
            "instance": f"f({n})",
            "verdict": {
                "strict": strict,
                "non_strict": loose,
                "formula": formula,
                "strict_matches": strict == formula,
                "non_strict_matches": loose == formula,
            },
        })
    return out


def timed(fn: Callable, *args, **kwargs):
    t0 = time.perf_counter()
    value = fn(*args, **kwargs)
    return value, (time.perf_counter() - t0) * 1000
