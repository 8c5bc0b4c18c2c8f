"""Acceptance criteria 1-9, one PASS/FAIL line each."""

import itertools
import random
import time

import pytest
from helpers import random_automaton

from planewalk import lab
from planewalk.constructions import (alternating_to_cover, cover_consistent, intersect_with_sft,
                                     some_annotation_avoids)
from planewalk.core import (Automaton, FinitePattern, Quantifier, SftSpec, Torus, all_tori,
                            classify, domino)
from planewalk.gallery import (cone_labyrinth_automaton, cone_labyrinth_core, even_runs_automaton,
                               in_cone_labyrinth, random_labyrinth, ssu_automaton, x_n_pattern,
                               x_n_torus)
from planewalk.semantics import accepts, accepts_torus, brute_force_accepts

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def _random_torus(rng, alphabet=("0", "1"), max_side=3):
    w, h = rng.randint(1, max_side), rng.randint(1, max_side)
    return Torus(w, h, tuple(rng.choice(alphabet) for _ in range(w * h)))


def test_criterion_1_solver_matches_brute_force(report):
    rng = random.Random(1)
    t0 = time.perf_counter()
    agree = accepted = 0
    for _ in range(200):
        a = random_automaton(rng, max_states=4)
        t = _random_torus(rng)
        fast = accepts_torus(a, t)
        agree += fast == brute_force_accepts(a, t)
        accepted += fast
    secs = time.perf_counter() - t0
    report(1, agree == 200 and secs < 10,
           f"{agree}/200 agree, {accepted} accepted, {secs:.2f}s")


def test_criterion_2_even_runs(report):
    t0 = time.perf_counter()
    rep = lab.compare(lab.Decider(even_runs_automaton()), lab.oracle_decider("even_runs"),
                      ("0", "1"), max_torus=(4, 4))
    secs = time.perf_counter() - t0
    report(2, rep.equivalent and secs < 60,
           f"{rep.checked} tori, {len(rep.disagreements)} disagreements, {secs:.1f}s")


def test_criterion_3_sunny_side_up(report):
    a = ssu_automaton()
    t0 = time.perf_counter()
    bad = []
    patterns = 0
    for w, h in itertools.product(range(1, 5), repeat=2):
        coords = [(x, y) for y in range(h) for x in range(w)]
        for cells in itertools.product("01", repeat=w * h):
            patterns += 1
            ones = cells.count("1")
            if accepts(a, FinitePattern(dict(zip(coords, cells)))) != (ones <= 1):
                bad.append((w, h, cells))
    tori = 0
    for p, q in itertools.product(range(1, 4), repeat=2):
        for t in all_tori("01", p, q):
            tori += 1
            if accepts_torus(a, t) != ("1" not in t.cells):
                bad.append(t)
    secs = time.perf_counter() - t0
    report(3, not bad and secs < 60,
           f"{patterns} patterns, {tori} tori, {len(bad)} wrong, {secs:.1f}s")


def test_criterion_4_cone_labyrinth(report):
    a = cone_labyrinth_automaton()
    rep = lab.compare(lab.Decider(a), lab.oracle_decider("cone_labyrinth"), ("0", "1", "#"),
                      max_torus=(3, 3))
    family = []
    for n in range(2, 6):
        for x in (x_n_pattern(n), x_n_torus(n)):
            family.append(not accepts(a, x) and not in_cone_labyrinth(x))
    rng = random.Random(4)
    valid = []
    for _ in range(50):
        t = random_labyrinth(rng)
        valid.append(accepts_torus(a, t) and bool(in_cone_labyrinth(t)))
    report(4, rep.equivalent and all(family) and all(valid),
           f"{rep.checked} tori with {len(rep.disagreements)} disagreements, "
           f"x^n rejected {sum(family)}/8, labyrinths accepted {sum(valid)}/50")


def test_criterion_5_cover(report):
    rng = random.Random(5)
    even = even_runs_automaton()
    agree = 0
    for i in range(500):
        a = even if i % 10 == 0 else random_automaton(rng, max_states=8)
        t = _random_torus(rng)
        agree += cover_consistent(a, t) == accepts_torus(a, t)
    complete = checked = 0
    for _ in range(30):
        a = random_automaton(rng, max_states=3)
        cover = alternating_to_cover(a)
        for t in all_tori("01", 2, 2):
            checked += 1
            complete += some_annotation_avoids(cover, t) == accepts_torus(a, t)
    report(5, agree == 500 and complete == checked,
           f"{agree}/500 cover checks, {complete}/{checked} exhaustive 2x2 cases")


def _random_sft(rng, alphabet):
    pats = []
    for _ in range(rng.randint(1, 3)):
        w, h = rng.randint(1, 3), rng.randint(1, 2)
        pats.append(FinitePattern({(x, -y): rng.choice(alphabet)
                                   for x in range(w) for y in range(h)}))
    return SftSpec.from_patterns(alphabet, pats)


def test_criterion_6_guard_composition(report):
    rng = random.Random(6)
    wrong = checked = 0
    for i in range(20):
        alphabet = ("0", "1", "2") if i % 7 == 6 else ("0", "1")
        a = random_automaton(rng, max_states=4, alphabet=alphabet)
        f = _random_sft(rng, alphabet)
        b = intersect_with_sft(a, f)
        for p, q in itertools.product(range(1, 4), repeat=2):
            for t in all_tori(alphabet, p, q):
                checked += 1
                wrong += accepts_torus(b, t) != (accepts_torus(a, t) and f.avoided_by(t))
    f = SftSpec.from_patterns(("0", "1"), [domino("1", "1"), [["0", "1", "0"]]])
    kept = [classify(intersect_with_sft(g, f)) == classify(g)
            for g in (even_runs_automaton(), ssu_automaton())]
    kept.append(classify(cone_labyrinth_automaton()) == classify(cone_labyrinth_core()))
    report(6, wrong == 0 and all(kept),
           f"{checked - wrong}/{checked} composed verdicts, classify kept on {sum(kept)}/3 gallery")


def test_criterion_7_invariances(report):
    rng = random.Random(7)
    shift_ok = unfold_ok = 0
    for _ in range(500):
        a = random_automaton(rng, max_states=4)
        t = _random_torus(rng)
        v = accepts_torus(a, t)
        shift_ok += accepts_torus(a, t.shifted(rng.randint(-3, 3), rng.randint(-3, 3))) == v
        a = random_automaton(rng, max_states=4)
        t = _random_torus(rng, max_side=2)
        v = accepts_torus(a, t)
        unfold_ok += accepts_torus(a, t.unfold(rng.randint(1, 3), rng.randint(1, 3))) == v
    report(7, shift_ok == unfold_ok == 500, f"shift {shift_ok}/500, unfold {unfold_ok}/500")


def test_criterion_8_classification_goldens(report):
    wildcard = Automaton.build(["0", "1"], [("a", "0"), ("b", "1")],
                               [("a", "b", 1, 0), ("b", "a", 0, 1)], {"0": "a", "1": "b"})
    mixed = Automaton.build(["0"], [("e", "0", "exists"), ("u", "0", "forall")],
                            [("e", "u", 1, 0), ("e", "e", 0, 1), ("u", "e", 1, 0), ("u", "u", 0, 1)],
                            {"0": "e"})
    assert all(q is Quantifier.UNSPECIFIED for q in (s.quant for s in wildcard.states))
    got = {
        "even_runs": str(classify(even_runs_automaton())),
        "ssu": str(classify(ssu_automaton())),
        "cone_labyrinth": str(classify(cone_labyrinth_automaton())),
        "wildcard": str(classify(wildcard)),
        "mixed": str(classify(mixed)),
    }
    want = {"even_runs": "Pi(1)", "ssu": "Pi(1)", "cone_labyrinth": "Sigma(1)",
            "wildcard": "Delta(1)", "mixed": "AltUnbounded"}
    report(8, got == want, ", ".join(f"{k}={v}" for k, v in got.items()))


def test_criterion_9_f_audit(capsys):
    rows = lab.f_audit(range(2, 9))
    loose = all(r["verdict"]["non_strict_matches"] for r in rows)
    strict = [r["instance"] for r in rows if r["verdict"]["strict_matches"]]
    with capsys.disabled():
        print(f"\ncriterion 9: {'PASS' if loose and not strict else 'FAIL'} (report only: "
              f"j<=i matches n^2-n-1 for n=2..8: {loose}; j<i matches at {strict or 'no n'})")
        for r in rows:
            print("  " + lab.dumps(r))
