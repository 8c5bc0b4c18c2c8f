import random

import pytest
from helpers import LONG, classify_by_walks, random_automaton
from hypothesis import given
from hypothesis import strategies as st

from planewalk.core import (ALT_UNBOUNDED, Automaton, Delta, Edge, FinitePattern,
                            HierarchyLevel, Pi, Quantifier, SftSpec, Sigma, State, Torus,
                            all_tori, classify, domino, effective_quantifier,
                            normalize_directions, validate_automaton)
from planewalk.errors import AlphabetMismatch, InvalidAutomaton, NondeterministicUnquantified
from planewalk.gallery import (cone_labyrinth_automaton, cone_labyrinth_core,
                               even_runs_automaton, ssu_automaton)
from planewalk.semantics import accepts_torus

E, A, U = "exists", "forall", None


def loop_automaton(quant=None):
    return Automaton.build(["0"], [("v", "0", quant)], [("v", "v", 0, 0)], {"0": "v"})


# ------------------------------------------------------------- validation


def test_missing_initial_symbol_is_named():
    a = Automaton.build(["0", "1"], [("a", "0"), ("b", "1")], [], {"0": "a"})
    problems = validate_automaton(a)
    assert len(problems) == 1
    assert "'1'" in problems[0]


def test_undeclared_edge_endpoint_names_the_edge():
    a = Automaton.build(["0"], [("a", "0")], [("a", "ghost", 1, 0)], {"0": "a"})
    problems = validate_automaton(a)
    assert len(problems) == 1
    assert "edge 0" in problems[0] and "ghost" in problems[0]


def test_gallery_automata_are_valid():
    for a in (even_runs_automaton(), ssu_automaton(), cone_labyrinth_core(),
              cone_labyrinth_automaton()):
        assert validate_automaton(a) == []


@pytest.mark.parametrize("build, fragment", [
    (lambda: Automaton.build([], [], [], {}), "alphabet is empty"),
    (lambda: Automaton.build(["0", "0"], [("a", "0")], [], {"0": "a"}), "declared twice"),
    (lambda: Automaton.build(["0"], [("a", "0"), ("a", "0")], [], {"0": "a"}), "declared twice"),
    (lambda: Automaton.build(["0"], [("a", "1")], [], {"0": "a"}), "outside the alphabet"),
    (lambda: Automaton.build(["0", "1"], [("a", "0"), ("b", "1")], [], {"0": "a", "1": "a"}),
     "carries symbol"),
    (lambda: Automaton.build(["0"], [("a", "0")], [("a", "a", 0, 0), ("a", "a", 0, 0)], {"0": "a"}),
     "duplicate edge"),
    (lambda: Automaton.build(["0"], [("a", "0", Quantifier.WILDCARD)], [], {"0": "a"}), "wildcard"),
])
def test_each_invariant_is_reported(build, fragment):
    problems = validate_automaton(build())
    assert any(fragment in p for p in problems), problems


def test_nondeterministic_unquantified_state():
    a = Automaton.build(["0"], [("a", "0")], [("a", "a", 1, 0), ("a", "a", 0, 1)], {"0": "a"})
    assert any("nondeterministic" in p for p in validate_automaton(a))
    assert validate_automaton(a, alternating=False) == []
    with pytest.raises(NondeterministicUnquantified):
        effective_quantifier(a, "a")
    with pytest.raises(InvalidAutomaton):
        classify(a)


# ------------------------------------------------------ effective quantifier


def test_single_edge_is_wildcard():
    a = loop_automaton(A)
    assert effective_quantifier(a, "v") is Quantifier.WILDCARD


def test_even_runs_zero_state_is_forall():
    assert effective_quantifier(even_runs_automaton(), "zero") is Quantifier.FORALL


def test_same_direction_equal_symbols_keeps_declared_quantifier():
    a = Automaton.build(["0"], [("a", "0", E), ("b", "0"), ("c", "0")],
                        [("a", "b", 1, 0), ("a", "c", 1, 0)], {"0": "a"})
    assert effective_quantifier(a, "a") is Quantifier.EXISTS


def test_same_direction_distinct_symbols_is_wildcard():
    a = Automaton.build(["0", "1"], [("a", "0", A), ("b", "1")],
                        [("a", "a", 1, 0), ("a", "b", 1, 0)], {"0": "a", "1": "b"})
    assert effective_quantifier(a, "a") is Quantifier.WILDCARD


# --------------------------------------------------------------- hierarchy


def test_level_order():
    for n in range(1, 5):
        assert Delta(n) <= Sigma(n) <= Delta(n + 1)
        assert Delta(n) <= Pi(n) <= Delta(n + 1)
        assert not Sigma(n) <= Pi(n) and not Pi(n) <= Sigma(n)
        assert Sigma(n) <= ALT_UNBOUNDED and not ALT_UNBOUNDED <= Sigma(n)
        assert Delta(n) < Sigma(n)


def test_level_text_round_trip():
    for lv in (Delta(1), Sigma(3), Pi(2), ALT_UNBOUNDED):
        assert HierarchyLevel.parse(str(lv)) == lv
    assert str(Pi(1)) == "Pi(1)"
    with pytest.raises(ValueError):
        HierarchyLevel("Sigma", 0)


def test_classify_all_exists_is_sigma1():
    a = Automaton.build(["0"], [("a", "0", E), ("b", "0", E)],
                        [("a", "b", 1, 0), ("a", "a", 0, 1), ("b", "a", 1, 0), ("b", "b", 0, 1)],
                        {"0": "a"})
    assert classify(a) == Sigma(1)


def test_classify_exists_then_forall_is_sigma2():
    a = Automaton.build(["0"], [("e", "0", E), ("f", "0", A)],
                        [("e", "e", 1, 0), ("e", "e", 0, 1), ("e", "f", 1, 0),
                         ("f", "f", 1, 0), ("f", "f", 0, 1)], {"0": "e"})
    assert classify(a) == Sigma(2)


def test_classify_mixed_cycle_is_unbounded():
    a = Automaton.build(["0"], [("e", "0", E), ("f", "0", A)],
                        [("e", "f", 1, 0), ("e", "e", 0, 1), ("f", "e", 1, 0), ("f", "f", 0, 1)],
                        {"0": "e"})
    assert classify(a) == ALT_UNBOUNDED


def test_classify_gallery():
    assert classify(even_runs_automaton()) == Pi(1)
    assert classify(ssu_automaton()) == Pi(1)
    assert classify(cone_labyrinth_automaton()) == Sigma(1)


def test_classify_wildcard_everywhere_is_delta1():
    assert classify(loop_automaton()) == Delta(1)


def test_classify_ignores_unreachable_states():
    a = Automaton.build(["0"], [("a", "0"), ("x", "0", E), ("y", "0", A)],
                        [("a", "a", 0, 0), ("x", "y", 1, 0), ("x", "x", 0, 1),
                         ("y", "x", 1, 0), ("y", "y", 0, 1)], {"0": "a"})
    assert classify(a) == Delta(1)


def test_classify_both_leads_gives_next_delta():
    # one branch is ∃ then ∀, another ∀ then ∃: both two-block words occur
    a = Automaton.build(
        ["0"], [("s", "0", E), ("e1", "0", E), ("a1", "0", A), ("a2", "0", A), ("e2", "0", E)],
        [("s", "a1", 1, 0), ("s", "s", 0, 1),
         ("a1", "e2", 1, 0), ("a1", "a1", 0, 1),
         ("e2", "e2", 1, 0), ("e2", "e2", 0, 1),
         ("e1", "e1", 0, 0), ("a2", "a2", 0, 0)], {"0": "s"})
    assert classify(a) == Sigma(3)
    b = Automaton.build(
        ["0", "1"], [("s", "0", E), ("t", "1", A), ("a", "0", A), ("e", "1", E)],
        [("s", "s", 0, 1), ("s", "a", 1, 0), ("a", "a", 0, 1), ("a", "a", 1, 0),
         ("t", "t", 0, 1), ("t", "e", 1, 0), ("e", "e", 0, 1), ("e", "e", 1, 0)],
        {"0": "s", "1": "t"})
    assert classify(b) == Delta(3)


@given(st.integers(0, 10 ** 9))
def test_classify_matches_walk_oracle(seed):
    a = random_automaton(random.Random(seed), max_states=5,
                         quants=(Quantifier.EXISTS, Quantifier.FORALL, Quantifier.UNSPECIFIED))
    assert classify(a) == classify_by_walks(a)


def test_classify_matches_walk_oracle_on_100_seeded_automata():
    rng = random.Random(2024)
    for _ in range(100):
        a = random_automaton(rng, max_states=5,
                             quants=(Quantifier.EXISTS, Quantifier.FORALL, Quantifier.UNSPECIFIED))
        assert classify(a) == classify_by_walks(a)


@given(st.integers(0, 10 ** 9))
def test_classify_invariant_under_renaming(seed):
    rng = random.Random(seed)
    a = random_automaton(rng, max_states=5)
    ids = [s.id for s in a.states]
    shuffled = ids[:]
    rng.shuffle(shuffled)
    b = a.renamed({old: "q" + new for old, new in zip(ids, shuffled)})
    assert classify(a) == classify(b)


@given(st.integers(0, 10 ** 9))
def test_level_bounds_by_quantifier_kind(seed):
    rng = random.Random(seed)
    ex = random_automaton(rng, quants=(Quantifier.EXISTS,))
    fa = random_automaton(rng, quants=(Quantifier.FORALL,))
    assert classify(ex) <= Sigma(1)
    assert classify(fa) <= Pi(1)


# ------------------------------------------------------------- normalize


def test_normalize_identity_on_unit_automata():
    a = ssu_automaton()
    assert normalize_directions(a) is a


def test_normalize_splits_long_edge_unary():
    a = Automaton.build(["0"], [("a", "0")], [("a", "a", 2, 0)], {"0": "a"})
    b = normalize_directions(a)
    assert len(b.states) == 2
    assert sorted(e.direction for e in b.edges) == [(1, 0), (1, 0)]


def test_normalize_diagonal_goes_right_then_up():
    a = Automaton.build(["0"], [("a", "0"), ("b", "0")],
                        [("a", "b", 1, 1), ("b", "b", 0, 0)], {"0": "a"})
    b = normalize_directions(a)
    first = [e for e in b.edges if e.src == "a"]
    assert [e.direction for e in first] == [(1, 0)]
    mid = first[0].dst
    assert [(e.dst, e.direction) for e in b.edges if e.src == mid] == [("b", (0, 1))]


def test_normalize_preserves_gallery_class_and_language():
    for a in (even_runs_automaton(), ssu_automaton(), cone_labyrinth_automaton()):
        b = normalize_directions(a)
        assert validate_automaton(b) == []
        assert all(abs(e.dx) + abs(e.dy) <= 1 for e in b.edges)
        assert classify(b) == classify(a)
    for a in (even_runs_automaton(), ssu_automaton()):
        b = normalize_directions(a)
        for p in range(1, 5):
            for q in range(1, 5):
                if p * q > 12:
                    continue
                for t in all_tori("01", p, q):
                    assert accepts_torus(b, t) == accepts_torus(a, t)


def test_normalize_cone_labyrinth_on_small_tori():
    a = cone_labyrinth_automaton()
    b = normalize_directions(a)
    for p, q in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3), (3, 2), (2, 3)]:
        for t in all_tori("01#", p, q):
            assert accepts_torus(b, t) == accepts_torus(a, t)
    rng = random.Random(11)
    for _ in range(150):
        p, q = rng.randint(1, 4), rng.randint(1, 4)
        t = Torus(p, q, tuple(rng.choice("01#") for _ in range(p * q)))
        assert accepts_torus(b, t) == accepts_torus(a, t)


@given(st.integers(0, 10 ** 9))
def test_normalize_preserves_torus_acceptance(seed):
    rng = random.Random(seed)
    a = random_automaton(rng, max_states=4, dirs=LONG)
    b = normalize_directions(a)
    assert all(abs(e.dx) + abs(e.dy) <= 1 for e in b.edges)
    assert classify(b) == classify(a)
    for _ in range(5):
        p, q = rng.randint(1, 3), rng.randint(1, 3)
        t = Torus(p, q, tuple(rng.choice("01") for _ in range(p * q)))
        assert accepts_torus(b, t) == accepts_torus(a, t)


# ------------------------------------------------------------ configurations


def test_pattern_rows_top_first():
    p = FinitePattern.from_rows([["1", "."], ["0", "1"]])
    assert p[(0, 1)] == "1" and p[(0, 0)] == "0" and p[(1, 0)] == "1"
    assert (1, 1) not in p
    assert not p.is_rectangle()
    assert p.rows() == [["1", None], ["0", "1"]]
    assert p.anchor() == (0, 1)


def test_empty_pattern_rejected():
    with pytest.raises(ValueError):
        FinitePattern({})


def test_torus_wraps_and_shifts():
    t = Torus.from_rows([["a", "b", "c"], ["d", "e", "f"]])
    assert t.at(0, 0) == "d" and t.at(0, 1) == "a"
    assert t.at(3, 2) == "d" and t.at(-1, -1) == "c"
    s = t.shifted(1, 0)
    assert s.rows() == [["b", "c", "a"], ["e", "f", "d"]]
    u = t.unfold(2, 2)
    assert (u.width, u.height) == (6, 4)
    assert all(u.at(x, y) == t.at(x, y) for x in range(6) for y in range(4))
    with pytest.raises(ValueError):
        Torus(2, 2, ("a",))


def test_alphabet_mismatch():
    with pytest.raises(AlphabetMismatch):
        Torus.uniform("2").check_alphabet(["0", "1"])


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_shifts_compose(w, h, data):
    cells = data.draw(st.lists(st.sampled_from("01"), min_size=w * h, max_size=w * h))
    t = Torus(w, h, tuple(cells))
    dx, dy = data.draw(st.integers(-5, 5)), data.draw(st.integers(-5, 5))
    assert t.shifted(dx, dy).shifted(-dx, -dy) == t
    assert t.shifted(w, 0) == t and t.shifted(0, h) == t


def test_sft_occurrences_on_torus_and_pattern():
    f = SftSpec.from_patterns("01", [domino("1", "1")])
    t = Torus.from_rows([["1", "1", "0"]])
    assert f.occurrences(t) == [(0, 0)]
    # cyclic occurrence across the seam
    assert f.occurrences(Torus.from_rows([["1", "0", "1"]])) == [(2, 0)]
    p = FinitePattern.from_rows([["1", "0", "1"]])
    assert f.avoided_by(p)
    assert SftSpec.from_patterns("01", [[["1"], ["1"]]]).domino_parts() == (set(), {("1", "1")})


def test_sft_window_size_and_predicate_form():
    f = SftSpec.from_patterns("01", [[["0", "1", "0"]], [["1"], ["0"]]])
    assert f.window_size() == (3, 2)
    g = SftSpec.from_predicate("01", [(0, 0), (1, 0)], lambda w: w == ("1", "1"))
    assert g.is_predicate
    assert g.occurrences(Torus.from_rows([["1", "1", "0"]])) == [(0, 0)]
