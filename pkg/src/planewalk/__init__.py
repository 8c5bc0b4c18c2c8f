"""Alternating plane-walking automata on ℤ²."""

from .core import (ALT_UNBOUNDED, Automaton, Delta, Edge, FinitePattern,
                   HierarchyLevel, Pi, Quantifier, SftSpec, Sigma, State, Torus,
                   classify, effective_quantifier, normalize_directions,
                   validate_automaton)
from .semantics import (accepts, accepts_pattern, accepts_torus, brute_force_accepts,
                        build_arena, solve)

__all__ = [
    "ALT_UNBOUNDED", "Automaton", "Delta", "Edge", "FinitePattern", "HierarchyLevel",
    "Pi", "Quantifier", "SftSpec", "Sigma", "State", "Torus", "accepts",
    "accepts_pattern", "accepts_torus", "brute_force_accepts", "build_arena",
    "classify", "effective_quantifier", "normalize_directions", "solve",
    "validate_automaton",
]
