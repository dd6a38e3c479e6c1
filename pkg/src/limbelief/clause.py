"""Clauses: sorted, duplicate-free tuples of packed literals."""

from __future__ import annotations

from typing import Iterable

from .symbols import Vocabulary, lit_complementary, lit_subsumes

Clause = tuple[int, ...]

EMPTY: Clause = ()


def make_clause(lits: Iterable[int]) -> Clause:
    return tuple(sorted(set(lits)))


def clause_valid(voc: Vocabulary, c: Clause) -> bool:
    """Contains a valid literal, a literal and its negation, or ``t != n1``, ``t != n2``."""
    neg_names: dict[int, int] = {}
    lits = set(c)
    for l in c:
        if voc.lit_valid(l):
            return True
        if l & 1:
            if (l ^ 1) in lits:
                return True
        elif l & 2:
            t = l >> 32
            n = (l >> 1) & 0x7FFFFFFF
            seen = neg_names.get(t)
            if seen is not None and seen != n:
                return True
            neg_names[t] = n
    return False


def clause_subsumes(c1: Clause, c2: Clause) -> bool:
    return all(any(lit_subsumes(a, b) for b in c2) for a in c1)


def clause_subsumes_injective(c1: Clause, c2: Clause) -> bool:
    """Every literal of ``c1`` subsumes a literal of ``c2``, all of them distinct.

    Unlike plain subsumption this survives unit propagation: whenever ``c2``
    propagates to a unit, ``c1`` propagates to a unit subsuming it or to the
    empty clause.
    """
    if len(c1) > len(c2):
        return False
    match: dict[int, int] = {}  # index in c2 -> index in c1

    def augment(i: int, seen: set[int]) -> bool:
        for j, b in enumerate(c2):
            if j in seen or not lit_subsumes(c1[i], b):
                continue
            seen.add(j)
            if j not in match or augment(match[j], seen):
                match[j] = i
                return True
        return False

    return all(augment(i, set()) for i in range(len(c1)))


def clause_unit_propagate(c: Clause, l: int) -> Clause:
    """Drop every literal of ``c`` complementary to ``l``."""
    return tuple(a for a in c if not lit_complementary(a, l))


def clause_terms(c: Clause) -> set[int]:
    return {l >> 32 for l in c}


def clause_str(voc: Vocabulary, c: Clause) -> str:
    if not c:
        return "[]"
    return " || ".join(voc.lit_str(l) for l in c)
