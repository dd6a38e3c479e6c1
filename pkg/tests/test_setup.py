import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import random_clauses, reference_subsumes, reference_up, setup_world
from limbelief.formula import KBClause, ProperPlusKB, clause_formula
from limbelief.oracle import Model
from limbelief.setup import (
    Forbidden,
    Setup,
    Status,
    UndoError,
    Unknown,
    Value,
    isomorphic_literals,
    restrict_clauses,
)

seeds = st.integers(0, 2**32 - 1)


def test_unit_propagation_chain():
    w = setup_world()
    voc = w.voc
    a, b, c = w.terms
    n0, n1, _ = w.names
    s = Setup(voc)
    s.add([voc.lit(a, n0, False), voc.lit(b, n1)])
    s.add([voc.lit(b, n1, False), voc.lit(c, n0)])
    assert s.determines(c) == Unknown()
    s.add_unit(voc.lit(a, n0))
    assert s.determines(b) == Value(n1)
    assert s.determines(c) == Value(n0)
    assert s.entails_literal(voc.lit(c, n1, False))


def test_empty_clause_and_status():
    w = setup_world()
    voc = w.voc
    a = w.terms[0]
    n0, n1, _ = w.names
    s = Setup(voc)
    assert s.add_unit(voc.lit(a, n0)) is Status.OK
    assert s.add_unit(voc.lit(a, n1)) is Status.EMPTY_CLAUSE
    assert s.obviously_inconsistent()
    assert s.subsumes([voc.lit(a, n1)])


def test_determines_forbidden():
    w = setup_world()
    voc = w.voc
    a = w.terms[0]
    n0, n1, _ = w.names
    s = Setup(voc, [(voc.lit(a, n0, False),), (voc.lit(a, n1, False),)])
    assert s.determines(a) == Forbidden(frozenset({n0, n1}))


def test_valid_and_invalid_literals_on_insertion():
    w = setup_world()
    voc = w.voc
    a = w.terms[0]
    n0, n1, _ = w.names
    s = Setup(voc)
    s.add([voc.lit(n0, n1, True), voc.lit(a, n0)])  # invalid literal dropped
    assert s.determines(a) == Value(n0)
    s2 = Setup(voc)
    s2.add([voc.lit(a, n0), voc.lit(a, n0, False)])  # valid clause ignored
    assert not s2.clauses and not s2.trail


def test_undo_must_be_innermost():
    w = setup_world()
    s = Setup(w.voc)
    m1 = s.mark()
    s.mark()
    with pytest.raises(UndoError):
        s.undo(m1)


def test_wp_drops_subsumed():
    w = setup_world()
    voc = w.voc
    a, b, _ = w.terms
    n0, n1, n2 = w.names
    wide = tuple(sorted((voc.lit(a, n0), voc.lit(b, n0))))
    s = Setup(voc, [wide, (voc.lit(a, n2, False), voc.lit(b, n0))])
    # a=n0 -> a!=n2 and b=n0 -> b=n0, one-to-one
    assert s.wp() == [wide]
    two = tuple(sorted((voc.lit(a, n0), voc.lit(a, n1))))
    s = Setup(voc, [two, (voc.lit(a, n2, False), voc.lit(b, n0))])
    # both literals only subsume a!=n2: dropped under plain subsumption only
    assert s.wp(strict=True) == [two]
    assert len(s.wp()) == 2


def test_wp_keeps_units_needed_for_propagation():
    w = setup_world()
    voc = w.voc
    t0, t1, _ = w.terms
    n0, n1, n2 = w.names
    wide = tuple(sorted((voc.lit(t1, n1), voc.lit(t1, n2))))
    unit = (voc.lit(t1, n0, False),)
    base = [wide, unit]
    extra = [tuple(sorted((voc.lit(t1, n0), voc.lit(t1, n2))))]
    probe = (voc.lit(t0, n2), voc.lit(t1, n2))
    assert Setup(voc, base + extra).subsumes(probe)
    # plain subsumption drops the unit and loses t1 = n2
    strict = Setup(voc, base).wp(strict=True)
    assert unit not in strict
    assert not Setup(voc, strict + extra).subsumes(probe)
    kept = Setup(voc, base).wp()
    assert unit in kept
    assert Setup(voc, kept + extra).subsumes(probe)


def test_potential_inconsistency():
    w = setup_world()
    voc = w.voc
    a, b, _ = w.terms
    n0, n1, _ = w.names
    s = Setup(voc, [(voc.lit(a, n0), voc.lit(b, n0)), (voc.lit(a, n1), voc.lit(b, n1))])
    assert s.potentially_inconsistent()
    assert not s.obviously_inconsistent()
    assert not Setup(voc, [(voc.lit(a, n0), voc.lit(b, n0))]).potentially_inconsistent()


def test_restrict_follows_shared_terms():
    w = setup_world(4)
    voc = w.voc
    a, b, c, d = w.terms
    n0 = w.names[0]
    elems = [(voc.lit(a, n0), voc.lit(b, n0)), (voc.lit(b, n0, False), voc.lit(c, n0)), (voc.lit(d, n0),)]
    assert restrict_clauses(elems, [a]) == elems[:2]
    assert restrict_clauses(elems, [d]) == elems[2:]
    assert restrict_clauses(elems + [()], [d]) == [elems[2], ()]


def test_isomorphic_literals_preserve_equalities():
    from limbelief.symbols import Vocabulary

    voc = Vocabulary()
    s = voc.sort("S")
    names = [voc.name(f"n{i}", s) for i in range(3)]
    f = voc.func("f", 1, s)
    l = voc.lit(voc.app(f, [names[0]]), names[0])  # f(n0) = n0
    iso = isomorphic_literals(voc, l, {s: names})
    assert len(iso) == 3  # f(m) = m for each name m
    l2 = voc.lit(voc.app(f, [names[0]]), names[1])  # f(n0) = n1
    assert len(isomorphic_literals(voc, l2, {s: names})) == 6


@settings(max_examples=200)
@given(seeds)
def test_subsumption_matches_reference(seed):
    rng = random.Random(seed)
    w = setup_world()
    clauses = random_clauses(rng, w)
    s = Setup(w.voc, clauses)
    assert s.obviously_inconsistent() == (() in reference_up(w.voc, clauses))
    for c in random_clauses(rng, w, 6, 2):
        assert s.subsumes(c) == reference_subsumes(w.voc, clauses, c)
    for l in w.literals:
        assert s.entails_literal(l) == s.subsumes((l,))


@settings(max_examples=200)
@given(seeds)
def test_mark_undo_round_trip(seed):
    rng = random.Random(seed)
    w = setup_world()
    s = Setup(w.voc, random_clauses(rng, w))
    before = (s.units(), sorted(s.forms()), s.empty, len(s.clauses))
    m = s.mark()
    for c in random_clauses(rng, w):
        s.add(c)
    s.undo(m)
    assert (s.units(), sorted(s.forms()), s.empty, len(s.clauses)) == before


@settings(max_examples=200)
@given(seeds)
def test_wp_preserves_subsumption(seed):
    rng = random.Random(seed)
    w = setup_world()
    base = random_clauses(rng, w)
    extra = random_clauses(rng, w, 3)
    full = Setup(w.voc, base + extra)
    minimised = Setup(w.voc, Setup(w.voc, base).wp() + extra)
    for c in random_clauses(rng, w, 6, 2) + [(l,) for l in w.literals]:
        assert full.subsumes(c) == minimised.subsumes(c)


@settings(max_examples=100)
@given(seeds)
def test_subsumption_is_sound(seed):
    rng = random.Random(seed)
    w = setup_world()
    clauses = random_clauses(rng, w)
    s = Setup(w.voc, clauses)
    kb = ProperPlusKB([KBClause((), c) for c in clauses])
    universe = {w.sort: tuple(w.names) + tuple(w.voc.fresh_names(w.sort, 1, w.names))}
    m = Model(w.voc, kb, universe, w.terms)
    if s.obviously_inconsistent():
        assert not m.e
    if not s.potentially_inconsistent():
        assert m.e
    for c in random_clauses(rng, w, 6, 2):
        if s.subsumes(c):
            assert all(m.holds(clause_formula(c), world) for world in m.e)


@settings(max_examples=100)
@given(seeds)
def test_add_isomorphic_skips_negated(seed):
    rng = random.Random(seed)
    from limbelief.symbols import Vocabulary

    voc = Vocabulary()
    s = voc.sort("S")
    names = [voc.name(f"n{i}", s) for i in range(3)]
    f = voc.func("f", 1, s)
    lits = [voc.lit(voc.app(f, [a]), b, p) for a in names for b in names for p in (True, False)]
    setup = Setup(voc, [(rng.choice(lits),) for _ in range(rng.randint(0, 3))])
    if setup.obviously_inconsistent():
        return
    l = voc.lit(voc.app(f, [names[0]]), names[rng.randint(0, 2)])
    batch = [x for x in isomorphic_literals(voc, l, {s: names}) if not setup.entails_literal(x ^ 1)]
    setup.add_isomorphic(l, {s: names})
    for x in batch:
        assert setup.entails_literal(x)
