import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from limbelief.formula import KBClause, Know, Lit, ProperPlusKB
from limbelief.oracle import Model
from limbelief.symbols import (
    SymbolError,
    Vocabulary,
    complementary_array,
    is_name,
    lit_complementary,
    lit_flip,
    lit_lhs,
    lit_pos,
    lit_rhs,
    lit_subsumes,
    naive_complementary,
    naive_subsumes,
    subsumes_array,
)


@pytest.fixture
def voc():
    v = Vocabulary()
    h = v.sort("HUMAN")
    b = v.sort("BOOL")
    for n in ("Sally", "Frank", "Fred"):
        v.name(n, h)
    v.name("T", b)
    v.func("fatherOf", 1, h)
    v.func("rich", 1, b)
    v.func("c", 0, h)
    v.var("x", h)
    return v


def test_interning_is_idempotent(voc):
    sally = voc.lookup("Sally")
    assert voc.app("fatherOf", [sally]) == voc.app("fatherOf", [sally])
    assert voc.name("Sally", voc.find_sort("HUMAN")) == sally


def test_handles_carry_name_bit(voc):
    assert is_name(voc.lookup("Sally"))
    assert not is_name(voc.lookup("x"))
    assert not is_name(voc.app("c"))


def test_app_rejects_nesting_and_bad_arity(voc):
    inner = voc.app("fatherOf", [voc.lookup("Sally")])
    with pytest.raises(SymbolError):
        voc.app("fatherOf", [inner])
    with pytest.raises(SymbolError):
        voc.app("fatherOf", [])


def test_lit_roundtrip_fields(voc):
    t = voc.app("fatherOf", [voc.lookup("Sally")])
    n = voc.lookup("Frank")
    l = voc.lit(t, n, True)
    assert (lit_lhs(l), lit_rhs(l), lit_pos(l)) == (t, n, True)
    assert lit_flip(lit_flip(l)) == l
    assert not lit_pos(lit_flip(l))
    # application always ends up on the left
    assert voc.lit(n, t, True) == l


def test_lit_rejects_two_applications(voc):
    t = voc.app("c")
    u = voc.app("fatherOf", [voc.lookup("Sally")])
    with pytest.raises(SymbolError):
        voc.lit(t, u)


def test_validity_examples(voc):
    sally, frank = voc.lookup("Sally"), voc.lookup("Frank")
    t = voc.app("c")
    assert voc.lit_valid(voc.lit(sally, sally, True))
    assert voc.lit_valid(voc.lit(sally, frank, False))
    assert not voc.lit_valid(voc.lit(t, sally, True))
    assert not voc.lit_valid(voc.lit(t, sally, False))
    # different sorts
    assert voc.lit_valid(voc.lit(t, voc.lookup("T"), False))
    assert voc.lit_invalid(voc.lit(t, voc.lookup("T"), True))
    assert voc.lit_invalid(voc.lit(sally, frank, True))


def test_complementary_and_subsumes_examples(voc):
    t = voc.app("c")
    a, b = voc.lookup("Frank"), voc.lookup("Fred")
    ta, tb = voc.lit(t, a, True), voc.lit(t, b, True)
    assert lit_complementary(ta, lit_flip(ta))
    assert lit_complementary(ta, tb)
    assert not lit_complementary(lit_flip(ta), lit_flip(tb))
    assert lit_subsumes(ta, lit_flip(tb))
    assert not lit_subsumes(lit_flip(tb), ta)
    assert lit_subsumes(ta, ta)
    assert not lit_subsumes(ta, tb)


def test_fresh_names_are_minimal(voc):
    h = voc.find_sort("HUMAN")
    declared = list(voc.names_of(h))
    fresh = voc.fresh_names(h, 2, declared)
    assert len(fresh) == 2
    assert all(voc.label(n).startswith("#") for n in fresh)
    assert voc.fresh_names(h, 2, declared) == fresh


def _ground_literals(voc):
    h, b = voc.find_sort("HUMAN"), voc.find_sort("BOOL")
    terms = [voc.app("c"), voc.app("fatherOf", [voc.lookup("Sally")]), voc.app("rich", [voc.lookup("Fred")])]
    names = voc.names_of(h) + voc.names_of(b)
    lits = []
    for lhs in terms + names:
        for rhs in names:
            for pos in (True, False):
                lits.append(voc.lit(lhs, rhs, pos))
    return lits


def test_validity_agrees_with_oracle(voc):
    h, b = voc.find_sort("HUMAN"), voc.find_sort("BOOL")
    universe = {h: tuple(voc.names_of(h)) + tuple(voc.fresh_names(h, 1, voc.names_of(h))), b: (voc.lookup("T"),) + tuple(voc.fresh_names(b, 1, [voc.lookup("T")]))}
    lits = _ground_literals(voc)
    terms = [lit_lhs(l) for l in lits if voc.is_app(lit_lhs(l))]
    m = Model(voc, ProperPlusKB(), universe, terms)
    for l in lits:
        assert voc.lit_valid(l) == m.entails(Lit(l)), voc.lit_str(l)
        assert voc.lit_invalid(l) == m.entails(Lit(lit_flip(l))), voc.lit_str(l)


def test_subsumption_agrees_with_oracle_entailment(voc):
    h, b = voc.find_sort("HUMAN"), voc.find_sort("BOOL")
    universe = {h: tuple(voc.names_of(h)) + tuple(voc.fresh_names(h, 1, voc.names_of(h))), b: (voc.lookup("T"),) + tuple(voc.fresh_names(b, 1, [voc.lookup("T")]))}
    lits = [l for l in _ground_literals(voc) if voc.is_app(lit_lhs(l))]
    for a in lits:
        for c in lits:
            if lit_subsumes(a, c):
                kb = ProperPlusKB([KBClause((), (a,))])
                assert Model(voc, kb, universe, [lit_lhs(c)]).entails(Know(0, Lit(c)))


literal_parts = st.tuples(
    st.integers(0, 3),  # lhs index
    st.integers(0, 4),  # rhs name index
    st.booleans(),
)


def _build(voc, parts):
    h = voc.find_sort("HUMAN")
    apps = [voc.app("c")] + [voc.app("fatherOf", [n]) for n in voc.names_of(h)[:3]]
    names = voc.names_of(h)[:3] + voc.fresh_names(h, 2, voc.names_of(h)[:3])
    i, j, pos = parts
    return voc.lit(apps[i], names[j], pos)


@settings(max_examples=300)
@given(literal_parts, literal_parts)
def test_packed_ops_match_naive(a, b):
    v = Vocabulary()
    h = v.sort("HUMAN")
    for n in ("Sally", "Frank", "Fred"):
        v.name(n, h)
    v.func("fatherOf", 1, h)
    v.func("c", 0, h)
    la, lb = _build(v, a), _build(v, b)
    na, nb = v.to_naive(la), v.to_naive(lb)
    assert lit_complementary(la, lb) == naive_complementary(na, nb)
    assert lit_subsumes(la, lb) == naive_subsumes(na, nb)
    assert lit_complementary(la, lb) == lit_complementary(lb, la)


@settings(max_examples=50)
@given(st.lists(st.tuples(literal_parts, literal_parts), min_size=1, max_size=30))
def test_vectorised_ops_match_scalar(pairs):
    v = Vocabulary()
    h = v.sort("HUMAN")
    for n in ("Sally", "Frank", "Fred"):
        v.name(n, h)
    v.func("fatherOf", 1, h)
    v.func("c", 0, h)
    a = np.array([_build(v, p) for p, _ in pairs], dtype=np.int64)
    b = np.array([_build(v, q) for _, q in pairs], dtype=np.int64)
    comp = complementary_array(a, b)
    sub = subsumes_array(a, b)
    for i in range(len(pairs)):
        assert bool(comp[i]) == lit_complementary(int(a[i]), int(b[i]))
        assert bool(sub[i]) == lit_subsumes(int(a[i]), int(b[i]))
