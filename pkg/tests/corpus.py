"""Random small propositional instances shared by property and acceptance tests."""

from __future__ import annotations

import random
from dataclasses import dataclass

from limbelief.formula import And, Formula, KBClause, Lit, Not, Or, ProperPlusKB
from limbelief.symbols import Vocabulary


@dataclass
class Instance:
    voc: Vocabulary
    kb: ProperPlusKB
    terms: list[int]
    names: dict[int, list[int]]
    psi: Formula


def random_literal(rng: random.Random, voc: Vocabulary, terms, names) -> int:
    t = rng.choice(terms)
    n = rng.choice(names[voc.sort_of(t)])
    return voc.lit(t, n, rng.random() < 0.5)


def random_objective(rng: random.Random, voc: Vocabulary, terms, names, depth: int = 3) -> Formula:
    r = rng.random()
    if depth == 0 or r < 0.35:
        return Lit(random_literal(rng, voc, terms, names))
    a = random_objective(rng, voc, terms, names, depth - 1)
    if r < 0.5:
        return Not(a)
    b = random_objective(rng, voc, terms, names, depth - 1)
    return Or(a, b) if r < 0.8 else And(a, b)


def random_instance(seed: int, max_terms: int = 4, max_names: int = 3, max_clauses: int = 5) -> Instance:
    """A ground proper+ KB over at most two sorts plus a random objective query."""
    rng = random.Random(seed)
    voc = Vocabulary()
    nsorts = rng.randint(1, 2)
    sorts = [voc.sort(f"S{i}") for i in range(nsorts)]
    names = {s: [voc.name(f"n{s}_{j}", s) for j in range(rng.randint(1, max_names))] for s in sorts}
    terms = []
    for i in range(rng.randint(1, max_terms)):
        s = rng.choice(sorts)
        terms.append(voc.app(voc.func(f"f{i}", 0, s), ()))
    kb = ProperPlusKB()
    for _ in range(rng.randint(0, max_clauses)):
        lits = tuple(dict.fromkeys(random_literal(rng, voc, terms, names) for _ in range(rng.randint(1, 3))))
        kb.add(KBClause((), lits))
    psi = random_objective(rng, voc, terms, names)
    return Instance(voc, kb, terms, names, psi)


# -- small random setups and a reference closure written from the definitions --


@dataclass
class SetupWorld:
    voc: Vocabulary
    sort: int
    terms: list[int]
    names: list[int]
    literals: list[int]


def setup_world(n_terms: int = 3, n_names: int = 3) -> SetupWorld:
    voc = Vocabulary()
    s = voc.sort("S")
    names = [voc.name(f"n{i}", s) for i in range(n_names)]
    terms = [voc.app(voc.func(f"t{i}", 0, s)) for i in range(n_terms)]
    lits = [voc.lit(t, n, p) for t in terms for n in names for p in (True, False)]
    return SetupWorld(voc, s, terms, names, lits)


def random_clauses(rng: random.Random, w: SetupWorld, max_clauses: int = 5, max_len: int = 3) -> list[tuple[int, ...]]:
    out = []
    for _ in range(rng.randint(0, max_clauses)):
        k = rng.randint(1, max_len)
        out.append(tuple(sorted({rng.choice(w.literals) for _ in range(k)})))
    return out


def reference_up(voc: Vocabulary, clauses) -> set[tuple[int, ...]]:
    """Closure under unit propagation, invalid literals dropped, valid clauses kept out."""
    from limbelief.clause import clause_valid, clause_unit_propagate, make_clause

    cur = set()
    for c in clauses:
        c = make_clause(l for l in c if not voc.lit_invalid(l))
        if not clause_valid(voc, c):
            cur.add(c)
    while True:
        units = [c[0] for c in cur if len(c) == 1]
        new = set()
        for u in units:
            for c in cur:
                d = clause_unit_propagate(c, u)
                if d != c and d not in cur:
                    new.add(d)
        if not new:
            return cur
        cur |= new


def reference_subsumes(voc: Vocabulary, clauses, c) -> bool:
    from limbelief.clause import clause_subsumes, clause_valid, make_clause

    c = make_clause(c)
    if clause_valid(voc, c):
        return True
    return any(clause_subsumes(d, c) for d in reference_up(voc, clauses))


# -- the running example ----------------------------------------------------------


def running_example():
    """Parsed bundled script: Sally's father is Frank or Fred, both rich."""
    from importlib import resources

    from limbelief.textio import parse

    text = resources.files("limbelief.data").joinpath("running_example.lb").read_text()
    return parse(text)


def formula(script, text: str):
    return script.parser().formula(text)
