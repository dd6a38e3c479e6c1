"""Limited-belief evaluation: split search for K_k / M_k, G restriction, RES and RED.

A query ``O kb |= sigma`` is decided by grounding the knowledge base over a
finite name universe, eliminating nested beliefs inside-out (RED, which calls
RES on every belief subformula) and evaluating the resulting objective
sentence.  Closed beliefs ``K_k psi`` and ``M_k psi`` are decided by
:class:`Evaluator`, which splits on literals by mark/undo on one setup.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .formula import (
    FALSE,
    And,
    Exists,
    Formula,
    FormulaError,
    GroundingContext,
    Guarantee,
    Know,
    Lit,
    Maybe,
    NestedEq,
    Not,
    OnlyKnow,
    Or,
    ProperPlusKB,
    Truth,
    clause_lits,
    conj,
    disj,
    free_vars,
    ground,
    ground_terms,
    is_clause,
    is_objective,
    lit_terms,
    names_in,
    rename_name,
    rewrite,
    substitute,
)
from .setup import Setup, Status, isomorphic_literals, restrict_clauses
from .symbols import Vocabulary

_MASK = 0x7FFFFFFF


class BudgetExhausted(RuntimeError):
    """The configured node or time budget ran out; the answer is unknown."""


@dataclass
class Budget:
    max_nodes: int | None = None
    deadline: float | None = None
    nodes: int = 0

    def tick(self) -> None:
        self.nodes += 1
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise BudgetExhausted(f"more than {self.max_nodes} search nodes")
        if self.deadline is not None and not self.nodes & 63 and time.perf_counter() > self.deadline:
            raise BudgetExhausted("time limit reached")


@dataclass
class Scope:
    """What an evaluator needs besides its setup: names and a budget."""

    voc: Vocabulary
    universe: dict
    pvars: dict = field(default_factory=dict)
    budget: Budget = field(default_factory=Budget)
    splits: int = 0


@lru_cache(maxsize=1 << 16)
def _clause_of(a: Formula):
    return tuple(clause_lits(a)) if is_clause(a) else None


class Evaluator:
    """Evaluates objective formulas and closed K_k / M_k over a setup ``s0 + v``.

    ``base_names`` are the names mentioned by the knowledge base and query;
    names of single split literals are added to them while the split is in
    force.
    """

    def __init__(self, scope: Scope, setup: Setup, base_names: Iterable[int]) -> None:
        self.scope = scope
        self.voc = scope.voc
        self.setup = setup
        self.base_names = frozenset(base_names)
        self._extra: dict[int, int] = {}
        self.v: list[int] = []
        self._memo: dict = {}
        self._base_terms = sorted(t for t in setup.terms() if self.voc.is_app(t))
        self._psi_terms: dict = {}
        self._psi_names: dict = {}
        self._false_known: dict = {}

    # -- names ------------------------------------------------------------------

    def mentioned(self, sort: int | None = None) -> set[int]:
        names = set(self.base_names)
        names.update(self._extra)
        if sort is None:
            return names
        voc = self.voc
        return {n for n in names if voc.sort_of(n) == sort}

    def _is_mentioned(self, n: int) -> bool:
        return n in self.base_names or n in self._extra

    def _fresh(self, sort: int, avoid: set[int], count: int = 1) -> list[int]:
        out = []
        for n in self.scope.universe.get(sort, ()):
            if n not in avoid and not self._is_mentioned(n):
                out.append(n)
                if len(out) == count:
                    return out
        if count:
            raise FormulaError(f"name universe of sort {self.voc.sort_labels[sort]} exhausted")
        return out

    def quant_names(self, x: int, body: Formula) -> list[int]:
        s = self.voc.sort_of(x)
        local = {n for n in self._names_of(body) if self.voc.sort_of(n) == s}
        names = self.mentioned(s) | local
        return sorted(names) + self._fresh(s, local)

    def _names_of(self, psi: Formula) -> frozenset:
        out = self._psi_names.get(psi)
        if out is None:
            out = names_in(self.voc, psi)
            self._psi_names[psi] = out
        return out

    # -- split bookkeeping ------------------------------------------------------------

    def _push(self, l: int) -> None:
        self.setup.mark()
        self.setup.add_unit(l)
        self.v.append(l)
        for n in lit_terms(self.voc, l):
            if n & 1:
                self._extra[n] = self._extra.get(n, 0) + 1
        self.scope.splits += 1

    def _push_bulk(self, l: int, batch: Sequence[int]) -> None:
        self.setup.mark()
        for l2 in batch:
            if self.setup.add_unit(l2) is Status.EMPTY_CLAUSE:
                break
        self.v.append(~l)
        self.scope.splits += 1

    def _pop(self) -> None:
        l = self.v.pop()
        self.setup.undo(len(self.setup._marks) - 1)
        if l >= 0:
            for n in lit_terms(self.voc, l):
                if n & 1:
                    c = self._extra[n] - 1
                    if c:
                        self._extra[n] = c
                    else:
                        del self._extra[n]

    def _vkey(self) -> frozenset:
        return frozenset(self.v)

    # -- candidates ---------------------------------------------------------------------

    def _allowed(self) -> dict[int, set[int]]:
        """Per sort, the mentioned names plus ``p`` further names."""
        out: dict[int, set[int]] = {}
        for s, univ in self.scope.universe.items():
            ment = self.mentioned(s)
            extra = self._fresh(s, set(), self.scope.pvars.get(s, 0)) if self.scope.pvars.get(s, 0) else []
            out[s] = ment | set(extra)
        return out

    def split_terms(self, psis: Sequence[Formula]) -> list[int]:
        """Primitive terms of the grounding of the setup and the queries."""
        voc = self.voc
        allowed = self._allowed()
        akey = None
        terms: set[int] = set()
        for t in self._base_terms:
            if all(a in allowed.get(voc.sort_of(a), ()) for a in voc.args(t)):
                terms.add(t)
        for psi in psis:
            cached = self._psi_terms.get(psi)
            if cached is None or cached[0] is not None:
                if akey is None:
                    akey = frozenset((s, frozenset(v)) for s, v in allowed.items())
                if cached is None or cached[0] != akey:
                    ground = not any(isinstance(f, Exists) for f in _subs(psi))
                    named = {s: tuple(sorted(v)) for s, v in allowed.items()}
                    ts = ground_terms(voc, psi, named)
                    cached = (None if ground else akey, ts)
                    self._psi_terms[psi] = cached
            for t in cached[1]:
                if all(a in allowed.get(voc.sort_of(a), ()) for a in voc.args(t)):
                    terms.add(t)
        return sorted(terms)

    def split_names(self, t: int, psis: Sequence[Formula]) -> list[int]:
        """Mentioned names co-occurring with ``t``, plus one new name."""
        voc = self.voc
        s = voc.sort_of(t)
        setup = self.setup
        names: set[int] = set()
        for l in setup._lits_on_term.get(t, ()):
            n = (l >> 1) & _MASK
            if self._is_mentioned(n):
                names.add(n)
        v = setup.value.get(t)
        if v is not None and self._is_mentioned(v):
            names.add(v)
        for n in setup.neg.get(t, ()):
            if self._is_mentioned(n):
                names.add(n)
        for psi in psis:
            for n in self._names_of(psi):
                if voc.sort_of(n) == s:
                    names.add(n)
        rep = self._fresh(s, set(voc.args(t)) | names)
        return sorted(names) + rep

    # -- objective formulas (rules 1-6) ------------------------------------------------------

    def objective(self, a: Formula) -> bool:
        setup = self.setup
        if isinstance(a, Lit):
            return setup.entails_literal(a.lit)
        if isinstance(a, Truth):
            return a.value
        if isinstance(a, Or):
            c = _clause_of(a)
            if c is not None:
                return setup.subsumes(c)
            return self.objective(a.left) or self.objective(a.right)
        if isinstance(a, Exists):
            return any(self.objective(substitute(self.voc, a.body, a.var, n)) for n in self.quant_names(a.var, a.body))
        if isinstance(a, Not):
            b = a.arg
            if isinstance(b, Lit):
                return setup.entails_literal(b.lit ^ 1)
            if isinstance(b, Truth):
                return not b.value
            if isinstance(b, Not):
                return self.objective(b.arg)
            if isinstance(b, Or):
                return self.objective(Not(b.left)) and self.objective(Not(b.right))
            if isinstance(b, Exists):
                return all(
                    self.objective(Not(substitute(self.voc, b.body, b.var, n)))
                    for n in self.quant_names(b.var, b.body)
                )
        raise FormulaError(f"not an objective formula: {a!r}")

    # -- K_k (rules 7-8) ---------------------------------------------------------------------

    def know(self, k: int, psi: Formula) -> bool:
        return psi in self.know_many(k, [psi])

    def know_many(self, k: int, psis: Sequence[Formula]) -> set:
        """The subset of ``psis`` believed at level ``k``.

        Sharing one split tree between several queries gives the same answers
        as evaluating each on its own: a split on a term that one query does
        not mention leaves that query's answer as it would be without the
        split, which is covered by the no-split branch.
        """
        setup = self.setup
        if setup.empty:
            return set(psis)
        self.scope.budget.tick()
        vkey = self._vkey()
        memo = self._memo
        result: set = set()
        todo: list[Formula] = []
        for psi in dict.fromkeys(psis):
            r = memo.get((vkey, k, psi))
            if r is None:
                fast = self._fast_literal(k, psi)
                if fast is None:
                    todo.append(psi)
                    continue
                r = fast
                memo[(vkey, k, psi)] = r
            if r:
                result.add(psi)
        if not todo:
            return result
        if k == 0:
            for psi in todo:
                r = self.objective(psi)
                memo[(vkey, 0, psi)] = r
                if r:
                    result.add(psi)
            return result
        found = self.know_many(k - 1, todo)
        remaining = [psi for psi in todo if psi not in found]
        if remaining:
            for t in self.split_terms(remaining):
                if t in setup.value:
                    continue  # same as not splitting: every other name is inconsistent
                cand = remaining
                for n in self.split_names(t, remaining):
                    l = (t << 32) | (n << 1) | 1
                    if setup.falsified(l):
                        continue
                    self._push(l)
                    try:
                        sub = self.know_many(k - 1, cand)
                    finally:
                        self._pop()
                    cand = [psi for psi in cand if psi in sub]
                    if not cand:
                        break
                if cand:
                    found = found | set(cand)
                    remaining = [psi for psi in remaining if psi not in found]
                    if not remaining:
                        break
        for psi in todo:
            memo[(vkey, k, psi)] = psi in found
        return result | found

    def _fast_literal(self, k: int, psi: Formula) -> bool | None:
        """``K_k t = n`` when the value of ``t`` is already known."""
        if not isinstance(psi, Lit) or not psi.lit & 1:
            return None
        t = psi.lit >> 32
        v = self.setup.value.get(t)
        if v is None:
            return None
        if v == (psi.lit >> 1) & _MASK:
            return True
        key = (self._vkey(), k)
        r = self._false_known.get(key)
        if r is None:
            r = FALSE in self.know_many(k, [FALSE])
            self._false_known[key] = r
        return r

    # -- M_k (rules 10-11) ---------------------------------------------------------------------

    def maybe(self, k: int, psi: Formula) -> bool:
        setup = self.setup
        self.scope.budget.tick()
        key = (self._vkey(), k, psi, "M")
        r = self._memo.get(key)
        if r is not None:
            return r
        if k == 0:
            r = not setup.potentially_inconsistent() and self.objective(psi)
        else:
            r = self.maybe(k - 1, psi) or self._maybe_split(k, psi)
        self._memo[key] = r
        return r

    def _maybe_split(self, k: int, psi: Formula) -> bool:
        setup = self.setup
        for t in self.split_terms([psi]):
            for n in self.split_names(t, [psi]):
                l = (t << 32) | (n << 1) | 1
                if not setup.falsified(l):
                    self._push(l)
                    try:
                        if self.maybe(k - 1, psi):
                            return True
                    finally:
                        self._pop()
                batch = [
                    l2
                    for l2 in isomorphic_literals(self.voc, l, self.scope.universe)
                    if not setup.entails_literal(l2 ^ 1)
                ]
                if batch and batch != [l]:
                    self._push_bulk(l, batch)
                    try:
                        if self.maybe(k - 1, psi):
                            return True
                    finally:
                        self._pop()
        return False


def _subs(a: Formula):
    from .formula import subformulas

    return subformulas(a)


# -- queries against a proper+ knowledge base --------------------------------------------------


@dataclass
class QueryOptions:
    rewrite: bool = True
    max_nodes: int | None = None
    time_limit: float | None = None  # seconds


class QueryContext:
    """Grounding, restricted setups and RES memo for one query."""

    def __init__(self, voc: Vocabulary, kb: ProperPlusKB, ctx: GroundingContext, options: QueryOptions | None = None):
        self.voc = voc
        self.kb = kb
        self.ctx = ctx
        self.options = options or QueryOptions()
        deadline = None
        if self.options.time_limit is not None:
            deadline = time.perf_counter() + self.options.time_limit
        pvars: dict[int, int] = {}
        for s, fr in ctx.fresh.items():
            pvars[s] = 0
        for c in kb.clauses:
            counts: dict[int, int] = {}
            for x in c.vars:
                counts[voc.sort_of(x)] = counts.get(voc.sort_of(x), 0) + 1
            for s, n in counts.items():
                pvars[s] = max(pvars[s], n)
        self.scope = Scope(voc, dict(ctx.universe), pvars, Budget(self.options.max_nodes, deadline))
        self.s0 = ground(voc, kb, ctx)
        self.kb_names = kb.names(voc)
        self._wp = None
        self._restricted: dict = {}
        self.memo: dict = {}

    def setup_for(self, T: frozenset | None) -> Setup:
        """``gnd(kb)|_T``, or the whole grounding when ``T`` is None."""
        if T is None:
            return self.s0
        s = self._restricted.get(T)
        if s is None:
            if self._wp is None:
                self._wp = self.s0.wp()
            s = Setup(self.voc, restrict_clauses(self._wp, T))
            self._restricted[T] = s
        return s

    def evaluator(self, T: frozenset | None, psi: Formula) -> Evaluator:
        return Evaluator(self.scope, self.setup_for(T), self.kb_names | names_in(self.voc, psi))

    def gnd_terms(self, a: Formula) -> frozenset:
        return frozenset(ground_terms(self.voc, a, self.ctx.universe))

    def update_scope_for(self, sigma: Formula) -> None:
        from .formula import max_free_vars

        for s, n in max_free_vars(self.voc, sigma).items():
            self.scope.pvars[s] = max(self.scope.pvars.get(s, 0), n)


def eval_objective(qc: QueryContext, psi: Formula, T: frozenset | None = None) -> bool:
    return qc.evaluator(T, psi).objective(psi)


def eval_know(qc: QueryContext, k: int, psi: Formula, T: frozenset | None = None) -> bool:
    return qc.evaluator(T, psi).know(k, psi)


def eval_maybe(qc: QueryContext, k: int, psi: Formula, T: frozenset | None = None) -> bool:
    return qc.evaluator(T, psi).maybe(k, psi)


def eval_only_know(qc: QueryContext, phi: ProperPlusKB | None = None) -> Setup:
    """The setup that only-knowing ``phi`` denotes: its grounding."""
    if phi is None or phi is qc.kb:
        return qc.s0
    return ground(qc.voc, phi, qc.ctx)


def eval_guarantee(qc: QueryContext, a: Formula) -> bool:
    """``G a``: evaluate ``a`` against the part of the setup relevant to it."""
    return _evaluate_closed_sentence(qc, red(qc, None, Guarantee(a)))


def split_term_candidates(qc: QueryContext, psi: Formula, T: frozenset | None = None) -> list[int]:
    return qc.evaluator(T, psi).split_terms([psi])


def split_name_candidates(qc: QueryContext, t: int, psi: Formula, T: frozenset | None = None) -> list[int]:
    return qc.evaluator(T, psi).split_names(t, [psi])


def res(qc: QueryContext, T: frozenset | None, modal: Know | Maybe) -> Formula:
    """Replace a belief about an objective formula by an objective formula."""
    voc = qc.voc
    psi = modal.arg
    fv = free_vars(voc, psi)
    if fv:
        x = min(fv)
        s = voc.sort_of(x)
        mentioned = sorted(n for n in qc.kb_names | names_in(voc, psi) if voc.sort_of(n) == s)
        parts: list[Formula] = []
        for n in mentioned:
            inst = type(modal)(modal.level, substitute(voc, psi, x, n))
            parts.append(And(Lit(voc.lit(x, n, True)), res(qc, T, inst)))
        taken = set(mentioned)
        hat = next((n for n in qc.ctx.universe[s] if n not in taken), None)
        if hat is None:
            raise FormulaError("name universe exhausted while resolving a nested belief")
        inst = type(modal)(modal.level, substitute(voc, psi, x, hat))
        rest = rename_name(voc, res(qc, T, inst), hat, x)
        parts.append(conj([Lit(voc.lit(x, n, False)) for n in mentioned] + [rest]))
        return disj(parts)
    key = (T, modal)
    r = qc.memo.get(key)
    if r is None:
        ev = qc.evaluator(T, psi)
        if isinstance(modal, Know):
            r = ev.know(modal.level, psi)
        else:
            r = ev.maybe(modal.level, psi)
        qc.memo[key] = r
    return Truth(r)


def red(qc: QueryContext, T: frozenset | None, sigma: Formula) -> Formula:
    """Eliminate all beliefs from ``sigma``, innermost first."""
    if isinstance(sigma, (Lit, Truth)):
        return sigma
    if isinstance(sigma, Not):
        return Not(red(qc, T, sigma.arg))
    if isinstance(sigma, Or):
        return Or(red(qc, T, sigma.left), red(qc, T, sigma.right))
    if isinstance(sigma, Exists):
        return Exists(sigma.var, red(qc, T, sigma.body))
    if isinstance(sigma, (Know, Maybe)):
        return res(qc, T, type(sigma)(sigma.level, red(qc, T, sigma.arg)))
    if isinstance(sigma, Guarantee):
        terms = qc.gnd_terms(sigma.arg)
        return red(qc, terms if T is None else T & terms, sigma.arg)
    if isinstance(sigma, OnlyKnow):
        raise FormulaError("O is not allowed inside queries")
    if isinstance(sigma, NestedEq):
        raise FormulaError("nested terms must be flattened before evaluation")
    raise FormulaError(f"unexpected formula {sigma!r}")


def _evaluate_closed_sentence(qc: QueryContext, obj: Formula) -> bool:
    """Truth of an objective sentence with respect to the empty setup."""
    empty = Setup(qc.voc)
    ev = Evaluator(qc.scope, empty, qc.kb_names | names_in(qc.voc, obj))
    return ev.objective(obj)


def prepare(voc: Vocabulary, sigma: Formula, options: QueryOptions | None = None) -> Formula:
    options = options or QueryOptions()
    return rewrite(voc, sigma, modal=options.rewrite)


def query(voc: Vocabulary, kb: ProperPlusKB, sigma: Formula, options: QueryOptions | None = None) -> bool:
    """Decide ``O kb |= sigma``."""
    options = options or QueryOptions()
    sigma = prepare(voc, sigma, options)
    if free_vars(voc, sigma):
        raise FormulaError("queries must be closed")
    ctx = GroundingContext.build(voc, kb, [sigma])
    qc = QueryContext(voc, kb, ctx, options)
    qc.update_scope_for(sigma)
    return _evaluate_closed_sentence(qc, red(qc, None, sigma))


def query_with_stats(voc: Vocabulary, kb: ProperPlusKB, sigma: Formula, options: QueryOptions | None = None):
    options = options or QueryOptions()
    sigma = prepare(voc, sigma, options)
    if free_vars(voc, sigma):
        raise FormulaError("queries must be closed")
    ctx = GroundingContext.build(voc, kb, [sigma])
    qc = QueryContext(voc, kb, ctx, options)
    qc.update_scope_for(sigma)
    answer = _evaluate_closed_sentence(qc, red(qc, None, sigma))
    return answer, {
        "splits": qc.scope.splits,
        "nodes": qc.scope.budget.nodes,
        "clauses": len(qc.s0.clauses),
        "units": len(qc.s0.trail),
    }


# -- incremental reasoner for ground knowledge bases ---------------------------------------------


class Reasoner:
    """A growing ground knowledge base answering batches of ``G K_k l`` queries.

    This is what the game agents use.  Level 0 is answered directly from the
    unit closure (restricting to the relevant component does not change
    level-0 answers); higher levels evaluate each connected component of the
    knowledge base separately with one shared split tree per component.
    """

    def __init__(self, voc: Vocabulary, max_level: int = 3) -> None:
        self.voc = voc
        self.s0 = Setup(voc)
        self.max_level = max_level
        self._version = -1
        self._comp: dict[int, int] = {}
        self._comp_elems: dict[int, list] = {}
        self._comp_setups: dict[int, Setup] = {}
        self._scope: Scope | None = None
        self._names: frozenset = frozenset()

    def add(self, lits: Iterable[int]) -> None:
        self.s0.add(lits)

    def add_many(self, clauses: Iterable[Iterable[int]]) -> None:
        for c in clauses:
            self.s0.add(c)

    def _refresh(self) -> None:
        if self._version == self.s0.version:
            return
        self._version = self.s0.version
        elems = self.s0.wp()
        parent: dict[int, int] = {}

        def find(a: int) -> int:
            while parent.setdefault(a, a) != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in elems:
            ts = [l >> 32 for l in e]
            for t in ts[1:]:
                ra, rb = find(ts[0]), find(t)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            if ts:
                find(ts[0])
        self._comp = {t: find(t) for t in parent}
        self._comp_elems = {}
        empties = [e for e in elems if not e]
        for e in elems:
            if e:
                self._comp_elems.setdefault(self._comp[e[0] >> 32], []).append(e)
        for root in self._comp_elems:
            self._comp_elems[root].extend(empties)
        self._empties = empties
        self._comp_setups = {}
        voc = self.voc
        names = set()
        for s in range(len(voc.sort_labels)):
            names.update(voc.names_of(s))
        self._names = frozenset(n for n in names if not voc.label(n).startswith("#"))
        arity = max((f.arity for f in voc.funcs), default=0)
        universe = {}
        for s in range(len(voc.sort_labels)):
            ment = sorted(n for n in self._names if voc.sort_of(n) == s)
            universe[s] = tuple(ment + voc.fresh_names(s, 1 + self.max_level * (arity + 1), self._names))
        self._scope = Scope(voc, universe)

    def component_setup(self, t: int) -> Setup:
        self._refresh()
        root = self._comp.get(t)
        s = self._comp_setups.get(root)
        if s is None:
            elems = self._comp_elems.get(root, self._empties) if root is not None else self._empties
            s = Setup(self.voc, elems)
            self._comp_setups[root] = s
        return s

    def known(self, lits: Sequence[int], level: int, budget: Budget | None = None) -> set[int]:
        """The literals ``l`` such that ``G K_level l`` holds."""
        s0 = self.s0
        if level == 0:
            return {l for l in lits if s0.entails_literal(l)}
        self._refresh()
        groups: dict = {}
        for l in lits:
            groups.setdefault(self._comp.get(l >> 32), []).append(l)
        out: set[int] = set()
        if budget is not None:
            self._scope.budget = budget
        for root, group in groups.items():
            setup = self.component_setup(group[0] >> 32)
            ev = Evaluator(self._scope, setup, self._names)
            found = ev.know_many(level, [Lit(l) for l in group])
            out.update(f.lit for f in found)
        return out

    @property
    def splits(self) -> int:
        return 0 if self._scope is None else self._scope.splits
