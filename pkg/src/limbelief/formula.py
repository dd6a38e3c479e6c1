"""Formula syntax trees, substitution, proper+ knowledge bases and grounding."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

from .symbols import NAME, SymbolError, Vocabulary, lit_flip

_MASK = 0x7FFFFFFF


class FormulaError(ValueError):
    """Ill-formed formula or knowledge base."""


class _Node:
    """Immutable node with a cached structural hash."""

    __slots__ = ("_h",)

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        try:
            return self._h
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_h", h)
            return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return type(other) is type(self) and self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError("formulas are immutable")


class Lit(_Node):
    __slots__ = ("lit",)

    def __init__(self, lit: int):
        object.__setattr__(self, "lit", lit)

    def _key(self):
        return (self.lit,)

    def __repr__(self):
        return f"Lit({self.lit:#x})"


class Truth(_Node):
    """The constant TRUE (or its negation) produced by RES."""

    __slots__ = ("value",)

    def __init__(self, value: bool):
        object.__setattr__(self, "value", bool(value))

    def _key(self):
        return (self.value,)

    def __repr__(self):
        return f"Truth({self.value})"


class Or(_Node):
    __slots__ = ("left", "right")

    def __init__(self, left: "Formula", right: "Formula"):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def _key(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Or({self.left!r}, {self.right!r})"


class Not(_Node):
    __slots__ = ("arg",)

    def __init__(self, arg: "Formula"):
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.arg,)

    def __repr__(self):
        return f"Not({self.arg!r})"


class Exists(_Node):
    __slots__ = ("var", "body")

    def __init__(self, var: int, body: "Formula"):
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "body", body)

    def _key(self):
        return (self.var, self.body)

    def __repr__(self):
        return f"Exists({self.var}, {self.body!r})"


class Know(_Node):
    __slots__ = ("level", "arg")

    def __init__(self, level: int, arg: "Formula"):
        if level < 0:
            raise FormulaError("belief levels are non-negative")
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.level, self.arg)

    def __repr__(self):
        return f"Know({self.level}, {self.arg!r})"


class Maybe(_Node):
    __slots__ = ("level", "arg")

    def __init__(self, level: int, arg: "Formula"):
        if level < 0:
            raise FormulaError("belief levels are non-negative")
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.level, self.arg)

    def __repr__(self):
        return f"Maybe({self.level}, {self.arg!r})"


class OnlyKnow(_Node):
    __slots__ = ("arg",)

    def __init__(self, arg: "Formula"):
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.arg,)


class Guarantee(_Node):
    __slots__ = ("arg",)

    def __init__(self, arg: "Formula"):
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.arg,)

    def __repr__(self):
        return f"Guarantee({self.arg!r})"


# Sugar for equalities between nested terms; removed by rewrite().


@dataclass(frozen=True)
class Fn:
    func: str
    args: tuple


TermExpr = Union[int, Fn]


class NestedEq(_Node):
    __slots__ = ("lhs", "rhs", "pos")

    def __init__(self, lhs: TermExpr, rhs: TermExpr, pos: bool):
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "pos", bool(pos))

    def _key(self):
        return (self.lhs, self.rhs, self.pos)


Formula = Union[Lit, Truth, Or, Not, Exists, Know, Maybe, OnlyKnow, Guarantee, NestedEq]

TRUE = Truth(True)
FALSE = Truth(False)

# -- derived constructors -------------------------------------------------------


def And(a: Formula, b: Formula) -> Formula:
    return Not(Or(Not(a), Not(b)))


def Forall(x: int, a: Formula) -> Formula:
    return Not(Exists(x, Not(a)))


def Implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def Equiv(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def disj(items: Sequence[Formula]) -> Formula:
    if not items:
        return FALSE
    out = items[-1]
    for a in reversed(items[:-1]):
        out = Or(a, out)
    return out


def conj(items: Sequence[Formula]) -> Formula:
    if not items:
        return TRUE
    out = items[-1]
    for a in reversed(items[:-1]):
        out = And(a, out)
    return out


def negate(a: Formula) -> Formula:
    """Negation that folds literals, constants and double negation."""
    if isinstance(a, Lit):
        return Lit(lit_flip(a.lit))
    if isinstance(a, Truth):
        return Truth(not a.value)
    if isinstance(a, Not):
        return a.arg
    return Not(a)


def clause_formula(lits: Iterable[int]) -> Formula:
    return disj([Lit(l) for l in lits])


# -- inspection -------------------------------------------------------------------


def subformulas(a: Formula) -> Iterator[Formula]:
    stack = [a]
    while stack:
        f = stack.pop()
        yield f
        if isinstance(f, Or):
            stack.append(f.right)
            stack.append(f.left)
        elif isinstance(f, (Not, Know, Maybe, OnlyKnow, Guarantee)):
            stack.append(f.arg)
        elif isinstance(f, Exists):
            stack.append(f.body)


def literals(a: Formula) -> list[int]:
    return [f.lit for f in subformulas(a) if isinstance(f, Lit)]


def lit_terms(voc: Vocabulary, l: int) -> list[int]:
    """The terms mentioned by a literal, including function arguments."""
    lhs = l >> 32
    rhs = (l >> 1) & _MASK
    out = [lhs, rhs]
    if voc.is_app(lhs):
        out.extend(voc.args(lhs))
    return out


def free_vars(voc: Vocabulary, a: Formula) -> frozenset:
    if isinstance(a, Lit):
        return frozenset(t for t in lit_terms(voc, a.lit) if voc.is_var(t))
    if isinstance(a, Truth):
        return frozenset()
    if isinstance(a, Or):
        return free_vars(voc, a.left) | free_vars(voc, a.right)
    if isinstance(a, Exists):
        return free_vars(voc, a.body) - {a.var}
    if isinstance(a, NestedEq):
        return frozenset(_expr_vars(voc, a.lhs) | _expr_vars(voc, a.rhs))
    return free_vars(voc, a.arg)


def _expr_vars(voc: Vocabulary, e: TermExpr) -> set:
    if isinstance(e, Fn):
        out: set = set()
        for x in e.args:
            out |= _expr_vars(voc, x)
        return out
    if voc.is_var(e):
        return {e}
    if voc.is_app(e):
        return {x for x in voc.args(e) if voc.is_var(x)}
    return set()


def names_in(voc: Vocabulary, a: Formula) -> frozenset:
    out = set()
    for l in literals(a):
        out.update(t for t in lit_terms(voc, l) if t & 1)
    return frozenset(out)


def max_level(a: Formula) -> int:
    return max((f.level for f in subformulas(a) if isinstance(f, (Know, Maybe))), default=0)


def is_objective(a: Formula) -> bool:
    return not any(isinstance(f, (Know, Maybe, OnlyKnow, Guarantee)) for f in subformulas(a))


def is_clause(a: Formula) -> bool:
    if isinstance(a, Lit):
        return True
    if isinstance(a, Not):
        return isinstance(a.arg, Lit)
    if isinstance(a, Or):
        return is_clause(a.left) and is_clause(a.right)
    return False


def clause_lits(a: Formula) -> list[int]:
    """Literals of a formula accepted by :func:`is_clause`."""
    out: list[int] = []
    stack = [a]
    while stack:
        f = stack.pop()
        if isinstance(f, Or):
            stack.append(f.right)
            stack.append(f.left)
        elif isinstance(f, Lit):
            out.append(f.lit)
        else:
            out.append(lit_flip(f.arg.lit))
    return out


def max_free_vars(voc: Vocabulary, a: Formula) -> dict[int, int]:
    """Per sort, the largest number of free variables in any subformula."""
    out: dict[int, int] = {}
    for f in subformulas(a):
        counts: dict[int, int] = {}
        for x in free_vars(voc, f):
            s = voc.sort_of(x)
            counts[s] = counts.get(s, 0) + 1
        for s, c in counts.items():
            out[s] = max(out.get(s, 0), c)
    return out


# -- substitution -------------------------------------------------------------------


def _subst_lit(voc: Vocabulary, l: int, mapping: dict[int, int]) -> int:
    lhs = voc.substitute_term(l >> 32, mapping)
    rhs = (l >> 1) & _MASK
    rhs = mapping.get(rhs, rhs)
    return voc.lit(lhs, rhs, bool(l & 1))


def substitute(voc: Vocabulary, a: Formula, x: int, t: int) -> Formula:
    """Replace the free occurrences of variable ``x`` by the name or variable ``t``."""
    if not voc.is_var(x):
        raise FormulaError("can only substitute for variables")
    if voc.is_app(t):
        raise FormulaError("substituted term must be a name or variable")
    if voc.sort_of(x) != voc.sort_of(t):
        raise FormulaError(
            f"sort mismatch substituting {voc.label(t)} for {voc.label(x)}"
        )
    return _subst(voc, a, x, t)


def _subst(voc: Vocabulary, a: Formula, x: int, t: int) -> Formula:
    if isinstance(a, Lit):
        l = a.lit
        if x not in lit_terms(voc, l):
            return a
        return Lit(_subst_lit(voc, l, {x: t}))
    if isinstance(a, Truth):
        return a
    if isinstance(a, Or):
        left = _subst(voc, a.left, x, t)
        right = _subst(voc, a.right, x, t)
        if left is a.left and right is a.right:
            return a
        return Or(left, right)
    if isinstance(a, Exists):
        if a.var == x:
            return a
        if a.var == t and x in free_vars(voc, a.body):
            y = voc.fresh_var(voc.sort_of(a.var))
            body = _subst(voc, a.body, a.var, y)
            return Exists(y, _subst(voc, body, x, t))
        body = _subst(voc, a.body, x, t)
        return a if body is a.body else Exists(a.var, body)
    if isinstance(a, NestedEq):
        return NestedEq(_subst_expr(voc, a.lhs, x, t), _subst_expr(voc, a.rhs, x, t), a.pos)
    arg = _subst(voc, a.arg, x, t)
    if arg is a.arg:
        return a
    if isinstance(a, (Know, Maybe)):
        return type(a)(a.level, arg)
    return type(a)(arg)


def _subst_expr(voc: Vocabulary, e: TermExpr, x: int, t: int) -> TermExpr:
    if isinstance(e, Fn):
        return Fn(e.func, tuple(_subst_expr(voc, y, x, t) for y in e.args))
    return voc.substitute_term(e, {x: t})


def rename_name(voc: Vocabulary, a: Formula, n: int, x: int) -> Formula:
    """Replace the name ``n`` by the variable ``x`` everywhere."""
    if isinstance(a, Lit):
        l = a.lit
        if n not in lit_terms(voc, l):
            return a
        return Lit(_subst_lit(voc, l, {n: x}))
    if isinstance(a, Truth):
        return a
    if isinstance(a, Or):
        return Or(rename_name(voc, a.left, n, x), rename_name(voc, a.right, n, x))
    if isinstance(a, Exists):
        return Exists(a.var, rename_name(voc, a.body, n, x))
    if isinstance(a, (Know, Maybe)):
        return type(a)(a.level, rename_name(voc, a.arg, n, x))
    return type(a)(rename_name(voc, a.arg, n, x))


# -- proper+ knowledge bases ---------------------------------------------------------


@dataclass(frozen=True)
class KBClause:
    """A universally closed clause ``forall vars (lits)``."""

    vars: tuple[int, ...]
    lits: tuple[int, ...]


@dataclass
class ProperPlusKB:
    clauses: list[KBClause] = field(default_factory=list)

    def add(self, c: KBClause) -> None:
        self.clauses.append(c)

    def formula(self) -> Formula:
        parts = []
        for c in self.clauses:
            f = clause_formula(c.lits)
            for x in reversed(c.vars):
                f = Forall(x, f)
            parts.append(f)
        return conj(parts)

    def names(self, voc: Vocabulary) -> frozenset:
        out = set()
        for c in self.clauses:
            for l in c.lits:
                out.update(t for t in lit_terms(voc, l) if t & 1)
        return frozenset(out)

    def is_ground(self) -> bool:
        return all(not c.vars for c in self.clauses)


def _conjuncts(a: Formula) -> list[Formula]:
    if isinstance(a, Truth) and a.value:
        return []
    if isinstance(a, Not) and isinstance(a.arg, Or):
        l, r = a.arg.left, a.arg.right
        if isinstance(l, Not) and isinstance(r, Not):
            return _conjuncts(l.arg) + _conjuncts(r.arg)
    return [a]


def _clause_parts(voc: Vocabulary, a: Formula, out: list[int], new_vars: list[int] | None = None) -> None:
    if isinstance(a, Or):
        _clause_parts(voc, a.left, out, new_vars)
        _clause_parts(voc, a.right, out, new_vars)
    elif isinstance(a, NestedEq) or (isinstance(a, Not) and isinstance(a.arg, NestedEq)):
        # nested terms in a clause: forall x (t != x or ...)
        e = a if isinstance(a, NestedEq) else a.arg
        pos = e.pos if isinstance(a, NestedEq) else not e.pos
        defs, l, r = flatten_eq(voc, e.lhs, e.rhs)
        for x, t in defs:
            out.append(voc.lit(t, x, False))
            if new_vars is not None:
                new_vars.append(x)
        out.append(voc.lit(l, r, pos))
    elif isinstance(a, Lit):
        out.append(a.lit)
    elif isinstance(a, Not) and isinstance(a.arg, Lit):
        out.append(lit_flip(a.arg.lit))
    elif isinstance(a, Not) and isinstance(a.arg, Not):
        _clause_parts(voc, a.arg.arg, out, new_vars)
    elif isinstance(a, Truth) and not a.value:
        pass
    elif _is_forall(a):
        raise FormulaError("universal quantifiers must enclose the whole clause")
    elif isinstance(a, Exists) or (isinstance(a, Not) and isinstance(a.arg, Exists)):
        raise FormulaError(
            "existential quantifier in knowledge base; Skolemise it, e.g. replace "
            "'exists y f(x) == y' by a new function symbol 'g' and 'f(x) == g(x)'"
        )
    elif isinstance(a, (Know, Maybe, OnlyKnow, Guarantee)):
        raise FormulaError("knowledge base clauses must be objective (no K, M, O or G)")
    else:
        raise FormulaError(f"not a clause: {a!r}")


def _is_forall(a: Formula) -> bool:
    return isinstance(a, Not) and isinstance(a.arg, Exists) and isinstance(a.arg.body, Not)


def validate_proper_plus(voc: Vocabulary, a: Formula) -> ProperPlusKB:
    """Check that ``a`` is a conjunction of universally closed clauses."""
    kb = ProperPlusKB()
    for part in _conjuncts(a):
        vars_: list[int] = []
        body = part
        while _is_forall(body):
            vars_.append(body.arg.var)
            body = body.arg.body.arg
        if isinstance(body, Truth) and body.value:
            continue
        lits: list[int] = []
        _clause_parts(voc, body, lits, vars_)
        free = set()
        for l in lits:
            free.update(t for t in lit_terms(voc, l) if voc.is_var(t))
        unbound = free - set(vars_)
        if unbound:
            raise FormulaError(
                "free variable(s) " + ", ".join(sorted(voc.label(x) for x in unbound))
                + " in knowledge base clause"
            )
        used = [x for x in dict.fromkeys(vars_) if x in free]
        kb.add(KBClause(tuple(used), tuple(dict.fromkeys(lits))))
    return kb


# -- grounding ------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundingContext:
    """Finite name universe per sort: the mentioned names plus fresh ones."""

    universe: dict
    mentioned: frozenset
    fresh: dict

    @classmethod
    def build(
        cls,
        voc: Vocabulary,
        kb: ProperPlusKB,
        queries: Sequence[Formula] = (),
        extra_fresh: int | None = None,
    ) -> "GroundingContext":
        """Universe large enough for grounding, quantification and splitting.

        Each sort gets ``2p + 1 + K(A + 1)`` fresh names, where ``p`` is the
        largest number of free variables of that sort in a subformula, ``K``
        the largest belief level and ``A`` the largest arity: ``p + 1`` for
        grounding, ``p`` more for the new names introduced when nested beliefs
        are resolved, and room for one new name per split argument.
        """
        mentioned = set(kb.names(voc))
        p: dict[int, int] = {}
        k = 0
        for c in kb.clauses:
            counts: dict[int, int] = {}
            for x in c.vars:
                counts[voc.sort_of(x)] = counts.get(voc.sort_of(x), 0) + 1
            for s, n in counts.items():
                p[s] = max(p.get(s, 0), n)
        for q in queries:
            mentioned |= names_in(voc, q)
            for s, n in max_free_vars(voc, q).items():
                p[s] = max(p.get(s, 0), n)
            k = max(k, max_level(q))
        arity = max((f.arity for f in voc.funcs), default=0)
        universe = {}
        fresh = {}
        for s in range(len(voc.sort_labels)):
            ment = sorted(n for n in mentioned if voc.sort_of(n) == s)
            budget = 2 * p.get(s, 0) + 1 + k * (arity + 1)
            if extra_fresh is not None:
                budget = extra_fresh
            fr = voc.fresh_names(s, budget, mentioned)
            fresh[s] = tuple(fr)
            universe[s] = tuple(sorted(ment + fr))
        return cls(universe, frozenset(mentioned), fresh)

    def names(self, sort: int) -> tuple[int, ...]:
        return self.universe.get(sort, ())

    def key(self) -> tuple:
        return tuple(sorted((s, u) for s, u in self.universe.items()))


def ground_clauses(voc: Vocabulary, kb: ProperPlusKB, ctx: GroundingContext) -> Iterator[tuple[int, ...]]:
    for c in kb.clauses:
        if not c.vars:
            yield c.lits
            continue
        pools = [ctx.names(voc.sort_of(x)) for x in c.vars]
        for combo in itertools.product(*pools):
            mapping = dict(zip(c.vars, combo))
            yield tuple(_subst_lit(voc, l, mapping) for l in c.lits)


def ground(voc: Vocabulary, kb: ProperPlusKB, ctx: GroundingContext):
    """All instances of the KB clauses over the context's names, loaded into a setup."""
    from .setup import Setup

    return Setup(voc, ground_clauses(voc, kb, ctx))


def ground_terms(voc: Vocabulary, a: Formula, names: dict) -> set[int]:
    """Primitive terms of the grounding of ``a`` over ``names`` (sort -> names)."""
    out: set[int] = set()
    for l in literals(a):
        lhs = l >> 32
        if not voc.is_app(lhs):
            continue
        args = voc.args(lhs)
        if all(x & 1 for x in args):
            out.add(lhs)
            continue
        pools = [(x,) if x & 1 else names.get(voc.sort_of(x), ()) for x in args]
        f = voc.symbol(lhs)
        for combo in itertools.product(*pools):
            out.add(voc.app(f, combo))
    return out


# -- rewriting -------------------------------------------------------------------------


def flatten_eq(voc: Vocabulary, lhs: TermExpr, rhs: TermExpr) -> tuple[list[tuple[int, int]], int, int]:
    """Flatten ``lhs = rhs``: returns definitions ``(var, flat term)``, and flat sides."""
    defs: list[tuple[int, int]] = []

    def flat(e: TermExpr, top: bool) -> int:
        if isinstance(e, Fn):
            f = voc.find_func(e.func)
            if f is None:
                raise SymbolError(f"unknown function {e.func}")
            args = [flat(x, False) for x in e.args]
            t = voc.app(f, args)
        else:
            t = e
        if not top and voc.is_app(t):
            x = voc.fresh_var(voc.sort_of(t))
            defs.append((x, t))
            return x
        return t

    l = flat(lhs, True)
    r = flat(rhs, True)
    if voc.is_app(l) and voc.is_app(r):
        x = voc.fresh_var(voc.sort_of(r))
        defs.append((x, r))
        r = x
    elif voc.is_app(r):
        l, r = r, l
    return defs, l, r


def _flatten_query(voc: Vocabulary, a: NestedEq) -> Formula:
    defs, l, r = flatten_eq(voc, a.lhs, a.rhs)
    core: Formula = Lit(voc.lit(l, r, a.pos))
    for x, t in reversed(defs):
        core = Exists(x, And(Lit(voc.lit(t, x, True)), core))
    return core


def rewrite(voc: Vocabulary, a: Formula, modal: bool = True) -> Formula:
    """Flatten nested-term sugar and, if ``modal``, push quantifiers/connectives into beliefs.

    The belief rules are: forall x K a -> K forall x a; K a and K b -> K(a and b);
    exists x M a -> M exists x a; M a or M b -> M(a or b).
    """
    if isinstance(a, NestedEq):
        return _flatten_query(voc, a)
    if isinstance(a, (Lit, Truth)):
        return a
    if isinstance(a, Or):
        out: Formula = Or(rewrite(voc, a.left, modal), rewrite(voc, a.right, modal))
    elif isinstance(a, Exists):
        out = Exists(a.var, rewrite(voc, a.body, modal))
    elif isinstance(a, (Know, Maybe)):
        out = type(a)(a.level, rewrite(voc, a.arg, modal))
    else:
        out = type(a)(rewrite(voc, a.arg, modal))
    return _rewrite_top(out) if modal else out


def _rewrite_top(a: Formula) -> Formula:
    if isinstance(a, Or):
        l, r = a.left, a.right
        if isinstance(l, Maybe) and isinstance(r, Maybe) and l.level == r.level:
            return Maybe(l.level, Or(l.arg, r.arg))
        return a
    if isinstance(a, Exists) and isinstance(a.body, Maybe):
        return Maybe(a.body.level, Exists(a.var, a.body.arg))
    if isinstance(a, Not):
        inner = a.arg
        # forall x K b  ==  Not(Exists(x, Not(Know(k, b))))
        if isinstance(inner, Exists) and isinstance(inner.body, Not) and isinstance(inner.body.arg, Know):
            k = inner.body.arg
            return Know(k.level, Forall(inner.var, k.arg))
        # K b and K c  ==  Not(Or(Not(Know b), Not(Know c)))
        if isinstance(inner, Or) and isinstance(inner.left, Not) and isinstance(inner.right, Not):
            l, r = inner.left.arg, inner.right.arg
            if isinstance(l, Know) and isinstance(r, Know) and l.level == r.level:
                return Know(l.level, And(l.arg, r.arg))
    return a
