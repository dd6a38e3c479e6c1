"""Brute-force classical semantics over finite name universes.

Worlds assign a name to every primitive term of interest.  Knowledge is
evaluated against ``e``, the set of worlds satisfying the grounded KB, which
is exactly the epistemic state that only-knowing the KB determines.  Belief
levels are ignored and ``G`` is transparent.  This is exponential and meant
for small test instances only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .formula import (
    Exists,
    Formula,
    Guarantee,
    GroundingContext,
    Know,
    Lit,
    Maybe,
    NestedEq,
    Not,
    OnlyKnow,
    Or,
    ProperPlusKB,
    Truth,
    ground_clauses,
    ground_terms,
    rewrite,
    subformulas,
)
from .symbols import Vocabulary, lit_lhs, lit_pos, lit_rhs


class OracleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class World:
    """Sort-preserving assignment of names to primitive terms."""

    index: Mapping[int, int]  # term -> position in values
    values: tuple[int, ...]

    def __call__(self, t: int) -> int:
        return self.values[self.index[t]]

    def as_dict(self) -> dict[int, int]:
        return {t: self.values[i] for t, i in self.index.items()}


def enumerate_worlds(voc: Vocabulary, terms: Sequence[int], universe: Mapping[int, Sequence[int]]) -> Iterator[World]:
    """All assignments in lexicographic order of ``sorted(terms)``."""
    ts = sorted(set(terms))
    pools = []
    for t in ts:
        names = tuple(universe.get(voc.sort_of(t), ()))
        if not names:
            raise OracleError(f"no names of sort {voc.sort_labels[voc.sort_of(t)]} for {voc.term_str(t)}")
        pools.append(names)
    index = {t: i for i, t in enumerate(ts)}
    for values in itertools.product(*pools):
        yield World(index, values)


def default_universe(voc: Vocabulary, kb: ProperPlusKB, sigma: Formula, extra: int = 1) -> dict[int, tuple[int, ...]]:
    """Mentioned names plus, per sort, one fresh name per variable and ``extra`` more."""
    ctx = GroundingContext.build(voc, kb, [sigma], extra_fresh=0)
    nvars: dict[int, int] = {}
    seen = set()
    for c in kb.clauses:
        seen.update(c.vars)
    for a in subformulas(sigma):
        if isinstance(a, Exists):
            seen.add(a.var)
    for x in seen:
        nvars[voc.sort_of(x)] = nvars.get(voc.sort_of(x), 0) + 1
    out = {}
    for s in range(len(voc.sort_labels)):
        base = list(ctx.names(s))
        fresh = voc.fresh_names(s, nvars.get(s, 0) + extra, ctx.mentioned)
        out[s] = tuple(sorted(set(base) | set(fresh)))
    return out


class Model:
    """A KB over a finite universe together with its set of worlds."""

    def __init__(self, voc: Vocabulary, kb: ProperPlusKB, universe: Mapping[int, Sequence[int]], extra_terms=()) -> None:
        self.voc = voc
        self.universe = {s: tuple(ns) for s, ns in universe.items()}
        ctx = GroundingContext(self.universe, frozenset(), {})
        self.clauses = list(ground_clauses(voc, kb, ctx))
        terms = {lit_lhs(l) for c in self.clauses for l in c if voc.is_app(lit_lhs(l))}
        terms |= set(extra_terms)
        self.terms = sorted(terms)
        self.worlds = list(enumerate_worlds(voc, self.terms, self.universe))
        self.e = [w for w in self.worlds if all(any(self._lit(w, l, {}) for l in c) for c in self.clauses)]
        self._memo: dict = {}

    def _term(self, w: World, t: int, env: dict) -> int:
        voc = self.voc
        if voc.is_var(t):
            return env[t]
        if voc.is_app(t):
            args = voc.args(t)
            if any(voc.is_var(a) for a in args):
                t = voc.app(voc.symbol(t), [env.get(a, a) for a in args])
            return w(t)
        return t

    def _lit(self, w: World, l: int, env: dict) -> bool:
        same = self._term(w, lit_lhs(l), env) == self._term(w, lit_rhs(l), env)
        return same == bool(lit_pos(l))

    def holds(self, a: Formula, w: World, env: dict | None = None) -> bool:
        return self._eval(a, w, env or {})

    def _eval(self, a: Formula, w: World, env: dict) -> bool:
        if isinstance(a, Lit):
            return self._lit(w, a.lit, env)
        if isinstance(a, Truth):
            return a.value
        if isinstance(a, Or):
            return self._eval(a.left, w, env) or self._eval(a.right, w, env)
        if isinstance(a, Not):
            return not self._eval(a.arg, w, env)
        if isinstance(a, Exists):
            names = self.universe.get(self.voc.sort_of(a.var), ())
            return any(self._eval(a.body, w, {**env, a.var: n}) for n in names)
        if isinstance(a, Guarantee):
            return self._eval(a.arg, w, env)
        if isinstance(a, (Know, Maybe, OnlyKnow)):
            # subjective: independent of w
            key = (a, tuple(sorted(env.items())))
            r = self._memo.get(key)
            if r is None:
                if isinstance(a, Know):
                    r = all(self._eval(a.arg, v, env) for v in self.e)
                elif isinstance(a, Maybe):
                    r = any(self._eval(a.arg, v, env) for v in self.e)
                else:
                    e = set(self.e)
                    r = all((v in e) == self._eval(a.arg, v, env) for v in self.worlds)
                self._memo[key] = r
            return r
        if isinstance(a, NestedEq):
            return self._eval(rewrite(self.voc, a, modal=False), w, env)
        raise TypeError(a)

    def entails(self, a: Formula) -> bool:
        """``e, w |= a`` for every world ``w``; ``e`` is fixed by only-knowing."""
        return all(self._eval(a, w, {}) for w in self.worlds)


def classical_holds(
    voc: Vocabulary,
    kb: ProperPlusKB,
    sigma: Formula,
    universe: Mapping[int, Sequence[int]] | None = None,
) -> bool:
    """Does only-knowing ``kb`` entail ``sigma`` classically?"""
    sigma = rewrite(voc, sigma, modal=False)
    if universe is None:
        universe = default_universe(voc, kb, sigma)
    extra = ground_terms(voc, sigma, dict(universe))
    return Model(voc, kb, universe, extra).entails(sigma)
