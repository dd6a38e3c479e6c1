"""Ground clause store with unit propagation, subsumption and restriction.

The store keeps the unit closure of its clauses up to date with the
two-watched-literal scheme.  Units live in two maps: ``value[t] = n`` for a
derived ``t = n`` and ``neg[t]`` for the names ``n`` with a derived
``t != n``.  A stored clause is *falsified* on a literal when that literal is
complementary to a unit, and *satisfied* when one of its literals is
subsumed by a unit.  Additions are undone with LIFO checkpoints.

VP and WP are never built explicitly: membership in VP is answered by
:meth:`Setup.subsumes`, and WP is computed on demand by :meth:`Setup.wp`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .clause import Clause, clause_subsumes, clause_subsumes_injective, clause_valid, make_clause
from .symbols import Vocabulary, lit_complementary, lit_subsumes

_MASK = 0x7FFFFFFF


class Status(Enum):
    OK = "ok"
    EMPTY_CLAUSE = "empty-clause"


class UndoError(RuntimeError):
    """Raised when checkpoints are undone out of order."""


@dataclass(frozen=True)
class Value:
    name: int


@dataclass(frozen=True)
class Forbidden:
    names: frozenset


@dataclass(frozen=True)
class Unknown:
    pass


class Setup:
    def __init__(self, voc: Vocabulary, clauses: Iterable[Sequence[int]] = ()) -> None:
        self.voc = voc
        self.clauses: list[list[int]] = []
        self._keys: list[Clause] = []
        self._key_set: set[Clause] = set()
        self._watch: dict[int, list[int]] = {}
        self._occ: dict[int, list[int]] = {}
        self._lits_on_term: dict[int, set[int]] = {}
        self.value: dict[int, int] = {}
        self.neg: dict[int, set[int]] = {}
        self.trail: list[int] = []
        self._qhead = 0
        self.empty = False
        self._marks: list[tuple[int, int, bool]] = []
        self.version = 0
        for c in clauses:
            self.add(c)

    # -- assignment primitives ----------------------------------------------

    def satisfied(self, l: int) -> bool:
        """Whether ``l`` is subsumed by a unit."""
        t = l >> 32
        n = (l >> 1) & _MASK
        v = self.value.get(t)
        if l & 1:
            return v == n
        if v is not None:
            return v != n
        ns = self.neg.get(t)
        return ns is not None and n in ns

    def falsified(self, l: int) -> bool:
        """Whether ``l`` is complementary to a unit."""
        t = l >> 32
        n = (l >> 1) & _MASK
        v = self.value.get(t)
        if l & 1:
            if v is not None:
                return v != n
            ns = self.neg.get(t)
            return ns is not None and n in ns
        return v == n

    def _assign(self, l: int) -> bool:
        t = l >> 32
        n = (l >> 1) & _MASK
        v = self.value.get(t)
        if l & 1:
            if v is not None:
                if v == n:
                    return True
                self.empty = True
                return False
            ns = self.neg.get(t)
            if ns and n in ns:
                self.empty = True
                return False
            self.value[t] = n
        else:
            if v is not None:
                if v == n:
                    self.empty = True
                    return False
                return True
            ns = self.neg.get(t)
            if ns is None:
                self.neg[t] = ns = set()
            elif n in ns:
                return True
            ns.add(n)
        self.trail.append(l)
        return True

    def _falsified_since(self, l: int) -> int:
        """Trail position of the earliest unit falsifying ``l``."""
        t = l >> 32
        best = len(self.trail)
        for i, u in enumerate(self.trail):
            if u >> 32 == t and lit_complementary(u, l):
                best = i
                break
        return best

    def _propagate(self) -> bool:
        trail = self.trail
        watch = self._watch
        clauses = self.clauses
        value = self.value
        neg = self.neg
        while self._qhead < len(trail):
            u = trail[self._qhead]
            self._qhead += 1
            t = u >> 32
            on_t = self._lits_on_term.get(t)
            if not on_t:
                continue
            if u & 1:
                false_lits = [l for l in on_t if l & 1 and l != u]
                if u ^ 1 in on_t:
                    false_lits.append(u ^ 1)
            else:
                false_lits = [u ^ 1] if u ^ 1 in on_t else []
            for fl in false_lits:
                ws = watch.get(fl)
                if not ws:
                    continue
                i = j = 0
                size = len(ws)
                while i < size:
                    cid = ws[i]
                    i += 1
                    c = clauses[cid]
                    if c[0] == fl:
                        c[0], c[1] = c[1], c[0]
                    other = c[0]
                    # inline satisfied(other)
                    ot = other >> 32
                    on = (other >> 1) & _MASK
                    ov = value.get(ot)
                    if other & 1:
                        if ov == on:
                            ws[j] = cid
                            j += 1
                            continue
                    elif ov is not None:
                        if ov != on:
                            ws[j] = cid
                            j += 1
                            continue
                    else:
                        ons = neg.get(ot)
                        if ons is not None and on in ons:
                            ws[j] = cid
                            j += 1
                            continue
                    for k in range(2, len(c)):
                        lk = c[k]
                        kt = lk >> 32
                        kn = (lk >> 1) & _MASK
                        kv = value.get(kt)
                        if lk & 1:
                            if kv is not None:
                                if kv != kn:
                                    continue
                            else:
                                kns = neg.get(kt)
                                if kns is not None and kn in kns:
                                    continue
                        elif kv == kn:
                            continue
                        c[1] = lk
                        c[k] = fl
                        wl = watch.get(lk)
                        if wl is None:
                            watch[lk] = [cid]
                        else:
                            wl.append(cid)
                        break
                    else:
                        ws[j] = cid
                        j += 1
                        if not self._assign(other):
                            while i < size:
                                ws[j] = ws[i]
                                j += 1
                                i += 1
                            del ws[j:]
                            return False
                del ws[j:]
        return True

    # -- public mutation ----------------------------------------------------

    def add(self, lits: Iterable[int]) -> Status:
        """Add a ground clause and restore the unit closure."""
        voc = self.voc
        c = make_clause(l for l in lits if not voc.lit_invalid(l))
        if clause_valid(voc, c):
            return Status.EMPTY_CLAUSE if self.empty else Status.OK
        if self.empty:
            return Status.EMPTY_CLAUSE
        self.version += 1
        if not c:
            self.empty = True
            return Status.EMPTY_CLAUSE
        if len(c) == 1:
            if self._assign(c[0]):
                self._propagate()
            return Status.EMPTY_CLAUSE if self.empty else Status.OK
        if c in self._key_set:
            return Status.OK
        free = [l for l in c if not self.falsified(l)]
        if not free:
            self.empty = True
            return Status.EMPTY_CLAUSE
        dead = [l for l in c if self.falsified(l)]
        if len(free) == 1 and dead:
            dead.sort(key=self._falsified_since, reverse=True)
        body = free + dead
        cid = len(self.clauses)
        self.clauses.append(body)
        self._keys.append(c)
        self._key_set.add(c)
        for l in c:
            self._occ.setdefault(l, []).append(cid)
            self._lits_on_term.setdefault(l >> 32, set()).add(l)
        self._watch.setdefault(body[0], []).append(cid)
        self._watch.setdefault(body[1], []).append(cid)
        if len(free) == 1 and not self.satisfied(free[0]):
            if self._assign(free[0]):
                self._propagate()
        return Status.EMPTY_CLAUSE if self.empty else Status.OK

    def add_unit(self, l: int) -> Status:
        return self.add((l,))

    def mark(self) -> int:
        self._marks.append((len(self.clauses), len(self.trail), self.empty))
        return len(self._marks) - 1

    def undo(self, checkpoint: int) -> None:
        if checkpoint != len(self._marks) - 1:
            raise UndoError(f"checkpoint {checkpoint} is not the innermost ({len(self._marks) - 1})")
        n_clauses, n_trail, empty = self._marks.pop()
        for cid in range(len(self.clauses) - 1, n_clauses - 1, -1):
            body = self.clauses.pop()
            key = self._keys.pop()
            self._key_set.discard(key)
            self._watch[body[0]].remove(cid)
            self._watch[body[1]].remove(cid)
            for l in key:
                occ = self._occ[l]
                occ.pop()
                if not occ:
                    del self._occ[l]
                    self._lits_on_term[l >> 32].discard(l)
        trail = self.trail
        while len(trail) > n_trail:
            l = trail.pop()
            t = l >> 32
            if l & 1:
                del self.value[t]
            else:
                self.neg[t].discard((l >> 1) & _MASK)
        self._qhead = len(trail)
        self.empty = empty
        self.version += 1

    # -- queries --------------------------------------------------------------

    def obviously_inconsistent(self) -> bool:
        return self.empty

    def subsumes(self, c: Iterable[int]) -> bool:
        """Whether ``c`` is in VP: valid, or subsumed by a clause of UP."""
        if self.empty:
            return True
        c = make_clause(c)
        if clause_valid(self.voc, c):
            return True
        for l in c:
            if self.satisfied(l):
                return True
        cands: set[int] = set()
        occ = self._occ
        for l in c:
            cands.update(occ.get(l, ()))
            if not l & 1:
                for l2 in self._lits_on_term.get(l >> 32, ()):
                    if l2 & 1 and l2 != l ^ 1:
                        cands.update(occ[l2])
        for cid in sorted(cands):
            body = self.clauses[cid]
            if all(
                self.falsified(a) or any(lit_subsumes(a, b) for b in c) for a in body
            ):
                return True
        return False

    def entails_literal(self, l: int) -> bool:
        """Fast path of :meth:`subsumes` for a unit clause.

        A clause subsumes ``t = n`` only if all its non-falsified literals
        are ``t = n``; it subsumes ``t != n`` if they are all ``t != n`` or
        ``t = n'`` with ``n' != n``.
        """
        if self.empty or self.satisfied(l) or self.voc.lit_valid(l):
            return True
        occ = self._occ
        falsified = self.falsified
        clauses = self.clauses
        if l & 1:
            for cid in occ.get(l, ()):
                for a in clauses[cid]:
                    if a != l and not falsified(a):
                        break
                else:
                    return True
            return False
        t = l >> 32
        pos = l ^ 1
        cands = list(occ.get(l, ()))
        for l2 in self._lits_on_term.get(t, ()):
            if l2 & 1 and l2 != pos:
                cands.extend(occ[l2])
        for cid in cands:
            for a in clauses[cid]:
                if a == l or (a >> 32 == t and a & 1 and a != pos):
                    continue
                if not falsified(a):
                    break
            else:
                return True
        return False

    def units(self) -> list[int]:
        """Unit literals of UP that are not subsumed by another unit."""
        out = [(t << 32) | (n << 1) | 1 for t, n in self.value.items()]
        for t, ns in self.neg.items():
            if t not in self.value:
                out.extend((t << 32) | (n << 1) for n in ns)
        out.sort()
        return out

    def forms(self) -> list[Clause]:
        """Propagated forms of the stored clauses that no unit satisfies."""
        seen: set[Clause] = set()
        out: list[Clause] = []
        for body in self.clauses:
            if any(self.satisfied(l) for l in body):
                continue
            f = make_clause(l for l in body if not self.falsified(l))
            if f not in seen:
                seen.add(f)
                out.append(f)
        return out

    def wp(self, strict: bool = False) -> list[Clause]:
        """WP: UP without valid clauses and without clauses subsumed by another.

        By default a clause is only dropped when its subsumer maps literals
        one-to-one onto it, which keeps every subsumption query unchanged when
        further clauses are added later.  Plain subsumption (``strict``) can
        drop a unit such as ``t != a`` because ``t = b or t = c`` subsumes it,
        and the unit's propagations are then lost.
        """
        subsumes = clause_subsumes if strict else clause_subsumes_injective
        if self.empty:
            return [()]
        elems: list[Clause] = [(l,) for l in self.units()] + self.forms()
        # a subsumer's first literal subsumes some literal of the subsumed
        # clause, so indexing by first literal finds every candidate
        by_lit: dict[int, list[int]] = {}
        by_term_pos: dict[int, list[int]] = {}
        for i, e in enumerate(elems):
            if not e:
                continue
            l = e[0]
            by_lit.setdefault(l, []).append(i)
            if l & 1:
                by_term_pos.setdefault(l >> 32, []).append(i)
        keep: list[Clause] = []
        for i, e in enumerate(elems):
            cands: set[int] = set()
            for l in e:
                cands.update(by_lit.get(l, ()))
                if not l & 1:
                    cands.update(by_term_pos.get(l >> 32, ()))
            cands.discard(i)
            # of two mutually subsuming elements the earlier one stays
            if not any(
                subsumes(elems[j], e) and (j < i or not subsumes(e, elems[j]))
                for j in cands
            ):
                keep.append(e)
        return keep

    def potentially_inconsistent(self) -> bool:
        """Obviously inconsistent, or two complementary literals occur in WP.

        The further condition that all ``t != n`` for every name of ``t``'s
        sort occur cannot arise: each sort has infinitely many names.  A
        literal ``t = n`` with ``n`` of the wrong sort is invalid and is
        stripped on insertion, so it would already have produced the empty
        clause.
        """
        if self.empty:
            return True
        return _has_complementary(self.wp(strict=True))

    def determines(self, t: int):
        v = self.value.get(t)
        if v is not None:
            return Value(v)
        ns = self.neg.get(t)
        if ns:
            return Forbidden(frozenset(ns))
        return Unknown()

    def terms(self) -> set[int]:
        out = {l >> 32 for l in self.trail}
        out.update(t for t, ls in self._lits_on_term.items() if ls)
        return out

    def restrict(self, terms: Iterable[int]) -> "Setup":
        """``s|_T``: the connected part of WP reachable from ``terms``."""
        return Setup(self.voc, restrict_clauses(self.wp(), terms))

    def add_isomorphic(self, l: int, universe: dict[int, Sequence[int]], base: "Setup | None" = None) -> Status:
        """Add every literal isomorphic to ``l`` whose negation is not in VP.

        ``universe`` maps sorts to the candidate names.  The negation test is
        made against ``base`` (default: this setup) before anything is added.
        """
        base = self if base is None else base
        batch = [l2 for l2 in isomorphic_literals(self.voc, l, universe) if not base.entails_literal(l2 ^ 1)]
        for l2 in batch:
            if self.add((l2,)) is Status.EMPTY_CLAUSE:
                break
        return Status.EMPTY_CLAUSE if self.empty else Status.OK

    def stats(self) -> dict[str, int]:
        return {"clauses": len(self.clauses), "units": len(self.trail)}

    def __repr__(self) -> str:
        return f"Setup(clauses={len(self.clauses)}, units={len(self.trail)}, empty={self.empty})"


def _has_complementary(elems: Iterable[Clause]) -> bool:
    pos: dict[int, int] = {}
    negs: dict[int, set[int]] = {}
    for e in elems:
        if not e:
            return True
        for l in e:
            t = l >> 32
            n = (l >> 1) & _MASK
            if l & 1:
                p = pos.get(t)
                if p is not None and p != n:
                    return True
                pos[t] = n
                if n in negs.get(t, ()):
                    return True
            else:
                if pos.get(t) == n:
                    return True
                negs.setdefault(t, set()).add(n)
    return False


def restrict_clauses(elems: Sequence[Clause], terms: Iterable[int]) -> list[Clause]:
    """Connected-component closure of ``elems`` from ``terms``; empty clauses always kept."""
    by_term: dict[int, list[int]] = {}
    for i, e in enumerate(elems):
        for l in e:
            by_term.setdefault(l >> 32, []).append(i)
    chosen = {i for i, e in enumerate(elems) if not e}
    seen_terms: set[int] = set()
    frontier = [t for t in terms]
    while frontier:
        t = frontier.pop()
        if t in seen_terms:
            continue
        seen_terms.add(t)
        for i in by_term.get(t, ()):
            if i not in chosen:
                chosen.add(i)
                frontier.extend(l >> 32 for l in elems[i])
    return [elems[i] for i in sorted(chosen)]


def isomorphic_literals(voc: Vocabulary, l: int, universe: dict[int, Sequence[int]]) -> list[int]:
    """All literals ``f(m1..mj) = m`` isomorphic to ground ``l = f(n1..nj) = n`` over ``universe``."""
    lhs = l >> 32
    rhs = (l >> 1) & _MASK
    f = voc.symbol(lhs)
    pattern = list(voc.args(lhs)) + [rhs]
    distinct: list[int] = []
    for n in pattern:
        if n not in distinct:
            distinct.append(n)
    pools = [universe[voc.sort_of(n)] for n in distinct]
    out = []
    for combo in itertools.product(*pools):
        if len(set(combo)) != len(combo):
            continue
        m = dict(zip(distinct, combo))
        t = voc.app(f, [m[a] for a in pattern[:-1]])
        out.append((t << 32) | (m[rhs] << 1) | (l & 1))
    out.sort()
    return out
