"""Sorts, names, variables, function symbols and the packed literal.

Every term is interned into a :class:`Vocabulary` and referred to by an
integer handle ``(index << 1) | is_name``.  A literal ``lhs = rhs`` or
``lhs != rhs`` is one integer ``(lhs << 32) | (rhs << 1) | pos``, so the
complement and subsumption tests are a handful of bit operations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NAME, VAR, APP = 0, 1, 2

MAX_INDEX = 1 << 30
_HALF = 0xFFFFFFFF
_RHS_MASK = 0x7FFFFFFF


class CapacityError(RuntimeError):
    """Raised when the interning table runs out of handles."""


class SymbolError(ValueError):
    """Raised for ill-formed terms or literals."""


@dataclass(frozen=True)
class FuncSymbol:
    ident: int
    label: str
    arity: int
    sort: int


class Vocabulary:
    """Interning table for sorts, function symbols and terms."""

    def __init__(self) -> None:
        self.sort_labels: list[str] = []
        self._sort_by_label: dict[str, int] = {}
        self.funcs: list[FuncSymbol] = []
        self._func_by_label: dict[str, int] = {}
        # parallel per-term tables, indexed by handle >> 1
        self._kind: list[int] = []
        self._sort: list[int] = []
        self._sym: list[int] = []
        self._args: list[tuple[int, ...]] = []
        self._label: list[str] = []
        self._table: dict[tuple, int] = {}
        self._names: list[list[int]] = []
        self._vars: list[list[int]] = []
        self._by_label: dict[str, int] = {}

    # -- declarations -----------------------------------------------------

    def sort(self, label: str) -> int:
        """Return the sort called ``label``, declaring it if new."""
        s = self._sort_by_label.get(label)
        if s is None:
            s = len(self.sort_labels)
            self.sort_labels.append(label)
            self._sort_by_label[label] = s
            self._names.append([])
            self._vars.append([])
        return s

    def find_sort(self, label: str) -> int | None:
        return self._sort_by_label.get(label)

    def func(self, label: str, arity: int, sort: int) -> FuncSymbol:
        ident = self._func_by_label.get(label)
        if ident is not None:
            f = self.funcs[ident]
            if f.arity != arity or f.sort != sort:
                raise SymbolError(f"function {label} redeclared with a different signature")
            return f
        f = FuncSymbol(len(self.funcs), label, arity, sort)
        self.funcs.append(f)
        self._func_by_label[label] = f.ident
        return f

    def find_func(self, label: str) -> FuncSymbol | None:
        ident = self._func_by_label.get(label)
        return None if ident is None else self.funcs[ident]

    def name(self, label: str, sort: int) -> int:
        """Return the standard name ``label`` of ``sort``, declaring it if new."""
        t = self._by_label.get(label)
        if t is not None:
            if self._kind[t >> 1] != NAME or self._sort[t >> 1] != sort:
                raise SymbolError(f"{label} already declared differently")
            return t
        return self._new_name(sort, label)

    def var(self, label: str, sort: int) -> int:
        t = self._by_label.get(label)
        if t is not None:
            if self._kind[t >> 1] != VAR or self._sort[t >> 1] != sort:
                raise SymbolError(f"{label} already declared differently")
            return t
        return self._new_var(sort, label)

    def fresh_var(self, sort: int) -> int:
        """A variable not used before, for flattening and renaming."""
        return self._new_var(sort, None)

    def lookup(self, label: str) -> int | None:
        """Handle of a declared name or variable, by label."""
        return self._by_label.get(label)

    def _new_name(self, sort: int, label: str | None) -> int:
        ordinal = len(self._names[sort])
        if label is None:
            label = f"#{self.sort_labels[sort]}{ordinal}"
        t = self._intern((NAME, sort, ordinal), NAME, sort, ordinal, (), label)
        self._names[sort].append(t)
        self._by_label.setdefault(label, t)
        return t

    def _new_var(self, sort: int, label: str | None) -> int:
        ordinal = len(self._vars[sort])
        if label is None:
            label = f"_{self.sort_labels[sort].lower()}{ordinal}"
        t = self._intern((VAR, sort, ordinal), VAR, sort, ordinal, (), label)
        self._vars[sort].append(t)
        self._by_label.setdefault(label, t)
        return t

    def _intern(self, key, kind, sort, sym, args, label) -> int:
        index = len(self._kind)
        if index >= MAX_INDEX:
            raise CapacityError("term table exhausted")
        t = (index << 1) | (kind == NAME)
        self._kind.append(kind)
        self._sort.append(sort)
        self._sym.append(sym)
        self._args.append(args)
        self._label.append(label)
        self._table[key] = t
        return t

    # -- terms --------------------------------------------------------------

    def app(self, f: FuncSymbol | str, args: Sequence[int] = ()) -> int:
        """Intern the flat application ``f(args)``."""
        if isinstance(f, str):
            found = self.find_func(f)
            if found is None:
                raise SymbolError(f"unknown function {f}")
            f = found
        args = tuple(args)
        if len(args) != f.arity:
            raise SymbolError(f"{f.label} expects {f.arity} arguments, got {len(args)}")
        for a in args:
            if self._kind[a >> 1] == APP:
                raise SymbolError(f"nested application in {f.label}(...)")
        key = (APP, f.ident, args)
        t = self._table.get(key)
        if t is None:
            t = self._intern(key, APP, f.sort, f.ident, args, f.label)
        return t

    def intern(self, kind: int, sort_or_func: int, payload) -> int:
        """Generic interning entry point used by tests: returns existing handles."""
        if kind == APP:
            return self.app(self.funcs[sort_or_func], payload)
        names = self._names if kind == NAME else self._vars
        pool = names[sort_or_func]
        while len(pool) <= payload:
            (self._new_name if kind == NAME else self._new_var)(sort_or_func, None)
        return pool[payload]

    def kind(self, t: int) -> int:
        return self._kind[t >> 1]

    def sort_of(self, t: int) -> int:
        return self._sort[t >> 1]

    def args(self, t: int) -> tuple[int, ...]:
        return self._args[t >> 1]

    def symbol(self, t: int) -> FuncSymbol:
        return self.funcs[self._sym[t >> 1]]

    def ordinal(self, t: int) -> int:
        return self._sym[t >> 1]

    def label(self, t: int) -> str:
        return self._label[t >> 1]

    def is_var(self, t: int) -> bool:
        return self._kind[t >> 1] == VAR

    def is_app(self, t: int) -> bool:
        return self._kind[t >> 1] == APP

    def is_primitive(self, t: int) -> bool:
        return self._kind[t >> 1] == APP and all(a & 1 for a in self._args[t >> 1])

    def term_str(self, t: int) -> str:
        i = t >> 1
        if self._kind[i] != APP:
            return self._label[i]
        args = self._args[i]
        if not args:
            return self._label[i]
        return f"{self._label[i]}({', '.join(self._label[a >> 1] for a in args)})"

    def substitute_term(self, t: int, mapping: dict[int, int]) -> int:
        i = t >> 1
        kind = self._kind[i]
        if kind == VAR:
            return mapping.get(t, t)
        if kind == NAME:
            return t
        args = self._args[i]
        new = tuple(mapping.get(a, a) for a in args)
        if new == args:
            return t
        return self.app(self.funcs[self._sym[i]], new)

    def names_of(self, sort: int) -> list[int]:
        """All names of ``sort`` allocated so far, in ordinal order."""
        return list(self._names[sort])

    def fresh_names(self, sort: int, k: int, avoid: Iterable[int] = ()) -> list[int]:
        """The ``k`` smallest-ordinal names of ``sort`` not in ``avoid``."""
        avoid = set(avoid)
        out: list[int] = []
        pool = self._names[sort]
        i = 0
        while len(out) < k:
            if i == len(pool):
                self._new_name(sort, None)
            n = pool[i]
            if n not in avoid:
                out.append(n)
            i += 1
        return out

    # -- literals -----------------------------------------------------------

    def lit(self, lhs: int, rhs: int, pos: bool = True) -> int:
        """Pack ``lhs = rhs`` (or ``!=``); the right-hand side may not be an application."""
        if self._kind[rhs >> 1] == APP:
            if self._kind[lhs >> 1] == APP:
                raise SymbolError("both sides of a literal are applications")
            lhs, rhs = rhs, lhs
        return (lhs << 32) | (rhs << 1) | bool(pos)

    def lit_valid(self, l: int) -> bool:
        lhs, rhs = l >> 32, (l >> 1) & _RHS_MASK
        if l & 1:
            return lhs == rhs
        if lhs == rhs:
            return False
        if lhs & rhs & 1:
            return True
        return self._sort[lhs >> 1] != self._sort[rhs >> 1]

    def lit_invalid(self, l: int) -> bool:
        lhs, rhs = l >> 32, (l >> 1) & _RHS_MASK
        if not l & 1:
            return lhs == rhs
        if lhs == rhs:
            return False
        if lhs & rhs & 1:
            return True
        return self._sort[lhs >> 1] != self._sort[rhs >> 1]

    def lit_str(self, l: int) -> str:
        op = "==" if l & 1 else "!="
        return f"{self.term_str(l >> 32)} {op} {self.term_str((l >> 1) & _RHS_MASK)}"

    def to_naive(self, l: int) -> "NaiveLiteral":
        return NaiveLiteral(self._naive_term(l >> 32), self._naive_term((l >> 1) & _RHS_MASK), bool(l & 1))

    def _naive_term(self, t: int) -> "NaiveTerm":
        i = t >> 1
        kind = self._kind[i]
        sort = self.sort_labels[self._sort[i]]
        if kind == APP:
            return NaiveTerm("app", sort, self._label[i], tuple(self._naive_term(a) for a in self._args[i]))
        return NaiveTerm("name" if kind == NAME else "var", sort, self._label[i], ())


# -- packed literal primitives (no table access) ------------------------------


def lit_lhs(l: int) -> int:
    return l >> 32


def lit_rhs(l: int) -> int:
    return (l >> 1) & _RHS_MASK


def lit_pos(l: int) -> bool:
    return bool(l & 1)


def lit_flip(l: int) -> int:
    return l ^ 1


def is_name(t: int) -> bool:
    return bool(t & 1)


def lit_complementary(a: int, b: int) -> bool:
    """``t = t'`` vs ``t != t'``, or ``t = n1`` vs ``t = n2`` for distinct names."""
    x = a ^ b
    if x == 1:
        return True
    return x != 0 and not x >> 32 and (a & b & 3) == 3


def lit_subsumes(a: int, b: int) -> bool:
    """Identical, or ``t = n1`` subsumes ``t != n2`` for distinct names."""
    if a == b:
        return True
    x = a ^ b
    return not x >> 32 and (a & 3) == 3 and (b & 3) == 2 and x >> 2 != 0


def complementary_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised :func:`lit_complementary` over int64 arrays."""
    x = a ^ b
    return (x == 1) | ((x != 0) & ((x >> 32) == 0) & ((a & b & 3) == 3))


def subsumes_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised :func:`lit_subsumes` over int64 arrays."""
    x = a ^ b
    return (x == 0) | (((x >> 32) == 0) & ((a & 3) == 3) & ((b & 3) == 2) & ((x >> 2) != 0))


# -- naive structural reference ------------------------------------------------


@dataclass(frozen=True)
class NaiveTerm:
    kind: str
    sort: str
    label: str
    args: tuple


@dataclass(frozen=True)
class NaiveLiteral:
    lhs: NaiveTerm
    rhs: NaiveTerm
    pos: bool


def naive_complementary(a: NaiveLiteral, b: NaiveLiteral) -> bool:
    if a.lhs != b.lhs:
        return False
    if a.rhs == b.rhs:
        return a.pos != b.pos
    return a.pos and b.pos and a.rhs.kind == "name" and b.rhs.kind == "name"


def naive_subsumes(a: NaiveLiteral, b: NaiveLiteral) -> bool:
    if a == b:
        return True
    return (
        a.lhs == b.lhs
        and a.pos
        and not b.pos
        and a.rhs.kind == "name"
        and b.rhs.kind == "name"
        and a.rhs != b.rhs
    )
