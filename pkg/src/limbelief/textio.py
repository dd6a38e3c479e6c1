"""Script language, pretty-printer and interactive session.

A script is line oriented::

    sort HUMAN
    sort BOOL
    name Sally, Frank, Fred : HUMAN
    name T : BOOL
    fun fatherOf/1 : HUMAN
    fun rich/1 : BOOL
    var x : HUMAN
    kb: fatherOf(Sally) == Frank || fatherOf(Sally) == Fred
    kb: forall x (fatherOf(Sally) != x || rich(x) == T)
    query: K1 exists x (fatherOf(Sally) == x && rich(x) == T && M1 fatherOf(Sally) != x)
    expect: true

``pred Rich/1`` declares a function ``rich`` into the sort ``BOOL`` (created
on demand together with its name ``T``); ``Rich(x)`` in a formula then
stands for ``rich(x) == T``.  Comments start with ``#`` or ``//``.
"""

from __future__ import annotations

import re
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, TextIO

from .formula import (
    FALSE,
    TRUE,
    And,
    Equiv,
    Exists,
    Fn,
    Forall,
    Formula,
    FormulaError,
    Guarantee,
    Implies,
    Know,
    Lit,
    Maybe,
    NestedEq,
    Not,
    OnlyKnow,
    Or,
    ProperPlusKB,
    Truth,
    max_level,
    validate_proper_plus,
)
from .solver import BudgetExhausted, QueryOptions, query_with_stats
from .symbols import SymbolError, Vocabulary

BOOL_SORT = "BOOL"
TRUE_NAME = "T"


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, column {col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


# -- statements -------------------------------------------------------------------


@dataclass(frozen=True)
class SortDecl:
    names: tuple[str, ...]


@dataclass(frozen=True)
class NameDecl:
    names: tuple[str, ...]
    sort: str


@dataclass(frozen=True)
class FunDecl:
    funcs: tuple[tuple[str, int], ...]
    sort: str


@dataclass(frozen=True)
class PredDecl:
    preds: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class VarDecl:
    names: tuple[str, ...]
    sort: str


Declaration = SortDecl | NameDecl | FunDecl | PredDecl | VarDecl


@dataclass
class KBAssertion:
    formula: Formula
    line: int


@dataclass
class QueryStmt:
    formula: Formula
    line: int
    expect: bool | None = None
    kb_size: int = 0


@dataclass
class Script:
    voc: Vocabulary
    statements: list = field(default_factory=list)
    kb: ProperPlusKB = field(default_factory=ProperPlusKB)
    preds: dict = field(default_factory=dict)  # predicate label -> function label

    def parser(self) -> "Parser":
        """A parser over this script's vocabulary, predicates included."""
        p = Parser(self.voc)
        p.preds.update(self.preds)
        return p

    @property
    def declarations(self) -> list:
        return [s for s in self.statements if not isinstance(s, (KBAssertion, QueryStmt))]

    @property
    def assertions(self) -> list[KBAssertion]:
        return [s for s in self.statements if isinstance(s, KBAssertion)]

    @property
    def queries(self) -> list[QueryStmt]:
        return [s for s in self.statements if isinstance(s, QueryStmt)]

    def kb_upto(self, q: QueryStmt) -> ProperPlusKB:
        return ProperPlusKB(self.kb.clauses[: q.kb_size])


# -- lexer ----------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<op><->|->|==|!=|&&|\|\||[!(),:/<>])|(?P<id>[A-Za-z0-9_][A-Za-z0-9_']*))"
)
_LEVEL = re.compile(r"^([KM])(\d+)$")
_KEYWORDS = {"exists", "forall", "true", "false", "G", "O"}


@dataclass
class Token:
    kind: str
    text: str
    col: int


def tokenize(text: str, line: int = 0) -> list[Token]:
    out: list[Token] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {text[col - 1]!r}", line, col)
        kind = "op" if m.group("op") else "id"
        tok = m.group(kind)
        out.append(Token(kind, tok, m.start(kind) + 1))
        pos = m.end()
    out.append(Token("end", "", len(text) + 1))
    return out


def _strip_comment(line: str) -> str:
    for marker in ("//", "#"):
        i = line.find(marker)
        if i >= 0:
            line = line[:i]
    return line


# -- parser ----------------------------------------------------------------------------


class Parser:
    """Stateful parser: declarations extend the vocabulary as they are read."""

    def __init__(self, voc: Vocabulary | None = None) -> None:
        self.voc = voc or Vocabulary()
        self.preds: dict[str, str] = {}
        self._toks: list[Token] = []
        self._i = 0
        self._line = 0

    # statements

    def statement(self, text: str, line: int = 0):
        """Parse one non-empty line; returns a statement object or None."""
        self._line = line
        body = _strip_comment(text).strip()
        if not body:
            return None
        head, _, rest = body.partition(" ")
        if body.startswith(("kb:", "query:", "expect:")):
            head, _, rest = body.partition(":")
            head += ":"
        col = len(text) - len(text.lstrip()) + len(head) + 2
        try:
            if head == "sort":
                names = self._idents(rest, col)
                for n in names:
                    self.voc.sort(n)
                return SortDecl(tuple(names))
            if head == "name":
                ids, sort = self._typed(rest, col)
                s = self._sort(sort, col)
                for n in ids:
                    self._check_fresh_ident(n, col)
                    self.voc.name(n, s)
                return NameDecl(tuple(ids), sort)
            if head == "var":
                ids, sort = self._typed(rest, col)
                s = self._sort(sort, col)
                for n in ids:
                    self._check_fresh_ident(n, col)
                    self.voc.var(n, s)
                return VarDecl(tuple(ids), sort)
            if head == "fun":
                specs, sort = self._typed(rest, col, arity=True)
                s = self._sort(sort, col)
                for f, a in specs:
                    self.voc.func(f, a, s)
                return FunDecl(tuple(specs), sort)
            if head == "pred":
                specs = self._idents(rest, col, arity=True)
                b = self.bool_sort()
                for p, a in specs:
                    fname = p[0].lower() + p[1:]
                    self.voc.func(fname, a, b)
                    self.preds[p] = fname
                return PredDecl(tuple(specs))
            if head == "kb:":
                f = self.formula(rest, line, col)
                return KBAssertion(f, line)
            if head == "query:":
                return QueryStmt(self.formula(rest, line, col), line)
            if head == "expect:":
                v = rest.strip().lower()
                if v not in ("true", "false"):
                    raise ParseError("expect: takes true or false", line, col)
                return v == "true"
        except SymbolError as e:
            raise ParseError(str(e), line, col) from None
        raise ParseError(f"unknown statement {head!r}", line, 1)

    def bool_sort(self) -> int:
        b = self.voc.sort(BOOL_SORT)
        self.voc.name(TRUE_NAME, b)
        return b

    def _sort(self, label: str, col: int) -> int:
        s = self.voc.find_sort(label)
        if s is None:
            raise ParseError(f"unknown sort {label}", self._line, col)
        return s

    def _check_fresh_ident(self, n: str, col: int) -> None:
        if n in _KEYWORDS or _LEVEL.match(n):
            raise ParseError(f"{n} is reserved", self._line, col)

    def _idents(self, text: str, col: int, arity: bool = False) -> list:
        out = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                raise ParseError("expected an identifier", self._line, col)
            if arity:
                name, slash, num = part.partition("/")
                if not slash or not num.strip().isdigit():
                    raise ParseError(f"expected name/arity, got {part!r}", self._line, col)
                out.append((name.strip(), int(num)))
            else:
                if not re.fullmatch(r"[A-Za-z0-9_][A-Za-z0-9_']*", part):
                    raise ParseError(f"bad identifier {part!r}", self._line, col)
                out.append(part)
        return out

    def _typed(self, text: str, col: int, arity: bool = False):
        left, colon, right = text.rpartition(":")
        if not colon:
            raise ParseError("expected ': SORT'", self._line, col)
        return self._idents(left, col, arity), right.strip()

    # formulas

    def formula(self, text: str, line: int = 0, col: int = 1) -> Formula:
        self._line = line
        self._toks = tokenize(text, line)
        for t in self._toks:
            t.col += col - 1
        self._i = 0
        f = self._equiv()
        if self._peek().kind != "end":
            self._fail(f"unexpected {self._peek().text!r}")
        return f

    def _peek(self) -> Token:
        return self._toks[self._i]

    def _next(self) -> Token:
        t = self._toks[self._i]
        self._i += 1
        return t

    def _accept(self, text: str) -> bool:
        if self._peek().text == text and self._peek().kind == "op":
            self._i += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            self._fail(f"expected {text!r}")

    def _fail(self, msg: str):
        raise ParseError(msg, self._line, self._peek().col)

    def _equiv(self) -> Formula:
        f = self._impl()
        while self._accept("<->"):
            f = Equiv(f, self._impl())
        return f

    def _impl(self) -> Formula:
        f = self._or()
        if self._accept("->"):
            return Implies(f, self._impl())
        return f

    def _or(self) -> Formula:
        f = self._and()
        while self._accept("||"):
            f = Or(f, self._and())
        return f

    def _and(self) -> Formula:
        f = self._unary()
        while self._accept("&&"):
            f = And(f, self._unary())
        return f

    def _unary(self) -> Formula:
        t = self._peek()
        if t.kind == "op" and t.text == "!":
            self._next()
            return Not(self._unary())
        if t.kind == "id":
            if t.text in ("exists", "forall"):
                self._next()
                vars_ = [self._variable()]
                while self._accept(","):
                    vars_.append(self._variable())
                body = self._unary()
                for x in reversed(vars_):
                    body = Exists(x, body) if t.text == "exists" else Forall(x, body)
                return body
            m = _LEVEL.match(t.text)
            if m:
                self._next()
                level = int(m.group(2))
                return (Know if m.group(1) == "K" else Maybe)(level, self._unary())
            if t.text in ("K", "M") and self._toks[self._i + 1].text == "<":
                self._next()
                self._next()
                num = self._next()
                if not num.text.isdigit():
                    self._fail("expected a level")
                self._expect(">")
                return (Know if t.text == "K" else Maybe)(int(num.text), self._unary())
            if t.text == "G":
                self._next()
                return Guarantee(self._unary())
            if t.text == "O":
                self._next()
                return OnlyKnow(self._unary())
        return self._atom()

    def _variable(self) -> int:
        t = self._next()
        v = self.voc.lookup(t.text) if t.kind == "id" else None
        if v is None or not self.voc.is_var(v):
            raise ParseError(f"{t.text!r} is not a declared variable", self._line, t.col)
        return v

    def _atom(self) -> Formula:
        t = self._peek()
        if self._accept("("):
            f = self._equiv()
            self._expect(")")
            return f
        if t.kind == "id" and t.text == "true":
            self._next()
            return TRUE
        if t.kind == "id" and t.text == "false":
            self._next()
            return FALSE
        if t.kind != "id":
            self._fail(f"unexpected {t.text or 'end of line'!r}")
        lhs = self._term()
        op = self._peek()
        if op.kind == "op" and op.text in ("==", "!="):
            self._next()
            rhs = self._term()
            return self._equality(lhs, rhs, op.text == "==", op.col)
        return self._predicate(lhs, t)

    def _predicate(self, e, tok: Token) -> Formula:
        if isinstance(e, Fn):
            f = self.voc.find_func(e.func)
            sort = f.sort if f else None
        elif self.voc.is_app(e):
            sort = self.voc.sort_of(e)
        else:
            sort = None
        b = self.voc.find_sort(BOOL_SORT)
        if sort is None or sort != b:
            raise ParseError(f"expected a comparison after {tok.text!r}", self._line, tok.col)
        t = self.voc.lookup(TRUE_NAME)
        return self._equality(e, t, True, tok.col)

    def _term(self):
        t = self._next()
        if t.kind != "id":
            raise ParseError(f"expected a term, got {t.text!r}", self._line, t.col)
        label = self.preds.get(t.text, t.text)
        f = self.voc.find_func(label)
        if f is not None:
            args = []
            if f.arity or self._peek().text == "(":
                self._expect("(")
                if self._peek().text != ")":
                    args.append(self._term())
                    while self._accept(","):
                        args.append(self._term())
                self._expect(")")
            if len(args) != f.arity:
                raise ParseError(f"{f.label} expects {f.arity} arguments", self._line, t.col)
            for a in args:
                if not isinstance(a, Fn) and self.voc.is_app(a):
                    return Fn(f.label, tuple(args))
                if isinstance(a, Fn):
                    return Fn(f.label, tuple(args))
            return self.voc.app(f, args)
        h = self.voc.lookup(t.text)
        if h is None:
            raise ParseError(f"unknown symbol {t.text!r}", self._line, t.col)
        return h

    def _sort_of(self, e) -> int:
        if isinstance(e, Fn):
            return self.voc.find_func(e.func).sort
        return self.voc.sort_of(e)

    def _equality(self, lhs, rhs, pos: bool, col: int) -> Formula:
        if self._sort_of(lhs) != self._sort_of(rhs):
            raise ParseError("comparison between terms of different sorts", self._line, col)
        nested = isinstance(lhs, Fn) or isinstance(rhs, Fn)
        both_apps = not nested and self.voc.is_app(lhs) and self.voc.is_app(rhs)
        if nested or both_apps:
            return NestedEq(lhs, rhs, pos)
        return Lit(self.voc.lit(lhs, rhs, pos))


def parse(source: str, voc: Vocabulary | None = None) -> Script:
    """Parse a whole script."""
    p = Parser(voc)
    script = Script(p.voc, preds=p.preds)
    last_query: QueryStmt | None = None
    for lineno, line in enumerate(source.splitlines(), 1):
        st = p.statement(line, lineno)
        if st is None:
            continue
        if isinstance(st, bool):
            if last_query is None or last_query.expect is not None:
                raise ParseError("expect: must follow a query", lineno, 1)
            last_query.expect = st
            continue
        if isinstance(st, KBAssertion):
            try:
                kb = validate_proper_plus(p.voc, st.formula)
            except FormulaError as e:
                raise ParseError(f"not a proper+ clause: {e}", lineno, 1) from None
            script.kb.clauses.extend(kb.clauses)
        if isinstance(st, QueryStmt):
            st.kb_size = len(script.kb.clauses)
            last_query = st
        script.statements.append(st)
    return script


# -- printing -----------------------------------------------------------------------------


def _expr_str(voc: Vocabulary, e) -> str:
    if isinstance(e, Fn):
        return f"{e.func}({', '.join(_expr_str(voc, a) for a in e.args)})"
    return voc.term_str(e)


def format_formula(voc: Vocabulary, a: Formula) -> str:
    """Render a formula in the script syntax."""
    if isinstance(a, Lit):
        return voc.lit_str(a.lit)
    if isinstance(a, Truth):
        return "true" if a.value else "false"
    if isinstance(a, NestedEq):
        op = "==" if a.pos else "!="
        return f"{_expr_str(voc, a.lhs)} {op} {_expr_str(voc, a.rhs)}"
    if isinstance(a, Or):
        return f"({format_formula(voc, a.left)} || {format_formula(voc, a.right)})"
    if isinstance(a, Not):
        b = a.arg
        if isinstance(b, Or) and isinstance(b.left, Not) and isinstance(b.right, Not):
            return f"({format_formula(voc, b.left.arg)} && {format_formula(voc, b.right.arg)})"
        if isinstance(b, Exists) and isinstance(b.body, Not):
            return f"forall {voc.label(b.var)} {format_formula(voc, b.body.arg)}"
        return f"!{format_formula(voc, b)}"
    if isinstance(a, Exists):
        return f"exists {voc.label(a.var)} {format_formula(voc, a.body)}"
    if isinstance(a, Know):
        return f"K{a.level} {format_formula(voc, a.arg)}"
    if isinstance(a, Maybe):
        return f"M{a.level} {format_formula(voc, a.arg)}"
    if isinstance(a, Guarantee):
        return f"G {format_formula(voc, a.arg)}"
    if isinstance(a, OnlyKnow):
        return f"O {format_formula(voc, a.arg)}"
    raise TypeError(a)


def format_script(script: Script) -> str:
    voc = script.voc
    out = []
    for st in script.statements:
        if isinstance(st, SortDecl):
            out.append(f"sort {', '.join(st.names)}")
        elif isinstance(st, NameDecl):
            out.append(f"name {', '.join(st.names)} : {st.sort}")
        elif isinstance(st, VarDecl):
            out.append(f"var {', '.join(st.names)} : {st.sort}")
        elif isinstance(st, FunDecl):
            out.append(f"fun {', '.join(f'{f}/{a}' for f, a in st.funcs)} : {st.sort}")
        elif isinstance(st, PredDecl):
            out.append(f"pred {', '.join(f'{p}/{a}' for p, a in st.preds)}")
        elif isinstance(st, KBAssertion):
            out.append(f"kb: {format_formula(voc, st.formula)}")
        elif isinstance(st, QueryStmt):
            out.append(f"query: {format_formula(voc, st.formula)}")
            if st.expect is not None:
                out.append(f"expect: {'true' if st.expect else 'false'}")
    return "\n".join(out) + "\n"


# -- running scripts -------------------------------------------------------------------------


def cap_levels(a: Formula, k: int) -> Formula:
    """Lower every belief level above ``k`` to ``k``."""
    if isinstance(a, (Lit, Truth, NestedEq)):
        return a
    if isinstance(a, Or):
        return Or(cap_levels(a.left, k), cap_levels(a.right, k))
    if isinstance(a, Exists):
        return Exists(a.var, cap_levels(a.body, k))
    if isinstance(a, (Know, Maybe)):
        return type(a)(min(a.level, k), cap_levels(a.arg, k))
    return type(a)(cap_levels(a.arg, k))


@dataclass
class QueryResult:
    index: int
    answer: bool | None  # None: budget exhausted
    level: int
    millis: float
    expect: bool | None
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.expect is None or self.answer == self.expect

    @property
    def result_text(self) -> str:
        return "unknown" if self.answer is None else ("true" if self.answer else "false")


def run_script(script: Script, options: QueryOptions | None = None, max_level: int | None = None) -> list[QueryResult]:
    results = []
    for i, q in enumerate(script.queries, 1):
        f = q.formula if max_level is None else cap_levels(q.formula, max_level)
        start = time.perf_counter()
        try:
            answer, stats = query_with_stats(script.voc, script.kb_upto(q), f, options)
        except BudgetExhausted:
            answer, stats = None, {}
        ms = (time.perf_counter() - start) * 1000
        results.append(QueryResult(i, answer, max_level_of(f), ms, q.expect, stats))
    return results


def max_level_of(f: Formula) -> int:
    return max_level(f)


# -- interactive session ------------------------------------------------------------------------

HELP = """\
statements: sort S | name a, b : S | fun f/2 : S | pred P/1 | var x : S
            kb: <clause> | query: <formula>
commands:   :kb  :reset  :load <file>  :help  :quit"""


class Session:
    """State of an interactive session; :meth:`execute` handles one line."""

    def __init__(self, options: QueryOptions | None = None) -> None:
        self.options = options or QueryOptions()
        self.reset()

    def reset(self) -> None:
        self.parser = Parser()
        self.kb = ProperPlusKB()
        self.kb_text: list[str] = []
        self.last: QueryResult | None = None

    @property
    def voc(self) -> Vocabulary:
        return self.parser.voc

    def execute(self, line: str, lineno: int = 0) -> str:
        text = line.strip()
        if not text:
            return ""
        if text.startswith(":"):
            cmd, _, arg = text[1:].partition(" ")
            if cmd == "reset":
                self.reset()
                return "ok"
            if cmd == "load":
                return self.load(arg.strip())
            if cmd == "kb":
                return "\n".join(self.kb_text) or "(empty)"
            if cmd == "help":
                return HELP
            if cmd in ("quit", "exit", "q"):
                raise EOFError
            return f"error: unknown command :{cmd}"
        try:
            st = self.parser.statement(line, lineno)
            if st is None:
                return ""
            if isinstance(st, KBAssertion):
                kb = validate_proper_plus(self.voc, st.formula)
                self.kb.clauses.extend(kb.clauses)
                self.kb_text.append(format_formula(self.voc, st.formula))
                return f"ok ({len(self.kb.clauses)} clauses)"
            if isinstance(st, QueryStmt):
                return self._query(st.formula)
            if isinstance(st, bool):
                if self.last is None:
                    return "error: no query to check"
                ok = self.last.answer == st
                return "expectation met" if ok else "expectation FAILED"
            return "ok"
        except (ParseError, FormulaError, SymbolError) as e:
            return f"error: {e}"

    def _query(self, f: Formula) -> str:
        start = time.perf_counter()
        try:
            answer, stats = query_with_stats(self.voc, ProperPlusKB(list(self.kb.clauses)), f, self.options)
        except BudgetExhausted as e:
            self.last = QueryResult(0, None, max_level(f), 0.0, None)
            return f"unknown ({e})"
        ms = (time.perf_counter() - start) * 1000
        self.last = QueryResult(0, answer, max_level(f), ms, None, stats)
        return (
            f"{'true' if answer else 'false'}  "
            f"(splits {stats['splits']}, clauses {stats['clauses']}, {ms:.1f} ms)"
        )

    def load(self, path: str) -> str:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as e:
            return f"error: {e}"
        out = []
        for i, line in enumerate(lines, 1):
            r = self.execute(line, i)
            if r.startswith("error"):
                return f"{path}:{i}: {r}"
            if r and not r.startswith("ok"):
                out.append(r)
        out.append(f"loaded {path}")
        return "\n".join(out)


def repl(session: Session | None = None, stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout) -> None:
    """Read-eval-print loop over ``stdin``."""
    session = session or Session()
    interactive = stdin.isatty()
    lineno = 0
    while True:
        if interactive:
            stdout.write("> ")
            stdout.flush()
        line = stdin.readline()
        if not line:
            break
        lineno += 1
        try:
            out = session.execute(line, lineno)
        except EOFError:
            break
        if out:
            print(out, file=stdout)
