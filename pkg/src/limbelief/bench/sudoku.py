"""Sudoku as a limited-belief reasoning problem.

Rows, columns and values share one sort ``NUM`` with names ``1`` .. ``9``;
``value(r, c)`` is the only function.  The KB says that every cell holds a
digit, that two cells in a common row, column or block differ, and that every
digit occurs in every row, column and block.  The agent fills one cell at a
time, always at the lowest belief level at which some cell's value is known.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from typing import Iterator

from ..formula import KBClause, ProperPlusKB
from ..solver import Reasoner
from ..symbols import Vocabulary

DIGITS = "123456789"


class SudokuError(ValueError):
    pass


@dataclass
class SudokuInstance:
    cells: list[int]  # 81 entries, 0 = blank

    @classmethod
    def parse(cls, text: str) -> "SudokuInstance":
        text = "".join(text.split())
        if len(text) != 81:
            raise SudokuError(f"expected 81 cells, got {len(text)}")
        cells = []
        for ch in text:
            if ch in ".0":
                cells.append(0)
            elif ch in DIGITS:
                cells.append(int(ch))
            else:
                raise SudokuError(f"bad cell {ch!r}")
        return cls(cells)

    def __str__(self) -> str:
        return "".join(str(v) if v else "." for v in self.cells)

    @property
    def clues(self) -> int:
        return sum(1 for v in self.cells if v)

    def grid(self) -> str:
        rows = []
        for r in range(9):
            rows.append(" ".join(str(v) if v else "." for v in self.cells[9 * r : 9 * r + 9]))
        return "\n".join(rows)


def units() -> list[list[int]]:
    """The 27 rows, columns and blocks as lists of cell indices."""
    out = [[9 * r + c for c in range(9)] for r in range(9)]
    out += [[9 * r + c for r in range(9)] for c in range(9)]
    for br in range(3):
        for bc in range(3):
            out.append([9 * (3 * br + r) + 3 * bc + c for r in range(3) for c in range(3)])
    return out


def peers(cell: int) -> set[int]:
    return {p for u in units() if cell in u for p in u} - {cell}


class SudokuEncoding:
    """Vocabulary and ground clauses of the Sudoku KB."""

    def __init__(self) -> None:
        voc = Vocabulary()
        self.voc = voc
        self.num = voc.sort("NUM")
        self.digits = [voc.name(d, self.num) for d in DIGITS]
        self.value = voc.func("value", 2, self.num)
        self.terms = [voc.app(self.value, (self.digits[i // 9], self.digits[i % 9])) for i in range(81)]
        self._cell_of = {t: i for i, t in enumerate(self.terms)}

    def eq(self, cell: int, v: int) -> int:
        return self.voc.lit(self.terms[cell], self.digits[v - 1], True)

    def neq(self, cell: int, v: int) -> int:
        return self.voc.lit(self.terms[cell], self.digits[v - 1], False)

    def cell_of(self, lit: int) -> tuple[int, int]:
        return self._cell_of[lit >> 32], DIGITS.index(self.voc.label((lit >> 1) & 0x7FFFFFFF)) + 1

    def constraint_clauses(self) -> Iterator[tuple[int, ...]]:
        for i in range(81):
            yield tuple(self.eq(i, v) for v in range(1, 10))
        seen = set()
        for u in units():
            for a, b in combinations(u, 2):
                if (a, b) in seen:
                    continue
                seen.add((a, b))
                for v in range(1, 10):
                    yield (self.neq(a, v), self.neq(b, v))
            for v in range(1, 10):
                yield tuple(self.eq(c, v) for c in u)

    def clue_clauses(self, inst: SudokuInstance) -> Iterator[tuple[int, ...]]:
        for i, v in enumerate(inst.cells):
            if v:
                yield (self.eq(i, v),)


def sudoku_encode(inst: SudokuInstance, enc: SudokuEncoding | None = None) -> ProperPlusKB:
    """Ground proper+ KB for ``inst``: constraints plus one unit per clue."""
    enc = enc or SudokuEncoding()
    kb = ProperPlusKB()
    for c in enc.constraint_clauses():
        kb.add(KBClause((), c))
    for c in enc.clue_clauses(inst):
        kb.add(KBClause((), c))
    return kb


@dataclass
class SudokuStats:
    puzzle: str
    clues: int
    levels: dict[int, int] = field(default_factory=dict)  # level -> cells solved
    solved: bool = False
    seconds: float = 0.0
    solution: str = ""

    @property
    def decided(self) -> int:
        return self.clues + sum(self.levels.values())


class SudokuAgent:
    """Iterative deepening over belief levels, one cell per step."""

    def __init__(self, inst: SudokuInstance, max_level: int = 3) -> None:
        self.enc = SudokuEncoding()
        self.max_level = max_level
        self.grid = list(inst.cells)
        self.reasoner = Reasoner(self.enc.voc, max_level)
        self.reasoner.add_many(self.enc.constraint_clauses())
        self.reasoner.add_many(self.enc.clue_clauses(inst))
        self._pending: dict[int, list[int]] = {}

    def candidates(self) -> list[int]:
        s = self.reasoner.s0
        out = []
        for i, v in enumerate(self.grid):
            if v:
                continue
            for d in range(1, 10):
                l = self.enc.eq(i, d)
                if not s.falsified(l):
                    out.append(l)
        return out

    def step(self) -> tuple[int, int, int] | None:
        """Fill one cell; returns (cell, value, level) or None when stuck.

        Literals found at some level stay known as the KB grows, so a batch
        found by one query is used up before that level is queried again.
        Lower levels are always tried first.
        """
        lits = self.candidates()
        if not lits:
            return None
        open_lits = set(lits)
        for level in range(self.max_level + 1):
            pending = [l for l in self._pending.get(level, ()) if l in open_lits]
            if not pending:
                known = self.reasoner.known(lits, level)
                pending = [l for l in lits if l in known]
            self._pending[level] = pending
            if pending:
                l = pending[0]
                cell, v = self.enc.cell_of(l)
                self.grid[cell] = v
                self.reasoner.add([l])
                return cell, v, level
        return None

    def solve(self) -> Iterator[tuple[int, int, int]]:
        while 0 in self.grid:
            r = self.step()
            if r is None:
                return
            yield r


def play_sudoku(inst: SudokuInstance, max_level: int = 3) -> SudokuStats:
    start = time.perf_counter()
    agent = SudokuAgent(inst, max_level)
    stats = SudokuStats(str(inst), inst.clues)
    for _, _, level in agent.solve():
        stats.levels[level] = stats.levels.get(level, 0) + 1
    stats.seconds = time.perf_counter() - start
    stats.solved = 0 not in agent.grid
    stats.solution = "".join(str(v) if v else "." for v in agent.grid)
    return stats


def solve_backtracking(inst: SudokuInstance, limit: int = 2) -> list[str]:
    """Up to ``limit`` solutions by plain backtracking, used as ground truth."""
    cells = list(inst.cells)
    peer_list = [sorted(peers(i)) for i in range(81)]
    out: list[str] = []

    def rec() -> bool:
        best, best_opts = -1, None
        for i in range(81):
            if cells[i]:
                continue
            opts = set(range(1, 10)) - {cells[p] for p in peer_list[i]}
            if best_opts is None or len(opts) < len(best_opts):
                best, best_opts = i, opts
                if not opts:
                    return False
        if best < 0:
            out.append("".join(map(str, cells)))
            return len(out) >= limit
        for v in sorted(best_opts):
            cells[best] = v
            if rec():
                return True
        cells[best] = 0
        return False

    rec()
    return out


@dataclass
class BundledPuzzle:
    label: str
    difficulty: str
    instance: SudokuInstance


def load_puzzles(text: str) -> list[BundledPuzzle]:
    """Lines ``<81 cells> [difficulty] [label]``; ``#`` starts a comment."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        inst = SudokuInstance.parse(parts[0])
        difficulty = parts[1] if len(parts) > 1 else ""
        label = parts[2] if len(parts) > 2 else f"puzzle{lineno}"
        out.append(BundledPuzzle(label, difficulty, inst))
    return out


def bundled_puzzles() -> list[BundledPuzzle]:
    text = resources.files("limbelief.data").joinpath("sudoku.txt").read_text(encoding="utf-8")
    return load_puzzles(text)
