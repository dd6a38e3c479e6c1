"""Minesweeper as a limited-belief reasoning problem.

Cells are pairs of names of sort ``POS``; ``isMine(x, y)`` maps into the
Boolean sort with name ``T``.  Uncovering a safe cell adds the information
that it is safe plus "exactly k of its neighbours are mines", expanded into
subset clauses.  The agent uncovers every cell known to be safe at the lowest
belief level where anything is known, and guesses when nothing is.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator

from ..solver import Reasoner
from ..symbols import Vocabulary

MASK64 = (1 << 64) - 1
FIRST_CLICK_RULES = ("none", "safe", "opening")
FIRST_CLICK: tuple[int, int] = (0, 0)


class XorShift64:
    """xorshift64* (Marsaglia's shifts 12, 25, 27; Vigna's multiplier)."""

    MULT = 0x2545F4914F6CDD1D

    def __init__(self, seed: int) -> None:
        # splitmix64 step so that small seeds give unrelated streams
        z = (seed + 0x9E3779B97F4A7C15) & MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        self.state = (z ^ (z >> 31)) or 1

    def next(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * self.MULT) & MASK64

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - (1 << 64) % n
        while True:
            r = self.next()
            if r < limit:
                return r % n


@dataclass(frozen=True)
class MinesweeperConfig:
    width: int = 8
    height: int = 8
    mines: int = 10
    seed: int = 0
    # "none": mines anywhere; "safe": never under the first click;
    # "opening": never under or next to the first click
    first_click: str = "none"

    def __post_init__(self) -> None:
        if self.first_click not in FIRST_CLICK_RULES:
            raise ValueError(f"first_click must be one of {', '.join(FIRST_CLICK_RULES)}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("board must be non-empty")
        if not 0 < self.mines < self.width * self.height:
            raise ValueError("need 0 < mines < width * height")


Cell = tuple[int, int]


class Game:
    """Board state; ``uncover`` floods zero-count regions."""

    def __init__(self, config: MinesweeperConfig) -> None:
        self.config = config
        self.w, self.h = config.width, config.height
        self.rng = XorShift64(config.seed)
        cells = [(x, y) for y in range(self.h) for x in range(self.w)]
        keep_clear = set()
        if config.first_click != "none":
            keep_clear.add(FIRST_CLICK)
        if config.first_click == "opening":
            keep_clear.update(self.neighbours(FIRST_CLICK))
        cells = [c for c in cells if c not in keep_clear]
        if config.mines > len(cells):
            raise ValueError("too many mines for the first-click rule")
        # partial Fisher-Yates
        for i in range(config.mines):
            j = i + self.rng.below(len(cells) - i)
            cells[i], cells[j] = cells[j], cells[i]
        self.mines = frozenset(cells[: config.mines])
        self.opened: dict[Cell, int] = {}
        self.exploded = False

    def neighbours(self, c: Cell) -> list[Cell]:
        x, y = c
        return [
            (x + dx, y + dy)
            for dy in (-1, 0, 1)
            for dx in (-1, 0, 1)
            if (dx or dy) and 0 <= x + dx < self.w and 0 <= y + dy < self.h
        ]

    def count(self, c: Cell) -> int:
        return sum(1 for n in self.neighbours(c) if n in self.mines)

    def uncover(self, c: Cell) -> list[Cell]:
        """Open ``c``; returns the newly opened cells (empty if it was a mine)."""
        if c in self.mines:
            self.exploded = True
            return []
        out = []
        stack = [c]
        while stack:
            d = stack.pop()
            if d in self.opened:
                continue
            k = self.count(d)
            self.opened[d] = k
            out.append(d)
            if k == 0:
                stack.extend(n for n in self.neighbours(d) if n not in self.opened)
        return out

    @property
    def won(self) -> bool:
        return not self.exploded and len(self.opened) == self.w * self.h - len(self.mines)

    @property
    def over(self) -> bool:
        return self.exploded or self.won

    def covered(self) -> list[Cell]:
        return [(x, y) for y in range(self.h) for x in range(self.w) if (x, y) not in self.opened]


class MinesweeperEncoding:
    def __init__(self, width: int, height: int) -> None:
        voc = Vocabulary()
        self.voc = voc
        self.pos = voc.sort("POS")
        self.bool = voc.sort("BOOL")
        self.true = voc.name("T", self.bool)
        self.coords = [voc.name(str(i), self.pos) for i in range(max(width, height))]
        self.is_mine = voc.func("isMine", 2, self.bool)
        self.terms = {
            (x, y): voc.app(self.is_mine, (self.coords[x], self.coords[y]))
            for y in range(height)
            for x in range(width)
        }

    def mine(self, c: Cell) -> int:
        return self.voc.lit(self.terms[c], self.true, True)

    def safe(self, c: Cell) -> int:
        return self.voc.lit(self.terms[c], self.true, False)


def minesweeper_encode_observation(enc: MinesweeperEncoding, cell: Cell, neighbours: list[Cell], count: int) -> Iterator[tuple[int, ...]]:
    """``cell`` is safe and exactly ``count`` of ``neighbours`` are mines."""
    yield (enc.safe(cell),)
    n = len(neighbours)
    # at most count: every (count+1)-subset contains a safe cell
    for sub in combinations(neighbours, count + 1):
        yield tuple(enc.safe(c) for c in sub)
    # at least count: every (n-count+1)-subset contains a mine
    if count:
        for sub in combinations(neighbours, n - count + 1):
            yield tuple(enc.mine(c) for c in sub)


@dataclass
class GameStats:
    won: bool = False
    seconds: float = 0.0
    guesses: int = 0
    levels: dict[int, int] = field(default_factory=dict)  # level -> cells decided
    opened: int = 0


class MinesweeperAgent:
    def __init__(self, game: Game, max_level: int = 1) -> None:
        self.game = game
        self.max_level = max_level
        self.enc = MinesweeperEncoding(game.w, game.h)
        self.reasoner = Reasoner(self.enc.voc, max_level)
        self.known_mines: set[Cell] = set()
        self._observed: set[Cell] = set()

    def observe(self, cells: list[Cell]) -> None:
        g = self.game
        for c in cells:
            if c in self._observed:
                continue
            self._observed.add(c)
            self.reasoner.add_many(minesweeper_encode_observation(self.enc, c, g.neighbours(c), g.opened[c]))

    def frontier(self) -> list[Cell]:
        g = self.game
        out = []
        for c in g.covered():
            if c in self.known_mines:
                continue
            if any(n in g.opened for n in g.neighbours(c)):
                out.append(c)
        return out

    def decide(self) -> tuple[list[Cell], int] | None:
        """Cells known to be safe, with the level; mines found on the way are recorded."""
        cells = self.frontier()
        if not cells:
            return None
        lits = [self.enc.safe(c) for c in cells] + [self.enc.mine(c) for c in cells]
        for level in range(self.max_level + 1):
            known = self.reasoner.known(lits, level)
            if not known:
                continue
            mines = [c for c in cells if self.enc.mine(c) in known]
            self.known_mines.update(mines)
            safe = [c for c in cells if self.enc.safe(c) in known]
            if safe:
                return safe, level
            if mines:
                # knowing more mines changes the frontier; look again from level 0
                return self.decide()
        return None

    def guess(self, rng: XorShift64) -> Cell:
        g = self.game
        covered = [c for c in g.covered() if c not in self.known_mines]
        remote = [c for c in covered if not any(n in g.opened for n in g.neighbours(c))]
        pool = remote or covered
        return pool[rng.below(len(pool))]

    def play(self, stats: GameStats) -> None:
        g = self.game
        rng = XorShift64(g.config.seed ^ 0x5DEECE66D)
        self.observe(g.uncover(FIRST_CLICK))
        if g.exploded:
            return
        while not g.over:
            d = self.decide()
            if d is None:
                c = self.guess(rng)
                stats.guesses += 1
                self.observe(g.uncover(c))
                continue
            safe, level = d
            stats.levels[level] = stats.levels.get(level, 0) + len(safe)
            for c in safe:
                if c not in g.opened:
                    self.observe(g.uncover(c))


def play_minesweeper(config: MinesweeperConfig, max_level: int = 1) -> GameStats:
    start = time.perf_counter()
    game = Game(config)
    stats = GameStats()
    MinesweeperAgent(game, max_level).play(stats)
    stats.won = game.won
    stats.opened = len(game.opened)
    stats.seconds = time.perf_counter() - start
    return stats
