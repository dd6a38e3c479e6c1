"""Benchmark runs and their TSV reports."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from statistics import mean
from typing import Sequence

from .minesweeper import GameStats, MinesweeperConfig, play_minesweeper
from .sudoku import BundledPuzzle, SudokuStats, play_sudoku


@dataclass
class MinesweeperSummary:
    config: MinesweeperConfig
    runs: int
    max_level: int
    games: list[GameStats] = field(default_factory=list)

    @property
    def wins(self) -> int:
        return sum(g.won for g in self.games)

    @property
    def win_rate(self) -> float:
        return self.wins / len(self.games) if self.games else 0.0

    @property
    def mean_seconds(self) -> float:
        return mean(g.seconds for g in self.games) if self.games else 0.0

    def level_means(self) -> dict[int, float]:
        levels = sorted({l for g in self.games for l in g.levels})
        return {l: mean(g.levels.get(l, 0) for g in self.games) for l in levels}


def run_benchmark(config: MinesweeperConfig, runs: int, max_level: int, seed: int | None = None) -> MinesweeperSummary:
    """Play ``runs`` games with seeds ``seed, seed + 1, ...``."""
    base = config.seed if seed is None else seed
    out = MinesweeperSummary(config, runs, max_level)
    for i in range(runs):
        cfg = MinesweeperConfig(config.width, config.height, config.mines, base + i, config.first_click)
        out.games.append(play_minesweeper(cfg, max_level))
    return out


def minesweeper_tsv(summaries: Sequence[MinesweeperSummary]) -> str:
    buf = io.StringIO()
    buf.write("config\tmax_level\truns\twin_rate\tmean_seconds\n")
    for s in summaries:
        c = s.config
        buf.write(f"{c.width}x{c.height}-{c.mines}\t{s.max_level}\t{len(s.games)}\t{s.win_rate:.4f}\t{s.mean_seconds:.4f}\n")
    return buf.getvalue()


def run_sudoku(puzzles: Sequence[BundledPuzzle], max_level: int) -> list[tuple[BundledPuzzle, SudokuStats]]:
    return [(p, play_sudoku(p.instance, max_level)) for p in puzzles]


def sudoku_tsv(results: Sequence[tuple[BundledPuzzle, SudokuStats]], max_level: int) -> str:
    buf = io.StringIO()
    cols = "\t".join(f"level{l}" for l in range(max_level + 1))
    buf.write(f"puzzle\tdifficulty\tclues\t{cols}\tsolved\tseconds\n")
    for p, st in results:
        counts = "\t".join(str(st.levels.get(l, 0)) for l in range(max_level + 1))
        buf.write(f"{p.label}\t{p.difficulty}\t{st.clues}\t{counts}\t{str(st.solved).lower()}\t{st.seconds:.3f}\n")
    return buf.getvalue()
