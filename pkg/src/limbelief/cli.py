"""Command line: ``limbelief repl | run | bench``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench.minesweeper import FIRST_CLICK_RULES
from .solver import QueryOptions
from .textio import ParseError, Session, parse, repl, run_script


def _options(args) -> QueryOptions:
    limit = None if args.time_limit is None else args.time_limit / 1000.0
    return QueryOptions(rewrite=not args.no_rewrite, time_limit=limit)


def cmd_repl(args) -> int:
    repl(Session(_options(args)))
    return 0


def cmd_run(args) -> int:
    path = Path(args.script)
    try:
        script = parse(path.read_text(encoding="utf-8"))
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ParseError as e:
        print(f"{path}: {e}", file=sys.stderr)
        return 2
    ok = True
    for r in run_script(script, _options(args), args.max_level):
        print(f"{r.index}\t{r.result_text}\t{r.level}\t{r.millis:.3f}")
        ok = ok and r.passed
    return 0 if ok else 1


def cmd_bench(args) -> int:
    from .bench.harness import minesweeper_tsv, run_benchmark, run_sudoku, sudoku_tsv
    from .bench.minesweeper import MinesweeperConfig
    from .bench.sudoku import bundled_puzzles, load_puzzles

    if args.game == "sudoku":
        level = 3 if args.max_level is None else args.max_level
        if args.file:
            puzzles = load_puzzles(Path(args.file).read_text(encoding="utf-8"))
        else:
            puzzles = bundled_puzzles()
        text = sudoku_tsv(run_sudoku(puzzles, level), level)
    else:
        level = 1 if args.max_level is None else args.max_level
        cfg = MinesweeperConfig(args.width, args.height, args.mines, args.seed, args.first_click)
        text = minesweeper_tsv([run_benchmark(cfg, args.runs, level)])
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="limbelief", description="Reasoning in the logic of limited belief.")
    sub = p.add_subparsers(dest="command", required=True)

    def query_flags(q):
        q.add_argument("--time-limit", type=float, metavar="MS", help="per-query time limit in milliseconds")
        q.add_argument("--no-rewrite", action="store_true", help="do not push quantifiers into beliefs")

    r = sub.add_parser("repl", help="interactive session")
    query_flags(r)
    r.set_defaults(func=cmd_repl)

    r = sub.add_parser("run", help="evaluate the queries of a script")
    r.add_argument("script")
    r.add_argument("--max-level", type=int, metavar="K", help="lower every belief level above K to K")
    query_flags(r)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="Sudoku and Minesweeper agents")
    b.add_argument("--game", choices=["sudoku", "minesweeper"], required=True)
    b.add_argument("--file", help="puzzles, one 81-character line each (default: bundled)")
    b.add_argument("--width", type=int, default=8)
    b.add_argument("--height", type=int, default=8)
    b.add_argument("--mines", type=int, default=10)
    b.add_argument("--runs", type=int, default=100)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument(
        "--first-click",
        choices=FIRST_CLICK_RULES,
        default="none",
        help="mine placement around the first click (top-left): anywhere, not under it, or not under or next to it",
    )
    b.add_argument("--max-level", type=int, metavar="K")
    b.add_argument("--out", metavar="TSV")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
