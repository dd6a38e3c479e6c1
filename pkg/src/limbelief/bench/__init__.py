"""Game agents (Sudoku, Minesweeper) and the benchmark harness."""
