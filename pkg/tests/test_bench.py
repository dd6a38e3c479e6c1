from itertools import combinations

import pytest

from limbelief.bench.harness import minesweeper_tsv, run_benchmark, run_sudoku, sudoku_tsv
from limbelief.bench.minesweeper import (
    FIRST_CLICK,
    Game,
    GameStats,
    MinesweeperAgent,
    MinesweeperConfig,
    MinesweeperEncoding,
    XorShift64,
    minesweeper_encode_observation,
    play_minesweeper,
)
from limbelief.bench.sudoku import (
    SudokuAgent,
    SudokuEncoding,
    SudokuError,
    SudokuInstance,
    bundled_puzzles,
    load_puzzles,
    play_sudoku,
    solve_backtracking,
    sudoku_encode,
    units,
)
from limbelief.cli import main
from limbelief.setup import Setup
from limbelief.solver import Reasoner

EMPTY = "." * 81


@pytest.fixture(scope="module")
def puzzles():
    return {p.label: p for p in bundled_puzzles()}


# -- sudoku ------------------------------------------------------------------------


def test_instance_parse():
    inst = SudokuInstance.parse(EMPTY)
    assert inst.clues == 0 and str(inst) == EMPTY
    with pytest.raises(SudokuError):
        SudokuInstance.parse("12")
    with pytest.raises(SudokuError):
        SudokuInstance.parse("x" * 81)


def test_units_shape():
    us = units()
    assert len(us) == 27 and all(sorted(set(u)) == sorted(u) and len(u) == 9 for u in us)


def test_row_constraint_instances_present():
    enc = SudokuEncoding()
    clauses = set(enc.constraint_clauses())
    # value(r, c1) != v or value(r, c2) != v, for all distinct c1, c2 in a row
    for c1, c2 in combinations(range(9), 2):
        for v in range(1, 10):
            a, b = enc.neq(c1, v), enc.neq(c2, v)
            assert (a, b) in clauses or (b, a) in clauses


def test_empty_grid_has_no_units():
    enc = SudokuEncoding()
    kb = sudoku_encode(SudokuInstance.parse(EMPTY), enc)
    n_constraints = sum(1 for _ in enc.constraint_clauses())
    assert len(kb.clauses) == n_constraints
    assert all(len(c.lits) > 1 for c in kb.clauses)


def test_full_grid_is_consistent(puzzles):
    solution = solve_backtracking(puzzles["easy1"].instance)[0]
    enc = SudokuEncoding()
    kb = sudoku_encode(SudokuInstance.parse(solution), enc)
    assert sum(1 for c in kb.clauses if len(c.lits) == 1) == 81
    s = Setup(enc.voc, (c.lits for c in kb.clauses))
    assert not s.obviously_inconsistent()


def test_inconsistent_clues_surface():
    bad = "11" + "." * 79
    enc = SudokuEncoding()
    kb = sudoku_encode(SudokuInstance.parse(bad), enc)
    assert Setup(enc.voc, (c.lits for c in kb.clauses)).obviously_inconsistent()


def test_naked_single_at_level_0(puzzles):
    solution = solve_backtracking(puzzles["easy1"].instance)[0]
    cells = [int(ch) for ch in solution]
    cells[40] = 0  # one blank: every other value of the cell is excluded by a peer
    agent = SudokuAgent(SudokuInstance(cells), max_level=1)
    assert agent.step() == (40, int(solution[40]), 0)


def test_bundled_corpus(puzzles):
    assert sum(p.difficulty == "easy" for p in puzzles.values()) == 8
    assert sum(p.difficulty == "hard" for p in puzzles.values()) == 2
    for p in puzzles.values():
        assert p.instance.clues >= 17
        assert len(solve_backtracking(p.instance)) == 1


def test_load_puzzles_comments_and_labels():
    ps = load_puzzles(f"# header\n{EMPTY} easy mine\n\n{EMPTY}\n")
    assert [(p.label, p.difficulty) for p in ps] == [("mine", "easy"), ("puzzle4", "")]


@pytest.mark.parametrize("label", ["easy1", "easy2", "hard1"])
def test_agent_agrees_with_solution(puzzles, label):
    inst = puzzles[label].instance
    (solution,) = solve_backtracking(inst)
    agent = SudokuAgent(inst, max_level=2)
    for cell, v, _ in agent.solve():
        assert solution[cell] == str(v)
    assert "".join(map(str, agent.grid)) == solution


def test_level_one_cells_are_level_one_in_isolation(puzzles):
    """A cell decided at level 1 during play is known at level 1, but not
    level 0, when the same KB is queried afresh."""
    inst = puzzles["hard1"].instance
    agent = SudokuAgent(inst, max_level=1)
    for cell, v, level in agent.solve():
        if level == 1:
            break
    else:
        pytest.fail("no level-1 step")
    grid = list(agent.grid)
    grid[cell] = 0
    fresh = Reasoner(agent.enc.voc, 1)
    fresh.add_many(agent.enc.constraint_clauses())
    fresh.add_many(agent.enc.clue_clauses(SudokuInstance(grid)))
    l = agent.enc.eq(cell, v)
    assert fresh.known([l], 0) == set()
    assert fresh.known([l], 1) == {l}


def test_play_sudoku_stats(puzzles):
    st = play_sudoku(puzzles["easy1"].instance, max_level=1)
    assert st.solved and st.decided == 81
    assert st.solution == solve_backtracking(puzzles["easy1"].instance)[0]


def test_sudoku_tsv(puzzles):
    text = sudoku_tsv(run_sudoku([puzzles["easy1"]], 1), 1)
    header, row = text.splitlines()
    assert header.split("\t") == ["puzzle", "difficulty", "clues", "level0", "level1", "solved", "seconds"]
    assert row.split("\t")[5] == "true"


# -- minesweeper ---------------------------------------------------------------------


def test_xorshift_is_deterministic():
    a, b = XorShift64(7), XorShift64(7)
    assert [a.next() for _ in range(5)] == [b.next() for _ in range(5)]
    assert XorShift64(7).next() != XorShift64(8).next()
    r = XorShift64(1)
    assert all(0 <= r.below(6) < 6 for _ in range(200))
    with pytest.raises(ValueError):
        r.below(0)


def test_config_validation():
    with pytest.raises(ValueError):
        MinesweeperConfig(mines=0)
    with pytest.raises(ValueError):
        MinesweeperConfig(mines=64)
    with pytest.raises(ValueError):
        MinesweeperConfig(first_click="lucky")


@pytest.mark.parametrize("rule", ["none", "safe", "opening"])
def test_mine_layout(rule):
    for seed in range(30):
        g = Game(MinesweeperConfig(seed=seed, first_click=rule))
        assert len(g.mines) == 10
        if rule != "none":
            assert FIRST_CLICK not in g.mines
        if rule == "opening":
            assert not any(n in g.mines for n in g.neighbours(FIRST_CLICK))


def test_flood_fill_opens_zero_regions():
    g = Game(MinesweeperConfig(seed=3, first_click="opening"))
    opened = g.uncover(FIRST_CLICK)
    assert g.opened[FIRST_CLICK] == 0
    assert len(opened) > 1
    for c in opened:
        if g.opened[c] == 0:
            assert all(n in g.opened for n in g.neighbours(c))


def _clauses(count, n):
    enc = MinesweeperEncoding(3, 3)
    cells = [(x, y) for y in range(3) for x in range(3) if (x, y) != (1, 1)][:n]
    return enc, cells, list(minesweeper_encode_observation(enc, (1, 1), cells, count))


def test_exactly_zero():
    enc, cells, cl = _clauses(0, 8)
    assert sorted(cl[1:]) == sorted((enc.safe(c),) for c in cells)


def test_exactly_all():
    enc, cells, cl = _clauses(3, 3)
    assert sorted(cl[1:]) == sorted((enc.mine(c),) for c in cells)


def test_exactly_one_of_two():
    enc, (a, b), cl = _clauses(1, 2)
    assert cl[0] == (enc.safe((1, 1)),)
    assert set(cl[1:]) == {(enc.safe(a), enc.safe(b)), (enc.mine(a), enc.mine(b))}


def test_observation_clauses_match_count():
    """The clauses admit exactly the assignments with the right number of mines."""
    from itertools import product

    enc, cells, cl = _clauses(2, 4)
    for bits in product((False, True), repeat=4):
        mine = dict(zip(cells, bits))
        ok = all(
            any((l == enc.mine(c) and mine.get(c, False)) or (l == enc.safe(c) and not mine.get(c, False)) for c in cells + [(1, 1)] for l in clause)
            for clause in cl
        )
        assert ok == (sum(bits) == 2)


def test_first_move_is_a_guess():
    g = Game(MinesweeperConfig(seed=5))
    agent = MinesweeperAgent(g)
    assert agent.decide() is None


def test_agent_never_opens_known_mines():
    for seed in range(15):
        g = Game(MinesweeperConfig(seed=seed, first_click="safe"))
        agent = MinesweeperAgent(g, max_level=1)
        agent.play(GameStats())
        assert agent.known_mines <= g.mines
        assert not agent.known_mines & set(g.opened)


def test_play_is_deterministic():
    cfg = MinesweeperConfig(seed=11)
    a, b = play_minesweeper(cfg), play_minesweeper(cfg)
    assert (a.won, a.guesses, a.levels, a.opened) == (b.won, b.guesses, b.levels, b.opened)


def test_benchmark_tsv_is_deterministic():
    cfg = MinesweeperConfig(seed=2)
    t1 = minesweeper_tsv([run_benchmark(cfg, 5, 1)])
    t2 = minesweeper_tsv([run_benchmark(cfg, 5, 1)])
    strip = lambda t: [l.split("\t")[:4] for l in t.splitlines()]
    assert strip(t1) == strip(t2)
    assert t1.splitlines()[0] == "config\tmax_level\truns\twin_rate\tmean_seconds"


def test_summary_levels():
    s = run_benchmark(MinesweeperConfig(seed=0, first_click="opening"), 10, 1)
    assert len(s.games) == 10 and 0 <= s.win_rate <= 1
    assert set(s.level_means()) <= {0, 1}


def test_cli_bench(tmp_path, capsys):
    out = tmp_path / "m.tsv"
    assert main(["bench", "--game", "minesweeper", "--runs", "3", "--seed", "4", "--out", str(out)]) == 0
    assert out.read_text() == capsys.readouterr().out
    f = tmp_path / "p.txt"
    easy1 = next(p for p in bundled_puzzles() if p.label == "easy1")
    f.write_text(f"{easy1.instance} easy one\n")
    assert main(["bench", "--game", "sudoku", "--file", str(f), "--max-level", "1"]) == 0
    assert "one\teasy" in capsys.readouterr().out
